//! Configured runs: initial data, output files, checkpoints and `L` sweeps.

pub mod checkpoint;
pub mod config;
pub mod initial;
pub mod output;
pub mod run;
pub mod sweep;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use config::{defaults_table, ExperimentConfig, InitialData, Observable, TailMultiplier};
pub use run::{analyze_dir, compute_fits, emit_outputs, resolution_check, run_experiment, Fits, RunRecord};
pub use sweep::{fit_power_law, sweep_scaling, sweep_scaling_with, ScalingFit, SweepReport};
