//! Parallel against sequential execution for the two batch workloads:
//! many independent transforms, and the members of an `L` sweep.
//!
//! Build with `--no-default-features` to make both variants sequential.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gevrey_ks::experiments::initial::random_band;
use gevrey_ks::experiments::{sweep_scaling_with, ExperimentConfig};
use gevrey_ks::par::Execution;
use gevrey_ks::spectral::{inverse_transform, Grid, SpectralField};

const MODES: [Execution; 2] = [Execution::Parallel, Execution::Sequential];

fn transform_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("inverse_transform_batch");
    for (dim, modes) in [(1, 4096), (2, 128)] {
        let grid = Grid::new(dim, 10.0, modes).unwrap();
        let fields: Vec<SpectralField> = (0..64).map(|s| random_band(grid, s, grid.nyquist() - 1, 1.0, false)).collect();
        for exec in MODES {
            let id = BenchmarkId::new(format!("{exec:?}"), format!("d{dim}_N{modes}_x64"));
            group.bench_with_input(id, &fields, |b, fields| {
                b.iter(|| exec.map(fields, |u| black_box(inverse_transform(u).unwrap().max_abs())))
            });
        }
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let cfg = ExperimentConfig::load(
        None,
        &[
            "grid.L=\"4pi\"".into(),
            "grid.N=64".into(),
            "stepping.dt=0.02".into(),
            "stepping.t_end=20.0".into(),
            "sweep.L_values=[\"4pi\", \"6pi\", \"8pi\", \"10pi\"]".into(),
        ],
    )
    .unwrap();
    let mut group = c.benchmark_group("ks1d_sweep_4_members");
    group.sample_size(10);
    for exec in MODES {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| black_box(sweep_scaling_with(&cfg, false, exec).unwrap().fit.slope))
        });
    }
    group.finish();
}

criterion_group!(benches, transform_batch, sweep);
criterion_main!(benches);
