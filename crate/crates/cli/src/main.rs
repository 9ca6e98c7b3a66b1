use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gevrey_ks::diagnostics::BlowupKind;
use gevrey_ks::experiments::config::defaults_table;
use gevrey_ks::experiments::output::write_json;
use gevrey_ks::experiments::{analyze_dir, emit_outputs, run_experiment, sweep_scaling, ExperimentConfig};
use gevrey_ks::integrator::Outcome;
use gevrey_ks::verify::{run_suite, Suite};
use gevrey_ks::Error;

const EXIT_INTERNAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "gevrey-ks", version, about = "Pseudo-spectral Kuramoto-Sivashinsky solver with dyadic tail diagnostics")]
#[command(after_help = defaults_table())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configured run and write its output directory.
    #[command(after_help = defaults_table())]
    Run(RunArgs),
    /// Run the configured model over sweep.L_values and fit the observable against L.
    #[command(after_help = defaults_table())]
    Sweep(RunArgs),
    /// Recompute fits.json of a run directory from its CSV files.
    Analyze(AnalyzeArgs),
    /// Run verification suites and print measured against required values.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file (TOML); omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. --set grid.N=1024. Repeatable; applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory, overriding the `output` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial data, overriding initial_data.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run directory holding config.toml, norms.csv and tails.csv.
    dir: Option<PathBuf>,
    /// Run directory, as an alternative to the positional argument.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a diagnostics key, e.g. --set diagnostics.noise_floor=1e-8. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name, or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exit_code(e: &Error, analyze: bool) -> u8 {
    match e {
        Error::Config(_) | Error::Format { .. } => EXIT_CONFIG,
        Error::Io(_) if analyze => EXIT_CONFIG,
        _ => EXIT_INTERNAL,
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("initial_data.seed={seed}"));
    }
    let mut cfg = ExperimentConfig::load(args.config.as_deref(), &overrides)?;
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<u8, Error> {
    let cfg = load(args)?;
    let record = run_experiment(&cfg)?;
    emit_outputs(&record, &cfg.output)?;
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    let verdict = record.fits.verdict.map(|v| v.verdict);
    println!(
        "{}: t = {} after {} steps, sup L2 = {:.6e}, verdict {:?}; wrote {}",
        cfg.model.equation.name(),
        record.final_time,
        record.steps,
        record.fits.h_full,
        verdict,
        cfg.output.display()
    );
    let diverged = matches!(record.outcome, Outcome::Diverged { .. }) || matches!(verdict, Some(BlowupKind::Diverged { .. }));
    Ok(if diverged { EXIT_DIVERGED } else { 0 })
}

fn sweep(args: &RunArgs) -> Result<u8, Error> {
    let cfg = load(args)?;
    let report = sweep_scaling(&cfg, true)?;
    std::fs::create_dir_all(&cfg.output)?;
    write_json(&report.fit, &cfg.output.join("sweep.json"))?;
    for (l, v) in &report.fit.pairs {
        println!("L = {l:<22} {} = {v:.6e}", report.fit.observable);
    }
    println!(
        "slope {:.4}, intercept {:.4}, residual {:.3e}; wrote {}",
        report.fit.slope,
        report.fit.intercept,
        report.fit.residual,
        cfg.output.display()
    );
    Ok(0)
}

fn analyze(args: &AnalyzeArgs) -> Result<u8, Error> {
    let dir: &Path = args
        .dir
        .as_deref()
        .or(args.out.as_deref())
        .ok_or_else(|| Error::Config("analyze needs a run directory".into()))?;
    let fits = analyze_dir(dir, &args.overrides)?;
    let fitted = fits.gevrey.iter().filter(|g| g.fit.is_some()).count();
    println!(
        "{}: {} samples, j0 = {}, {fitted}/{} Gevrey fits; wrote {}",
        fits.model,
        fits.samples,
        fits.j0,
        fits.gevrey.len(),
        dir.join("fits.json").display()
    );
    Ok(0)
}

fn verify(args: &VerifyArgs) -> Result<u8, Error> {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        let suite = Suite::parse(&args.suite)
            .ok_or_else(|| Error::Config(format!("unknown suite {:?}; expected all or one of {}", args.suite, names.join(", "))))?;
        vec![suite]
    };
    let mut failed = 0;
    for suite in suites {
        let report = run_suite(suite, args.seed)?;
        print!("{report}");
        failed += usize::from(!report.passed());
    }
    Ok(if failed == 0 { 0 } else { EXIT_INTERNAL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let analyzing = matches!(cli.command, Command::Analyze(_));
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Analyze(a) => analyze(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e, analyzing))
        }
    }
}
