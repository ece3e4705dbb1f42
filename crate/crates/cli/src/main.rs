//! `qnn`: train models, run ablations and variance studies, check oracles.

mod config;
mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qnn_core::analysis::{run_oracles, write_oracle_csv, OracleGroup};
use qnn_core::data::{format_f64, test_set};
use qnn_core::gradients::predict_batch;
use qnn_core::trainer::{config_hash, write_ablation_csv, write_histogram_csv, AblationRow};
use qnn_core::{ablate, variance_study, QnnError, TargetFunction, Variant, VariantOverrides};
use serde::Serialize;

use config::RunConfig;
use svg::{Mark, Series};

const EXIT_ORACLE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "qnn", version, about = "Quantum neural network regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model; writes report.json, fit.csv, fit.svg and loss.svg.
    Train(TrainArgs),
    /// Train a variants x seeds grid per function; writes table1.csv.
    Ablate(AblateArgs),
    /// Run the span, rank and arcsin-floor oracles; writes oracle.csv.
    Oracle(OracleArgs),
    /// Repeat one experiment over many seeds; writes hist.csv and hist.svg.
    Variance(VarianceArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `qnn-out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Hyper {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Shots per expectation when scoring; 0 is exact.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyper: Hyper,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    function: Option<TargetFunction>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyper: Hyper,
    /// Comma-separated variants (default qnn-a,qnn-exc2,qnn-exc3,qnn-exc4).
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    /// Comma-separated functions (default f1v3,f2,f3).
    #[arg(long, value_delimiter = ',')]
    functions: Option<Vec<TargetFunction>>,
    /// Comma-separated seeds (default 0,1,2,3,4).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    only: Option<OracleGroup>,
    #[arg(long)]
    max_qubits: Option<usize>,
    /// Random draws per span test.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    /// Remove a named basis function from every span dictionary.
    #[arg(long)]
    drop_basis: Vec<String>,
}

#[derive(Args)]
struct VarianceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyper: Hyper,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    function: Option<TargetFunction>,
    /// Number of runs (default 150).
    #[arg(long)]
    runs: Option<usize>,
    /// Reuse the base seed for every run.
    #[arg(long)]
    fixed_seed: bool,
}

impl Hyper {
    fn apply(self, cfg: RunConfig) -> RunConfig {
        RunConfig {
            epochs: self.epochs,
            lr: self.lr,
            shots: self.shots,
            batch_size: self.batch_size,
            train_size: self.train_size,
            model: VariantOverrides { qubits: self.qubits, layers: self.layers, ..Default::default() },
            ..cfg
        }
    }
}

fn flags(common: &Common) -> RunConfig {
    RunConfig { seed: common.seed, out: common.out.clone(), ..Default::default() }
}

fn resolve(common: &Common, flags: RunConfig) -> anyhow::Result<RunConfig> {
    Ok(RunConfig::load(common.config.as_deref())?.merge(flags))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Variance(args) => cmd_variance(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let divergence = matches!(e.downcast_ref::<QnnError>(), Some(QnnError::Divergence(_)));
            ExitCode::from(if divergence { EXIT_DIVERGENCE } else { EXIT_CONFIG })
        }
    }
}

/// Caps the worker pool at `QNN_THREADS` when set.
fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("QNN_THREADS") else { return Ok(()) };
    let threads: usize = value.trim().parse().with_context(|| format!("QNN_THREADS={value} is not a count"))?;
    anyhow::ensure!(threads > 0, "QNN_THREADS must be positive");
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

/// Creates `dir` and returns a writer for `name` inside it, prefixed with
/// the provenance comment line.
fn csv_file(dir: &Path, name: &str, hash: &str, seed: u64) -> anyhow::Result<fs::File> {
    let mut file = create(dir, name)?;
    writeln!(file, "# config_hash={hash},seed={seed}")?;
    Ok(file)
}

fn create(dir: &Path, name: &str) -> anyhow::Result<fs::File> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::File::create(&path).with_context(|| format!("creating {}", path.display()))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let mut file = create(dir, name)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    writeln!(file)?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<u8> {
    let cli_flags = RunConfig { variant: args.variant, function: args.function, ..args.hyper.apply(flags(&args.common)) };
    let cfg = resolve(&args.common, cli_flags)?;
    let experiment = cfg.experiment()?;
    let out = cfg.out_dir();

    let (report, model, params) = experiment.run()?;
    let seed = experiment.train.seed;
    #[derive(Serialize)]
    struct Saved<'a> {
        experiment: &'a qnn_core::Experiment,
        model: &'a qnn_core::ModelSpec,
        report: &'a qnn_core::RunReport,
    }
    write_json(&out, "report.json", &Saved { experiment: &experiment, model: &model, report: &report })?;

    let test = test_set(experiment.function);
    let predicted = predict_batch(&model, &params, &test.inputs)?;
    let mut fit = csv_file(&out, "fit.csv", &report.config_hash, seed)?;
    let header: Vec<String> = (0..test.dim()).map(|j| format!("x{j}")).chain(["y_true".into(), "y_pred".into()]).collect();
    writeln!(fit, "{}", header.join(","))?;
    for ((x, y), p) in test.inputs.iter().zip(&test.targets).zip(&predicted) {
        let row: Vec<String> = x.iter().chain([y, p]).map(|v| format_f64(*v)).collect();
        writeln!(fit, "{}", row.join(","))?;
    }

    let title = format!("{} on {} (test MAE {:.3e})", report.variant, report.function, report.test_mae);
    let chart = if test.dim() == 1 {
        let line = |values: &[f64]| test.inputs.iter().zip(values).map(|(x, v)| (x[0], *v)).collect();
        svg::chart(
            &title,
            "x",
            "y",
            &[
                Series { label: "target", color: "black", mark: Mark::Line, points: line(&test.targets) },
                Series { label: "prediction", color: "#d62728", mark: Mark::Points, points: line(&predicted) },
            ],
        )
    } else {
        let (lo, hi) = test.targets.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(*y), b.max(*y)));
        svg::chart(
            &title,
            "target",
            "prediction",
            &[
                Series { label: "y = x", color: "black", mark: Mark::Line, points: vec![(lo, lo), (hi, hi)] },
                Series {
                    label: "test points",
                    color: "#d62728",
                    mark: Mark::Points,
                    points: test.targets.iter().copied().zip(predicted.iter().copied()).collect(),
                },
            ],
        )
    };
    fs::write(out.join("fit.svg"), chart)?;
    let curve: Vec<(f64, f64)> = report
        .loss_curve
        .iter()
        .enumerate()
        .filter(|(_, l)| **l > 0.0)
        .map(|(i, l)| (i as f64, l.log10()))
        .collect();
    let loss = svg::chart("training loss", "epoch", "log10 MSE", &[Series { label: "train", color: "#1f77b4", mark: Mark::Line, points: curve }]);
    fs::write(out.join("loss.svg"), loss)?;

    println!(
        "{} {} seed={} train_mae={:.4e} test_mae={:.4e} epochs={} ({:.1}s) -> {}",
        report.variant,
        report.function,
        seed,
        report.train_mae,
        report.test_mae,
        report.epochs,
        report.wall_clock_secs,
        out.display()
    );
    if report.diverged {
        eprintln!("training diverged");
        return Ok(EXIT_DIVERGENCE);
    }
    Ok(0)
}

fn cmd_ablate(args: AblateArgs) -> anyhow::Result<u8> {
    let cli_flags = RunConfig {
        variants: args.variants,
        functions: args.functions,
        seeds: args.seeds,
        ..args.hyper.apply(flags(&args.common))
    };
    let cfg = resolve(&args.common, cli_flags)?;
    let (base, functions, variants, seeds) = cfg.ablation()?;
    let out = cfg.out_dir();
    let hash = config_hash(&(&base, &functions, &variants, &seeds))?;

    let mut rows: Vec<AblationRow> = Vec::new();
    for &function in &functions {
        let (table, _) = ablate(function, &variants, &seeds, &base)?;
        for r in &table {
            let ratio = r.ratio_vs_qnn_a.map_or("-".to_string(), |v| format!("{v:.2}"));
            println!("{:<9} {:<5} seed={:<3} train={:.3e} test={:.3e} ratio={ratio}", r.variant, r.function, r.seed, r.train_mae, r.test_mae);
        }
        rows.extend(table);
    }
    let file = csv_file(&out, "table1.csv", &hash, seeds[0])?;
    write_ablation_csv(&rows, file)?;
    if rows.iter().any(|r| r.diverged) {
        eprintln!("at least one run diverged");
        return Ok(EXIT_DIVERGENCE);
    }
    Ok(0)
}

fn cmd_oracle(args: OracleArgs) -> anyhow::Result<u8> {
    let cli_flags = RunConfig {
        only: args.only,
        max_qubits: args.max_qubits,
        trials: args.trials,
        drop_basis: (!args.drop_basis.is_empty()).then_some(args.drop_basis),
        model: VariantOverrides { layers: args.layers, ..Default::default() },
        ..flags(&args.common)
    };
    let cfg = resolve(&args.common, cli_flags)?;
    let oracle = cfg.oracle()?;
    let out = cfg.out_dir();
    let rows = run_oracles(&oracle)?;
    let file = csv_file(&out, "oracle.csv", &config_hash(&oracle)?, oracle.seed)?;
    write_oracle_csv(&rows, file)?;
    for r in &rows {
        println!(
            "{} {:<24} {:.3e} {} {:.3e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.comparison.symbol(),
            r.threshold
        );
    }
    Ok(if rows.iter().all(|r| r.pass) { 0 } else { EXIT_ORACLE })
}

fn cmd_variance(args: VarianceArgs) -> anyhow::Result<u8> {
    let cli_flags = RunConfig {
        variant: args.variant,
        function: args.function,
        runs: args.runs,
        fixed_seed: args.fixed_seed.then_some(true),
        ..args.hyper.apply(flags(&args.common))
    };
    let cfg = resolve(&args.common, cli_flags)?;
    let experiment = cfg.experiment()?;
    let runs = cfg.runs.unwrap_or(150);
    let fixed = cfg.fixed_seed.unwrap_or(false);
    if runs < 2 {
        return Err(QnnError::Config(format!("variance study needs at least 2 runs, got {runs}")).into());
    }
    let out = cfg.out_dir();
    let hash = config_hash(&(&experiment, runs, fixed))?;

    let (summary, reports) = variance_study(&experiment, runs, fixed)?;
    write_histogram_csv(&summary, csv_file(&out, "hist.csv", &hash, experiment.train.seed)?)?;
    write_json(&out, "variance.json", &summary)?;
    let bins: Vec<(f64, f64, usize)> = summary.histogram.iter().map(|b| (b.lower, b.upper, b.count)).collect();
    let title = format!(
        "{} on {}: {} runs, mean {:.3e}, variance {:.3e}",
        summary.variant, summary.function, runs, summary.mean, summary.variance
    );
    fs::write(out.join("hist.svg"), svg::histogram(&title, "test MAE", &bins))?;
    println!("mean={:.6e} variance={:.6e} runs={runs} -> {}", summary.mean, summary.variance, out.display());
    if reports.iter().any(|r| r.diverged) {
        eprintln!("at least one run diverged");
        return Ok(EXIT_DIVERGENCE);
    }
    Ok(0)
}
