//! Command-line front end: detect changes in a CSV, simulate fixtures,
//! and score estimates against ground truth.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use abacus::evalkit::precision_recall;
use abacus::io::{emit_fixture, load_changes_file, load_truth_locations, CHANGES_FILE};
use abacus::{emit_report, load_csv, run_abacus, AbacusConfig, Orientation, RunMeta, SimConfig};

#[derive(Parser)]
#[command(
    name = "abacus",
    version,
    about = "Unsupervised multivariate change detection via Bayesian source separation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect additive outliers and level shifts in a CSV time series.
    Detect(DetectArgs),
    /// Generate a synthetic dataset with planted changes.
    Simulate(SimulateArgs),
    /// Score estimated changes against a ground-truth sidecar.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliOrientation {
    /// Channels are CSV rows.
    Rows,
    /// Channels are CSV columns.
    Columns,
}

#[derive(Args)]
struct DetectArgs {
    /// Input CSV (rectangular, numeric, optional header row).
    data: PathBuf,
    /// Latent dimension upper bound.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Gibbs iterations per chain.
    #[arg(long, default_value_t = 3000)]
    iters: usize,
    /// Burn-in iterations discarded from each chain.
    #[arg(long, default_value_t = 500)]
    burnin: usize,
    /// Density threshold for the detection cutoff.
    #[arg(long, default_value_t = 1e-10)]
    delta: f64,
    /// Random seed; fixed seeds reproduce runs exactly.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Center and scale each channel before fitting.
    #[arg(long)]
    standardize: bool,
    /// Prune detected level shifts by dynamic programming.
    #[arg(long)]
    prune: bool,
    /// Which CSV axis holds the channels.
    #[arg(long, value_enum, default_value_t = CliOrientation::Rows)]
    orientation: CliOrientation,
    /// Output directory for the report files.
    #[arg(long, default_value = "abacus_out")]
    out: PathBuf,
    /// Print chain progress every this many iterations.
    #[arg(long)]
    progress: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of observed channels.
    #[arg(long)]
    p: usize,
    /// Series length.
    #[arg(long)]
    n: usize,
    /// True latent dimension.
    #[arg(long)]
    r: usize,
    /// Number of additive outliers.
    #[arg(long, default_value_t = 0)]
    ao: usize,
    /// Number of level shifts.
    #[arg(long, default_value_t = 0)]
    ls: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise variance range.
    #[arg(long, default_value_t = 0.1)]
    psi_min: f64,
    #[arg(long, default_value_t = 5.0)]
    psi_max: f64,
    /// Change magnitude range.
    #[arg(long, default_value_t = 1.0)]
    mag_min: f64,
    #[arg(long, default_value_t = 5.0)]
    mag_max: f64,
    /// Output path prefix: writes <out>_data.csv and <out>_truth.txt.
    #[arg(long, default_value = "sim")]
    out: String,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth sidecar (key=value with ao_locs and ls_locs).
    #[arg(long)]
    truth: PathBuf,
    /// Estimated changes: a detect output directory or a changes.csv.
    #[arg(long)]
    est: PathBuf,
    /// Matching window: an estimate within w of a true location counts.
    #[arg(long, default_value_t = 3)]
    w: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successful exits; anything
            // else is a usage error.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Detect(args) => detect(args),
        Command::Simulate(args) => simulate(args),
        Command::Evaluate(args) => evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn detect(args: DetectArgs) -> abacus::Result<()> {
    let orientation = match args.orientation {
        CliOrientation::Rows => Orientation::ChannelsAsRows,
        CliOrientation::Columns => Orientation::ChannelsAsColumns,
    };
    let y = load_csv(&args.data, orientation, args.standardize)?;
    let cfg = AbacusConfig {
        k: args.k,
        iterations: args.iters,
        burn_in: args.burnin,
        delta: args.delta,
        seed: args.seed,
        prune: args.prune,
        progress_every: args.progress,
    };
    let report = run_abacus(&y, &cfg)?;
    let meta = RunMeta {
        seed: cfg.seed,
        k: cfg.k,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        delta: cfg.delta,
    };
    let paths = emit_report(&report, &meta, &args.out)?;
    println!(
        "detected {} additive outlier(s) {:?} and {} level shift(s) {:?}",
        report.cpt0.len(),
        report.cpt0,
        report.cpt1.len(),
        report.cpt1
    );
    println!("wrote {} files to {}", paths.len(), args.out.display());
    Ok(())
}

fn simulate(args: SimulateArgs) -> abacus::Result<()> {
    let mut cfg = SimConfig::new(args.p, args.n, args.r, args.ao, args.ls, args.seed);
    cfg.psi_range = (args.psi_min, args.psi_max);
    cfg.mag_range = (args.mag_min, args.mag_max);
    let (y, truth) = abacus::generate(&cfg)?;
    let data_path = format!("{}_data.csv", args.out);
    let truth_path = format!("{}_truth.txt", args.out);
    emit_fixture(&y, &truth, &cfg, &data_path, &truth_path)?;
    println!(
        "wrote {data_path} ({}x{}) and {truth_path} (ao={:?}, ls={:?})",
        args.p, args.n, truth.ao_locs, truth.ls_locs
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> abacus::Result<()> {
    let (truth_ao, truth_ls) = load_truth_locations(&args.truth)?;
    let changes_path = if args.est.is_dir() {
        args.est.join(CHANGES_FILE)
    } else {
        args.est.clone()
    };
    let (est_ao, est_ls) = load_changes_file(&changes_path)?;
    let (ao_p, ao_r) = precision_recall(&truth_ao, &est_ao, args.w);
    let (ls_p, ls_r) = precision_recall(&truth_ls, &est_ls, args.w);
    println!("ao_precision={ao_p}");
    println!("ao_recall={ao_r}");
    println!("ls_precision={ls_p}");
    println!("ls_recall={ls_r}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detect_defaults_match_reference_configuration() {
        let cli = Cli::try_parse_from(["abacus", "detect", "data.csv"]).unwrap();
        match cli.command {
            Command::Detect(args) => {
                assert_eq!(args.k, 5);
                assert_eq!(args.iters, 3000);
                assert_eq!(args.burnin, 500);
                assert_eq!(args.delta, 1e-10);
                assert_eq!(args.seed, 0);
                assert!(!args.standardize);
                assert!(!args.prune);
                assert_eq!(args.orientation, CliOrientation::Rows);
            }
            _ => panic!("expected detect"),
        }
    }

    #[test]
    fn evaluate_window_defaults_to_three() {
        let cli =
            Cli::try_parse_from(["abacus", "evaluate", "--truth", "t", "--est", "e"]).unwrap();
        match cli.command {
            Command::Evaluate(args) => assert_eq!(args.w, 3),
            _ => panic!("expected evaluate"),
        }
    }

    #[test]
    fn unknown_flag_is_rejected() {
        assert!(Cli::try_parse_from(["abacus", "detect", "d.csv", "--bogus"]).is_err());
    }
}
