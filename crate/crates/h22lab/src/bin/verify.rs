//! Command-line driver for the verification suites.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;

use h22lab::cli::{run, ReportFormat, RunConfig, SuiteName};
use h22lab::sampler::ChainConfig;

#[derive(Parser)]
#[command(
    name = "verify",
    about = "Run verification suites for the pinned-graph field model",
    long_about = None,
    after_help = "Suites: exact-algebra, consistency, laplace, generalized-laplace, ward, \
image-measure, martingale, letac, cond-exp, sampler-selftest.\n\
Graph files are JSON: {\"vertices\": [..], \"pin\": v, \"edges\": [[i, j, w], ..]}.\n\
Exhaustion files add a pin-free host and nested levels: \
{\"host\": {\"vertices\": [..], \"edges\": [..]}, \"levels\": [[..], ..]}."
)]
struct Args {
    /// Comma-separated suite names.
    #[arg(long = "suite", value_delimiter = ',', required = true)]
    suite: Vec<String>,
    /// Pinned-graph JSON file (required by the graph suites).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Exhaustion JSON file (required by consistency and martingale).
    #[arg(long)]
    exhaustion: Option<PathBuf>,
    /// Master seed; every chain derives its stream from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Retained samples per chain.
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    /// Burn-in sweeps per chain.
    #[arg(long = "burn-in", default_value_t = 20_000)]
    burn_in: usize,
    /// Sweeps between retained samples.
    #[arg(long, default_value_t = 1)]
    thinning: usize,
    /// Report format: json or text.
    #[arg(long, default_value = "text")]
    report: String,
    /// Absolute z-score threshold for statistical verdicts.
    #[arg(long = "z-threshold", default_value_t = 3.0)]
    z_threshold: f64,
    /// Override the default tolerance of the exact suites.
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();

    let mut suites = Vec::new();
    for name in &args.suite {
        match SuiteName::from_str(name) {
            Ok(s) => suites.push(s),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    let report = match ReportFormat::from_str(&args.report) {
        Ok(r) => r,
        Err(_) => {
            eprintln!("error: report format must be 'json' or 'text'");
            return ExitCode::from(2);
        }
    };

    let config = RunConfig {
        suites,
        graph: args.graph,
        exhaustion: args.exhaustion,
        chain: ChainConfig {
            seed: args.seed,
            burn_in: args.burn_in,
            samples: args.samples,
            thinning: args.thinning,
            ..ChainConfig::default()
        },
        report,
        z_threshold: args.z_threshold,
        exact_tol: args.tol,
    };

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(&config, &mut out) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
