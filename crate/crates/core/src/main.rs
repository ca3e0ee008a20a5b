use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use stablecond::experiments::{self, Suite, SuiteConfig};
use stablecond::model::RngStream;

/// Verification suites for the harmonic functions, hitting laws and
/// conditioned-path samplers of the interval-killed stable process.
///
/// Worker count follows RAYON_NUM_THREADS.
#[derive(Parser, Debug)]
#[command(name = "stablecond", version, about)]
struct Cli {
    /// Suite to run: identity | asymptotics | harmonicity | absorption |
    /// conditioning | all
    suite: String,

    /// Flat key=value config file; defaults are built in per suite
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the parameter grid with a single alpha (pair with --rho)
    #[arg(long)]
    alpha: Option<f64>,

    /// Override the parameter grid with a single rho (pair with --alpha)
    #[arg(long)]
    rho: Option<f64>,

    /// Override the start points (repeatable)
    #[arg(long = "x", num_args = 1.., allow_hyphen_values = true)]
    points: Vec<f64>,

    /// Base seed for every stochastic check
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for the per-suite CSV files and the summary
    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Print the check ids the current configuration would run, then exit
    #[arg(long)]
    list_checks: bool,

    /// Monte Carlo path count override
    #[arg(long)]
    n_paths: Option<usize>,
}

fn build_config(cli: &Cli, suite: Suite) -> Result<SuiteConfig, stablecond::Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                stablecond::Error::Config(format!("cannot read {path:?}: {e}"))
            })?;
            SuiteConfig::parse(suite, &text)?
        }
        None => SuiteConfig::default_for(suite),
    };
    match (cli.alpha, cli.rho) {
        (Some(a), Some(r)) => cfg.params = vec![(a, r)],
        (None, None) => {}
        _ => {
            return Err(stablecond::Error::Config(
                "--alpha and --rho must be given together".into(),
            ))
        }
    }
    if !cli.points.is_empty() {
        cfg.points = cli.points.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.sim.rng = RngStream::new(seed, 0);
    }
    if let Some(n) = cli.n_paths {
        cfg.sim.n_paths = n;
    }
    cfg.out_dir = cli.out.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let suites: Vec<Suite> = if cli.suite == "all" {
        vec![
            Suite::Identity,
            Suite::Asymptotics,
            Suite::HarmonicityMc,
            Suite::Absorption,
            Suite::Conditioning,
        ]
    } else {
        match Suite::from_name(&cli.suite) {
            Ok(s) => vec![s],
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        }
    };

    let mut collected = Vec::new();
    for suite in suites {
        let cfg = match build_config(&cli, suite) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        };
        if cli.list_checks {
            println!("# {}", suite.name());
            for id in experiments::list_check_ids(&cfg) {
                println!("{id}");
            }
            continue;
        }
        match experiments::run_suite(&cfg) {
            Ok(results) => {
                println!(
                    "{}",
                    experiments::report::summary_line(suite.name(), &results)
                );
                collected.push((suite.name().to_string(), results));
            }
            Err(e) => {
                eprintln!("suite {} aborted: {e}", suite.name());
                return ExitCode::from(2);
            }
        }
    }
    if cli.list_checks {
        return ExitCode::SUCCESS;
    }

    let summary = experiments::summary(&collected);
    print!("{summary}");
    let path = cli.out.join("summary.txt");
    if let Err(e) = std::fs::write(&path, &summary) {
        eprintln!("cannot write {path:?}: {e}");
        return ExitCode::from(2);
    }
    let all_pass = collected
        .iter()
        .all(|(_, rows)| rows.iter().all(|r| r.passed));
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
