use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use sepcoco_bench::checks::selftest;
use sepcoco_bench::suite::{metric_name, output_dir, run_suite, write_suite, OUTPUT_ENV};
use sepcoco_bench::tradeoff::run_tradeoff;
use sepcoco_bench::{parse_config, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "sepcoco",
    version,
    about = "Projection-free constrained online learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (T, beta, seed) cell of a config and write CSV.
    Run { config: PathBuf },
    /// Run a multi-beta config and write the trade-off table.
    Tradeoff { config: PathBuf },
    /// Run the randomized invariant checks.
    Selftest {
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
    },
}

fn load(path: &PathBuf) -> anyhow::Result<ExperimentConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_config(&text)?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let dir = output_dir(&cfg);
            let outcome = run_suite(&cfg);
            let files = write_suite(&cfg, &outcome, &dir)?;
            for f in outcome.fits.iter().filter(|f| f.fit.is_some()) {
                let fit = f.fit.unwrap();
                println!(
                    "beta={} {}: slope {:.3} (r2 {:.3}, theory {})",
                    f.beta,
                    metric_name(f.metric),
                    fit.slope,
                    fit.r_squared,
                    f.expected_exponent
                );
            }
            println!(
                "wrote {} and {}",
                files.runs.display(),
                files.summary.display()
            );
            report_failures(outcome.failures())
        }
        Command::Tradeoff { config } => {
            let cfg = load(&config)?;
            let dir = output_dir(&cfg);
            let (outcome, rows, path) = run_tradeoff(&cfg, &dir)?;
            for r in &rows {
                println!(
                    "beta={} T={}: regret {:.3}, ccv {:.3}, so_calls {:.1}",
                    r.beta, r.horizon, r.mean_regret, r.mean_ccv, r.mean_so_calls
                );
            }
            println!(
                "wrote {} (output dir override: {OUTPUT_ENV})",
                path.display()
            );
            report_failures(outcome.failures())
        }
        Command::Selftest { seed } => {
            let reports = selftest(seed)?;
            let mut ok = true;
            for r in &reports {
                println!("{r}");
                ok &= r.passed();
            }
            Ok(ok)
        }
    }
}

fn report_failures(failures: usize) -> anyhow::Result<bool> {
    if failures > 0 {
        eprintln!("{failures} cell(s) failed; see the status column");
    }
    Ok(failures == 0)
}
