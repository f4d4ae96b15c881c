use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fcsim::metrics::MetricsRow;
use fcsim::output::{metrics_for_dir, run_to_dir};
use fcsim::scenario::{bundled, parse_scenario, Scenario};

#[derive(Parser)]
#[command(name = "fcsim", version, about = "Fuel cycle transition simulator")]
struct Cli {
    /// Suppress the per-run summary.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(clap::Args)]
struct Overrides {
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override whether requests needing fewer lots are served first.
    #[arg(long, value_enum)]
    fuel_sharing_pref: Option<Toggle>,
}

impl Overrides {
    fn apply(&self, mut s: Scenario) -> Scenario {
        if let Some(seed) = self.seed {
            s = s.with_seed(seed);
        }
        if let Some(t) = self.fuel_sharing_pref {
            s = s.with_fuel_sharing(matches!(t, Toggle::On));
        }
        s
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every case of a bundled suite, one subdirectory per case.
    RunAll {
        #[arg(long, default_value = "eg23")]
        suite: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Recompute metrics for an existing run directory.
    Metrics {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

fn summarize(label: &str, rows: &[MetricsRow], secs: Option<f64>) {
    let Some(last) = rows.last() else {
        println!("{label}: no steps");
        return;
    };
    let timing = secs.map(|s| format!(" in {s:.2}s")).unwrap_or_default();
    println!(
        "{label}: {} steps{timing}; final generated {:.0} of {:.0} MWe target; cumulative outage {:.4e} MWe-months; wasted {:.1} batch-months",
        rows.len(),
        last.generated_mwe,
        last.target_mwe,
        last.cumulative_outage_mwe_months,
        last.cumulative_wasted_batch_months,
    );
}

fn run_one(scenario: &Scenario, out: &Path) -> Result<(Vec<MetricsRow>, f64)> {
    let start = Instant::now();
    run_to_dir(scenario, out).with_context(|| format!("case {}", scenario.case))?;
    let secs = start.elapsed().as_secs_f64();
    let rows = fcsim::tables::read_csv(&out.join(fcsim::metrics::METRICS_CSV))?;
    Ok((rows, secs))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { scenario, out, overrides } => {
            let s = overrides.apply(parse_scenario(scenario)?);
            let (rows, secs) = run_one(&s, out)?;
            if !cli.quiet {
                summarize(s.case.name(), &rows, Some(secs));
            }
        }
        Command::RunAll { suite, out, overrides } => {
            let scenarios: Vec<Scenario> = bundled(suite)?.into_iter().map(|s| overrides.apply(s)).collect();
            let results: Vec<Result<(Vec<MetricsRow>, f64)>> = std::thread::scope(|scope| {
                let handles: Vec<_> = scenarios
                    .iter()
                    .map(|s| scope.spawn(move || run_one(s, &out.join(s.case.name()))))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
            });
            let mut failed = None;
            for (s, r) in scenarios.iter().zip(results) {
                match r {
                    Ok((rows, secs)) if !cli.quiet => summarize(s.case.name(), &rows, Some(secs)),
                    Ok(_) => {}
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        failed.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = failed {
                return Err(e);
            }
        }
        Command::Metrics { dir } => {
            let rows = metrics_for_dir(dir)?;
            if !cli.quiet {
                summarize(&dir.display().to_string(), &rows, None);
            }
        }
    }
    Ok(())
}
