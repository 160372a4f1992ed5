use anyhow::{Context, Result};
use clap::Parser;
use relclock_cli::config::{parse_config, Overrides, Scenario};
use relclock_cli::output::write_artifacts;
use relclock_cli::scenarios::run_scenario;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Run one relclock scenario from a config file and write CSV tables plus a
/// JSON summary.
#[derive(Debug, Parser)]
#[command(name = "relclock", version)]
struct Cli {
    scenario: Scenario,
    /// TOML config describing the scenario.
    #[arg(long)]
    config: PathBuf,
    /// Seed override for stochastic scenarios.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output` key or `./out`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("RELCLOCK_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("RELCLOCK_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let text = std::fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let overrides = Overrides { scenario: Some(cli.scenario), seed: cli.seed };
    let config = parse_config(&text, &overrides)?;
    let dir = cli.output.or_else(|| config.output_path.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let start = Instant::now();
    let report = run_scenario(&config)?;
    let wall = start.elapsed().as_secs_f64();
    let summary = write_artifacts(&dir, &config, &report, wall)?;
    let ok = report.all_checks_pass();
    if !cli.quiet || !ok {
        for (name, passed) in &report.checks {
            eprintln!("{} {name}", if *passed { "ok  " } else { "FAIL" });
        }
        eprintln!("{} finished in {wall:.2} s; summary at {}", config.scenario, summary.display());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
