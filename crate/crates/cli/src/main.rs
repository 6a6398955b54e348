use clap::Parser;
use hidden_sir_cli::{resolve, run_experiment, ConfigError, Kind, Overrides, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulate and analyse the SIR model with a hidden Markov switching signal.
#[derive(Debug, Parser)]
#[command(name = "hidden-sir", version)]
struct Cli {
    /// Experiment to run: simulate, threshold, compare, sweep or density.
    kind: String,
    /// TOML experiment file. Optional when a preset is named.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset to start from (example1, example2).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of independent seeds.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Euler-Maruyama step.
    #[arg(long)]
    dt: Option<f64>,
    /// Simulation horizon.
    #[arg(long)]
    horizon: Option<f64>,
}

fn execute(cli: Cli) -> Result<String, RunError> {
    let kind: Kind = cli.kind.parse()?;
    if cli.config.is_none() && cli.preset.is_none() {
        return Err(ConfigError {
            path: "config".into(),
            reason: "give --config, --preset or both".into(),
        }
        .into());
    }
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| ConfigError {
            path: p.display().to_string(),
            reason: e.to_string(),
        })?),
        None => None,
    };
    let overrides = Overrides {
        kind: Some(kind),
        preset: cli.preset,
        out: cli.out,
        seeds: cli.seeds,
        base_seed: cli.base_seed,
        dt: cli.dt,
        horizon: cli.horizon,
    };
    let cfg = resolve(text.as_deref(), &overrides)?;
    let report = run_experiment(&cfg)?;
    let mut out = report.summary;
    for f in &report.files {
        out.push_str(&format!("wrote {}\n", f.display()));
    }
    Ok(out)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hidden-sir: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
