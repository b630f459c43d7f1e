use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use perenv_lab::{run_experiment, Experiment, ExperimentConfig, LabError, LabResult};

/// Runs one named experiment and writes its artifacts.
#[derive(Parser, Debug)]
#[command(name = "perenv", version)]
struct Cli {
    /// JSON configuration; flags override its keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    experiment: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated list, e.g. `0.04,0.02,0.01`.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

fn parse_eps(text: &str) -> LabResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| LabError::Config(format!("cannot parse eps value '{s}'")))
        })
        .collect()
}

fn build_config(cli: &Cli) -> LabResult<ExperimentConfig> {
    let named = cli.experiment.as_deref().map(str::parse::<Experiment>).transpose()?;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, named)?,
        None => ExperimentConfig::defaults(named.ok_or_else(|| {
            LabError::Config("give --experiment NAME or a --config file".into())
        })?),
    };
    if let Some(e) = named.filter(|e| *e != cfg.experiment) {
        return Err(LabError::Config(format!(
            "--experiment {e} disagrees with the config file's experiment {}",
            cfg.experiment
        )));
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(eps) = &cli.eps {
        cfg.eps = parse_eps(eps)?;
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| run_experiment(&cfg));
    match result {
        Ok(outcome) => {
            for c in &outcome.checks {
                let tag = if c.pass { "pass" } else { "FAIL" };
                println!("{tag} {}: {:.6e} (tolerance {:.3e})", c.name, c.value, c.tolerance);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                LabError::Config(_) => eprintln!("error: {e}"),
                _ => eprintln!("{}", e.to_json()),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
