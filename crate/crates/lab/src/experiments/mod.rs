//! Named experiments. Each one writes its artifacts under the output
//! directory and returns its built-in checks.

mod direct;
mod limit;
mod orbits;
mod separable;

use std::time::Instant;

use perenv_core::direct::{run, DirectConfig, SimState};
use perenv_core::{EffectiveFitness, GrowthModel};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{LabError, LabResult};
use crate::output::{timestamp, write_json, ArtifactDir, Check, Manifest};

pub use direct::{figure1_report, sweep_report, Figure1Report, SweepReport};
pub use limit::{counterexample_report, esd_report, limit_report, CounterexampleReport, EsdReport, LimitReport};
pub use orbits::{diagonal_sample, orbit_report, OrbitReport};
pub use separable::{fluctuation_report, separable_report, FluctuationSummary, SeparableReport};

/// Checks and headline numbers of one experiment.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub metrics: serde_json::Value,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    status: &'a str,
    passed: bool,
    checks: &'a [Check],
    metrics: &'a serde_json::Value,
    error: Option<serde_json::Value>,
    wall_time_s: f64,
    versions: serde_json::Value,
}

fn versions() -> serde_json::Value {
    serde_json::json!({
        "perenv-lab": env!("CARGO_PKG_VERSION"),
    })
}

/// Runs an experiment with the manifest protocol: the manifest is written
/// with status "incomplete" before any computation and rewritten after it.
pub fn run_experiment(cfg: &ExperimentConfig) -> LabResult<Outcome> {
    cfg.validate()?;
    let dir = ArtifactDir::create(&cfg.out)?;
    let mut manifest = Manifest {
        config: cfg.clone(),
        started_at: timestamp(),
        finished_at: None,
        status: "incomplete".into(),
        checks: Vec::new(),
    };
    write_json(&dir.path("manifest.json"), &manifest)?;
    let clock = Instant::now();
    let result = execute(cfg, &dir);
    let wall = clock.elapsed().as_secs_f64();
    manifest.finished_at = Some(timestamp());
    let empty = serde_json::Value::Null;
    let (status, checks, metrics, error) = match &result {
        Ok(o) => ("complete", o.checks.as_slice(), &o.metrics, None),
        Err(e) => ("failed", &[][..], &empty, Some(e.to_json())),
    };
    manifest.status = status.into();
    manifest.checks = checks.to_vec();
    write_json(&dir.path("manifest.json"), &manifest)?;
    write_json(
        &dir.path("summary.json"),
        &Summary {
            experiment: cfg.experiment.name(),
            status,
            passed: result.as_ref().is_ok_and(|o| o.passed()),
            checks,
            metrics,
            error,
            wall_time_s: wall,
            versions: versions(),
        },
    )?;
    result
}

/// Runs the computation of an experiment and writes its artifacts.
pub fn execute(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    match cfg.experiment {
        Experiment::CellOrbit => orbits::cell_orbit(cfg, dir),
        Experiment::EffectiveSurface => orbits::effective_surface(cfg, dir),
        Experiment::DirectSim => direct::direct_sim(cfg, dir),
        Experiment::EpsSweep => direct::eps_sweep(cfg, dir),
        Experiment::Figure1 => direct::figure1(cfg, dir),
        Experiment::HjLimit => limit::hj_limit(cfg, dir),
        Experiment::Canonical => limit::canonical(cfg, dir),
        Experiment::Counterexample => limit::counterexample(cfg, dir),
        Experiment::Esd => limit::esd(cfg, dir),
        Experiment::Separable => separable::separable(cfg, dir),
        Experiment::Fluctuation => separable::fluctuation(cfg, dir),
    }
}

/// A fresh effective-fitness evaluator. Each run gets its own so that the
/// warm-start sequence, and hence every digit, is reproducible.
pub(crate) fn fitness(cfg: &ExperimentConfig, model: &GrowthModel) -> EffectiveFitness {
    EffectiveFitness::new(model.clone())
        .with_settings(cfg.orbit_settings())
        .with_warm_start(true)
}

pub(crate) fn direct_run(
    cfg: &ExperimentConfig,
    model: &GrowthModel,
    eps: f64,
    horizon: f64,
    snapshots: Vec<f64>,
) -> LabResult<SimState> {
    let mut dc = DirectConfig::new(eps, horizon);
    dc.cadence = cfg.cadence * eps;
    dc.snapshot_times = snapshots;
    Ok(run(model, &cfg.datum.build()?, cfg.grid.build(model.dim())?, &dc)?)
}

pub(crate) fn require(cond: bool, msg: &str) -> LabResult<()> {
    if cond {
        Ok(())
    } else {
        Err(LabError::Config(msg.to_string()))
    }
}
