use perenv_core::direct::SimState;
use rayon::prelude::*;
use serde::Serialize;

use super::limit::{limit_report, LimitReport};
use super::{direct_run, fitness, Outcome};
use crate::analysis::{compare, dominant_frequency, resource_trace, ComparisonReport, Spectrum};
use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::output::{write_history, write_json, write_snapshots, ArtifactDir, Check, CsvTable};

pub(super) fn direct_sim(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let model = cfg.model.build()?;
    let eps = cfg.eps[0];
    let t = cfg.horizon;
    let sim = direct_run(cfg, &model, eps, t, vec![0.0, 0.5 * t, t])?;
    write_history(&dir.path("history.csv"), &sim.history, model.dim())?;
    let snaps: Vec<(f64, &[f64])> = sim.snapshots.iter().map(|s| (s.t, s.u.as_slice())).collect();
    write_snapshots(&dir.path("snapshots.csv"), &sim.grid, &snaps)?;
    let res = sim.history.resources();
    let lo = res.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = res.iter().copied().fold(0.0, f64::max);
    let mut checks = vec![Check::at_least("resource-positive", lo, f64::MIN_POSITIVE)];
    if let Some(cap) = model.constants().resource_cap {
        checks.push(Check::at_most("resource-below-cap", hi, cap));
    }
    Ok(Outcome {
        checks,
        metrics: serde_json::json!({
            "eps": eps,
            "steps": sim.steps,
            "records": sim.history.len(),
            "resource_min": lo,
            "resource_max": hi,
            "final_xbar": sim.history.records.last().map(|r| r.xbar.as_slice().to_vec()),
        }),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    /// One comparison per ε, largest ε first.
    pub runs: Vec<ComparisonReport>,
    /// `r(eps_min) / r(eps_max)`.
    pub residual_ratio: f64,
    pub residual_decreasing: bool,
    pub trait_distance_decreasing: bool,
    /// `sup_t |xbar_hj - xbar_canonical|`.
    pub canonical_distance: Option<f64>,
    pub h: f64,
    #[serde(skip)]
    pub states: Vec<SimState>,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Direct runs for every ε of the config against one limit-equation run.
pub fn sweep_report(cfg: &ExperimentConfig, limit: &LimitReport) -> LabResult<SweepReport> {
    let model = cfg.model.build()?;
    let mut eps = cfg.eps.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let results: Vec<LabResult<(ComparisonReport, SimState)>> = eps
        .par_iter()
        .map(|&e| {
            let sim = direct_run(cfg, &model, e, cfg.horizon, Vec::new())?;
            let fit = fitness(cfg, &model);
            let rep = compare(
                &sim.history,
                e,
                &fit,
                &limit.run.trajectory,
                cfg.window * e,
                cfg.compare_from,
                cfg.horizon,
            )?;
            Ok((rep, sim))
        })
        .collect();
    let mut runs = Vec::new();
    let mut states = Vec::new();
    for r in results {
        let (rep, sim) = r?;
        runs.push(rep);
        states.push(sim);
    }
    let residuals: Vec<f64> = runs.iter().map(|r| r.residual).collect();
    let distances: Vec<f64> = runs.iter().map(|r| r.trait_distance).collect();
    Ok(SweepReport {
        residual_ratio: residuals[residuals.len() - 1] / residuals[0],
        residual_decreasing: strictly_decreasing(&residuals),
        trait_distance_decreasing: strictly_decreasing(&distances),
        canonical_distance: limit.canonical_distance,
        h: limit.h,
        runs,
        states,
    })
}

impl SweepReport {
    pub fn checks(&self) -> Vec<Check> {
        let finest = self.runs.last().map_or(f64::INFINITY, |r| r.trait_distance);
        let r = self.residual_ratio;
        vec![
            Check::flag("residual-decreasing", self.residual_decreasing, r, 1.0),
            Check::flag("residual-ratio", (0.25..=1.0).contains(&r), r, 0.25),
            Check::flag(
                "trait-distance-decreasing",
                self.trait_distance_decreasing,
                finest,
                0.1,
            ),
            Check::at_most("trait-distance-finest", finest, 0.1),
            Check::at_most(
                "hj-vs-canonical",
                self.canonical_distance.unwrap_or(f64::INFINITY),
                5.0 * self.h,
            ),
        ]
    }
}

pub(super) fn eps_sweep(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let limit = limit_report(cfg, cfg.horizon, true)?;
    let rep = sweep_report(cfg, &limit)?;
    let dim = limit.final_xbar.len();
    for (run, sim) in rep.runs.iter().zip(&rep.states) {
        write_history(&dir.path(&format!("history_eps_{}.csv", run.eps)), &sim.history, dim)?;
    }
    let mut csv = CsvTable::create(
        &dir.path("eps_sweep.csv"),
        &["eps", "residual", "trait_distance", "average_deviation", "envelope_dip"].map(String::from),
    )?;
    for r in &rep.runs {
        csv.row(&[r.eps, r.residual, r.trait_distance, r.average_deviation, r.envelope_dip])?;
    }
    csv.finish()?;
    write_json(&dir.path("comparison.json"), &rep)?;
    Ok(Outcome {
        checks: rep.checks(),
        metrics: serde_json::to_value(&rep)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Figure1Report {
    pub eps: f64,
    pub spectrum: Spectrum,
    pub expected_frequency: f64,
    /// `1 / peak frequency`.
    pub period_estimate: f64,
    /// Running-average checks with the deviation taken from `deviation_from`.
    pub comparison: ComparisonReport,
    pub deviation_from: f64,
    #[serde(skip)]
    pub state: SimState,
    #[serde(skip)]
    pub average: Vec<f64>,
    #[serde(skip)]
    pub homogenized: Vec<f64>,
}

/// Start of the averaged-resource comparison.
const DEVIATION_FROM: f64 = 0.2;

pub fn figure1_report(cfg: &ExperimentConfig, limit: &LimitReport) -> LabResult<Figure1Report> {
    let model = cfg.model.build()?;
    let eps = cfg.eps[0];
    let t = cfg.horizon;
    let sim = direct_run(cfg, &model, eps, t, vec![0.0, 0.5 * t, t])?;
    let fit = fitness(cfg, &model);
    let w = cfg.window * eps;
    let comparison = compare(&sim.history, eps, &fit, &limit.run.trajectory, w, DEVIATION_FROM, t)?;
    let (average, homogenized) = resource_trace(&sim.history, &fit, &limit.run.trajectory, w)?;
    let (times, values): (Vec<f64>, Vec<f64>) = sim
        .history
        .records
        .iter()
        .filter(|r| r.t >= cfg.compare_from)
        .map(|r| (r.t, r.resource))
        .unzip();
    let spectrum = dominant_frequency(&times, &values, w)?;
    Ok(Figure1Report {
        eps,
        spectrum,
        expected_frequency: 1.0 / eps,
        period_estimate: 1.0 / spectrum.peak_frequency,
        comparison,
        deviation_from: DEVIATION_FROM,
        state: sim,
        average,
        homogenized,
    })
}

impl Figure1Report {
    pub fn checks(&self) -> Vec<Check> {
        let off = (self.spectrum.peak_frequency - self.expected_frequency).abs();
        vec![
            Check::at_most("fft-peak", off, self.spectrum.bin_width),
            Check::at_most("envelope-dip", self.comparison.envelope_dip, 1e-3),
            Check::at_most("average-vs-homogenized", self.comparison.average_deviation, 0.05),
        ]
    }
}

pub(super) fn figure1(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let limit = limit_report(cfg, cfg.horizon, false)?;
    let rep = figure1_report(cfg, &limit)?;
    let dim = limit.final_xbar.len();
    write_history(&dir.path("history.csv"), &rep.state.history, dim)?;
    let snaps: Vec<(f64, &[f64])> =
        rep.state.snapshots.iter().map(|s| (s.t, s.u.as_slice())).collect();
    write_snapshots(&dir.path("snapshots.csv"), &rep.state.grid, &snaps)?;
    crate::output::write_trajectory(&dir.path("trajectory.csv"), &limit.run.trajectory, dim)?;
    let mut csv = CsvTable::create(
        &dir.path("resource_trace.csv"),
        &["t", "I_eps", "I_avg", "I_hom"].map(String::from),
    )?;
    for ((r, a), h) in rep.state.history.records.iter().zip(&rep.average).zip(&rep.homogenized) {
        csv.row(&[r.t, r.resource, *a, *h])?;
    }
    csv.finish()?;
    Ok(Outcome {
        checks: rep.checks(),
        metrics: serde_json::to_value(&rep)?,
    })
}
