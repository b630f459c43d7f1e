use perenv_core::direct::SimState;
use perenv_core::esd::{fluctuation_compare, separable_limit, FluctuationReport};
use serde::Serialize;

use super::{direct_run, fitness, require, Outcome};
use crate::analysis::largest_dip;
use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::output::{write_history, write_json, ArtifactDir, Check};

#[derive(Clone, Debug, Serialize)]
pub struct SeparableReport {
    pub eps: f64,
    pub h: f64,
    pub x_star: Vec<f64>,
    /// `max b`.
    pub f_star: f64,
    pub rho_star: f64,
    pub f_initial: f64,
    pub f_final: f64,
    /// Largest drop of `F_eps` below its running maximum.
    pub largest_dip: f64,
    pub final_xbar: Vec<f64>,
    #[serde(skip)]
    pub state: SimState,
}

pub fn separable_report(cfg: &ExperimentConfig) -> LabResult<SeparableReport> {
    let model = cfg.model.build()?;
    require(model.separable_parts().is_some(), "the separable experiment needs a separable model")?;
    let fit = fitness(cfg, &model);
    let grid = cfg.grid.build(model.dim())?;
    let lim = separable_limit(&fit, &grid)?;
    let eps = cfg.eps[0];
    let sim = direct_run(cfg, &model, eps, cfg.horizon, Vec::new())?;
    let levels = sim
        .history
        .levels()
        .ok_or_else(|| crate::error::LabError::Config("direct run recorded no levels".into()))?;
    Ok(SeparableReport {
        eps,
        h: grid.spacing(),
        x_star: lim.x_star.as_slice().to_vec(),
        f_star: lim.f_star,
        rho_star: lim.rho_star,
        f_initial: levels[0],
        f_final: levels[levels.len() - 1],
        largest_dip: largest_dip(&levels),
        final_xbar: sim
            .history
            .records
            .last()
            .map_or_else(Vec::new, |r| r.xbar.as_slice().to_vec()),
        state: sim,
    })
}

impl SeparableReport {
    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_most("level-dips", self.largest_dip, 5.0 * self.eps),
            Check::at_most("final-level", (self.f_final - self.f_star).abs(), 2.0 * self.h),
        ]
    }
}

pub(super) fn separable(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let rep = separable_report(cfg)?;
    write_history(&dir.path("history.csv"), &rep.state.history, rep.x_star.len())?;
    write_json(&dir.path("separable.json"), &rep)?;
    Ok(Outcome {
        checks: rep.checks(),
        metrics: serde_json::to_value(&rep)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FluctuationSummary {
    pub x_star: Vec<f64>,
    pub b_star: f64,
    pub rho_star: f64,
    pub rho_av: f64,
    /// `rho* - rho_av`.
    pub gap: f64,
    pub identity_residuals: [f64; 2],
    pub d1_mean: f64,
    pub d2_mean: f64,
    pub jensen_gap: f64,
    /// Gap with twice the orbit samples.
    pub doubled_gap: f64,
    /// `|doubled_gap - gap| / |gap|`.
    pub doubling_change: f64,
    /// Gap of the same model without seasonal forcing.
    pub unforced_gap: f64,
}

fn compare_with(cfg: &ExperimentConfig) -> LabResult<FluctuationReport> {
    let model = cfg.model.build()?;
    let fit = fitness(cfg, &model);
    let grid = cfg.limit_grid.build(model.dim())?;
    Ok(fluctuation_compare(&fit, &grid)?)
}

pub fn fluctuation_report(cfg: &ExperimentConfig) -> LabResult<FluctuationSummary> {
    let base = compare_with(cfg)?;
    let mut fine = cfg.clone();
    fine.orbit_samples *= 2;
    let doubled = compare_with(&fine)?;
    let mut still = cfg.clone();
    still.model.amplitude = Some(0.0);
    let unforced = compare_with(&still)?;
    Ok(FluctuationSummary {
        x_star: base.x_star.as_slice().to_vec(),
        b_star: base.b_star,
        rho_star: base.rho_star,
        rho_av: base.rho_av,
        gap: base.gap,
        identity_residuals: base.identity_residuals,
        d1_mean: base.d1_mean,
        d2_mean: base.d2_mean,
        jensen_gap: base.jensen_gap,
        doubled_gap: doubled.gap,
        doubling_change: (doubled.gap - base.gap).abs() / base.gap.abs(),
        unforced_gap: unforced.gap,
    })
}

impl FluctuationSummary {
    pub fn checks(&self) -> Vec<Check> {
        let identity = self.identity_residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        vec![
            Check::at_least("gap-positive", self.gap, f64::MIN_POSITIVE),
            Check::at_most("gap-doubling-change", self.doubling_change, 5e-4),
            Check::at_most("unforced-gap", self.unforced_gap.abs(), 1e-6),
            Check::at_most("identities", identity, 1e-8),
        ]
    }
}

pub(super) fn fluctuation(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    require(
        cfg.model.preset == "fluctuation-example",
        "the fluctuation experiment needs the fluctuation-example preset",
    )?;
    let rep = fluctuation_report(cfg)?;
    write_json(&dir.path("fluctuation.json"), &rep)?;
    Ok(Outcome {
        checks: rep.checks(),
        metrics: serde_json::to_value(&rep)?,
    })
}
