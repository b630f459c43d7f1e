use perenv_core::direct::running_average;
use perenv_core::esd::{esd_fixed_point, EsdOptions, EsdStatus};
use perenv_core::hjlimit::{hj_run, CounterexampleFitness, HjConfig, HjRun};
use perenv_core::TraitPoint;
use serde::Serialize;

use super::{direct_run, fitness, require, Outcome};
use crate::analysis::trajectory_distance;
use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::output::{write_json, write_snapshots, write_trajectory, ArtifactDir, Check};

/// A run of the constrained limit equation.
#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub horizon: f64,
    pub h: f64,
    pub final_xbar: Vec<f64>,
    pub max_drift: f64,
    pub steps: usize,
    /// `sup_t |xbar_hj - xbar_canonical|` when the coupled canonical
    /// equation was integrated alongside.
    pub canonical_distance: Option<f64>,
    #[serde(skip)]
    pub run: HjRun,
}

fn hj_config(cfg: &ExperimentConfig, horizon: f64, coupled: bool) -> HjConfig {
    let mut hc = HjConfig::new(horizon);
    hc.cadence = cfg.limit_cadence;
    hc.drift_tolerance = cfg.tolerances.drift;
    hc.coupled_canonical = coupled;
    hc
}

/// Limit equation for the configured model on the limit grid.
pub fn limit_report(cfg: &ExperimentConfig, horizon: f64, coupled: bool) -> LabResult<LimitReport> {
    let model = cfg.model.build()?;
    let fit = fitness(cfg, &model);
    let grid = cfg.limit_grid.build(model.dim())?;
    let run = hj_run(
        &fit,
        &cfg.datum.build()?,
        grid,
        &hj_config(cfg, horizon, coupled),
        &mut |_| {},
    )?;
    Ok(LimitReport {
        horizon,
        h: grid.spacing(),
        final_xbar: run.state.xbar.as_slice().to_vec(),
        max_drift: run.max_drift,
        steps: run.state.steps,
        canonical_distance: run
            .canonical
            .as_ref()
            .map(|c| trajectory_distance(&run.trajectory, c)),
        run,
    })
}

pub(super) fn hj_limit(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let rep = limit_report(cfg, cfg.horizon, false)?;
    let dim = rep.final_xbar.len();
    write_trajectory(&dir.path("trajectory.csv"), &rep.run.trajectory, dim)?;
    let u = &rep.run.state.u;
    write_snapshots(&dir.path("snapshots.csv"), &rep.run.state.grid, &[(rep.horizon, u)])?;
    Ok(Outcome {
        checks: vec![Check::at_most("constraint-drift", rep.max_drift, cfg.tolerances.drift)],
        metrics: serde_json::to_value(&rep)?,
    })
}

pub(super) fn canonical(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let rep = limit_report(cfg, cfg.horizon, true)?;
    let dim = rep.final_xbar.len();
    write_trajectory(&dir.path("trajectory.csv"), &rep.run.trajectory, dim)?;
    if let Some(c) = &rep.run.canonical {
        write_trajectory(&dir.path("canonical.csv"), c, dim)?;
    }
    let dist = rep.canonical_distance.unwrap_or(f64::INFINITY);
    Ok(Outcome {
        checks: vec![Check::at_most("hj-vs-canonical", dist, 5.0 * rep.h)],
        metrics: serde_json::to_value(&rep)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub h: f64,
    /// `sup_t sup_x |u - exact|` over the record times.
    pub sup_error: f64,
    pub drift: f64,
    /// Time at which the trait has turned by a full revolution.
    pub period_estimate: Option<f64>,
    /// `|xbar(T) - xbar(0)|`.
    pub return_distance: f64,
    pub final_xbar: Vec<f64>,
    #[serde(skip)]
    pub run: HjRun,
}

/// Rotation landscape from the configured datum; the exact trait path is
/// the datum centre rotated by angle `t`.
pub fn counterexample_report(cfg: &ExperimentConfig) -> LabResult<CounterexampleReport> {
    let datum = cfg.datum.build()?;
    require(
        datum.center.dim() == 2 && datum.curvature == 1.0,
        "the rotation counterexample needs a planar datum with curvature 1",
    )?;
    let fit = CounterexampleFitness::rotation();
    let grid = cfg.limit_grid.build(2)?;
    let x0 = datum.center;
    let exact = |t: f64| {
        let (s, c) = t.sin_cos();
        TraitPoint::planar(c * x0[0] - s * x0[1], s * x0[0] + c * x0[1])
    };
    let mut sup_error = 0.0f64;
    let run = hj_run(
        &fit,
        &datum,
        grid,
        &hj_config(cfg, cfg.horizon, false),
        &mut |st| {
            let xb = exact(st.t);
            let err = grid
                .points()
                .zip(&st.u)
                .map(|(x, u)| (u - fit.exact_solution(&x, &xb)).abs())
                .fold(0.0, f64::max);
            sup_error = sup_error.max(err);
        },
    )?;
    // Unwrapped angle of the trait about the origin.
    let mut turned = 0.0f64;
    let mut period_estimate = None;
    let pts = &run.trajectory.points;
    for w in pts.windows(2) {
        let (a, b) = (w[0].xbar, w[1].xbar);
        let step = (a[0] * b[1] - a[1] * b[0]).atan2(a.dot(&b));
        let full = 2.0 * std::f64::consts::PI;
        if period_estimate.is_none() && turned < full && turned + step >= full {
            let frac = (full - turned) / step;
            period_estimate = Some(w[0].t + frac * (w[1].t - w[0].t));
        }
        turned += step;
    }
    Ok(CounterexampleReport {
        h: grid.spacing(),
        sup_error,
        drift: run.max_drift,
        period_estimate,
        return_distance: run.state.xbar.dist_sq(&x0).sqrt(),
        final_xbar: run.state.xbar.as_slice().to_vec(),
        run,
    })
}

pub(super) fn counterexample(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let rep = counterexample_report(cfg)?;
    write_trajectory(&dir.path("trajectory.csv"), &rep.run.trajectory, 2)?;
    write_json(&dir.path("error_report.json"), &rep)?;
    Ok(Outcome {
        checks: vec![
            Check::at_most("sup-error", rep.sup_error, 5.0 * rep.h),
            Check::at_most("return-distance", rep.return_distance, 2.0 * rep.h),
            Check::at_most("constraint-drift", rep.drift, 1e-3),
        ],
        metrics: serde_json::to_value(&rep)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EsdResidualsJson {
    pub diagonal: f64,
    pub max_offdiagonal: f64,
    pub map: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EsdReport {
    pub converged: bool,
    pub xbar_inf: Vec<f64>,
    pub rho_inf: Option<f64>,
    pub residuals: EsdResidualsJson,
    pub iterations: usize,
    pub h: f64,
    /// Endpoint of the long limit-equation run.
    pub long_run_xbar: Vec<f64>,
    pub long_run_distance: f64,
    pub eps: f64,
    /// Running average of `I_eps / psi(xbar_eps)` at the last time where
    /// the full window fits.
    pub direct_average: f64,
    pub rho_deviation: f64,
}

pub fn esd_report(cfg: &ExperimentConfig) -> LabResult<EsdReport> {
    let model = cfg.model.build()?;
    let fit = fitness(cfg, &model);
    let grid = cfg.limit_grid.build(model.dim())?;
    let opts = EsdOptions {
        tolerance: cfg.tolerances.esd,
        ..EsdOptions::default()
    };
    let res = esd_fixed_point(&fit, cfg.datum.build()?.center, &grid, &opts)?;
    let long = limit_report(cfg, cfg.long_horizon, false)?;
    let long_xbar = long.run.state.xbar;

    let eps = cfg.eps[0];
    let sim = direct_run(cfg, &model, eps, cfg.horizon, Vec::new())?;
    let times = sim.history.times();
    let rho: Vec<f64> = sim.history.records.iter().map(|r| r.rho).collect();
    let w = cfg.window * eps;
    let avg = running_average(&times, &rho, w)?;
    let last = times
        .iter()
        .rposition(|t| *t <= cfg.horizon - 0.5 * w + 1e-12)
        .unwrap_or(times.len() - 1);
    let direct_average = avg[last];
    let rho_inf = res.rho;
    let rho_deviation = rho_inf.map_or(f64::INFINITY, |r| (direct_average - r).abs() / r);
    Ok(EsdReport {
        converged: res.status == EsdStatus::Converged,
        xbar_inf: res.xbar.as_slice().to_vec(),
        rho_inf,
        residuals: EsdResidualsJson {
            diagonal: res.residuals.diagonal,
            max_offdiagonal: res.residuals.max_offdiagonal,
            map: res.residuals.map,
        },
        iterations: res.trace.len(),
        h: grid.spacing(),
        long_run_xbar: long_xbar.as_slice().to_vec(),
        long_run_distance: long_xbar.dist_sq(&res.xbar).sqrt(),
        eps,
        direct_average,
        rho_deviation,
    })
}

impl EsdReport {
    pub fn checks(&self, target: Option<&TraitPoint>) -> Vec<Check> {
        let mut checks = vec![
            Check::flag("converged", self.converged, 0.0, 0.0),
            Check::at_most("diagonal-residual", self.residuals.diagonal, 1e-8),
            Check::at_most("offdiagonal-max", self.residuals.max_offdiagonal, 1e-6),
            Check::at_most("long-run-endpoint", self.long_run_distance, 2.0 * self.h),
            Check::at_most("rho-vs-direct-average", self.rho_deviation, 0.05),
        ];
        if let Some(x) = target {
            let d = TraitPoint::new(&self.xbar_inf).dist_sq(x).sqrt();
            checks.insert(1, Check::at_most("xbar-inf", d, 1e-6));
        }
        checks
    }
}

pub(super) fn esd(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let rep = esd_report(cfg)?;
    write_json(&dir.path("esd.json"), &rep)?;
    // The symmetric figure1 preset has its ESD at the origin.
    let origin = TraitPoint::zeros(rep.xbar_inf.len());
    let target = (cfg.model.preset == "figure1").then_some(&origin);
    Ok(Outcome {
        checks: rep.checks(target),
        metrics: serde_json::to_value(&rep)?,
    })
}
