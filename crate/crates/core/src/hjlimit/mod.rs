//! The constrained limit equation `u_t = R_eff(x, xbar(t)) + |Du|^2`,
//! `max u = 0 = u(xbar(t), t)`, and the canonical equation
//! `xbar' = (-D^2 u)^{-1} D_1 R_eff(xbar, xbar)`.

mod counterexample;

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

pub use counterexample::CounterexampleFitness;

use crate::cell::Fitness;
use crate::error::{config, domain, Error, Result};
use crate::grid::TraitGrid;
use crate::model::InitialDatum;
use crate::point::{SymMatrix, TraitPoint};
use crate::scheme::{
    add_hamiltonian, hessian_at, max_gradient, stability_limit, subgrid_argmax, LineScratch,
    SpatialOrder,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HjConfig {
    pub horizon: f64,
    /// Time between records.
    pub cadence: f64,
    pub order: SpatialOrder,
    pub safety: f64,
    /// Hard failure once `|max u|` exceeds this.
    pub drift_tolerance: f64,
    /// Largest step of the coupled canonical integrator.
    pub canonical_step: f64,
    /// Integrate the canonical equation alongside, with `M` taken from `u`.
    pub coupled_canonical: bool,
}

impl HjConfig {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            cadence: 0.01,
            order: SpatialOrder::Second,
            safety: 0.4,
            drift_tolerance: 1e-2,
            canonical_step: 0.01,
            coupled_canonical: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HjState {
    pub grid: TraitGrid,
    pub t: f64,
    pub u: Vec<f64>,
    pub xbar: TraitPoint,
    /// Sub-grid `max u`.
    pub max_u: f64,
    /// `|max u|`.
    pub drift: f64,
    /// `D^2 u` at the argmax node.
    pub hessian: SymMatrix,
    pub steps: usize,
}

/// One point of a trait trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub xbar: TraitPoint,
    pub max_u: f64,
    pub hessian: SymMatrix,
    /// `int I(xbar, s) ds / psi(xbar)`, when the landscape has a resource.
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CanonicalTrajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl CanonicalTrajectory {
    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }

    /// Trait at the recorded time nearest to `t`.
    pub fn at(&self, t: f64) -> Option<&TrajectoryPoint> {
        self.points
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

#[derive(Clone, Debug)]
pub struct HjRun {
    pub state: HjState,
    /// Argmax trajectory of `u` with its Hessian.
    pub trajectory: CanonicalTrajectory,
    /// Canonical equation integrated with `M` from `u`, if requested.
    pub canonical: Option<CanonicalTrajectory>,
    pub max_drift: f64,
}

/// How the canonical equation obtains `M = D^2 u(xbar)`.
#[derive(Clone, Copy)]
pub enum CanonicalMode<'a> {
    /// A given matrix.
    Coupled(SymMatrix),
    /// `M = -2 F(xbar) Id`.
    Ansatz(&'a dyn Fn(&TraitPoint) -> f64),
}

fn velocity(fit: &dyn Fitness, x: &TraitPoint, mode: CanonicalMode<'_>) -> Result<TraitPoint> {
    let m = match mode {
        CanonicalMode::Coupled(m) => m,
        CanonicalMode::Ansatz(f) => SymMatrix::scalar(x.dim(), -2.0 * f(x)),
    };
    let g = fit.gradient(x, x)?;
    m.solve_negated(&g)
        .ok_or(Error::IndefiniteHessian { entries: m.entries })
}

/// One RK4 step of the canonical equation.
pub fn canonical_step(
    fit: &dyn Fitness,
    xbar: &TraitPoint,
    mode: CanonicalMode<'_>,
    dt: f64,
) -> Result<TraitPoint> {
    let k1 = velocity(fit, xbar, mode)?;
    let k2 = velocity(fit, &(*xbar + k1 * (0.5 * dt)), mode)?;
    let k3 = velocity(fit, &(*xbar + k2 * (0.5 * dt)), mode)?;
    let k4 = velocity(fit, &(*xbar + k3 * dt), mode)?;
    Ok(*xbar + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Integrates the canonical equation alone with a fixed `mode`, recording
/// every `cadence`.
pub fn integrate_canonical(
    fit: &dyn Fitness,
    x0: TraitPoint,
    mode: CanonicalMode<'_>,
    horizon: f64,
    dt: f64,
    cadence: f64,
) -> Result<CanonicalTrajectory> {
    if !(dt > 0.0 && cadence >= dt) {
        return Err(config("canonical step must be positive and below the cadence"));
    }
    let hessian = match mode {
        CanonicalMode::Coupled(m) => m,
        CanonicalMode::Ansatz(f) => SymMatrix::scalar(x0.dim(), -2.0 * f(&x0)),
    };
    let mut out = CanonicalTrajectory::default();
    let mut x = x0;
    let mut t = 0.0;
    out.points.push(TrajectoryPoint {
        t,
        xbar: x,
        max_u: 0.0,
        hessian,
        rho: fit.resident_mass(&x)?,
    });
    let intervals = (horizon / cadence - 1e-9).ceil() as usize;
    for r in 1..=intervals {
        let target = (r as f64 * cadence).min(horizon);
        let n = ((target - t) / dt).ceil().max(1.0) as usize;
        let h = (target - t) / n as f64;
        for _ in 0..n {
            x = canonical_step(fit, &x, mode, h)?;
        }
        t = target;
        let hessian = match mode {
            CanonicalMode::Coupled(m) => m,
            CanonicalMode::Ansatz(f) => SymMatrix::scalar(x.dim(), -2.0 * f(&x)),
        };
        out.points.push(TrajectoryPoint {
            t,
            xbar: x,
            max_u: 0.0,
            hessian,
            rho: fit.resident_mass(&x)?,
        });
    }
    Ok(out)
}

struct HjSolver<'a> {
    fit: &'a dyn Fitness,
    grid: TraitGrid,
    order: SpatialOrder,
    field: Vec<f64>,
    k: Vec<f64>,
    stage: Vec<f64>,
    scratch: LineScratch,
}

impl HjSolver<'_> {
    /// `R_eff(x, xbar(u)) + H(u)`; returns `max |Du|`.
    fn rhs(&mut self, u: &[f64], out: &mut [f64]) -> Result<f64> {
        let (_, xbar, _) = subgrid_argmax(u, &self.grid);
        self.fit.fill_field(&xbar, &self.grid, &mut self.field)?;
        out.copy_from_slice(&self.field);
        Ok(add_hamiltonian(u, &self.grid, self.order, 0.0, out, &mut self.scratch))
    }

    /// One SSP-RK2 (Heun) step with the trait recomputed at each stage.
    fn step(&mut self, u: &mut [f64], t: f64, dt: f64) -> Result<()> {
        let mut k = core::mem::take(&mut self.k);
        let mut stage = core::mem::take(&mut self.stage);
        let result = (|| {
            let grad = self.rhs(u, &mut k)?;
            let limit = stability_limit(&self.grid, 0.0, grad);
            if dt > limit {
                return Err(Error::Cfl { dt, limit });
            }
            for j in 0..u.len() {
                stage[j] = u[j] + dt * k[j];
            }
            self.rhs(&stage, &mut k)?;
            let mut finite = true;
            for j in 0..u.len() {
                u[j] = 0.5 * u[j] + 0.5 * (stage[j] + dt * k[j]);
                finite &= u[j].is_finite();
            }
            if !finite {
                return Err(Error::BlowUp { t: t + dt });
            }
            Ok(())
        })();
        self.k = k;
        self.stage = stage;
        result
    }
}

fn snapshot_point(fit: &dyn Fitness, state: &HjState) -> Result<TrajectoryPoint> {
    Ok(TrajectoryPoint {
        t: state.t,
        xbar: state.xbar,
        max_u: state.max_u,
        hessian: state.hessian,
        rho: fit.resident_mass(&state.xbar)?,
    })
}

fn refresh(state: &mut HjState) {
    let (node, xbar, peak) = subgrid_argmax(&state.u, &state.grid);
    state.xbar = xbar;
    state.max_u = peak;
    state.drift = peak.abs();
    state.hessian = hessian_at(&state.u, &state.grid, node);
}

/// Solves the constrained equation from `u0 = -L |x - x0|^2`.
///
/// `observer` sees the state at every record time, including `t = 0`.
pub fn hj_run(
    fit: &dyn Fitness,
    datum: &InitialDatum,
    grid: TraitGrid,
    cfg: &HjConfig,
    observer: &mut dyn FnMut(&HjState),
) -> Result<HjRun> {
    if fit.dim() != grid.dim() || datum.center.dim() != grid.dim() {
        return Err(config("fitness, datum and grid dimensions differ"));
    }
    if !(cfg.cadence > 0.0 && cfg.horizon >= 0.0 && cfg.safety > 0.0) {
        return Err(config("invalid limit-equation time parameters"));
    }
    if !grid.contains(&datum.center, 2.0 * grid.spacing()) {
        return Err(config("grid does not cover the initial trait"));
    }
    let u: Vec<f64> = grid.points().map(|x| datum.shape(&x)).collect();
    let mut state = HjState {
        grid,
        t: 0.0,
        u,
        xbar: datum.center,
        max_u: 0.0,
        drift: 0.0,
        hessian: SymMatrix::scalar(grid.dim(), -2.0 * datum.curvature),
        steps: 0,
    };
    refresh(&mut state);
    let mut solver = HjSolver {
        fit,
        grid,
        order: cfg.order,
        field: alloc::vec![0.0; grid.len()],
        k: alloc::vec![0.0; grid.len()],
        stage: alloc::vec![0.0; grid.len()],
        scratch: LineScratch::default(),
    };
    let mut trajectory = CanonicalTrajectory::default();
    trajectory.points.push(snapshot_point(fit, &state)?);
    let mut canonical = if cfg.coupled_canonical {
        Some(CanonicalTrajectory {
            points: alloc::vec![trajectory.points[0]],
        })
    } else {
        None
    };
    let mut canon_x = state.xbar;
    let mut max_drift = state.drift;
    observer(&state);

    let intervals = (cfg.horizon / cfg.cadence - 1e-9).ceil().max(0.0) as usize;
    for r in 1..=intervals {
        let target = (r as f64 * cfg.cadence).min(cfg.horizon);
        let span = target - state.t;
        let m_start = state.hessian;
        let grad = max_gradient(&state.u, &grid);
        let limit = cfg.safety * stability_limit(&grid, 0.0, grad);
        let substeps = (span / limit).ceil().max(1.0) as usize;
        let dt = span / substeps as f64;
        for _ in 0..substeps {
            solver.step(&mut state.u, state.t, dt)?;
            state.t += dt;
            state.steps += 1;
            refresh(&mut state);
            max_drift = max_drift.max(state.drift);
            if state.drift > cfg.drift_tolerance {
                return Err(Error::ConstraintDrift {
                    t: state.t,
                    drift: state.drift,
                });
            }
        }
        state.t = target;
        if !grid.contains(&state.xbar, 2.0 * grid.spacing()) {
            return Err(domain(alloc::format!(
                "dominant trait {:?} reached the box boundary at t={}",
                state.xbar.as_slice(),
                state.t
            )));
        }
        if let Some(c) = canonical.as_mut() {
            let n = (span / cfg.canonical_step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                canon_x = canonical_step(fit, &canon_x, CanonicalMode::Coupled(m_start), h)?;
            }
            c.points.push(TrajectoryPoint {
                t: state.t,
                xbar: canon_x,
                max_u: 0.0,
                hessian: m_start,
                rho: fit.resident_mass(&canon_x)?,
            });
        }
        trajectory.points.push(snapshot_point(fit, &state)?);
        observer(&state);
    }
    Ok(HjRun {
        state,
        trajectory,
        canonical,
        max_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::quadratic_landscape;

    #[test]
    fn symmetric_landscape_keeps_trait_fixed() {
        let fit = quadratic_landscape(1);
        let grid = TraitGrid::new(1, 2.0, 129).unwrap();
        let datum = InitialDatum::new(TraitPoint::scalar(0.0), 1.0, 1.0).unwrap();
        let mut cfg = HjConfig::new(1.0);
        cfg.cadence = 0.1;
        let run = hj_run(&fit, &datum, grid, &cfg, &mut |_| {}).unwrap();
        assert!(run.state.xbar[0].abs() < 1e-12);
        assert!(run.max_drift < 1e-12);
    }

    #[test]
    fn autonomous_canonical_decays_exponentially() {
        let fit = quadratic_landscape(1);
        let m = SymMatrix::scalar(1, -2.0);
        let tr = integrate_canonical(
            &fit,
            TraitPoint::scalar(0.8),
            CanonicalMode::Coupled(m),
            2.0,
            0.01,
            0.5,
        )
        .unwrap();
        for p in &tr.points {
            let exact = 0.8 * (-p.t).exp();
            assert!((p.xbar[0] - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_point_does_not_move() {
        let fit = quadratic_landscape(2);
        let x = TraitPoint::zeros(2);
        let next = canonical_step(&fit, &x, CanonicalMode::Coupled(SymMatrix::scalar(2, -1.0)), 0.1)
            .unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn indefinite_hessian_is_rejected() {
        let fit = quadratic_landscape(1);
        let r = canonical_step(
            &fit,
            &TraitPoint::scalar(0.3),
            CanonicalMode::Coupled(SymMatrix::scalar(1, 0.5)),
            0.1,
        );
        assert!(matches!(r, Err(Error::IndefiniteHessian { .. })));
    }

    #[test]
    fn rotation_counterexample_tracks_exact_solution() {
        let fit = CounterexampleFitness::rotation();
        let grid = TraitGrid::new(2, 2.0, 65).unwrap();
        let datum = InitialDatum::new(TraitPoint::planar(1.0, 0.0), 1.0, 1.0).unwrap();
        let mut cfg = HjConfig::new(1.0);
        cfg.cadence = 0.25;
        let run = hj_run(&fit, &datum, grid, &cfg, &mut |_| {}).unwrap();
        let exact = TraitPoint::planar(1.0f64.cos(), 1.0f64.sin());
        let err = grid
            .points()
            .zip(&run.state.u)
            .map(|(x, u)| (u - fit.exact_solution(&x, &exact)).abs())
            .fold(0.0, f64::max);
        assert!(err < 5.0 * grid.spacing(), "{err}");
        assert!(run.state.xbar.dist_sq(&exact).sqrt() < grid.spacing());
        assert!(run.max_drift < 1e-3, "{}", run.max_drift);
    }
}
