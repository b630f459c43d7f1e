//! The viscous Hamilton-Jacobi form of the model at finite `eps`,
//! `u_t = R(x, t/eps, I(t)) + |Du|^2 + eps Lap u` with
//! `I(t) = int psi exp(u/eps) dx`.

mod average;

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

pub use average::running_average;

use crate::cell::{Anchor, EffectiveFitness};
use crate::error::{config, domain, Error, Result};
use crate::grid::TraitGrid;
use crate::model::{initial_field, GrowthModel, InitialDatum};
use crate::numerics::log_weighted_exp_sum;
use crate::point::TraitPoint;
use crate::scheme::{
    add_hamiltonian, concavity_range, max_gradient, stability_limit, subgrid_argmax, LineScratch,
    SpatialOrder,
};

/// Phase samples for the viability diagnostic `mu(xbar)`.
const MU_SAMPLES: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct DirectConfig {
    pub eps: f64,
    pub horizon: f64,
    /// Time between recorded observables.
    pub cadence: f64,
    pub order: SpatialOrder,
    /// Fraction of the explicit stability limit used per step.
    pub safety: f64,
    /// Steps per fast period at least; `dt <= eps / phase_steps`.
    pub phase_steps: usize,
    /// Boundary values must stay below `max u - boundary_gap * eps`.
    pub boundary_gap: f64,
    /// Depth below `max u` of the region where concavity is monitored.
    pub concavity_depth: f64,
    pub snapshot_times: Vec<f64>,
}

impl DirectConfig {
    pub fn new(eps: f64, horizon: f64) -> Self {
        Self {
            eps,
            horizon,
            cadence: eps / 16.0,
            order: SpatialOrder::Second,
            safety: 0.4,
            phase_steps: 64,
            boundary_gap: 20.0,
            concavity_depth: 1.0,
            snapshot_times: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(config("eps must be positive"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(config("horizon must be nonnegative"));
        }
        if !(self.cadence > 0.0) {
            return Err(config("output cadence must be positive"));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(config("safety factor must lie in (0, 1]"));
        }
        if self.phase_steps == 0 {
            return Err(config("phase_steps must be positive"));
        }
        Ok(())
    }
}

/// Observables at one recorded time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub t: f64,
    /// `I_eps(t)`.
    pub resource: f64,
    pub log_resource: f64,
    /// Sub-grid argmax of `u`.
    pub xbar: TraitPoint,
    /// `I_eps / psi(xbar)`.
    pub rho: f64,
    pub max_u: f64,
    /// Range of the discrete `D^2 u` eigenvalues near the maximum.
    pub d2u_min: f64,
    pub d2u_max: f64,
    /// `F_eps = int b psi n / I_eps` for separable models.
    pub level: Option<f64>,
    /// `mu(xbar)`.
    pub viability: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub records: Vec<Record>,
}

impl History {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn resources(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.resource).collect()
    }

    pub fn levels(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.level).collect()
    }

    /// Record nearest to `t`.
    pub fn at(&self, t: f64) -> Option<&Record> {
        self.records
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub grid: TraitGrid,
    pub eps: f64,
    pub t: f64,
    pub u: Vec<f64>,
    pub steps: usize,
    pub history: History,
    pub snapshots: Vec<Snapshot>,
}

/// Explicit solver for one model on one grid.
pub struct DirectSolver<'m> {
    model: &'m GrowthModel,
    grid: TraitGrid,
    eps: f64,
    order: SpatialOrder,
    points: Vec<TraitPoint>,
    psi: Vec<f64>,
    b: Option<Vec<f64>>,
    scratch: LineScratch,
    k: Vec<f64>,
    stage: Vec<f64>,
}

impl<'m> DirectSolver<'m> {
    pub fn new(model: &'m GrowthModel, grid: TraitGrid, eps: f64, order: SpatialOrder) -> Result<Self> {
        if grid.dim() != model.dim() {
            return Err(config("grid and model dimensions differ"));
        }
        if !(eps > 0.0) {
            return Err(config("eps must be positive"));
        }
        let points: Vec<TraitPoint> = grid.points().collect();
        let psi: Vec<f64> = points.iter().map(|x| model.uptake(x.as_slice())).collect();
        if psi.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(config("uptake must be positive and finite on the grid"));
        }
        let b = model
            .separable_parts()
            .map(|p| points.iter().map(|x| (p.b)(x.as_slice())).collect());
        Ok(Self {
            model,
            grid,
            eps,
            order,
            points,
            psi,
            b,
            scratch: LineScratch::default(),
            k: alloc::vec![0.0; grid.len()],
            stage: alloc::vec![0.0; grid.len()],
        })
    }

    pub fn grid(&self) -> &TraitGrid {
        &self.grid
    }

    /// `ln I_eps` of a field, by shifted exponentials.
    pub fn log_resource(&self, u: &[f64]) -> f64 {
        log_weighted_exp_sum(u, self.eps, self.grid.cell_volume(), |k| self.psi[k]).1
    }

    /// `F_eps = int b psi n / int psi n` for separable models.
    pub fn level(&self, u: &[f64]) -> Option<f64> {
        let b = self.b.as_ref()?;
        let peak = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..u.len() {
            let w = self.psi[k] * ((u[k] - peak) / self.eps).exp();
            num += b[k] * w;
            den += w;
        }
        Some(num / den)
    }

    /// Right-hand side at time `t`; returns `max |Du|`.
    fn rhs(&mut self, u: &[f64], t: f64, out: &mut [f64]) -> f64 {
        let i = self.log_resource(u).exp();
        let s = t / self.eps;
        let phase = s - s.floor();
        for (o, x) in out.iter_mut().zip(&self.points) {
            *o = self.model.rate(x.as_slice(), phase, i);
        }
        add_hamiltonian(u, &self.grid, self.order, self.eps, out, &mut self.scratch)
    }

    /// One SSP-RK3 step, with the resource recomputed at every stage.
    pub fn step(&mut self, state: &mut SimState, dt: f64) -> Result<()> {
        let n = state.u.len();
        let t = state.t;
        let mut k = core::mem::take(&mut self.k);
        let mut stage = core::mem::take(&mut self.stage);
        k.iter_mut().for_each(|v| *v = 0.0);
        let grad = self.rhs(&state.u, t, &mut k);
        let limit = stability_limit(&self.grid, self.eps, grad);
        if dt > limit {
            self.k = k;
            self.stage = stage;
            return Err(Error::Cfl { dt, limit });
        }
        for j in 0..n {
            stage[j] = state.u[j] + dt * k[j];
        }
        k.iter_mut().for_each(|v| *v = 0.0);
        self.rhs(&stage, t + dt, &mut k);
        for j in 0..n {
            stage[j] = 0.75 * state.u[j] + 0.25 * (stage[j] + dt * k[j]);
        }
        k.iter_mut().for_each(|v| *v = 0.0);
        self.rhs(&stage, t + 0.5 * dt, &mut k);
        let mut finite = true;
        for j in 0..n {
            let v = (state.u[j] + 2.0 * (stage[j] + dt * k[j])) / 3.0;
            finite &= v.is_finite();
            state.u[j] = v;
        }
        self.k = k;
        self.stage = stage;
        state.t = t + dt;
        state.steps += 1;
        if !finite {
            return Err(Error::BlowUp { t: state.t });
        }
        Ok(())
    }

    /// Observables of the current state.
    pub fn observe(&self, state: &SimState, concavity_depth: f64) -> Record {
        let ln_i = self.log_resource(&state.u);
        let (_, xbar, max_u) = subgrid_argmax(&state.u, &self.grid);
        let (d2u_min, d2u_max) = concavity_range(&state.u, &self.grid, max_u, concavity_depth);
        let resource = ln_i.exp();
        Record {
            t: state.t,
            resource,
            log_resource: ln_i,
            xbar,
            rho: resource / self.model.uptake(xbar.as_slice()),
            max_u,
            d2u_min,
            d2u_max,
            level: self.level(&state.u),
            viability: self.model.viability_margin(xbar.as_slice(), MU_SAMPLES),
        }
    }

    /// Largest boundary value relative to `max u`.
    fn boundary_margin(&self, u: &[f64]) -> f64 {
        let peak = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let edge = u
            .iter()
            .enumerate()
            .filter(|(k, _)| self.grid.on_boundary(*k))
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        peak - edge
    }
}

/// Integrates from the initial datum to `cfg.horizon`, recording observables
/// every `cfg.cadence`.
pub fn run(
    model: &GrowthModel,
    datum: &InitialDatum,
    grid: TraitGrid,
    cfg: &DirectConfig,
) -> Result<SimState> {
    cfg.validate()?;
    let u = initial_field(datum, &grid, cfg.eps, model)?;
    run_from(model, grid, u, cfg)
}

/// As [`run`], from a given field at `t = 0`.
pub fn run_from(
    model: &GrowthModel,
    grid: TraitGrid,
    u: Vec<f64>,
    cfg: &DirectConfig,
) -> Result<SimState> {
    cfg.validate()?;
    if u.len() != grid.len() {
        return Err(config("field length does not match the grid"));
    }
    let mut solver = DirectSolver::new(model, grid, cfg.eps, cfg.order)?;
    let mut state = SimState {
        grid,
        eps: cfg.eps,
        t: 0.0,
        u,
        steps: 0,
        history: History::default(),
        snapshots: Vec::new(),
    };
    let gap = cfg.boundary_gap * cfg.eps;
    let check_boundary = |solver: &DirectSolver<'_>, state: &SimState| -> Result<()> {
        let margin = solver.boundary_margin(&state.u);
        if margin < gap {
            return Err(Error::DomainTooSmall {
                t: state.t,
                margin,
            });
        }
        Ok(())
    };
    check_boundary(&solver, &state)?;
    state.history.records.push(solver.observe(&state, cfg.concavity_depth));
    let mut snaps: Vec<f64> = cfg.snapshot_times.clone();
    snaps.sort_by(f64::total_cmp);
    let mut next_snap = 0;
    let take_snaps = |state: &mut SimState, next_snap: &mut usize| {
        while *next_snap < snaps.len() && snaps[*next_snap] <= state.t + 0.5 * cfg.cadence {
            state.snapshots.push(Snapshot {
                t: state.t,
                u: state.u.clone(),
            });
            *next_snap += 1;
        }
    };
    take_snaps(&mut state, &mut next_snap);

    let intervals = (cfg.horizon / cfg.cadence - 1e-9).ceil().max(0.0) as usize;
    for r in 1..=intervals {
        let target = (r as f64 * cfg.cadence).min(cfg.horizon);
        let span = target - state.t;
        let grad = max_gradient(&state.u, &grid);
        let limit = (cfg.eps / cfg.phase_steps as f64)
            .min(cfg.safety * stability_limit(&grid, cfg.eps, grad));
        let substeps = (span / limit).ceil().max(1.0) as usize;
        let dt = span / substeps as f64;
        for _ in 0..substeps {
            solver.step(&mut state, dt)?;
        }
        state.t = target;
        check_boundary(&solver, &state)?;
        state.history.records.push(solver.observe(&state, cfg.concavity_depth));
        take_snaps(&mut state, &mut next_snap);
    }
    Ok(state)
}

/// `F_eps` of a state, separable models only.
pub fn separable_level(model: &GrowthModel, state: &SimState) -> Result<f64> {
    let solver = DirectSolver::new(model, state.grid, state.eps, SpatialOrder::Second)?;
    solver
        .level(&state.u)
        .ok_or_else(|| domain("separable level needs a separable model"))
}

/// `sup |ln I_eps(t) - ln I(xbar_eps(t), t/eps)|` over records with
/// `t in [t0, t1]`, against cell-problem orbits.
pub fn cell_residual(
    history: &History,
    fitness: &EffectiveFitness,
    eps: f64,
    t0: f64,
    t1: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for r in history.records.iter().filter(|r| r.t >= t0 && r.t <= t1) {
        let orbit = fitness.orbit_for(Anchor::Trait(r.xbar))?;
        let predicted = orbit.log_value_at(r.t / eps);
        worst = worst.max((r.log_resource - predicted).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn zero_rate_matches_the_heat_kernel() {
        // n = exp(u/eps) solves the heat equation, so a quadratic u stays
        // quadratic: u = -L x^2/(1 + 4Lt) - (eps/2) ln(1 + 4Lt) + c.
        let model = GrowthModel::custom(1, |_, _, _| 0.0);
        let grid = TraitGrid::new(1, 2.0, 257).unwrap();
        let datum = InitialDatum::new(TraitPoint::scalar(0.0), 1.0, 1.0).unwrap();
        let eps = 0.02;
        let mut cfg = DirectConfig::new(eps, 0.25);
        cfg.cadence = 0.05;
        let state = run(&model, &datum, grid, &cfg).unwrap();
        let c0 = initial_field(&datum, &grid, eps, &model).unwrap()[128];
        let g = 1.0 + 4.0 * 0.25;
        for (k, v) in state.u.iter().enumerate() {
            let x = grid.coordinate(k);
            let exact = -x * x / g - 0.5 * eps * g.ln() + c0;
            assert!((v - exact).abs() < 1e-6, "{x}: {v} {exact}");
        }
        // The discrete mass is conserved.
        for r in &state.history.records {
            assert!((r.resource - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn logistic_rate_relaxes_to_unit_resource() {
        let model = GrowthModel::custom(1, |_, _, i| 1.0 - i);
        let grid = TraitGrid::new(1, 2.0, 129).unwrap();
        let datum = InitialDatum::new(TraitPoint::scalar(0.0), 1.0, 0.3).unwrap();
        let mut cfg = DirectConfig::new(0.01, 3.0);
        cfg.cadence = 0.05;
        let state = run(&model, &datum, grid, &cfg).unwrap();
        let resources = state.history.resources();
        for w in resources.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        let last = state.history.records.last().unwrap();
        assert!((last.resource - 1.0).abs() < 1e-3, "{}", last.resource);
        assert!(last.max_u.abs() < 0.05, "{}", last.max_u);
    }

    #[test]
    fn symmetric_start_keeps_the_trait_at_zero() {
        let model = presets::figure1();
        let grid = TraitGrid::new(1, 2.0, 257).unwrap();
        let datum = InitialDatum::new(TraitPoint::scalar(0.0), 1.0, 7.5).unwrap();
        let mut cfg = DirectConfig::new(0.04, 0.4);
        cfg.cadence = 0.01;
        let state = run(&model, &datum, grid, &cfg).unwrap();
        for r in &state.history.records {
            assert!(r.xbar[0].abs() <= grid.spacing(), "{:?}", r.xbar);
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let model = presets::figure1();
        let grid = TraitGrid::new(1, 2.0, 257).unwrap();
        let datum = InitialDatum::new(TraitPoint::scalar(0.0), 1.0, 1.0).unwrap();
        let u = initial_field(&datum, &grid, 0.01, &model).unwrap();
        let mut solver = DirectSolver::new(&model, grid, 0.01, SpatialOrder::Second).unwrap();
        let mut state = SimState {
            grid,
            eps: 0.01,
            t: 0.0,
            u,
            steps: 0,
            history: History::default(),
            snapshots: Vec::new(),
        };
        assert!(matches!(solver.step(&mut state, 0.1), Err(Error::Cfl { .. })));
    }

    #[test]
    fn constant_birth_gives_constant_level() {
        let mut p = presets::SeparableParams::default();
        p.center = [0.0, 0.0];
        let base = presets::separable(1, p);
        let mut parts = base.separable_parts().unwrap().clone();
        parts.b = alloc::sync::Arc::new(|_| 3.0);
        parts.b_grad = None;
        let model = GrowthModel::separable(1, parts);
        let grid = TraitGrid::new(1, 1.5, 129).unwrap();
        let datum = InitialDatum::new(TraitPoint::scalar(0.2), 1.0, 1.0).unwrap();
        let mut cfg = DirectConfig::new(0.01, 0.2);
        cfg.cadence = 0.05;
        let state = run(&model, &datum, grid, &cfg).unwrap();
        for r in &state.history.records {
            assert!((r.level.unwrap() - 3.0).abs() < 1e-12);
        }
        assert!((separable_level(&model, &state).unwrap() - 3.0).abs() < 1e-12);
        assert!(separable_level(&presets::figure1(), &state).is_err());
    }
}
