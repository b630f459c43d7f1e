//! Long-time limits: the fixed point `R_eff(x, x) = 0 = max R_eff(., x)`,
//! the separable limit `F* = max b`, and the comparison of the oscillating
//! and averaged populations in the fluctuation example.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::cell::{Anchor, EffectiveFitness, Fitness, PeriodicOrbit};
use crate::error::{config, domain, Error, Result};
use crate::grid::TraitGrid;
use crate::model::GrowthModel;
use crate::numerics::{bisect, periodic_mean};
use crate::point::TraitPoint;
use crate::scheme::subgrid_argmax;

/// Result of one evaluation of `A(y) = argmax_x R_eff(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapPoint {
    pub point: TraitPoint,
    /// `R_eff(A(y), y)`.
    pub value: f64,
    /// `|D_1 R_eff(A(y), y)|`.
    pub gradient: f64,
    /// False when Newton failed and `point` is the grid argmax.
    pub refined: bool,
}

const NEWTON_TOL: f64 = 1e-8;
const HESSIAN_STEP: f64 = 1e-4;

fn fd_hessian(
    grad: &dyn Fn(&TraitPoint) -> Result<TraitPoint>,
    x: &TraitPoint,
) -> Result<crate::point::SymMatrix> {
    let dim = x.dim();
    let mut m = crate::point::SymMatrix::scalar(dim, 0.0);
    let mut cols = [TraitPoint::zeros(dim); 2];
    for (d, col) in cols.iter_mut().enumerate().take(dim) {
        let h = HESSIAN_STEP * x[d].abs().max(1.0);
        let mut p = *x;
        p[d] += h;
        let gp = grad(&p)?;
        p[d] -= 2.0 * h;
        let gm = grad(&p)?;
        *col = (gp - gm) * (0.5 / h);
    }
    for i in 0..dim {
        for j in 0..dim {
            m.entries[2 * i + j] = 0.5 * (cols[j][i] + cols[i][j]);
        }
    }
    Ok(m)
}

/// Newton on `grad = 0` from `start`, confined to the grid box. Returns the
/// stationary point, or `None` if it does not converge to a local maximum.
fn newton_maximize(
    grad: &dyn Fn(&TraitPoint) -> Result<TraitPoint>,
    start: TraitPoint,
    grid: &TraitGrid,
) -> Result<Option<(TraitPoint, f64)>> {
    let mut x = start;
    let reach = 2.0 * grid.spacing();
    for _ in 0..50 {
        let g = grad(&x)?;
        if g.norm() <= NEWTON_TOL {
            return Ok(Some((x, g.norm())));
        }
        let m = fd_hessian(grad, &x)?;
        let Some(step) = m.solve_negated(&g) else {
            return Ok(None);
        };
        x = x + step;
        if x.dist_sq(&start).sqrt() > reach || !grid.contains(&x, 0.0) {
            return Ok(None);
        }
    }
    Ok(None)
}

/// `A(y)`: grid argmax of `R_eff(., y)` refined by Newton on `D_1 R_eff = 0`.
pub fn a_map(fit: &dyn Fitness, y: &TraitPoint, grid: &TraitGrid) -> Result<MapPoint> {
    let mut field = alloc::vec![0.0; grid.len()];
    fit.fill_field(y, grid, &mut field)?;
    let (_, coarse, _) = subgrid_argmax(&field, grid);
    let grad = |x: &TraitPoint| fit.gradient(x, y);
    match newton_maximize(&grad, coarse, grid)? {
        Some((point, gnorm)) => Ok(MapPoint {
            point,
            value: fit.value(&point, y)?,
            gradient: gnorm,
            refined: true,
        }),
        None => Ok(MapPoint {
            point: coarse,
            value: fit.value(&coarse, y)?,
            gradient: fit.gradient(&coarse, y)?.norm(),
            refined: false,
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EsdStatus {
    Converged,
    /// The iteration hit its cap, oscillated, or left the search box.
    NonConvergent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EsdResiduals {
    /// `|R_eff(x, x)|`.
    pub diagonal: f64,
    /// `max_x R_eff(x, xbar)` over the grid and at `A(xbar)`.
    pub max_offdiagonal: f64,
    /// `|A(xbar) - xbar|`.
    pub map: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EsdResult {
    pub status: EsdStatus,
    pub xbar: TraitPoint,
    /// `int I(xbar, s) ds / psi(xbar)`, when the landscape has a resource.
    pub rho: Option<f64>,
    pub residuals: EsdResiduals,
    pub trace: Vec<TraitPoint>,
    /// Some `A` evaluation fell back to the grid argmax.
    pub unrefined: bool,
}

impl EsdResult {
    pub fn converged(&self) -> bool {
        self.status == EsdStatus::Converged
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EsdOptions {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EsdOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}

/// Damped iteration `x <- x + gamma (A(x) - x)` from `x_init`.
pub fn esd_fixed_point(
    fit: &dyn Fitness,
    x_init: TraitPoint,
    grid: &TraitGrid,
    opts: &EsdOptions,
) -> Result<EsdResult> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0 && opts.tolerance > 0.0) {
        return Err(config("damping must lie in (0, 1] and the tolerance be positive"));
    }
    if x_init.dim() != grid.dim() || fit.dim() != grid.dim() {
        return Err(config("fitness, start point and grid dimensions differ"));
    }
    let mut x = x_init;
    let mut trace = alloc::vec![x];
    let mut unrefined = false;
    let mut status = EsdStatus::NonConvergent;
    let mut last = None;
    for _ in 0..opts.max_iterations {
        if fit.viability(&x) < -crate::cell::VIABILITY_TOL {
            return Err(domain(alloc::format!(
                "fixed-point iterate {:?} left the viable set",
                x.as_slice()
            )));
        }
        let a = a_map(fit, &x, grid)?;
        unrefined |= !a.refined;
        let gap = (a.point - x).norm();
        last = Some((a, gap));
        if gap <= opts.tolerance {
            status = EsdStatus::Converged;
            break;
        }
        x = x + (a.point - x) * opts.damping;
        trace.push(x);
        if !grid.contains(&x, grid.spacing()) {
            break;
        }
    }
    let (a, gap) = match last {
        Some(v) => v,
        None => (a_map(fit, &x, grid)?, f64::NAN),
    };
    let residuals = if grid.contains(&x, 0.0) {
        let mut field = alloc::vec![0.0; grid.len()];
        fit.fill_field(&x, grid, &mut field)?;
        let grid_max = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        EsdResiduals {
            diagonal: fit.value(&x, &x)?.abs(),
            max_offdiagonal: grid_max.max(a.value),
            map: gap,
        }
    } else {
        EsdResiduals {
            diagonal: f64::NAN,
            max_offdiagonal: f64::NAN,
            map: gap,
        }
    };
    let rho = if status == EsdStatus::Converged {
        fit.resident_mass(&x)?
    } else {
        None
    };
    Ok(EsdResult {
        status,
        xbar: x,
        rho,
        residuals,
        trace,
        unrefined,
    })
}

/// Limit of the separable family.
#[derive(Clone, Debug)]
pub struct SeparableLimit {
    pub x_star: TraitPoint,
    /// `F* = b(x*)`.
    pub f_star: f64,
    /// `int I(F*, s) ds / psi(x*)`.
    pub rho_star: f64,
    pub orbit: alloc::sync::Arc<PeriodicOrbit>,
}

/// Grid maximizer of `b` refined by Newton. Fails when a second, separate
/// grid maximum comes within `tie` of the first.
pub fn maximize_b(model: &GrowthModel, grid: &TraitGrid, tie: f64) -> Result<(TraitPoint, f64)> {
    let parts = model
        .separable_parts()
        .ok_or_else(|| domain("model is not separable"))?;
    let values: Vec<f64> = grid.points().map(|x| (parts.b)(x.as_slice())).collect();
    let (best, coarse, _) = subgrid_argmax(&values, grid);
    let top = values[best];
    // Any grid local maximum away from the best node that nearly ties it.
    let n = grid.nodes();
    let bmi = grid.multi_index(best);
    for k in 0..values.len() {
        if values[k] < top - tie {
            continue;
        }
        let mi = grid.multi_index(k);
        let far = (0..grid.dim()).any(|d| mi[d].abs_diff(bmi[d]) > 1);
        if !far {
            continue;
        }
        let local = (0..grid.dim()).all(|d| {
            let s = grid.stride(d);
            (mi[d] == 0 || values[k - s] <= values[k]) && (mi[d] == n - 1 || values[k + s] <= values[k])
        });
        if local {
            return Err(Error::Assumption(alloc::format!(
                "b has two maxima within {tie}: {:?} and {:?}",
                grid.point(best).as_slice(),
                grid.point(k).as_slice()
            )));
        }
    }
    let grad = |x: &TraitPoint| -> Result<TraitPoint> {
        let mut g = TraitPoint::zeros(x.dim());
        match &parts.b_grad {
            Some(f) => f(x.as_slice(), g.as_mut_slice()),
            None => {
                for d in 0..x.dim() {
                    let h = crate::model::FD_STEP * x[d].abs().max(1.0);
                    let mut p = *x;
                    p[d] += h;
                    let fp = (parts.b)(p.as_slice());
                    p[d] -= 2.0 * h;
                    let fm = (parts.b)(p.as_slice());
                    g[d] = (fp - fm) / (2.0 * h);
                }
            }
        }
        Ok(g)
    };
    let x = newton_maximize(&grad, coarse, grid)?.map_or(coarse, |(x, _)| x);
    Ok((x, (parts.b)(x.as_slice())))
}

pub fn separable_limit(fit: &EffectiveFitness, grid: &TraitGrid) -> Result<SeparableLimit> {
    let model = fit.model();
    let (x_star, f_star) = maximize_b(model, grid, 1e-9)?;
    let orbit = fit.orbit_for(Anchor::Level(f_star))?;
    let rho_star = orbit.mean() / model.uptake(x_star.as_slice());
    Ok(SeparableLimit {
        x_star,
        f_star,
        rho_star,
        orbit,
    })
}

/// Oscillating versus averaged population in `R = b(x) - D1(s) D2(I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluctuationReport {
    pub x_star: TraitPoint,
    pub b_star: f64,
    pub rho_star: f64,
    pub rho_av: f64,
    /// `rho* - rho_av`.
    pub gap: f64,
    /// `int D1 D2(I) - b(x*)` and `b(x*) int D2(I) - int D1 D2(I)^2`.
    pub identity_residuals: [f64; 2],
    pub d1_mean: f64,
    pub d2_mean: f64,
    /// `D1_av int D2(I) - b(x*)`, nonnegative.
    pub jensen_gap: f64,
}

pub fn fluctuation_compare(fit: &EffectiveFitness, grid: &TraitGrid) -> Result<FluctuationReport> {
    let model = fit.model();
    let parts = model
        .fluctuation_parts()
        .ok_or_else(|| domain("model is not of the fluctuation family"))?;
    let lim = separable_limit(fit, grid)?;
    let orbit = &lim.orbit;
    let b = lim.f_star;
    let m = orbit.samples();
    let d1 = |k: usize| (parts.seasonal)(orbit.phase(k));
    let d2 = |k: usize| (parts.response)(orbit.level(k));
    let d1_mean = periodic_mean((0..m).map(d1));
    let d2_mean = periodic_mean((0..m).map(d2));
    let first = periodic_mean((0..m).map(|k| d1(k) * d2(k))) - b;
    let second = b * d2_mean - periodic_mean((0..m).map(|k| d1(k) * d2(k) * d2(k)));

    let c = model.constants();
    let (lo, hi) = match (c.resource_floor, c.resource_cap) {
        (Some(f), Some(cap)) if f > 0.0 => (0.5 * f, 2.0 * cap),
        _ => return Err(config("fluctuation model lacks resource bounds")),
    };
    let i_av = bisect(|i| b - d1_mean * (parts.response)(i), lo, hi, 1e-14, 200)?;
    let rho_av = i_av / model.uptake(lim.x_star.as_slice());
    Ok(FluctuationReport {
        x_star: lim.x_star,
        b_star: b,
        rho_star: lim.rho_star,
        rho_av,
        gap: lim.rho_star - rho_av,
        identity_residuals: [first, second],
        d1_mean,
        d2_mean,
        jensen_gap: d1_mean * d2_mean - b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::quadratic_landscape;
    use crate::hjlimit::CounterexampleFitness;
    use crate::model::presets::{self, FluctuationParams};

    #[test]
    fn quadratic_landscape_maps_to_origin() {
        let fit = quadratic_landscape(2);
        let grid = TraitGrid::new(2, 1.0, 65).unwrap();
        for y in [TraitPoint::planar(0.3, -0.7), TraitPoint::planar(-0.9, 0.1)] {
            let a = a_map(&fit, &y, &grid).unwrap();
            assert!(a.refined);
            assert!(a.point.norm() < 1e-8);
        }
    }

    #[test]
    fn autonomous_logistic_esd() {
        let model = GrowthModel::custom(1, |x: &[f64], _s, i| 1.0 - x[0] * x[0] - i);
        let fit = EffectiveFitness::new(model);
        let grid = TraitGrid::new(1, 0.9, 129).unwrap();
        let r = esd_fixed_point(&fit, TraitPoint::scalar(0.4), &grid, &EsdOptions::default())
            .unwrap();
        assert!(r.converged());
        assert!(r.xbar[0].abs() < 1e-8);
        assert!((r.rho.unwrap() - 1.0).abs() < 1e-9);
        assert!(r.residuals.diagonal < 1e-8 && r.residuals.max_offdiagonal < 1e-6);
    }

    #[test]
    fn rotation_has_no_attracting_fixed_point() {
        let fit = CounterexampleFitness::rotation();
        let grid = TraitGrid::new(2, 2.0, 65).unwrap();
        let r = esd_fixed_point(&fit, TraitPoint::planar(1.0, 0.0), &grid, &EsdOptions::default())
            .unwrap();
        assert_eq!(r.status, EsdStatus::NonConvergent);
    }

    #[test]
    fn separable_limit_of_quadratic_b() {
        let model = presets::fluctuation(1, FluctuationParams::default());
        let fit = EffectiveFitness::new(model);
        let grid = TraitGrid::new(1, 1.0, 101).unwrap();
        let lim = separable_limit(&fit, &grid).unwrap();
        assert!(lim.x_star[0].abs() < 1e-10);
        assert!((lim.f_star - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_equal_maxima_are_rejected() {
        let parts = crate::model::SeparableParts {
            b: alloc::sync::Arc::new(|x: &[f64]| 1.0 - (x[0] * x[0] - 0.25).powi(2)),
            b_grad: None,
            birth: alloc::sync::Arc::new(|_, _| 1.0),
            death: alloc::sync::Arc::new(|_, i| i),
            birth_di: None,
            death_di: None,
        };
        let model = GrowthModel::separable(1, parts);
        let grid = TraitGrid::new(1, 1.0, 101).unwrap();
        assert!(matches!(maximize_b(&model, &grid, 1e-9), Err(Error::Assumption(_))));
    }

    #[test]
    fn constant_seasonality_closes_the_gap() {
        let p = FluctuationParams {
            amplitude: 0.0,
            ..Default::default()
        };
        let fit = EffectiveFitness::new(presets::fluctuation(1, p));
        let grid = TraitGrid::new(1, 1.0, 101).unwrap();
        let r = fluctuation_compare(&fit, &grid).unwrap();
        assert!((r.rho_av - 2.0).abs() < 1e-9);
        assert!(r.gap.abs() < 1e-6);
    }
}
