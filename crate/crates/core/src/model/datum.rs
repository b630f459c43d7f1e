use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::GrowthModel;
use crate::error::{config, Result};
use crate::grid::TraitGrid;
use crate::numerics::log_weighted_exp_sum;
use crate::point::TraitPoint;

/// Concave quadratic initial datum `u0(x) = -L |x - x0|^2 + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialDatum {
    pub center: TraitPoint,
    /// Curvature `L > 0`.
    pub curvature: f64,
    /// Target initial mass `rho0 > 0`.
    pub mass: f64,
}

impl InitialDatum {
    pub fn new(center: TraitPoint, curvature: f64, mass: f64) -> Result<Self> {
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(config("initial curvature must be positive"));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(config("initial mass must be positive"));
        }
        if !center.is_finite() {
            return Err(config("initial centre must be finite"));
        }
        Ok(Self {
            center,
            curvature,
            mass,
        })
    }

    /// `-L |x - x0|^2`, without the normalization.
    pub fn shape(&self, x: &TraitPoint) -> f64 {
        -self.curvature * x.dist_sq(&self.center)
    }

    /// Bounds `L1 = L2` on `-D^2 u0`.
    pub fn hessian_bounds(&self) -> (f64, f64) {
        (2.0 * self.curvature, 2.0 * self.curvature)
    }
}

/// Samples `u0_eps = -L |x - x0|^2 + c` on the grid, with `c` chosen so that
/// the discrete `int psi exp(u / eps)` equals `rho0 psi(x0)`.
///
/// The normalization is exact in one step: shifting `u` by `c` multiplies the
/// discrete integral by `exp(c / eps)`.
pub fn initial_field(
    datum: &InitialDatum,
    grid: &TraitGrid,
    eps: f64,
    model: &GrowthModel,
) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(config("eps must be positive"));
    }
    if datum.center.dim() != grid.dim() || !grid.contains(&datum.center, 0.0) {
        return Err(config("grid does not cover the initial centre"));
    }
    let mut u: Vec<f64> = grid.points().map(|x| datum.shape(&x)).collect();
    let psi: Vec<f64> = grid.points().map(|x| model.uptake(x.as_slice())).collect();
    let (_, ln_i) = log_weighted_exp_sum(&u, eps, grid.cell_volume(), |k| psi[k]);
    let target = datum.mass * model.uptake(datum.center.as_slice());
    if !(target > 0.0 && target.is_finite() && ln_i.is_finite()) {
        return Err(config("initial mass target unattainable on this grid"));
    }
    let c = eps * (target.ln() - ln_i);
    for v in &mut u {
        *v += c;
    }
    Ok(u)
}
