use alloc::boxed::Box;

use crate::cell::Fitness;
use crate::error::Result;
use crate::grid::TraitGrid;
use crate::point::TraitPoint;

type Scalar = Box<dyn Fn(&TraitPoint) -> f64 + Send + Sync>;
type Vector = Box<dyn Fn(&TraitPoint) -> TraitPoint + Send + Sync>;

/// `R_eff(x, y) = -(DF(y).G(y) + 4 F(y)^2) |x - y|^2 + 2 F(y) G(y).(x - y)`.
///
/// With `u0 = -F(x0) |x - x0|^2` the constrained equation is solved exactly by
/// `u = -F(xbar) |x - xbar|^2` where `xbar' = G(xbar)`.
pub struct CounterexampleFitness {
    dim: usize,
    f: Scalar,
    df: Vector,
    g: Vector,
}

impl CounterexampleFitness {
    pub fn new(
        dim: usize,
        f: impl Fn(&TraitPoint) -> f64 + Send + Sync + 'static,
        df: impl Fn(&TraitPoint) -> TraitPoint + Send + Sync + 'static,
        g: impl Fn(&TraitPoint) -> TraitPoint + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            f: Box::new(f),
            df: Box::new(df),
            g: Box::new(g),
        }
    }

    /// `F = 1`, `G(x) = (-x2, x1)`: circles are periodic trait orbits.
    pub fn rotation() -> Self {
        Self::new(
            2,
            |_| 1.0,
            |_| TraitPoint::zeros(2),
            |x| TraitPoint::planar(-x[1], x[0]),
        )
    }

    pub fn weight(&self, x: &TraitPoint) -> f64 {
        (self.f)(x)
    }

    pub fn drift(&self, x: &TraitPoint) -> TraitPoint {
        (self.g)(x)
    }

    /// `DF.G + 4 F^2`, half the curvature of `-R_eff(., y)`.
    pub fn curvature(&self, y: &TraitPoint) -> f64 {
        let f = (self.f)(y);
        (self.df)(y).dot(&(self.g)(y)) + 4.0 * f * f
    }

    /// The exact solution `-F(xbar) |x - xbar|^2`.
    pub fn exact_solution(&self, x: &TraitPoint, xbar: &TraitPoint) -> f64 {
        -(self.f)(xbar) * x.dist_sq(xbar)
    }
}

impl Fitness for CounterexampleFitness {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &TraitPoint, y: &TraitPoint) -> Result<f64> {
        let d = *x - *y;
        Ok(-self.curvature(y) * d.norm_sq() + 2.0 * (self.f)(y) * (self.g)(y).dot(&d))
    }

    fn gradient(&self, x: &TraitPoint, y: &TraitPoint) -> Result<TraitPoint> {
        let d = *x - *y;
        Ok(d * (-2.0 * self.curvature(y)) + (self.g)(y) * (2.0 * (self.f)(y)))
    }

    fn fill_field(&self, y: &TraitPoint, grid: &TraitGrid, out: &mut [f64]) -> Result<()> {
        let c = self.curvature(y);
        let lin = (self.g)(y) * (2.0 * (self.f)(y));
        for (k, o) in out.iter_mut().enumerate() {
            let d = grid.point(k) - *y;
            *o = -c * d.norm_sq() + lin.dot(&d);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let c = CounterexampleFitness::rotation();
        let y = TraitPoint::planar(1.0, 0.0);
        assert_eq!(c.value(&y, &y).unwrap(), 0.0);
        let x = TraitPoint::planar(1.0, 1.0);
        assert!((c.value(&x, &y).unwrap() + 2.0).abs() < 1e-15);
        // D_1 R_eff(y, y) = 2 G(y)
        let g = c.gradient(&y, &y).unwrap();
        assert_eq!(g, TraitPoint::planar(0.0, 2.0));
        assert_eq!(c.curvature(&y), 4.0);
    }
}
