//! The 1-periodic cell problem `J' = R(x, s, e^J)` and its periodic orbit.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::model::{GrowthModel, PHASE_SAMPLES};
use crate::numerics::{periodic_mean, wrap_phase};
use crate::point::TraitPoint;

/// Tolerance on the viability margin separating inside from boundary.
pub const VIABILITY_TOL: f64 = 1e-9;

/// What parameterizes a cell problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Anchor {
    /// `J' = R(x, s, e^J)`.
    Trait(TraitPoint),
    /// Separable family: `J' = F B(s, e^J) - D(s, e^J)`.
    Level(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FixedPointMethod {
    /// Safeguarded Newton on `P(alpha) - alpha` using the variational equation.
    Newton,
    /// `alpha <- alpha + theta (P(alpha) - alpha)`.
    Damped(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitSettings {
    /// RK4 steps per period, `M_s`.
    pub samples: usize,
    /// Target for `|J(1) - J(0)|`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub method: FixedPointMethod,
}

impl Default for OrbitSettings {
    fn default() -> Self {
        Self {
            samples: 2048,
            tolerance: 1e-11,
            max_iterations: 200,
            method: FixedPointMethod::Newton,
        }
    }
}

impl OrbitSettings {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Viability {
    Inside,
    Boundary,
    Outside,
}

/// Classifies `x` by the sign of `mu(x) = int_0^1 R(x, s, 0) ds`.
pub fn in_x(model: &GrowthModel, x: &TraitPoint) -> (Viability, f64) {
    classify(model.viability_margin(x.as_slice(), PHASE_SAMPLES))
}

fn classify(mu: f64) -> (Viability, f64) {
    let v = if mu > VIABILITY_TOL {
        Viability::Inside
    } else if mu >= -VIABILITY_TOL {
        Viability::Boundary
    } else {
        Viability::Outside
    };
    (v, mu)
}

/// A sampled periodic orbit of the cell problem.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit {
    anchor: Anchor,
    /// `J(s_k)` for `s_k = k / M`, `k < M`.
    log_levels: Vec<f64>,
    /// `J'(s_k)`.
    slopes: Vec<f64>,
    mean: f64,
    seed: f64,
    residual: f64,
    iterations: usize,
    boundary: bool,
}

impl PeriodicOrbit {
    fn boundary(anchor: Anchor, samples: usize) -> Self {
        Self {
            anchor,
            log_levels: alloc::vec![f64::NEG_INFINITY; samples],
            slopes: alloc::vec![0.0; samples],
            mean: 0.0,
            seed: f64::NEG_INFINITY,
            residual: 0.0,
            iterations: 0,
            boundary: true,
        }
    }

    pub fn anchor(&self) -> Anchor {
        self.anchor
    }

    /// Number of samples per period.
    pub fn samples(&self) -> usize {
        self.log_levels.len()
    }

    pub fn phase(&self, k: usize) -> f64 {
        k as f64 / self.samples() as f64
    }

    /// `I(s_k)`.
    pub fn level(&self, k: usize) -> f64 {
        self.log_levels[k].exp()
    }

    pub fn log_level(&self, k: usize) -> f64 {
        self.log_levels[k]
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_levels.iter().map(|j| j.exp())
    }

    /// `int_0^1 I ds`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `alpha* = J(0)`.
    pub fn seed(&self) -> f64 {
        self.seed
    }

    /// `|J(1) - J(0)|` of the converged shot.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// True for the identically zero orbit of a boundary anchor.
    pub fn is_boundary(&self) -> bool {
        self.boundary
    }

    pub fn max_level(&self) -> f64 {
        self.levels().fold(0.0, f64::max)
    }

    pub fn min_level(&self) -> f64 {
        self.levels().fold(f64::INFINITY, f64::min)
    }

    /// `int_0^1 f(s, I(s)) ds` on the sample grid.
    pub fn average(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        periodic_mean((0..self.samples()).map(|k| f(self.phase(k), self.level(k))))
    }

    /// `I(s)` for any real `s`, by cubic Hermite interpolation of `J`.
    pub fn value_at(&self, s: f64) -> f64 {
        if self.boundary {
            return 0.0;
        }
        self.log_value_at(s).exp()
    }

    pub fn log_value_at(&self, s: f64) -> f64 {
        let m = self.samples();
        let pos = wrap_phase(s) * m as f64;
        let k = (pos.floor() as usize).min(m - 1);
        let t = pos - k as f64;
        let h = 1.0 / m as f64;
        let (j0, j1) = (self.log_levels[k], self.log_levels[(k + 1) % m]);
        let (d0, d1) = (self.slopes[k] * h, self.slopes[(k + 1) % m] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * j0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * j1
            + (t3 - t2) * d1
    }
}

/// The rate seen by the cell problem and its resource derivative.
pub(crate) struct CellRate<'a> {
    model: &'a GrowthModel,
    anchor: Anchor,
}

impl<'a> CellRate<'a> {
    pub(crate) fn new(model: &'a GrowthModel, anchor: Anchor) -> Result<Self> {
        if let Anchor::Level(_) = anchor {
            if model.separable_parts().is_none() {
                return Err(domain("level anchor needs a separable model"));
            }
        }
        if let Anchor::Trait(x) = anchor {
            if x.dim() != model.dim() {
                return Err(domain("anchor dimension does not match the model"));
            }
        }
        Ok(Self { model, anchor })
    }

    #[inline]
    fn rate(&self, s: f64, i: f64) -> f64 {
        match self.anchor {
            Anchor::Trait(x) => self.model.rate(x.as_slice(), s, i),
            Anchor::Level(f) => self
                .model
                .separable_parts()
                .map_or(f64::NAN, |p| p.level_rate(f, s, i)),
        }
    }

    #[inline]
    fn rate_di(&self, s: f64, i: f64) -> f64 {
        match self.anchor {
            Anchor::Trait(x) => self.model.rate_di(x.as_slice(), s, i),
            Anchor::Level(f) => self
                .model
                .separable_parts()
                .map_or(f64::NAN, |p| f * p.birth_di(s, i) - p.death_di(s, i)),
        }
    }

    fn margin(&self) -> f64 {
        periodic_mean((0..PHASE_SAMPLES).map(|k| self.rate(k as f64 / PHASE_SAMPLES as f64, 0.0)))
    }

    /// One period of RK4 from `J(0) = alpha`, returning `(J(1), dJ(1)/dalpha)`.
    /// When `record` is given it receives `(J_k, J'_k)` for `k < M`.
    fn shoot(
        &self,
        alpha: f64,
        samples: usize,
        mut record: Option<(&mut Vec<f64>, &mut Vec<f64>)>,
        variational: bool,
    ) -> (f64, f64) {
        let h = 1.0 / samples as f64;
        let mut j = alpha;
        let mut d = 1.0;
        let f = |s: f64, j: f64| self.rate(s, j.exp());
        let g = |s: f64, j: f64| {
            let i = j.exp();
            i * self.rate_di(s, i)
        };
        if let Some((levels, slopes)) = record.as_mut() {
            levels.clear();
            slopes.clear();
        }
        for k in 0..samples {
            let s = k as f64 * h;
            let k1 = f(s, j);
            if let Some((levels, slopes)) = record.as_mut() {
                levels.push(j);
                slopes.push(k1);
            }
            let ja = j + 0.5 * h * k1;
            let k2 = f(s + 0.5 * h, ja);
            let jb = j + 0.5 * h * k2;
            let k3 = f(s + 0.5 * h, jb);
            let jc = j + h * k3;
            let k4 = f(s + h, jc);
            if variational {
                let m1 = g(s, j) * d;
                let m2 = g(s + 0.5 * h, ja) * (d + 0.5 * h * m1);
                let m3 = g(s + 0.5 * h, jb) * (d + 0.5 * h * m2);
                let m4 = g(s + h, jc) * (d + h * m3);
                d += h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
            }
            j += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        (j, d)
    }
}

/// The discrete period map `alpha -> J(1; alpha)` and its derivative.
pub fn period_map(
    model: &GrowthModel,
    anchor: Anchor,
    alpha: f64,
    samples: usize,
) -> Result<(f64, f64)> {
    let cell = CellRate::new(model, anchor)?;
    Ok(cell.shoot(alpha, samples, None, true))
}

/// Viability of an anchor: `mu(x)` or `int F B(s, 0) - D(s, 0) ds`.
pub fn anchor_viability(model: &GrowthModel, anchor: Anchor) -> Result<(Viability, f64)> {
    Ok(classify(CellRate::new(model, anchor)?.margin()))
}

fn default_seed(model: &GrowthModel) -> f64 {
    let c = model.constants();
    let cap = c.resource_cap.unwrap_or(f64::INFINITY);
    let floor = c.resource_floor.unwrap_or(0.0);
    cap.min(floor.max(1.0)).ln()
}

/// Solves for the unique positive periodic orbit.
///
/// A boundary anchor gets the identically zero orbit; an anchor outside the
/// viable set is a domain error.
pub fn solve_orbit(
    model: &GrowthModel,
    anchor: Anchor,
    settings: &OrbitSettings,
    seed_hint: Option<f64>,
) -> Result<PeriodicOrbit> {
    if settings.samples < 4 {
        return Err(crate::error::config("cell problem needs at least 4 samples"));
    }
    let cell = CellRate::new(model, anchor)?;
    let (viability, mu) = classify(cell.margin());
    match viability {
        Viability::Outside => {
            return Err(Error::Domain(alloc::format!(
                "anchor {anchor:?} outside the viable set (mu = {mu:e})"
            )))
        }
        Viability::Boundary => return Ok(PeriodicOrbit::boundary(anchor, settings.samples)),
        Viability::Inside => {}
    }

    let m = settings.samples;
    let mut alpha = seed_hint
        .filter(|a| a.is_finite())
        .unwrap_or_else(|| default_seed(model));
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut levels = Vec::with_capacity(m);
    let mut slopes = Vec::with_capacity(m);
    let mut residual = f64::INFINITY;
    for iter in 0..settings.max_iterations {
        let newton = settings.method == FixedPointMethod::Newton;
        let (p, dp) = cell.shoot(alpha, m, Some((&mut levels, &mut slopes)), newton);
        let g = p - alpha;
        if !g.is_finite() {
            return Err(Error::NonConvergence {
                what: "cell orbit",
                iterations: iter,
                residual: g,
            });
        }
        residual = g.abs();
        if residual <= settings.tolerance {
            let mean = periodic_mean(levels.iter().map(|j| j.exp()));
            return Ok(PeriodicOrbit {
                anchor,
                log_levels: core::mem::take(&mut levels),
                slopes: core::mem::take(&mut slopes),
                mean,
                seed: alpha,
                residual,
                iterations: iter + 1,
                boundary: false,
            });
        }
        // g is decreasing in alpha.
        if g > 0.0 {
            lo = lo.max(alpha);
        } else {
            hi = hi.min(alpha);
        }
        let mut next = match settings.method {
            FixedPointMethod::Newton => {
                let slope = dp - 1.0;
                if slope < 0.0 {
                    alpha - g / slope
                } else {
                    alpha + g
                }
            }
            FixedPointMethod::Damped(theta) => alpha + theta * g,
        };
        if newton {
            next = next.clamp(alpha - 5.0, alpha + 5.0);
            if lo.is_finite() && hi.is_finite() && !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
        }
        alpha = next;
    }
    Err(Error::NonConvergence {
        what: "cell orbit",
        iterations: settings.max_iterations,
        residual,
    })
}

/// `max_s I(x_j, s)` along a path of anchors approaching the boundary.
pub fn boundary_decay_check(
    model: &GrowthModel,
    path: &[TraitPoint],
    settings: &OrbitSettings,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(path.len());
    let mut seed = None;
    for x in path {
        let orbit = solve_orbit(model, Anchor::Trait(*x), settings, seed)?;
        seed = Some(orbit.seed()).filter(|s| s.is_finite());
        out.push(orbit.max_level());
    }
    Ok(out)
}
