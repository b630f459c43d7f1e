//! Effective fitness `R_eff(x, y) = int_0^1 R(x, s, I(y, s)) ds`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use core::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use spin::RwLock;

use super::orbit::{anchor_viability, solve_orbit, Anchor, OrbitSettings, PeriodicOrbit};
use crate::error::{domain, Result};
use crate::grid::TraitGrid;
use crate::model::{GrowthModel, FD_STEP, PHASE_SAMPLES};
use crate::numerics::periodic_mean;
use crate::point::TraitPoint;

/// A fitness landscape `R_eff(x, y)` of a mutant `x` in the environment set
/// by a resident `y`.
pub trait Fitness: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &TraitPoint, y: &TraitPoint) -> Result<f64>;

    /// `D_1 R_eff(x, y)`.
    fn gradient(&self, x: &TraitPoint, y: &TraitPoint) -> Result<TraitPoint>;

    /// Writes `R_eff(x_k, y)` for every grid node `x_k`.
    fn fill_field(&self, y: &TraitPoint, grid: &TraitGrid, out: &mut [f64]) -> Result<()> {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.value(&grid.point(k), y)?;
        }
        Ok(())
    }

    /// Resident mass `rho = (int I(y, s) ds) / psi(y)` when the landscape
    /// comes from a resource model.
    fn resident_mass(&self, _y: &TraitPoint) -> Result<Option<f64>> {
        Ok(None)
    }

    /// Viability margin of a resident; positive inside the viable set.
    fn viability(&self, _y: &TraitPoint) -> f64 {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum AnchorKey {
    Trait([u64; 2], usize),
    Level(u64),
}

impl From<Anchor> for AnchorKey {
    fn from(a: Anchor) -> Self {
        match a {
            Anchor::Trait(x) => {
                let mut bits = [0u64; 2];
                for (b, c) in bits.iter_mut().zip(x.as_slice()) {
                    // Normalize -0.0 so that it shares the entry of 0.0.
                    *b = (c + 0.0).to_bits();
                }
                AnchorKey::Trait(bits, x.dim())
            }
            Anchor::Level(f) => AnchorKey::Level((f + 0.0).to_bits()),
        }
    }
}

/// Effective fitness of a growth model, memoizing cell-problem orbits.
///
/// Orbits are keyed by the exact anchor. With `warm_start` off (the default)
/// every orbit is solved from the same seed, so results do not depend on the
/// order of queries. With `warm_start` on, each solve starts from the seed of
/// the most recent one, which is much cheaper along a continuous path.
pub struct EffectiveFitness {
    model: GrowthModel,
    settings: OrbitSettings,
    field_nodes: usize,
    warm_start: bool,
    capacity: usize,
    cache: RwLock<BTreeMap<AnchorKey, Arc<PeriodicOrbit>>>,
    last_seed: AtomicU64,
    solves: AtomicUsize,
}

impl core::fmt::Debug for EffectiveFitness {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("EffectiveFitness")
            .field("model", &self.model)
            .field("settings", &self.settings)
            .field("field_nodes", &self.field_nodes)
            .field("warm_start", &self.warm_start)
            .finish()
    }
}

impl EffectiveFitness {
    pub fn new(model: GrowthModel) -> Self {
        Self {
            model,
            settings: OrbitSettings::default(),
            field_nodes: 64,
            warm_start: false,
            capacity: 4096,
            cache: RwLock::new(BTreeMap::new()),
            last_seed: AtomicU64::new(f64::NAN.to_bits()),
            solves: AtomicUsize::new(0),
        }
    }

    pub fn with_settings(mut self, settings: OrbitSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_warm_start(mut self, on: bool) -> Self {
        self.warm_start = on;
        self
    }

    /// Phase nodes used by [`Fitness::fill_field`]. Must divide `M_s`;
    /// otherwise every orbit sample is used.
    pub fn with_field_nodes(mut self, nodes: usize) -> Self {
        self.field_nodes = nodes.max(1);
        self
    }

    /// Maximum number of cached orbits; the cache is flushed when full.
    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = capacity.max(1);
        self
    }

    pub fn model(&self) -> &GrowthModel {
        &self.model
    }

    pub fn settings(&self) -> &OrbitSettings {
        &self.settings
    }

    /// Number of orbit solves so far (cache misses).
    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn cached(&self) -> usize {
        self.cache.read().len()
    }

    /// The orbit for an anchor, from the cache or freshly solved.
    pub fn orbit_for(&self, anchor: Anchor) -> Result<Arc<PeriodicOrbit>> {
        let key = AnchorKey::from(anchor);
        if let Some(o) = self.cache.read().get(&key) {
            return Ok(o.clone());
        }
        let hint = if self.warm_start {
            Some(f64::from_bits(self.last_seed.load(Ordering::Relaxed)))
        } else {
            None
        };
        let orbit = Arc::new(solve_orbit(&self.model, anchor, &self.settings, hint)?);
        self.solves.fetch_add(1, Ordering::Relaxed);
        if orbit.seed().is_finite() {
            self.last_seed.store(orbit.seed().to_bits(), Ordering::Relaxed);
        }
        let mut cache = self.cache.write();
        if cache.len() >= self.capacity {
            cache.clear();
        }
        // A concurrent writer may have solved the same anchor first; keep its
        // orbit so every reader sees one value per anchor.
        Ok(cache.entry(key).or_insert(orbit).clone())
    }

    pub fn orbit(&self, y: &TraitPoint) -> Result<Arc<PeriodicOrbit>> {
        self.orbit_for(Anchor::Trait(*y))
    }

    /// Separable family: `R_eff(x, F)` from the level-parameterized orbit.
    pub fn value_at_level(&self, x: &TraitPoint, level: f64) -> Result<f64> {
        let orbit = self.orbit_for(Anchor::Level(level))?;
        self.average_rate(x, &orbit, 1)
    }

    fn average_rate(&self, x: &TraitPoint, orbit: &PeriodicOrbit, stride: usize) -> Result<f64> {
        if x.dim() != self.model.dim() {
            return Err(domain("trait dimension does not match the model"));
        }
        let xs = x.as_slice();
        if orbit.is_boundary() {
            return Ok(self.model.viability_margin(xs, PHASE_SAMPLES));
        }
        let m = orbit.samples();
        Ok(periodic_mean(
            (0..m)
                .step_by(stride)
                .map(|k| self.model.rate(xs, orbit.phase(k), orbit.level(k))),
        ))
    }

    fn stride(&self, samples: usize) -> usize {
        if self.field_nodes < samples && samples % self.field_nodes == 0 {
            samples / self.field_nodes
        } else {
            1
        }
    }
}

impl Fitness for EffectiveFitness {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn value(&self, x: &TraitPoint, y: &TraitPoint) -> Result<f64> {
        let orbit = self.orbit(y)?;
        self.average_rate(x, &orbit, 1)
    }

    fn gradient(&self, x: &TraitPoint, y: &TraitPoint) -> Result<TraitPoint> {
        let orbit = self.orbit(y)?;
        let dim = self.model.dim();
        if self.model.has_analytic_dx() && !orbit.is_boundary() {
            let mut acc = TraitPoint::zeros(dim);
            let mut g = [0.0; 2];
            for k in 0..orbit.samples() {
                self.model
                    .rate_dx(x.as_slice(), orbit.phase(k), orbit.level(k), &mut g[..dim]);
                for d in 0..dim {
                    acc[d] += g[d];
                }
            }
            return Ok(acc * (1.0 / orbit.samples() as f64));
        }
        let mut out = TraitPoint::zeros(dim);
        for d in 0..dim {
            let step = FD_STEP * x[d].abs().max(1.0);
            let mut p = *x;
            p[d] += step;
            let fp = self.average_rate(&p, &orbit, 1)?;
            p[d] -= 2.0 * step;
            let fm = self.average_rate(&p, &orbit, 1)?;
            out[d] = (fp - fm) / (2.0 * step);
        }
        Ok(out)
    }

    fn fill_field(&self, y: &TraitPoint, grid: &TraitGrid, out: &mut [f64]) -> Result<()> {
        let orbit = self.orbit(y)?;
        let stride = self.stride(orbit.samples());
        if orbit.is_boundary() {
            for (k, o) in out.iter_mut().enumerate() {
                *o = self.average_rate(&grid.point(k), &orbit, 1)?;
            }
            return Ok(());
        }
        let nodes: alloc::vec::Vec<(f64, f64)> = (0..orbit.samples())
            .step_by(stride)
            .map(|k| (orbit.phase(k), orbit.level(k)))
            .collect();
        let w = 1.0 / nodes.len() as f64;
        for (k, o) in out.iter_mut().enumerate() {
            let x = grid.point(k);
            let xs = x.as_slice();
            *o = w * nodes.iter().map(|&(s, i)| self.model.rate(xs, s, i)).sum::<f64>();
        }
        Ok(())
    }

    fn resident_mass(&self, y: &TraitPoint) -> Result<Option<f64>> {
        let orbit = self.orbit(y)?;
        Ok(Some(orbit.mean() / self.model.uptake(y.as_slice())))
    }

    fn viability(&self, y: &TraitPoint) -> f64 {
        anchor_viability(&self.model, Anchor::Trait(*y)).map_or(f64::NAN, |v| v.1)
    }
}

/// A landscape given in closed form, e.g. `|y|^2 - |x|^2`.
pub struct ClosedFormFitness<F, G> {
    dim: usize,
    value: F,
    gradient: G,
}

impl<F, G> ClosedFormFitness<F, G>
where
    F: Fn(&TraitPoint, &TraitPoint) -> f64 + Send + Sync,
    G: Fn(&TraitPoint, &TraitPoint) -> TraitPoint + Send + Sync,
{
    pub fn new(dim: usize, value: F, gradient: G) -> Self {
        Self {
            dim,
            value,
            gradient,
        }
    }
}

impl<F, G> Fitness for ClosedFormFitness<F, G>
where
    F: Fn(&TraitPoint, &TraitPoint) -> f64 + Send + Sync,
    G: Fn(&TraitPoint, &TraitPoint) -> TraitPoint + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &TraitPoint, y: &TraitPoint) -> Result<f64> {
        Ok((self.value)(x, y))
    }

    fn gradient(&self, x: &TraitPoint, y: &TraitPoint) -> Result<TraitPoint> {
        Ok((self.gradient)(x, y))
    }
}

/// `|y|^2 - |x|^2`, the landscape of the autonomous rate `1 - |x|^2 - I`.
pub fn quadratic_landscape(
    dim: usize,
) -> ClosedFormFitness<
    impl Fn(&TraitPoint, &TraitPoint) -> f64 + Send + Sync,
    impl Fn(&TraitPoint, &TraitPoint) -> TraitPoint + Send + Sync,
> {
    ClosedFormFitness::new(
        dim,
        |x: &TraitPoint, y: &TraitPoint| y.norm_sq() - x.norm_sq(),
        |x: &TraitPoint, _: &TraitPoint| *x * -2.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn vanishes_on_the_diagonal() {
        let ef = EffectiveFitness::new(presets::figure1());
        for x in [-1.2, -0.4, 0.0, 0.7, 1.3] {
            let p = TraitPoint::scalar(x);
            assert!(ef.value(&p, &p).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn autonomous_closed_form() {
        let m = GrowthModel::custom(2, |x, _, i| 1.0 - x[0] * x[0] - x[1] * x[1] - i);
        let ef = EffectiveFitness::new(m);
        let x = TraitPoint::planar(0.3, -0.1);
        let y = TraitPoint::planar(-0.2, 0.5);
        let expect = y.norm_sq() - x.norm_sq();
        assert!((ef.value(&x, &y).unwrap() - expect).abs() < 1e-10);
        let g = ef.gradient(&x, &y).unwrap();
        assert!((g[0] + 0.6).abs() < 1e-7 && (g[1] - 0.2).abs() < 1e-7);
    }

    #[test]
    fn cache_solves_each_anchor_once() {
        let ef = EffectiveFitness::new(presets::figure1());
        let y = TraitPoint::scalar(0.2);
        for x in [0.0, 0.1, 0.5] {
            ef.value(&TraitPoint::scalar(x), &y).unwrap();
        }
        assert_eq!(ef.solves(), 1);
        ef.value(&y, &TraitPoint::scalar(-0.0)).unwrap();
        ef.value(&y, &TraitPoint::scalar(0.0)).unwrap();
        assert_eq!(ef.solves(), 2);
    }

    #[test]
    fn strided_field_matches_full_quadrature() {
        let ef = EffectiveFitness::new(presets::figure1());
        let grid = TraitGrid::new(1, 2.0, 65).unwrap();
        let y = TraitPoint::scalar(0.4);
        let mut field = alloc::vec![0.0; grid.len()];
        ef.fill_field(&y, &grid, &mut field).unwrap();
        for k in [0, 20, 40, 64] {
            let full = ef.value(&grid.point(k), &y).unwrap();
            assert!((field[k] - full).abs() < 1e-10, "{} {}", field[k], full);
        }
    }
}
