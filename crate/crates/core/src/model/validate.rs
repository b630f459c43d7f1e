//! Sampled checks of the structural hypotheses.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Family, GrowthModel, InitialDatum};
use crate::numerics::bisect;
use crate::point::TraitPoint;

/// Phase samples used for `mu(x)` during validation.
const MU_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assumption {
    /// A bounded resource level exists and the viable set is nonempty.
    Survival,
    /// `-K1 <= D^2_x R <= -K2 < 0`.
    Concavity,
    /// `-K5 <= D_I R <= -K6 < 0` on the viable set.
    ResourceMonotonicity,
    /// `0 < psi_m <= psi <= psi_M`.
    UptakeBounds,
    /// `4 L2^2 <= K2 <= K1 <= 4 L1^2`.
    InitialCompatibility,
    /// The initial centre is viable.
    InitialViability,
    /// `b, B, D > 0`.
    SeparablePositivity,
    /// Lower and upper resource levels exist with `0 < I_m < I_M`.
    ResourceLevels,
    /// `D_I B < -a1`, `D_I D > a2`.
    SeparableMonotonicity,
    /// `b` has a unique maximizer.
    UniqueMaximizer,
    /// Initial resource lies between the separable resource levels.
    InitialMass,
}

impl Assumption {
    pub fn name(&self) -> &'static str {
        match self {
            Assumption::Survival => "survival",
            Assumption::Concavity => "concavity",
            Assumption::ResourceMonotonicity => "resource-monotonicity",
            Assumption::UptakeBounds => "uptake-bounds",
            Assumption::InitialCompatibility => "initial-compatibility",
            Assumption::InitialViability => "initial-viability",
            Assumption::SeparablePositivity => "separable-positivity",
            Assumption::ResourceLevels => "resource-levels",
            Assumption::SeparableMonotonicity => "separable-monotonicity",
            Assumption::UniqueMaximizer => "unique-maximizer",
            Assumption::InitialMass => "initial-mass",
        }
    }

    /// True for checks on the model alone, false for checks that involve the
    /// initial datum.
    pub fn is_structural(&self) -> bool {
        !matches!(
            self,
            Assumption::InitialCompatibility | Assumption::InitialViability | Assumption::InitialMass
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleLocation {
    pub x: TraitPoint,
    pub phase: f64,
    pub resource: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub pass: bool,
    /// Worst-case margin; positive when the check passes.
    pub margin: f64,
    /// Where the worst case was found.
    pub location: Option<SampleLocation>,
    pub detail: String,
}

/// Constants measured on the samples. Diagnostic only.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasuredConstants {
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub k4: Option<f64>,
    pub k5: Option<f64>,
    pub k6: Option<f64>,
    pub k7: Option<f64>,
    pub k8: Option<f64>,
    pub resource_cap: Option<f64>,
    pub resource_floor: Option<f64>,
    pub b_min: Option<f64>,
    pub b_max: Option<f64>,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub psi_min: Option<f64>,
    pub psi_max: Option<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
    pub constants: MeasuredConstants,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// True if every check on the model alone passes.
    pub fn structural_passed(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.assumption.is_structural())
            .all(|c| c.pass)
    }

    pub fn check(&self, a: Assumption) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == a)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationOptions {
    /// Half-width of the box `[-w, w]^N` that is sampled.
    pub half_width: f64,
    /// Trait samples per axis (uniform grid) or in total per axis power
    /// (random sampling).
    pub trait_samples: usize,
    pub phase_samples: usize,
    pub resource_samples: usize,
    /// `Some(seed)` switches from a uniform grid to seeded uniform random
    /// sampling.
    pub seed: Option<u64>,
}

impl ValidationOptions {
    pub fn for_model(model: &GrowthModel) -> Self {
        let dim = model.dim();
        Self {
            half_width: model.reference_half_width(),
            trait_samples: if dim == 1 { 201 } else { 41 },
            phase_samples: 16,
            resource_samples: 6,
            seed: None,
        }
    }
}

struct Sampler {
    xs: Vec<TraitPoint>,
    phases: Vec<f64>,
    rng: Option<ChaCha8Rng>,
}

impl Sampler {
    fn new(dim: usize, opts: &ValidationOptions) -> Self {
        let n = opts.trait_samples.max(2);
        let w = opts.half_width;
        let mut rng = opts.seed.map(ChaCha8Rng::seed_from_u64);
        let total = n.pow(dim as u32);
        let xs: Vec<TraitPoint> = match rng.as_mut() {
            Some(r) => (0..total)
                .map(|_| {
                    let mut p = TraitPoint::zeros(dim);
                    for d in 0..dim {
                        p[d] = r.gen_range(-w..=w);
                    }
                    p
                })
                .collect(),
            None => {
                let coord = |k: usize| -w + 2.0 * w * k as f64 / (n - 1) as f64;
                (0..total)
                    .map(|idx| match dim {
                        1 => TraitPoint::scalar(coord(idx)),
                        _ => TraitPoint::planar(coord(idx / n), coord(idx % n)),
                    })
                    .collect()
            }
        };
        let m = opts.phase_samples.max(1);
        let phases = match rng.as_mut() {
            Some(r) => (0..m).map(|_| r.gen_range(0.0..1.0)).collect(),
            None => (0..m).map(|k| k as f64 / m as f64).collect(),
        };
        Self { xs, phases, rng }
    }

    fn resources(&mut self, lo: f64, hi: f64, count: usize) -> Vec<f64> {
        let count = count.max(2);
        match self.rng.as_mut() {
            Some(r) => (0..count).map(|_| r.gen_range(lo..=hi)).collect(),
            None => (0..count)
                .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
                .collect(),
        }
    }
}

/// Tracks the extremes of a sampled quantity and where they occur.
#[derive(Clone, Copy)]
struct Extremes {
    min: f64,
    max: f64,
    at_min: Option<SampleLocation>,
    at_max: Option<SampleLocation>,
}

impl Extremes {
    fn new() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            at_min: None,
            at_max: None,
        }
    }

    fn push(&mut self, v: f64, at: SampleLocation) {
        if v < self.min || v.is_nan() {
            self.min = v;
            self.at_min = Some(at);
        }
        if v > self.max || v.is_nan() {
            self.max = v;
            self.at_max = Some(at);
        }
    }
}

fn loc(x: TraitPoint, phase: f64, resource: f64) -> SampleLocation {
    SampleLocation { x, phase, resource }
}

/// Eigenvalue range of the finite-difference Hessian of `x -> R(x, s, I)`.
fn hessian_eigen_range(model: &GrowthModel, x: &TraitPoint, s: f64, i: f64) -> (f64, f64) {
    let h = 1e-3 * x.max_abs().max(1.0);
    let f = |p: &TraitPoint| model.rate(p.as_slice(), s, i);
    let f0 = f(x);
    let second = |d: usize| {
        let mut p = *x;
        p[d] += h;
        let fp = f(&p);
        p[d] -= 2.0 * h;
        let fm = f(&p);
        (fp - 2.0 * f0 + fm) / (h * h)
    };
    match x.dim() {
        1 => {
            let v = second(0);
            (v, v)
        }
        _ => {
            let (a, d) = (second(0), second(1));
            let mut p = *x;
            let mut corner = |sx: f64, sy: f64| {
                p[0] = x[0] + sx * h;
                p[1] = x[1] + sy * h;
                f(&p)
            };
            let b = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                + corner(-1.0, -1.0))
                / (4.0 * h * h);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            (mean - rad, mean + rad)
        }
    }
}

/// Root in `I` of a decreasing sampled envelope, if one exists.
fn envelope_root(g: impl Fn(f64) -> f64) -> Option<f64> {
    if !(g(0.0) > 0.0) {
        return None;
    }
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return None;
        }
    }
    bisect(g, 0.0, hi, 1e-10, 300).ok()
}

/// Runs every check applicable to the model's family.
///
/// Failures are report entries; the function itself does not fail.
pub fn validate_assumptions(
    model: &GrowthModel,
    datum: Option<&InitialDatum>,
    opts: &ValidationOptions,
) -> ValidationReport {
    let dim = model.dim();
    let mut sampler = Sampler::new(dim, opts);
    let xs = sampler.xs.clone();
    let phases = sampler.phases.clone();
    let mut report = ValidationReport::default();
    let mut constants = MeasuredConstants::default();

    // Viable set.
    let mut mu = Extremes::new();
    let mus: Vec<f64> = xs
        .iter()
        .map(|x| {
            let m = model.viability_margin(x.as_slice(), MU_SAMPLES);
            mu.push(m, loc(*x, 0.0, 0.0));
            m
        })
        .collect();

    // Uptake.
    let mut psi = Extremes::new();
    for x in &xs {
        psi.push(model.uptake(x.as_slice()), loc(*x, 0.0, 0.0));
    }
    constants.psi_min = Some(psi.min);
    constants.psi_max = Some(psi.max);
    constants.k8 = Some(psi.max.abs());

    if model.family().is_separable() {
        validate_separable(
            model,
            datum,
            opts,
            &mut sampler,
            &mus,
            &mu,
            &mut report,
            &mut constants,
        );
    } else {
        validate_concave(model, datum, opts, &mut sampler, &mus, &mu, &mut report, &mut constants);
    }

    report.checks.push(AssumptionCheck {
        assumption: crate::model::Assumption::UptakeBounds,
        pass: psi.min > 0.0 && psi.max.is_finite(),
        margin: psi.min,
        location: psi.at_min,
        detail: format!("psi in [{:.6e}, {:.6e}]", psi.min, psi.max),
    });

    if let Some(d) = datum {
        let m0 = model.viability_margin(d.center.as_slice(), MU_SAMPLES);
        report.checks.push(AssumptionCheck {
            assumption: Assumption::InitialViability,
            pass: m0 > 0.0,
            margin: m0,
            location: Some(loc(d.center, 0.0, 0.0)),
            detail: format!("mu(x0) = {m0:.6e}"),
        });
    }
    constants.samples = xs.len() * phases.len() * opts.resource_samples.max(2);
    report.constants = constants;
    report
}

#[allow(clippy::too_many_arguments)]
fn validate_concave(
    model: &GrowthModel,
    datum: Option<&InitialDatum>,
    opts: &ValidationOptions,
    sampler: &mut Sampler,
    mus: &[f64],
    mu: &Extremes,
    report: &mut ValidationReport,
    constants: &mut MeasuredConstants,
) {
    let xs = sampler.xs.clone();
    let phases = sampler.phases.clone();
    let envelope = |i: f64| {
        xs.iter()
            .flat_map(|x| phases.iter().map(move |&s| model.rate(x.as_slice(), s, i)))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let cap = envelope_root(envelope);
    constants.resource_cap = cap;
    let viable = mu.max > 0.0;
    report.checks.push(AssumptionCheck {
        assumption: Assumption::Survival,
        pass: viable && cap.is_some(),
        margin: if cap.is_some() { mu.max } else { f64::NEG_INFINITY.min(mu.max) },
        location: mu.at_max,
        detail: match cap {
            Some(c) => format!("I_M = {c:.10}, max mu = {:.6e}", mu.max),
            None => format!("no bounded resource level, max mu = {:.6e}", mu.max),
        },
    });

    let i_hi = cap.unwrap_or(1.0);
    let resources = sampler.resources(0.0, i_hi, opts.resource_samples);

    let mut eig = Extremes::new();
    let mut di = Extremes::new();
    let mut k7 = 0.0f64;
    let mut grad = [0.0; 2];
    let mut grad2 = [0.0; 2];
    for (x, &m) in xs.iter().zip(mus) {
        for &s in &phases {
            for &i in &resources {
                let (lo, hi) = hessian_eigen_range(model, x, s, i);
                eig.push(lo, loc(*x, s, i));
                eig.push(hi, loc(*x, s, i));
                if m > 0.0 {
                    di.push(model.rate_di(x.as_slice(), s, i), loc(*x, s, i));
                }
                let step = 1e-5 * i.max(1.0);
                model.rate_dx(x.as_slice(), s, i + step, &mut grad);
                model.rate_dx(x.as_slice(), s, i, &mut grad2);
                for d in 0..x.dim() {
                    k7 = k7.max(((grad[d] - grad2[d]) / step).abs());
                }
            }
        }
    }
    let (k1, k2) = (-eig.min, -eig.max);
    constants.k1 = Some(k1);
    constants.k2 = Some(k2);
    constants.k7 = Some(k7);
    report.checks.push(AssumptionCheck {
        assumption: Assumption::Concavity,
        pass: k2 > 0.0 && k1.is_finite(),
        margin: k2,
        location: eig.at_max,
        detail: format!("D2_x R in [{:.6e}, {:.6e}]", eig.min, eig.max),
    });

    // Decay constants, on the sampled box.
    let mut k3 = f64::INFINITY;
    let mut k4 = f64::NEG_INFINITY;
    for x in &xs {
        for &s in &phases {
            let r = model.rate(x.as_slice(), s, 0.0);
            k3 = k3.min(r + k1 * x.norm_sq());
            k4 = k4.max(r + k2 * x.norm_sq());
        }
    }
    constants.k3 = Some(k3);
    constants.k4 = Some(k4);

    let (k5, k6) = (-di.min, -di.max);
    constants.k5 = Some(k5);
    constants.k6 = Some(k6);
    report.checks.push(AssumptionCheck {
        assumption: Assumption::ResourceMonotonicity,
        pass: k6 > 0.0 && k5.is_finite(),
        margin: k6,
        location: di.at_max,
        detail: format!("D_I R in [{:.6e}, {:.6e}] on the viable samples", di.min, di.max),
    });

    if let Some(d) = datum {
        let (l1, l2) = d.hessian_bounds();
        let margin = (k2 - 4.0 * l2 * l2).min(4.0 * l1 * l1 - k1);
        report.checks.push(AssumptionCheck {
            assumption: Assumption::InitialCompatibility,
            pass: margin >= 0.0,
            margin,
            location: None,
            detail: format!(
                "4 L2^2 = {:.6e}, K2 = {k2:.6e}, K1 = {k1:.6e}, 4 L1^2 = {:.6e}",
                4.0 * l2 * l2,
                4.0 * l1 * l1
            ),
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn validate_separable(
    model: &GrowthModel,
    datum: Option<&InitialDatum>,
    opts: &ValidationOptions,
    sampler: &mut Sampler,
    mus: &[f64],
    mu: &Extremes,
    report: &mut ValidationReport,
    constants: &mut MeasuredConstants,
) {
    let _ = mus;
    let parts = model
        .separable_parts()
        .expect("separable family without separable parts");
    let xs = sampler.xs.clone();
    let phases = sampler.phases.clone();

    report.checks.push(AssumptionCheck {
        assumption: Assumption::Survival,
        pass: mu.max > 0.0,
        margin: mu.max,
        location: mu.at_max,
        detail: format!("max mu = {:.6e}", mu.max),
    });

    let mut b = Extremes::new();
    for x in &xs {
        b.push((parts.b)(x.as_slice()), loc(*x, 0.0, 0.0));
    }
    constants.b_min = Some(b.min);
    constants.b_max = Some(b.max);

    let upper = envelope_root(|i| {
        phases
            .iter()
            .map(|&s| parts.level_rate(b.max, s, i))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let lower = envelope_root(|i| {
        phases
            .iter()
            .map(|&s| parts.level_rate(b.min, s, i))
            .fold(f64::INFINITY, f64::min)
    });
    constants.resource_cap = upper;
    constants.resource_floor = lower;
    let levels_ok = matches!((lower, upper), (Some(l), Some(u)) if 0.0 < l && l < u);
    report.checks.push(AssumptionCheck {
        assumption: Assumption::ResourceLevels,
        pass: levels_ok,
        margin: match (lower, upper) {
            (Some(l), Some(u)) => l.min(u - l),
            _ => f64::NEG_INFINITY,
        },
        location: None,
        detail: format!("I_m = {lower:?}, I_M = {upper:?}"),
    });

    let (lo, hi) = match (lower, upper) {
        (Some(l), Some(u)) => (0.5 * l, 2.0 * u),
        _ => (0.0, 1.0),
    };
    let resources = sampler.resources(lo, hi, opts.resource_samples.max(16));
    let x0 = xs[0];
    let mut bd = Extremes::new();
    let mut dib = Extremes::new();
    let mut did = Extremes::new();
    for &s in &phases {
        for &i in &resources {
            bd.push((parts.birth)(s, i), loc(x0, s, i));
            bd.push((parts.death)(s, i), loc(x0, s, i));
            dib.push(parts.birth_di(s, i), loc(x0, s, i));
            did.push(parts.death_di(s, i), loc(x0, s, i));
        }
    }
    let pos_margin = b.min.min(bd.min);
    report.checks.push(AssumptionCheck {
        assumption: Assumption::SeparablePositivity,
        pass: pos_margin > 0.0,
        margin: pos_margin,
        location: if b.min <= bd.min { b.at_min } else { bd.at_min },
        detail: format!("min b = {:.6e}, min(B, D) = {:.6e}", b.min, bd.min),
    });

    let (a1, a2) = (-dib.max, did.min);
    constants.a1 = Some(a1);
    constants.a2 = Some(a2);
    // The fluctuation family has B = 1, so D_I B = 0 and only the weak form
    // of the birth condition can hold.
    let birth_ok = if model.family() == Family::Fluctuation {
        a1 >= 0.0
    } else {
        a1 > 0.0
    };
    let (margin, location) = if a1 <= a2 {
        (a1, dib.at_max)
    } else {
        (a2, did.at_min)
    };
    report.checks.push(AssumptionCheck {
        assumption: Assumption::SeparableMonotonicity,
        pass: birth_ok && a2 > 0.0,
        margin: if model.family() == Family::Fluctuation && a1 == 0.0 {
            a2
        } else {
            margin
        },
        location,
        detail: format!("a1 = {a1:.6e}, a2 = {a2:.6e}"),
    });

    report
        .checks
        .push(unique_maximizer_check(model.dim(), opts, |x| (parts.b)(x)));

    if let (Some(d), Some(l), Some(u)) = (datum, lower, upper) {
        let i0 = d.mass * model.uptake(d.center.as_slice());
        let margin = (i0 - l).min(u - i0);
        report.checks.push(AssumptionCheck {
            assumption: Assumption::InitialMass,
            pass: margin >= 0.0,
            margin,
            location: Some(loc(d.center, 0.0, i0)),
            detail: format!("I(0) = {i0:.6e} in [{l:.6e}, {u:.6e}]"),
        });
    }
}

/// Grid search for a second local maximum of `f` that ties with the global one.
fn unique_maximizer_check(
    dim: usize,
    opts: &ValidationOptions,
    f: impl Fn(&[f64]) -> f64,
) -> AssumptionCheck {
    let n = opts.trait_samples.max(3);
    let w = opts.half_width;
    let coord = |k: usize| -w + 2.0 * w * k as f64 / (n - 1) as f64;
    let total = n.pow(dim as u32);
    let point = |idx: usize| match dim {
        1 => TraitPoint::scalar(coord(idx)),
        _ => TraitPoint::planar(coord(idx / n), coord(idx % n)),
    };
    let vals: Vec<f64> = (0..total).map(|k| f(point(k).as_slice())).collect();
    let (best, &top) = vals
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (k, v)| if *v > *acc.1 { (k, v) } else { acc });
    let neighbours = |idx: usize| -> Vec<usize> {
        let mut out = Vec::new();
        match dim {
            1 => {
                if idx > 0 {
                    out.push(idx - 1);
                }
                if idx + 1 < n {
                    out.push(idx + 1);
                }
            }
            _ => {
                let (i, j) = (idx / n, idx % n);
                for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n {
                        out.push(a as usize * n + b as usize);
                    }
                }
            }
        }
        out
    };
    let tol = 1e-9 * top.abs().max(1.0);
    let spacing = 2.0 * w / (n - 1) as f64;
    let best_point = point(best);
    let mut rival: Option<(usize, f64)> = None;
    for (k, &v) in vals.iter().enumerate() {
        if k == best || top - v > tol {
            continue;
        }
        if point(k).dist_sq(&best_point).sqrt() <= 2.0 * spacing {
            continue;
        }
        if neighbours(k).iter().all(|&m| vals[m] <= v) {
            rival = Some((k, v));
            break;
        }
    }
    // Margin: gap between the global maximum and the best separated local one.
    let mut gap = f64::INFINITY;
    for (k, &v) in vals.iter().enumerate() {
        if point(k).dist_sq(&best_point).sqrt() > 2.0 * spacing
            && neighbours(k).iter().all(|&m| vals[m] <= v)
        {
            gap = gap.min(top - v);
        }
    }
    AssumptionCheck {
        assumption: Assumption::UniqueMaximizer,
        pass: rival.is_none(),
        margin: if rival.is_some() { -tol } else { gap },
        location: Some(loc(rival.map(|r| point(r.0)).unwrap_or(best_point), 0.0, 0.0)),
        detail: format!("max b = {top:.10} at {:?}", best_point.as_slice()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use alloc::sync::Arc;

    #[test]
    fn figure1_passes_structural_checks() {
        let m = presets::figure1();
        let r = validate_assumptions(&m, None, &ValidationOptions::for_model(&m));
        for c in &r.checks {
            assert!(c.pass, "{c:?}");
        }
        let cap = r.constants.resource_cap.unwrap();
        assert!((cap - 11.5).abs() < 1e-8);
        // D2_x R = -2 (2 + sin)/(I + 0.5): extremes 12 at I = 0 and 1/6 at I = I_M.
        assert!((r.constants.k1.unwrap() - 12.0).abs() < 1e-4);
        assert!((r.constants.k2.unwrap() - 2.0 / 12.0).abs() < 1e-3);
        assert!(r.constants.samples >= 10_000);
    }

    #[test]
    fn shipped_presets_pass_structural_checks() {
        for name in ["concave-quadratic", "separable", "fluctuation-example"] {
            for dim in [1, 2] {
                let m = presets::by_name(name, dim).unwrap();
                let r = validate_assumptions(&m, None, &ValidationOptions::for_model(&m));
                assert!(r.structural_passed(), "{name} {dim}: {:?}", r.failures().collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn negative_rate_has_empty_viable_set() {
        let m = GrowthModel::custom(1, |_, _, i| -1.0 - i);
        let r = validate_assumptions(&m, None, &ValidationOptions::for_model(&m));
        let c = r.check(Assumption::Survival).unwrap();
        assert!(!c.pass);
        assert!(c.margin < 0.0);
    }

    #[test]
    fn increasing_birth_is_flagged_with_location() {
        let base = presets::separable(1, Default::default());
        let mut parts = base.separable_parts().unwrap().clone();
        // A bump makes B increase in I just below I = 2.
        parts.birth = Arc::new(|_, i: f64| 1.0 / (1.0 + i) + 0.3 * (-(i - 2.0) * (i - 2.0)).exp());
        parts.birth_di = None;
        let m = GrowthModel::separable(1, parts).with_reference_half_width(1.5);
        let r = validate_assumptions(&m, None, &ValidationOptions::for_model(&m));
        let c = r.check(Assumption::SeparableMonotonicity).unwrap();
        assert!(!c.pass);
        let at = c.location.unwrap();
        assert!(at.resource > 1.0 && at.resource < 2.0, "{at:?}");
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let m = presets::figure1();
        let mut o = ValidationOptions::for_model(&m);
        o.seed = Some(7);
        let a = validate_assumptions(&m, None, &o);
        let b = validate_assumptions(&m, None, &o);
        assert_eq!(a, b);
        assert!(a.structural_passed());
    }

    #[test]
    fn twin_peaks_are_not_unique() {
        let o = ValidationOptions {
            half_width: 2.0,
            trait_samples: 201,
            phase_samples: 4,
            resource_samples: 2,
            seed: None,
        };
        let c = unique_maximizer_check(1, &o, |x| -(x[0] * x[0] - 1.0).powi(2));
        assert!(!c.pass);
        let c = unique_maximizer_check(1, &o, |x| 2.0 - x[0] * x[0]);
        assert!(c.pass);
    }
}
