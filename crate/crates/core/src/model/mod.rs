//! Growth-rate models `R(x, s, I)`, uptake `psi(x)`, initial data and
//! sampled checks of the standing hypotheses.

mod datum;
pub mod presets;
mod validate;

use alloc::sync::Arc;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::numerics::{periodic_mean, wrap_phase};
use crate::point::TraitPoint;

pub use datum::{initial_field, InitialDatum};
pub use validate::{
    validate_assumptions, Assumption, AssumptionCheck, MeasuredConstants, SampleLocation,
    ValidationOptions, ValidationReport,
};

/// `R(x, s, I)`.
pub type RateFn = Arc<dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync>;
/// Writes `D_x R(x, s, I)` into the output slice.
pub type RateGradFn = Arc<dyn Fn(&[f64], f64, f64, &mut [f64]) + Send + Sync>;
/// A scalar field of the trait, e.g. `psi(x)` or `b(x)`.
pub type FieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type FieldGradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// A function of the phase and the resource, e.g. `B(s, I)`.
pub type PhaseResourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type PhaseFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ResourceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative step for central finite differences when no analytic derivative
/// is supplied.
pub const FD_STEP: f64 = 1e-5;

/// Default number of phase samples for period averages.
pub const PHASE_SAMPLES: usize = 2048;

/// Which structural hypotheses a model is meant to satisfy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `(2 + sin 2 pi s)(2 - x^2)/(I + 0.5) - 0.5`.
    Figure1,
    /// `(2 + sin 2 pi s)(a - |x|^2)/(I + gamma) - delta`.
    ConcaveQuadratic { a: f64, gamma: f64, delta: f64 },
    /// `b(x) B(s, I) - D(s, I)`.
    Separable,
    /// `b(x) - D1(s) D2(I)`.
    Fluctuation,
    /// User-supplied rate, validated against the concave hypotheses.
    Custom,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Figure1 => "figure1",
            Family::ConcaveQuadratic { .. } => "concave-quadratic",
            Family::Separable => "separable",
            Family::Fluctuation => "fluctuation-example",
            Family::Custom => "custom",
        }
    }

    /// True for families analysed through the concavity hypotheses.
    pub fn is_concave(&self) -> bool {
        matches!(
            self,
            Family::Figure1 | Family::ConcaveQuadratic { .. } | Family::Custom
        )
    }

    pub fn is_separable(&self) -> bool {
        matches!(self, Family::Separable | Family::Fluctuation)
    }
}

/// Components of a separable rate `R = b(x) B(s, I) - D(s, I)`.
#[derive(Clone)]
pub struct SeparableParts {
    pub b: FieldFn,
    pub b_grad: Option<FieldGradFn>,
    pub birth: PhaseResourceFn,
    pub death: PhaseResourceFn,
    pub birth_di: Option<PhaseResourceFn>,
    pub death_di: Option<PhaseResourceFn>,
}

impl SeparableParts {
    pub fn birth_di(&self, s: f64, i: f64) -> f64 {
        match &self.birth_di {
            Some(f) => f(s, i),
            None => resource_derivative(|r| (self.birth)(s, r), i),
        }
    }

    pub fn death_di(&self, s: f64, i: f64) -> f64 {
        match &self.death_di {
            Some(f) => f(s, i),
            None => resource_derivative(|r| (self.death)(s, r), i),
        }
    }

    /// Rate of the scalar-parameterised cell problem, `F B(s, I) - D(s, I)`.
    pub fn level_rate(&self, level: f64, s: f64, i: f64) -> f64 {
        level * (self.birth)(s, i) - (self.death)(s, i)
    }
}

/// Factors of the fluctuation example `R = b(x) - D1(s) D2(I)`.
#[derive(Clone)]
pub struct FluctuationParts {
    pub seasonal: PhaseFn,
    pub response: ResourceFn,
    pub response_di: ResourceFn,
    /// Amplitude of the seasonal factor `1 + a sin 2 pi s`.
    pub amplitude: f64,
    /// Exponent `p` of `D2(I) = I^p`.
    pub exponent: f64,
}

/// Bounds and levels known when a model is built.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelConstants {
    /// `I_M`, or the upper level of the separable family.
    pub resource_cap: Option<f64>,
    /// Lower resource level of the separable family.
    pub resource_floor: Option<f64>,
    /// Range of `b` on the reference box, separable families only.
    pub b_range: Option<(f64, f64)>,
}

/// A growth-rate model. Immutable once built and cheap to clone.
#[derive(Clone)]
pub struct GrowthModel {
    dim: usize,
    family: Family,
    rate: RateFn,
    uptake: FieldFn,
    rate_dx: Option<RateGradFn>,
    rate_di: Option<RateFn>,
    separable: Option<SeparableParts>,
    fluctuation: Option<FluctuationParts>,
    constants: ModelConstants,
    reference_half_width: f64,
}

impl fmt::Debug for GrowthModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthModel")
            .field("dim", &self.dim)
            .field("family", &self.family)
            .field("constants", &self.constants)
            .field("reference_half_width", &self.reference_half_width)
            .finish()
    }
}

impl GrowthModel {
    /// A custom model with unit uptake and finite-difference derivatives.
    pub fn custom(
        dim: usize,
        rate: impl Fn(&[f64], f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!((1..=2).contains(&dim), "trait dimension must be 1 or 2");
        Self {
            dim,
            family: Family::Custom,
            rate: Arc::new(rate),
            uptake: Arc::new(|_| 1.0),
            rate_dx: None,
            rate_di: None,
            separable: None,
            fluctuation: None,
            constants: ModelConstants::default(),
            reference_half_width: 2.0,
        }
    }

    /// A separable model `b(x) B(s, I) - D(s, I)` from its parts.
    pub fn separable(dim: usize, parts: SeparableParts) -> Self {
        let p = parts.clone();
        let rate = move |x: &[f64], s: f64, i: f64| (p.b)(x) * (p.birth)(s, i) - (p.death)(s, i);
        let mut model = Self::custom(dim, rate);
        let p = parts.clone();
        model.rate_di = Some(Arc::new(move |x: &[f64], s: f64, i: f64| {
            (p.b)(x) * p.birth_di(s, i) - p.death_di(s, i)
        }));
        if let Some(grad) = parts.b_grad.clone() {
            let p = parts.clone();
            model.rate_dx = Some(Arc::new(move |x: &[f64], s: f64, i: f64, out: &mut [f64]| {
                grad(x, out);
                let birth = (p.birth)(s, i);
                for g in out.iter_mut() {
                    *g *= birth;
                }
            }));
        }
        model.family = Family::Separable;
        model.separable = Some(parts);
        model
    }

    pub fn with_uptake(mut self, uptake: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.uptake = Arc::new(uptake);
        self
    }

    pub fn with_rate_dx(
        mut self,
        dx: impl Fn(&[f64], f64, f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.rate_dx = Some(Arc::new(dx));
        self
    }

    pub fn with_rate_di(mut self, di: impl Fn(&[f64], f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.rate_di = Some(Arc::new(di));
        self
    }

    pub fn with_constants(mut self, constants: ModelConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_reference_half_width(mut self, hw: f64) -> Self {
        self.reference_half_width = hw;
        self
    }

    pub(crate) fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }

    pub(crate) fn with_fluctuation(mut self, parts: FluctuationParts) -> Self {
        self.fluctuation = Some(parts);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    /// Half-width of the box on which the model's hypotheses are meant to hold.
    pub fn reference_half_width(&self) -> f64 {
        self.reference_half_width
    }

    pub fn separable_parts(&self) -> Option<&SeparableParts> {
        self.separable.as_ref()
    }

    pub fn fluctuation_parts(&self) -> Option<&FluctuationParts> {
        self.fluctuation.as_ref()
    }

    pub fn has_analytic_dx(&self) -> bool {
        self.rate_dx.is_some()
    }

    /// `R(x, s mod 1, I)` without checks. Hot path.
    #[inline]
    pub fn rate(&self, x: &[f64], s: f64, i: f64) -> f64 {
        (self.rate)(x, s, i)
    }

    /// Checked evaluation of `R(x, s mod 1, I)`.
    pub fn eval_rate(&self, x: &TraitPoint, s: f64, i: f64) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(Error::Domain(alloc::format!(
                "trait of dimension {} for a {}-D model",
                x.dim(),
                self.dim
            )));
        }
        if !(i >= 0.0) {
            return Err(Error::Domain(alloc::format!("negative resource {i}")));
        }
        let phase = wrap_phase(s);
        let value = self.rate(x.as_slice(), phase, i);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::ModelDefinition {
                x: *x,
                phase,
                resource: i,
                value,
            })
        }
    }

    pub fn uptake(&self, x: &[f64]) -> f64 {
        (self.uptake)(x)
    }

    /// `D_x R(x, s, I)`.
    pub fn rate_dx(&self, x: &[f64], s: f64, i: f64, out: &mut [f64]) {
        match &self.rate_dx {
            Some(f) => f(x, s, i, out),
            None => {
                let mut probe = TraitPoint::new(x);
                for d in 0..self.dim {
                    let step = FD_STEP * x[d].abs().max(1.0);
                    let orig = probe[d];
                    probe[d] = orig + step;
                    let fp = self.rate(probe.as_slice(), s, i);
                    probe[d] = orig - step;
                    let fm = self.rate(probe.as_slice(), s, i);
                    probe[d] = orig;
                    out[d] = (fp - fm) / (2.0 * step);
                }
            }
        }
    }

    /// `D_I R(x, s, I)`.
    pub fn rate_di(&self, x: &[f64], s: f64, i: f64) -> f64 {
        match &self.rate_di {
            Some(f) => f(x, s, i),
            None => resource_derivative(|r| self.rate(x, s, r), i),
        }
    }

    /// `mu(x) = int_0^1 R(x, s, 0) ds`, the viability margin.
    pub fn viability_margin(&self, x: &[f64], samples: usize) -> f64 {
        periodic_mean((0..samples).map(|k| self.rate(x, k as f64 / samples as f64, 0.0)))
    }
}

/// Central difference in the resource, one-sided near `I = 0`.
pub(crate) fn resource_derivative(f: impl Fn(f64) -> f64, i: f64) -> f64 {
    let step = FD_STEP * i.abs().max(1.0);
    if i > step {
        (f(i + step) - f(i - step)) / (2.0 * step)
    } else {
        (-3.0 * f(i) + 4.0 * f(i + step) - f(i + 2.0 * step)) / (2.0 * step)
    }
}

pub(crate) fn sin2pi(s: f64) -> f64 {
    (2.0 * core::f64::consts::PI * crate::numerics::wrap_phase(s)).sin()
}
