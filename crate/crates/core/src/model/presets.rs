//! Built-in model families.

use alloc::sync::Arc;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{
    sin2pi, Family, FluctuationParts, GrowthModel, ModelConstants, SeparableParts,
};
use crate::numerics::bisect;

/// The Figure 1 rate `(2 + sin 2 pi s)(2 - x^2)/(I + 0.5) - 0.5` in one
/// dimension.
pub fn figure1() -> GrowthModel {
    concave_quadratic(1, 2.0, 0.5, 0.5)
        .with_family(Family::Figure1)
        .with_reference_half_width(2.0)
}

/// `(2 + sin 2 pi s)(a - |x|^2)/(I + gamma) - delta`.
pub fn concave_quadratic(dim: usize, a: f64, gamma: f64, delta: f64) -> GrowthModel {
    assert!(a > 0.0 && gamma > 0.0 && delta > 0.0);
    let rate = move |x: &[f64], s: f64, i: f64| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        (2.0 + sin2pi(s)) * (a - r2) / (i + gamma) - delta
    };
    let dx = move |x: &[f64], s: f64, i: f64, out: &mut [f64]| {
        let k = -2.0 * (2.0 + sin2pi(s)) / (i + gamma);
        for (o, c) in out.iter_mut().zip(x) {
            *o = k * c;
        }
    };
    let di = move |x: &[f64], s: f64, i: f64| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        -(2.0 + sin2pi(s)) * (a - r2) / ((i + gamma) * (i + gamma))
    };
    GrowthModel::custom(dim, rate)
        .with_rate_dx(dx)
        .with_rate_di(di)
        .with_family(Family::ConcaveQuadratic { a, gamma, delta })
        .with_constants(ModelConstants {
            resource_cap: Some(3.0 * a / delta - gamma),
            ..ModelConstants::default()
        })
        .with_reference_half_width((2.0 * a).sqrt())
}

/// Parameters of the separable preset
/// `b(x) = b0 - |x - xb|^2`, `B = (1 + aB sin 2 pi s)/(1 + I)`,
/// `D = d0 (1 + aD sin 2 pi s)(1 + I)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparableParams {
    pub b0: f64,
    pub center: [f64; 2],
    pub birth_amplitude: f64,
    pub d0: f64,
    pub death_amplitude: f64,
    /// Half-width of the box used for `b_m`, `b_M` and the resource levels.
    pub half_width: f64,
}

impl Default for SeparableParams {
    fn default() -> Self {
        Self {
            b0: 4.0,
            center: [0.25, 0.0],
            birth_amplitude: 0.5,
            d0: 0.5,
            death_amplitude: 0.25,
            half_width: 1.5,
        }
    }
}

impl SeparableParams {
    /// Defaults for `dim`. The planar box is smaller so that the lower
    /// resource level still exists at its far corner.
    pub fn for_dim(dim: usize) -> Self {
        let d = Self::default();
        if dim == 2 {
            Self { half_width: 1.1, ..d }
        } else {
            d
        }
    }
}

pub fn separable(dim: usize, p: SeparableParams) -> GrowthModel {
    let SeparableParams {
        b0,
        center,
        birth_amplitude: ab,
        d0,
        death_amplitude: ad,
        half_width,
    } = p;
    let b = move |x: &[f64]| {
        b0 - x
            .iter()
            .zip(center)
            .map(|(c, m)| (c - m) * (c - m))
            .sum::<f64>()
    };
    let b_grad = move |x: &[f64], out: &mut [f64]| {
        for ((o, c), m) in out.iter_mut().zip(x).zip(center) {
            *o = -2.0 * (c - m);
        }
    };
    let parts = SeparableParts {
        b: Arc::new(b),
        b_grad: Some(Arc::new(b_grad)),
        birth: Arc::new(move |s, i| (1.0 + ab * sin2pi(s)) / (1.0 + i)),
        death: Arc::new(move |s, i| d0 * (1.0 + ad * sin2pi(s)) * (1.0 + i)),
        birth_di: Some(Arc::new(move |s, i| {
            -(1.0 + ab * sin2pi(s)) / ((1.0 + i) * (1.0 + i))
        })),
        death_di: Some(Arc::new(move |s, _| d0 * (1.0 + ad * sin2pi(s)))),
    };
    // b on the box: maximum at the (clamped) centre, minimum at the far corner.
    let (mut near, mut far) = (0.0, 0.0);
    for &m in &center[..dim] {
        let clamped = m.clamp(-half_width, half_width);
        near += (clamped - m) * (clamped - m);
        let corner = half_width + m.abs();
        far += corner * corner;
    }
    let (b_m, b_big) = (b0 - far, b0 - near);
    let model = GrowthModel::separable(dim, parts.clone()).with_reference_half_width(half_width);
    let extreme = |level: f64, upper: bool| -> Option<f64> {
        // Root in I of max_s (or min_s) of level*B - D.
        let g = |i: f64| {
            let vals = (0..256).map(|k| parts.level_rate(level, k as f64 / 256.0, i));
            if upper {
                vals.fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.fold(f64::INFINITY, f64::min)
            }
        };
        let mut hi = 1.0;
        while g(hi) > 0.0 && hi < 1e8 {
            hi *= 2.0;
        }
        bisect(g, 0.0, hi, 1e-12, 200).ok()
    };
    let constants = ModelConstants {
        resource_cap: extreme(b_big, true),
        resource_floor: extreme(b_m, false),
        b_range: Some((b_m, b_big)),
    };
    model.with_constants(constants)
}

/// Parameters of `R = b0 - |x - xb|^2 - (1 + a sin 2 pi s) I^p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluctuationParams {
    pub b0: f64,
    pub center: [f64; 2],
    pub amplitude: f64,
    pub exponent: f64,
    pub half_width: f64,
}

impl Default for FluctuationParams {
    fn default() -> Self {
        Self {
            b0: 2.0,
            center: [0.0, 0.0],
            amplitude: 0.8,
            exponent: 1.0,
            half_width: 1.0,
        }
    }
}

impl FluctuationParams {
    /// Defaults for `dim`, with a planar box on which `b > 0`.
    pub fn for_dim(dim: usize) -> Self {
        let d = Self::default();
        if dim == 2 {
            Self { half_width: 0.9, ..d }
        } else {
            d
        }
    }
}

pub fn fluctuation(dim: usize, p: FluctuationParams) -> GrowthModel {
    let FluctuationParams {
        b0,
        center,
        amplitude: a,
        exponent,
        half_width,
    } = p;
    assert!(
        (0.0..1.0).contains(&a.abs()) && exponent > 0.0 && exponent <= 1.0,
        "fluctuation preset needs |a| < 1 and 0 < p <= 1"
    );
    let b = move |x: &[f64]| {
        b0 - x
            .iter()
            .zip(center)
            .map(|(c, m)| (c - m) * (c - m))
            .sum::<f64>()
    };
    let b_grad = move |x: &[f64], out: &mut [f64]| {
        for ((o, c), m) in out.iter_mut().zip(x).zip(center) {
            *o = -2.0 * (c - m);
        }
    };
    let seasonal = move |s: f64| 1.0 + a * sin2pi(s);
    let response = move |i: f64| if exponent == 1.0 { i } else { i.powf(exponent) };
    let response_di = move |i: f64| {
        if exponent == 1.0 {
            1.0
        } else {
            exponent * i.powf(exponent - 1.0)
        }
    };
    let parts = SeparableParts {
        b: Arc::new(b),
        b_grad: Some(Arc::new(b_grad)),
        birth: Arc::new(|_, _| 1.0),
        death: Arc::new(move |s, i| seasonal(s) * response(i)),
        birth_di: Some(Arc::new(|_, _| 0.0)),
        death_di: Some(Arc::new(move |s, i| seasonal(s) * response_di(i))),
    };
    let (mut near, mut far) = (0.0, 0.0);
    for &m in &center[..dim] {
        let clamped = m.clamp(-half_width, half_width);
        near += (clamped - m) * (clamped - m);
        let corner = half_width + m.abs();
        far += corner * corner;
    }
    let (b_m, b_big) = (b0 - far, b0 - near);
    let inv = |v: f64| v.max(0.0).powf(1.0 / exponent);
    let constants = ModelConstants {
        resource_cap: Some(inv(b_big / (1.0 - a.abs()))),
        resource_floor: Some(inv(b_m / (1.0 + a.abs()))),
        b_range: Some((b_m, b_big)),
    };
    GrowthModel::separable(dim, parts)
        .with_family(Family::Fluctuation)
        .with_fluctuation(FluctuationParts {
            seasonal: Arc::new(seasonal),
            response: Arc::new(response),
            response_di: Arc::new(response_di),
            amplitude: a,
            exponent,
        })
        .with_constants(constants)
        .with_reference_half_width(half_width)
}

/// Looks up a preset by its family tag with default parameters.
pub fn by_name(name: &str, dim: usize) -> Option<GrowthModel> {
    match name {
        "figure1" if dim == 1 => Some(figure1()),
        "concave-quadratic" => Some(concave_quadratic(dim, 2.0, 0.5, 0.5)),
        "separable" => Some(separable(dim, SeparableParams::for_dim(dim))),
        "fluctuation-example" => Some(fluctuation(dim, FluctuationParams::for_dim(dim))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::TraitPoint;

    #[test]
    fn figure1_resource_cap() {
        let m = figure1();
        assert_eq!(m.constants().resource_cap, Some(11.5));
        // max_{s,x} R(x, s, I_M) = 0
        let r = m.rate(&[0.0], 0.25, 11.5);
        assert!(r.abs() < 1e-14);
    }

    #[test]
    fn separable_levels_are_ordered() {
        let m = separable(1, SeparableParams::default());
        let c = m.constants();
        let (lo, hi) = (c.resource_floor.unwrap(), c.resource_cap.unwrap());
        assert!(0.0 < lo && lo < hi, "{lo} {hi}");
        assert_eq!(c.b_range, Some((4.0 - 1.75 * 1.75, 4.0)));
    }

    #[test]
    fn fluctuation_levels() {
        let m = fluctuation(1, FluctuationParams::default());
        let c = m.constants();
        assert!((c.resource_cap.unwrap() - 10.0).abs() < 1e-12);
        assert!((c.resource_floor.unwrap() - 1.0 / 1.8).abs() < 1e-12);
        let r = m.eval_rate(&TraitPoint::scalar(0.0), 0.25, 1.0).unwrap();
        assert!((r - (2.0 - 1.8)).abs() < 1e-14);
    }

    #[test]
    fn separable_analytic_derivatives_match_differences() {
        let m = separable(2, SeparableParams::for_dim(2));
        let parts = m.separable_parts().unwrap().clone();
        let fd = GrowthModel::custom(2, move |x, s, i| {
            (parts.b)(x) * (parts.birth)(s, i) - (parts.death)(s, i)
        });
        let x = [0.3, -0.2];
        let (mut g1, mut g2) = ([0.0; 2], [0.0; 2]);
        m.rate_dx(&x, 0.3, 1.2, &mut g1);
        fd.rate_dx(&x, 0.3, 1.2, &mut g2);
        for d in 0..2 {
            assert!((g1[d] - g2[d]).abs() < 1e-8);
        }
        assert!((m.rate_di(&x, 0.3, 1.2) - fd.rate_di(&x, 0.3, 1.2)).abs() < 1e-7);
    }
}
