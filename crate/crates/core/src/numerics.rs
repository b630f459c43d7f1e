//! Small numerical kernels shared across modules.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// `ln( sum_i w_i exp(u_i / eps) * cell )` evaluated with the maximum of `u`
/// factored out, so that fields spanning hundreds of `eps` stay finite.
///
/// Returns `(max u, log of the weighted sum)`.
pub fn log_weighted_exp_sum(
    u: &[f64],
    eps: f64,
    cell: f64,
    mut weight: impl FnMut(usize) -> f64,
) -> (f64, f64) {
    let peak = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = u
        .iter()
        .enumerate()
        .map(|(i, &v)| weight(i) * ((v - peak) / eps).exp())
        .sum();
    (peak, peak / eps + (sum * cell).ln())
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::Configuration(alloc::format!(
            "root not bracketed on [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        what: "bisection",
        iterations: max_iter,
        residual: hi - lo,
    })
}

/// Vertex of the parabola through `(-1, left)`, `(0, centre)`, `(1, right)`.
///
/// Returns the offset in grid units (clamped to `[-1, 1]`) and the peak
/// value. Falls back to `(0, centre)` when the stencil is not concave.
pub fn parabola_vertex(left: f64, centre: f64, right: f64) -> (f64, f64) {
    let curv = left - 2.0 * centre + right;
    if curv < 0.0 {
        let offset = (0.5 * (left - right) / curv).clamp(-1.0, 1.0);
        let value = centre - (left - right) * (left - right) / (8.0 * curv);
        (offset, value)
    } else {
        (0.0, centre)
    }
}

/// Mean of a 1-periodic function from `m` uniform samples on `[0, 1)`.
///
/// This is the composite trapezoid rule with the periodic endpoint folded in;
/// it converges spectrally for smooth periodic integrands.
pub fn periodic_mean(samples: impl Iterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut acc = 0.0;
    for v in samples {
        acc += v;
        n += 1;
    }
    acc / n as f64
}

pub(crate) fn wrap_phase(s: f64) -> f64 {
    let w = s - s.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_survives_extreme_exponents() {
        let u = [-3.0, -2.5, -2.0];
        let (peak, ln) = log_weighted_exp_sum(&u, 1e-3, 1.0, |_| 1.0);
        assert_eq!(peak, -2.0);
        // Dominated by the last term; others are ~exp(-500).
        assert!((ln - (-2000.0)).abs() < 1e-9);
    }

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-12, 100).is_err());
    }

    #[test]
    fn vertex_of_exact_parabola() {
        // f(k) = -(k - 0.3)^2 + 1
        let f = |k: f64| -(k - 0.3) * (k - 0.3) + 1.0;
        let (o, v) = parabola_vertex(f(-1.0), f(0.0), f(1.0));
        assert!((o - 0.3).abs() < 1e-14);
        assert!((v - 1.0).abs() < 1e-14);
        assert_eq!(parabola_vertex(1.0, 0.0, 1.0), (0.0, 0.0));
    }

    #[test]
    fn wrap_phase_is_in_unit_interval() {
        assert_eq!(wrap_phase(1.25), 0.25);
        assert_eq!(wrap_phase(-0.25), 0.75);
        assert_eq!(wrap_phase(3.0), 0.0);
    }
}
