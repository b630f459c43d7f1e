use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{config, Result};

/// Centered moving average of a uniformly sampled series with window `w`,
/// using trapezoid weights. Near the ends the window is truncated.
pub fn running_average(times: &[f64], values: &[f64], window: f64) -> Result<Vec<f64>> {
    if times.len() != values.len() {
        return Err(config("times and values differ in length"));
    }
    if times.len() < 2 {
        return Ok(values.to_vec());
    }
    let cadence = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(window >= cadence * (1.0 - 1e-9)) {
        return Err(config(alloc::format!(
            "averaging window {window} is smaller than the sampling cadence {cadence}"
        )));
    }
    let tol = 1e-6 * cadence;
    if times.windows(2).any(|w| ((w[1] - w[0]) - cadence).abs() > tol) {
        return Err(config("running average needs uniformly spaced samples"));
    }
    let half = ((window / (2.0 * cadence)).round() as usize).max(1);
    // Prefix sums for the interior sums.
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in values {
        acc += v;
        prefix.push(acc);
    }
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let sum = prefix[hi + 1] - prefix[lo] - 0.5 * (values[lo] + values[hi]);
            sum / (hi - lo) as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let v = alloc::vec![3.5; 50];
        let a = running_average(&t, &v, 1.0).unwrap();
        assert!(a.iter().all(|x| (x - 3.5).abs() < 1e-14));
    }

    #[test]
    fn full_periods_average_out() {
        let eps = 0.01;
        let dt = eps / 16.0;
        let t: Vec<f64> = (0..1600).map(|k| k as f64 * dt).collect();
        let v: Vec<f64> = t
            .iter()
            .map(|t| 2.0 + (2.0 * core::f64::consts::PI * t / eps).sin())
            .collect();
        let a = running_average(&t, &v, 10.0 * eps).unwrap();
        for x in &a[80..1520] {
            assert!((x - 2.0).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn window_below_cadence_is_rejected() {
        let t = [0.0, 0.1, 0.2];
        assert!(running_average(&t, &[1.0, 2.0, 3.0], 0.05).is_err());
    }
}
