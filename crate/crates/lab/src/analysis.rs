//! Post-processing of recorded traces: oscillation spectrum, envelope
//! monotonicity and the comparison of direct runs with limit predictions.

use perenv_core::direct::{cell_residual, running_average, History};
use perenv_core::hjlimit::CanonicalTrajectory;
use perenv_core::{EffectiveFitness, Fitness, TraitPoint};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{LabError, LabResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    /// Frequency of the largest nonzero bin.
    pub peak_frequency: f64,
    pub bin_width: f64,
    pub samples: usize,
}

/// Dominant frequency of `values` after removing the running average of
/// width `window` and applying a Hann window.
pub fn dominant_frequency(times: &[f64], values: &[f64], window: f64) -> LabResult<Spectrum> {
    let n = values.len();
    if n < 8 || times.len() != n {
        return Err(LabError::Config("spectrum needs at least 8 matching samples".into()));
    }
    let trend = running_average(times, values, window)?;
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .zip(&trend)
        .enumerate()
        .map(|(k, (v, m))| {
            let hann = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
            Complex::new((v - m) * hann, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = (1..=n / 2)
        .max_by(|&a, &b| buf[a].norm_sqr().total_cmp(&buf[b].norm_sqr()))
        .unwrap_or(1);
    let bin_width = 1.0 / (n as f64 * dt);
    Ok(Spectrum {
        peak_frequency: peak as f64 * bin_width,
        bin_width,
        samples: n,
    })
}

/// Largest drop of a series below its running maximum.
pub fn largest_dip(values: &[f64]) -> f64 {
    let mut top = f64::NEG_INFINITY;
    let mut dip = 0.0f64;
    for &v in values {
        top = top.max(v);
        dip = dip.max(top - v);
    }
    dip
}

/// Trait of a limit trajectory at time `t`, linearly interpolated.
pub fn trait_at(tr: &CanonicalTrajectory, t: f64) -> Option<TraitPoint> {
    let pts = &tr.points;
    let first = pts.first()?;
    if t <= first.t {
        return Some(first.xbar);
    }
    let k = pts.partition_point(|p| p.t < t);
    if k >= pts.len() {
        return pts.last().map(|p| p.xbar);
    }
    let (a, b) = (&pts[k - 1], &pts[k]);
    let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
    Some(a.xbar + (b.xbar - a.xbar) * w)
}

/// `sup_t |x_a(t) - x_b(t)|` over the points of `a`, with `b` interpolated.
pub fn trajectory_distance(a: &CanonicalTrajectory, b: &CanonicalTrajectory) -> f64 {
    a.points
        .iter()
        .filter_map(|p| trait_at(b, p.t).map(|x| p.xbar.dist_sq(&x).sqrt()))
        .fold(0.0, f64::max)
}

/// A direct run measured against the limit pipeline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub eps: f64,
    /// `sup |ln I_eps - ln I(xbar_eps, t/eps)|` on the comparison interval.
    pub residual: f64,
    /// `sup |xbar_eps(t) - xbar(t)|` over all records.
    pub trait_distance: f64,
    /// `sup |Ibar_w - Ibar_hom| / Ibar_hom` where the averaging window fits.
    pub average_deviation: f64,
    /// Largest drop of `Ibar_w` below its running maximum, same range.
    pub envelope_dip: f64,
    pub from: f64,
    pub to: f64,
}

/// Running average of `I_eps` and the homogenized prediction
/// `int I(xbar(t), s) ds` at every record.
pub fn resource_trace(
    history: &History,
    fit: &EffectiveFitness,
    limit: &CanonicalTrajectory,
    window: f64,
) -> LabResult<(Vec<f64>, Vec<f64>)> {
    let avg = running_average(&history.times(), &history.resources(), window)?;
    let mut hom = Vec::with_capacity(history.len());
    for r in &history.records {
        let x = trait_at(limit, r.t).ok_or_else(|| LabError::Config("empty limit trajectory".into()))?;
        let orbit = fit.orbit(&x)?;
        hom.push(orbit.mean());
    }
    Ok((avg, hom))
}

pub fn compare(
    history: &History,
    eps: f64,
    fit: &EffectiveFitness,
    limit: &CanonicalTrajectory,
    window: f64,
    from: f64,
    to: f64,
) -> LabResult<ComparisonReport> {
    if history.is_empty() || limit.points.is_empty() {
        return Err(LabError::Config("comparison needs nonempty traces".into()));
    }
    let end = history.records.last().map_or(0.0, |r| r.t);
    let lend = limit.last().map_or(0.0, |p| p.t);
    if (end - lend).abs() > 1e-9 * end.max(1.0) {
        return Err(LabError::Config(format!(
            "direct run ends at t={end}, limit run at t={lend}"
        )));
    }
    let residual = cell_residual(history, fit, eps, from, to)?;
    let trait_distance = history
        .records
        .iter()
        .filter_map(|r| trait_at(limit, r.t).map(|x| r.xbar.dist_sq(&x).sqrt()))
        .fold(0.0, f64::max);
    let (avg, hom) = resource_trace(history, fit, limit, window)?;
    let half = 0.5 * window;
    let mut dev = 0.0f64;
    let mut envelope = Vec::new();
    for ((r, a), h) in history.records.iter().zip(&avg).zip(&hom) {
        if r.t < half - 1e-12 || r.t > end - half + 1e-12 {
            continue;
        }
        envelope.push(*a);
        if r.t >= from {
            dev = dev.max((a - h).abs() / h);
        }
    }
    Ok(ComparisonReport {
        eps,
        residual,
        trait_distance,
        average_deviation: dev,
        envelope_dip: largest_dip(&envelope),
        from,
        to,
    })
}

/// `|R_eff(x, x)|` at each point.
pub fn diagonal_residuals(fit: &dyn Fitness, points: &[TraitPoint]) -> LabResult<Vec<f64>> {
    points
        .iter()
        .map(|x| Ok(fit.value(x, x)?.abs()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use perenv_core::direct::Record;
    use perenv_core::hjlimit::TrajectoryPoint;
    use perenv_core::{presets, SymMatrix};

    #[test]
    fn pure_tone_is_found_within_a_bin() {
        let dt = 0.01 / 16.0;
        let t: Vec<f64> = (0..2400).map(|k| 0.5 + k as f64 * dt).collect();
        let v: Vec<f64> = t
            .iter()
            .map(|t| 7.0 + t + 0.3 * (2.0 * std::f64::consts::PI * 100.0 * t).sin())
            .collect();
        let s = dominant_frequency(&t, &v, 0.1).unwrap();
        assert!((s.peak_frequency - 100.0).abs() <= s.bin_width);
    }

    #[test]
    fn dips_are_measured_from_the_running_maximum() {
        assert_eq!(largest_dip(&[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(largest_dip(&[1.0, 3.0, 2.5, 4.0, 3.0]), 1.0);
    }

    fn trajectory(xs: &[(f64, f64)]) -> CanonicalTrajectory {
        CanonicalTrajectory {
            points: xs
                .iter()
                .map(|&(t, x)| TrajectoryPoint {
                    t,
                    xbar: TraitPoint::scalar(x),
                    max_u: 0.0,
                    hessian: SymMatrix::scalar(1, -2.0),
                    rho: None,
                })
                .collect(),
        }
    }

    #[test]
    fn self_comparison_is_exact() {
        let tr = trajectory(&[(0.0, 1.0), (0.5, 0.7), (1.0, 0.4)]);
        assert_eq!(trajectory_distance(&tr, &tr), 0.0);
        let x = trait_at(&tr, 0.25).unwrap();
        assert!((x[0] - 0.85).abs() < 1e-15);
    }

    #[test]
    fn symmetric_traces_stay_pinned() {
        // A direct history sitting at the origin against a limit trajectory
        // at the origin: zero trait distance.
        let fit = EffectiveFitness::new(presets::figure1());
        let orbit = fit.orbit(&TraitPoint::scalar(0.0)).unwrap();
        let eps = 0.05;
        let records = (0..=160)
            .map(|k| {
                let t = k as f64 * eps / 16.0;
                let i = orbit.value_at(t / eps);
                Record {
                    t,
                    resource: i,
                    log_resource: i.ln(),
                    xbar: TraitPoint::scalar(0.0),
                    rho: i,
                    max_u: 0.0,
                    d2u_min: -2.0,
                    d2u_max: -2.0,
                    level: None,
                    viability: 1.0,
                }
            })
            .collect();
        let history = History { records };
        let limit = trajectory(&[(0.0, 0.0), (0.5, 0.0)]);
        let rep = compare(&history, eps, &fit, &limit, 10.0 * eps, 0.1, 0.5).unwrap();
        assert_eq!(rep.trait_distance, 0.0);
        assert!(rep.residual < 1e-9);
        assert!(rep.average_deviation < 1e-6, "{}", rep.average_deviation);
    }
}
