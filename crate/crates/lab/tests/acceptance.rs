//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use perenv_core::cell::{solve_orbit, Anchor, OrbitSettings};
use perenv_core::model::presets::{self, SeparableParams};
use perenv_core::model::{validate_assumptions, Assumption, ValidationOptions};
use perenv_core::{EffectiveFitness, GrowthModel, InitialDatum, TraitPoint};
use perenv_lab::analysis::diagonal_residuals;
use perenv_lab::experiments::{
    counterexample_report, diagonal_sample, esd_report, figure1_report, fluctuation_report,
    limit_report, separable_report, sweep_report, LimitReport, SweepReport,
};
use perenv_lab::output::Check;
use perenv_lab::{Experiment, ExperimentConfig, LabResult};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn from_checks(checks: &[Check]) -> Self {
        let detail = checks
            .iter()
            .map(|c| {
                let mark = if c.pass { "" } else { " [fail]" };
                format!("{}={:.4e} (tol {:.3e}){mark}", c.name, c.value, c.tolerance)
            })
            .collect::<Vec<_>>()
            .join(", ");
        Self {
            pass: checks.iter().all(|c| c.pass),
            detail,
        }
    }

    fn within(mut self, elapsed: Duration, budget: Duration) -> Self {
        let ok = elapsed <= budget;
        self.pass &= ok;
        self.detail += &format!(
            ", runtime={:.1}s (budget {}s){}",
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if ok { "" } else { " [fail]" }
        );
        self
    }
}

/// Every shipped preset in each dimension it supports.
fn shipped_presets() -> Vec<(&'static str, GrowthModel)> {
    vec![
        ("figure1", presets::figure1()),
        ("concave-quadratic/1d", presets::by_name("concave-quadratic", 1).unwrap()),
        ("concave-quadratic/2d", presets::by_name("concave-quadratic", 2).unwrap()),
        ("separable/1d", presets::by_name("separable", 1).unwrap()),
        ("separable/2d", presets::by_name("separable", 2).unwrap()),
        ("fluctuation-example/1d", presets::by_name("fluctuation-example", 1).unwrap()),
        ("fluctuation-example/2d", presets::by_name("fluctuation-example", 2).unwrap()),
    ]
}

fn criterion_1() -> LabResult<Verdict> {
    let clock = Instant::now();
    let mut checks = Vec::new();
    for (k, (name, model)) in shipped_presets().into_iter().enumerate() {
        let fit = EffectiveFitness::new(model);
        let xs = diagonal_sample(&fit, 200, Some(1000 + k as u64), std::iter::empty())?;
        let worst = diagonal_residuals(&fit, &xs)?.into_iter().fold(0.0, f64::max);
        checks.push(Check::at_most(name, worst, 1e-8));
    }
    Ok(Verdict::from_checks(&checks).within(clock.elapsed(), Duration::from_secs(60)))
}

fn criterion_2() -> LabResult<Verdict> {
    let forced = GrowthModel::custom(1, |_, s, i| 2.0 + (2.0 * std::f64::consts::PI * s).sin() - i);
    let settings = OrbitSettings::default();
    let orbit = solve_orbit(&forced, Anchor::Trait(TraitPoint::scalar(0.0)), &settings, None)?;
    let mut checks = vec![
        Check::at_most("forced-mean", (orbit.mean() - 2.0).abs(), 1e-8),
        Check::at_most("forced-residual", orbit.residual(), 1e-10),
    ];
    for (k, (name, model)) in shipped_presets().into_iter().enumerate() {
        let fit = EffectiveFitness::new(model.clone());
        let xs = diagonal_sample(&fit, 20, Some(2000 + k as u64), std::iter::empty())?;
        let mut worst = 0.0f64;
        for x in xs {
            worst = worst.max(fit.orbit(&x)?.residual());
        }
        checks.push(Check::at_most(&format!("{name}-residual"), worst, 1e-10));
    }
    Ok(Verdict::from_checks(&checks))
}

fn criterion_3() -> LabResult<Verdict> {
    let clock = Instant::now();
    let rep = counterexample_report(&ExperimentConfig::defaults(Experiment::Counterexample))?;
    let checks = [
        Check::at_most("sup-error", rep.sup_error, 5.0 * rep.h),
        Check::at_most("return-distance", rep.return_distance, 2.0 * rep.h),
        Check::at_most("constraint-drift", rep.drift, 1e-3),
    ];
    Ok(Verdict::from_checks(&checks).within(clock.elapsed(), Duration::from_secs(600)))
}

fn criterion_4(limit: &LimitReport, limit_time: Duration) -> LabResult<Verdict> {
    let clock = Instant::now();
    let rep = figure1_report(&ExperimentConfig::defaults(Experiment::Figure1), limit)?;
    let mut v = Verdict::from_checks(&rep.checks());
    v.detail += &format!(", period-estimate={:.5}", rep.period_estimate);
    Ok(v.within(clock.elapsed() + limit_time, Duration::from_secs(900)))
}

fn criterion_5(sweep: &SweepReport) -> Verdict {
    let r: Vec<String> = sweep
        .runs
        .iter()
        .map(|c| format!("r({})={:.5}", c.eps, c.residual))
        .collect();
    let ratio = sweep.residual_ratio;
    let mut v = Verdict::from_checks(&[
        Check::flag("strictly-decreasing", sweep.residual_decreasing, ratio, 1.0),
        Check::flag("ratio-in-[0.25,1]", (0.25..=1.0).contains(&ratio), ratio, 0.25),
    ]);
    v.detail = format!("{}, {}", r.join(" "), v.detail);
    v
}

fn criterion_6(sweep: &SweepReport) -> Verdict {
    let d: Vec<String> = sweep
        .runs
        .iter()
        .map(|c| format!("d({})={:.5}", c.eps, c.trait_distance))
        .collect();
    let finest = sweep.runs.last().map_or(f64::INFINITY, |c| c.trait_distance);
    let mut v = Verdict::from_checks(&[
        Check::at_most("distance-finest", finest, 0.1),
        Check::flag("distance-decreasing", sweep.trait_distance_decreasing, finest, 0.1),
        Check::at_most(
            "hj-vs-canonical",
            sweep.canonical_distance.unwrap_or(f64::INFINITY),
            5.0 * sweep.h,
        ),
    ]);
    v.detail = format!("{}, {}", d.join(" "), v.detail);
    v
}

fn criterion_7() -> LabResult<Verdict> {
    let rep = esd_report(&ExperimentConfig::defaults(Experiment::Esd))?;
    let mut v = Verdict::from_checks(&rep.checks(Some(&TraitPoint::scalar(0.0))));
    v.detail += &format!(
        ", rho_inf={:.6}, direct-average={:.6}",
        rep.rho_inf.unwrap_or(f64::NAN),
        rep.direct_average
    );
    Ok(v)
}

fn criterion_8() -> LabResult<Verdict> {
    let rep = fluctuation_report(&ExperimentConfig::defaults(Experiment::Fluctuation))?;
    let identity = rep.identity_residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut v = Verdict::from_checks(&[
        Check::at_most("rho-av-is-2", (rep.rho_av - 2.0).abs(), 1e-10),
        Check::at_least("rho-star-above-2", rep.rho_star - 2.0, f64::MIN_POSITIVE),
        Check::at_most("gap-doubling-change", rep.doubling_change, 5e-4),
        Check::at_most("unforced-gap", rep.unforced_gap.abs(), 1e-6),
        Check::at_most("identities", identity, 1e-8),
    ]);
    v.detail += &format!(", gap={:.6}", rep.gap);
    Ok(v)
}

fn criterion_9() -> LabResult<Verdict> {
    let rep = separable_report(&ExperimentConfig::defaults(Experiment::Separable))?;
    Ok(Verdict::from_checks(&rep.checks()))
}

/// The preset's datum in the shipped experiment configs, or a centred one
/// for presets no experiment uses.
fn shipped_datum(name: &str, dim: usize) -> LabResult<InitialDatum> {
    let exp = match name {
        "figure1" => Some(Experiment::Figure1),
        "separable/1d" => Some(Experiment::Separable),
        "fluctuation-example/1d" => Some(Experiment::Fluctuation),
        _ => None,
    };
    match exp {
        Some(e) => ExperimentConfig::defaults(e).datum.build(),
        None => Ok(InitialDatum::new(TraitPoint::zeros(dim), 1.0, 1.0)?),
    }
}

fn detects(model: &GrowthModel, datum: Option<&InitialDatum>, a: Assumption) -> Check {
    let r = validate_assumptions(model, datum, &ValidationOptions::for_model(model));
    let failed = r.check(a).is_some_and(|c| !c.pass);
    Check::flag(&format!("detects-{}", a.name()), failed, 0.0, 0.0)
}

fn criterion_10() -> LabResult<Verdict> {
    let mut checks = Vec::new();
    let mut failures = Vec::new();
    for (name, model) in shipped_presets() {
        let datum = shipped_datum(name, model.dim())?;
        let r = validate_assumptions(&model, Some(&datum), &ValidationOptions::for_model(&model));
        for c in r.failures() {
            failures.push(format!("{name}:{}", c.assumption.name()));
        }
        checks.push(Check::flag(name, r.passed(), r.failures().count() as f64, 0.0));
    }

    let fig = presets::figure1();
    let centred = InitialDatum::new(TraitPoint::scalar(0.0), 1.0, 1.0)?;
    checks.push(detects(
        &GrowthModel::custom(1, |_, _, i| -1.0 - i),
        None,
        Assumption::Survival,
    ));
    checks.push(detects(
        &GrowthModel::custom(1, |x: &[f64], _, i| 1.0 + x[0] * x[0] - i).with_reference_half_width(1.0),
        None,
        Assumption::Concavity,
    ));
    checks.push(detects(
        &GrowthModel::custom(1, |x: &[f64], _, i| 2.0 - x[0] * x[0] - 1.0 / (1.0 + i))
            .with_reference_half_width(0.5),
        None,
        Assumption::ResourceMonotonicity,
    ));
    checks.push(detects(
        &fig,
        Some(&InitialDatum::new(TraitPoint::scalar(1.6), 1.0, 1.0)?),
        Assumption::InitialViability,
    ));
    checks.push(detects(
        &fig,
        Some(&InitialDatum::new(TraitPoint::scalar(0.0), 50.0, 1.0)?),
        Assumption::InitialCompatibility,
    ));
    let sep = presets::separable(1, SeparableParams::default());
    checks.push(detects(
        &sep,
        Some(&InitialDatum::new(TraitPoint::scalar(0.25), 1.0, 1e6)?),
        Assumption::InitialMass,
    ));
    let mut parts = sep.separable_parts().unwrap().clone();
    parts.birth = Arc::new(|_, i: f64| 1.0 / (1.0 + i) + 0.3 * (-(i - 2.0) * (i - 2.0)).exp());
    parts.birth_di = None;
    checks.push(detects(
        &GrowthModel::separable(1, parts).with_reference_half_width(1.5),
        Some(&centred),
        Assumption::SeparableMonotonicity,
    ));
    let mut parts = sep.separable_parts().unwrap().clone();
    parts.b = Arc::new(|x: &[f64]| 3.0 - (x[0] * x[0] - 1.0).powi(2));
    parts.b_grad = None;
    checks.push(detects(
        &GrowthModel::separable(1, parts).with_reference_half_width(1.5),
        None,
        Assumption::UniqueMaximizer,
    ));

    let mut v = Verdict::from_checks(&checks);
    if !failures.is_empty() {
        v.detail += &format!(", failing assumptions: {}", failures.join(" "));
    }
    Ok(v)
}

fn report(n: usize, result: LabResult<Verdict>, failed: &mut usize) {
    let (pass, detail) = match result {
        Ok(v) => (v.pass, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if !pass {
        *failed += 1;
    }
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn main() -> ExitCode {
    let mut failed = 0;
    report(1, criterion_1(), &mut failed);
    report(2, criterion_2(), &mut failed);
    report(3, criterion_3(), &mut failed);

    // One limit-equation run serves the figure and the sweep.
    let clock = Instant::now();
    let limit = limit_report(&ExperimentConfig::defaults(Experiment::Figure1), 2.0, true);
    let limit_time = clock.elapsed();
    match &limit {
        Ok(limit) => {
            report(4, criterion_4(limit, limit_time), &mut failed);
            match sweep_report(&ExperimentConfig::defaults(Experiment::EpsSweep), limit) {
                Ok(sweep) => {
                    report(5, Ok(criterion_5(&sweep)), &mut failed);
                    report(6, Ok(criterion_6(&sweep)), &mut failed);
                }
                Err(e) => {
                    let msg = e.to_string();
                    report(5, Err(perenv_lab::LabError::Config(msg.clone())), &mut failed);
                    report(6, Err(perenv_lab::LabError::Config(msg)), &mut failed);
                }
            }
        }
        Err(e) => {
            for n in 4..=6 {
                report(n, Err(perenv_lab::LabError::Config(format!("limit run: {e}"))), &mut failed);
            }
        }
    }

    report(7, criterion_7(), &mut failed);
    report(8, criterion_8(), &mut failed);
    report(9, criterion_9(), &mut failed);
    report(10, criterion_10(), &mut failed);
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
