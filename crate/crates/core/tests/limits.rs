//! Long-time limits and the canonical equation against closed forms.

use perenv_core::cell::{solve_orbit, Anchor, OrbitSettings};
use perenv_core::esd::{a_map, esd_fixed_point, fluctuation_compare, EsdOptions};
use perenv_core::hjlimit::{integrate_canonical, CanonicalMode, CounterexampleFitness};
use perenv_core::model::presets::{self, FluctuationParams};
use perenv_core::{EffectiveFitness, Fitness, TraitGrid, TraitPoint};

#[test]
fn figure1_map_and_fixed_point_sit_at_the_origin() {
    let ef = EffectiveFitness::new(presets::figure1());
    let grid = TraitGrid::new(1, 1.3, 131).unwrap();
    for y in [-0.8, 0.25, 1.1] {
        let a = a_map(&ef, &TraitPoint::scalar(y), &grid).unwrap();
        assert!(a.refined && a.point[0].abs() < 1e-8, "A({y}) = {:?}", a.point);
    }
    let r = esd_fixed_point(&ef, TraitPoint::scalar(1.0), &grid, &EsdOptions::default()).unwrap();
    assert!(r.converged());
    assert!(r.xbar[0].abs() < 1e-8);
    assert!(r.residuals.diagonal <= 1e-8 && r.residuals.max_offdiagonal <= 1e-6);
    let orbit = solve_orbit(ef.model(), Anchor::Trait(TraitPoint::scalar(0.0)), &OrbitSettings::default(), None)
        .unwrap();
    assert!((r.rho.unwrap() - orbit.mean()).abs() < 1e-8);
}

#[test]
fn ansatz_canonical_equation_follows_the_drift() {
    let fit = CounterexampleFitness::rotation();
    let weight = |x: &TraitPoint| fit.weight(x);
    let tr = integrate_canonical(
        &fit,
        TraitPoint::planar(1.0, 0.0),
        CanonicalMode::Ansatz(&weight),
        2.0 * std::f64::consts::PI,
        0.01,
        0.1,
    )
    .unwrap();
    for p in &tr.points {
        let exact = TraitPoint::planar(p.t.cos(), p.t.sin());
        assert!(p.xbar.dist_sq(&exact).sqrt() < 1e-8, "t = {}", p.t);
    }
}

#[test]
fn fluctuations_raise_the_population() {
    let grid = TraitGrid::new(1, 1.0, 201).unwrap();
    let ef = EffectiveFitness::new(presets::fluctuation(1, FluctuationParams::default()));
    let r = fluctuation_compare(&ef, &grid).unwrap();
    assert!((r.rho_av - 2.0).abs() < 1e-9);
    assert!(r.gap > 0.0);
    assert!(r.identity_residuals.iter().all(|e| e.abs() <= 1e-8), "{:?}", r.identity_residuals);
    assert!(r.jensen_gap > 0.0);
    assert!(r.d1_mean * r.d2_mean >= r.b_star);
}

#[test]
fn fixed_point_value_on_the_diagonal_is_zero_for_the_concave_plane() {
    let ef = EffectiveFitness::new(presets::concave_quadratic(2, 2.0, 0.5, 0.5));
    let grid = TraitGrid::new(2, 1.5, 65).unwrap();
    let r = esd_fixed_point(&ef, TraitPoint::planar(0.5, -0.4), &grid, &EsdOptions::default()).unwrap();
    assert!(r.converged());
    assert!(r.xbar.norm() < 1e-8);
    assert!(ef.value(&r.xbar, &r.xbar).unwrap().abs() < 1e-8);
}
