use perenv_core::cell::{solve_orbit, Anchor};
use perenv_core::{EffectiveFitness, Fitness, TraitPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{fitness, Outcome};
use crate::analysis::diagonal_residuals;
use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::output::{ArtifactDir, Check, CsvTable};

#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub anchor: Vec<f64>,
    pub samples: usize,
    pub mean: f64,
    pub seed: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `|mean(M_s) - mean(2 M_s)|`.
    pub doubling_change: f64,
}

pub fn orbit_report(cfg: &ExperimentConfig) -> LabResult<(OrbitReport, Vec<(f64, f64)>)> {
    let model = cfg.model.build()?;
    let x = cfg.datum.build()?.center;
    let settings = cfg.orbit_settings();
    let orbit = solve_orbit(&model, Anchor::Trait(x), &settings, None)?;
    let fine = solve_orbit(
        &model,
        Anchor::Trait(x),
        &settings.with_samples(2 * settings.samples),
        Some(orbit.seed()),
    )?;
    let rows = (0..orbit.samples())
        .map(|k| (orbit.phase(k), orbit.level(k)))
        .collect();
    Ok((
        OrbitReport {
            anchor: x.as_slice().to_vec(),
            samples: orbit.samples(),
            mean: orbit.mean(),
            seed: orbit.seed(),
            residual: orbit.residual(),
            iterations: orbit.iterations(),
            doubling_change: (orbit.mean() - fine.mean()).abs(),
        },
        rows,
    ))
}

pub(super) fn cell_orbit(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let (rep, rows) = orbit_report(cfg)?;
    let mut csv = CsvTable::create(&dir.path("orbit.csv"), &["s".into(), "I".into()])?;
    for (s, i) in rows {
        csv.row(&[s, i])?;
    }
    csv.finish()?;
    Ok(Outcome {
        checks: vec![
            Check::at_most("period-map-residual", rep.residual, 1e-10),
            Check::at_most("sample-doubling-change", rep.doubling_change, 1e-8),
        ],
        metrics: serde_json::to_value(&rep)?,
    })
}

/// Viable traits of the model's reference box: `count` seeded random points,
/// or the nodes of the limit grid when no seed is given.
pub fn diagonal_sample(
    fit: &EffectiveFitness,
    count: usize,
    seed: Option<u64>,
    nodes: impl Iterator<Item = TraitPoint>,
) -> LabResult<Vec<TraitPoint>> {
    let viable = |x: &TraitPoint| fit.viability(x) > 1e-6;
    let Some(seed) = seed else {
        return Ok(nodes.filter(viable).collect());
    };
    let model = fit.model();
    let hw = model.reference_half_width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count * 1000 {
        if out.len() == count {
            break;
        }
        let mut c = [0.0; 2];
        for v in c.iter_mut().take(model.dim()) {
            *v = rng.gen_range(-hw..=hw);
        }
        let x = TraitPoint::new(&c[..model.dim()]);
        if viable(&x) {
            out.push(x);
        }
    }
    if out.len() < count {
        return Err(LabError::Config("viable set too small to sample".into()));
    }
    Ok(out)
}

pub(super) fn effective_surface(cfg: &ExperimentConfig, dir: &ArtifactDir) -> LabResult<Outcome> {
    let model = cfg.model.build()?;
    let fit = fitness(cfg, &model);
    let grid = cfg.limit_grid.build(model.dim())?;
    let dim = model.dim();
    // Residents: every viable node in 1D, the datum centre in 2D.
    let residents: Vec<TraitPoint> = if dim == 1 {
        grid.points().filter(|y| fit.viability(y) > 1e-6).collect()
    } else {
        vec![cfg.datum.build()?.center]
    };
    let mut header: Vec<String> = (0..dim).map(|d| format!("x_{d}")).collect();
    header.extend((0..dim).map(|d| format!("y_{d}")));
    header.push("R_eff".into());
    let mut csv = CsvTable::create(&dir.path("surface.csv"), &header)?;
    let mut field = vec![0.0; grid.len()];
    for y in &residents {
        fit.fill_field(y, &grid, &mut field)?;
        for (k, v) in field.iter().enumerate() {
            let mut row = grid.point(k).as_slice().to_vec();
            row.extend_from_slice(y.as_slice());
            row.push(*v);
            csv.row(&row)?;
        }
    }
    csv.finish()?;
    let sample = diagonal_sample(&fit, 200, cfg.seed, grid.points())?;
    let worst = diagonal_residuals(&fit, &sample)?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Outcome {
        checks: vec![Check::at_most("diagonal-identity", worst, 1e-8)],
        metrics: serde_json::json!({
            "residents": residents.len(),
            "diagonal_samples": sample.len(),
            "max_diagonal_residual": worst,
            "orbit_solves": fit.solves(),
        }),
    })
}
