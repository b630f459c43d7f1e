//! JSON experiment configuration.
//!
//! Every key is optional; missing keys take the defaults of the chosen
//! experiment (see [`ExperimentConfig::defaults`]).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use perenv_core::cell::OrbitSettings;
use perenv_core::model::presets::{self, FluctuationParams, SeparableParams};
use perenv_core::{GrowthModel, InitialDatum, TraitGrid, TraitPoint};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CellOrbit,
    EffectiveSurface,
    DirectSim,
    EpsSweep,
    HjLimit,
    Canonical,
    Counterexample,
    Esd,
    Separable,
    Fluctuation,
    Figure1,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::CellOrbit,
        Experiment::EffectiveSurface,
        Experiment::DirectSim,
        Experiment::EpsSweep,
        Experiment::HjLimit,
        Experiment::Canonical,
        Experiment::Counterexample,
        Experiment::Esd,
        Experiment::Separable,
        Experiment::Fluctuation,
        Experiment::Figure1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::CellOrbit => "cell-orbit",
            Experiment::EffectiveSurface => "effective-surface",
            Experiment::DirectSim => "direct-sim",
            Experiment::EpsSweep => "eps-sweep",
            Experiment::HjLimit => "hj-limit",
            Experiment::Canonical => "canonical",
            Experiment::Counterexample => "counterexample",
            Experiment::Esd => "esd",
            Experiment::Separable => "separable",
            Experiment::Fluctuation => "fluctuation",
            Experiment::Figure1 => "figure1",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = LabError;

    fn from_str(s: &str) -> LabResult<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| LabError::Config(format!("unknown experiment '{s}'")))
    }
}

/// A preset name plus optional parameter overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub preset: String,
    pub dim: usize,
    // concave-quadratic
    pub a: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    // separable and fluctuation-example
    pub b0: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub birth_amplitude: Option<f64>,
    pub d0: Option<f64>,
    pub death_amplitude: Option<f64>,
    pub amplitude: Option<f64>,
    pub exponent: Option<f64>,
    pub half_width: Option<f64>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::preset("figure1", 1)
    }
}

fn positive(name: &str, v: f64) -> LabResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(LabError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ModelSpec {
    pub fn preset(name: &str, dim: usize) -> Self {
        Self {
            preset: name.to_string(),
            dim,
            a: None,
            gamma: None,
            delta: None,
            b0: None,
            center: None,
            birth_amplitude: None,
            d0: None,
            death_amplitude: None,
            amplitude: None,
            exponent: None,
            half_width: None,
        }
    }

    fn center(&self, default: [f64; 2]) -> LabResult<[f64; 2]> {
        match &self.center {
            None => Ok(default),
            Some(c) if c.len() == self.dim => {
                let mut out = [0.0; 2];
                out[..c.len()].copy_from_slice(c);
                Ok(out)
            }
            Some(c) => Err(LabError::Config(format!(
                "model center has {} coordinates, dimension is {}",
                c.len(),
                self.dim
            ))),
        }
    }

    pub fn build(&self) -> LabResult<GrowthModel> {
        if !(1..=2).contains(&self.dim) {
            return Err(LabError::Config(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        match self.preset.as_str() {
            "figure1" if self.dim == 1 => Ok(presets::figure1()),
            "figure1" => Err(LabError::Config("the figure1 preset is one-dimensional".into())),
            "concave-quadratic" => Ok(presets::concave_quadratic(
                self.dim,
                positive("a", self.a.unwrap_or(2.0))?,
                positive("gamma", self.gamma.unwrap_or(0.5))?,
                positive("delta", self.delta.unwrap_or(0.5))?,
            )),
            "separable" => {
                let d = SeparableParams::for_dim(self.dim);
                let p = SeparableParams {
                    b0: positive("b0", self.b0.unwrap_or(d.b0))?,
                    center: self.center(d.center)?,
                    birth_amplitude: self.birth_amplitude.unwrap_or(d.birth_amplitude),
                    d0: positive("d0", self.d0.unwrap_or(d.d0))?,
                    death_amplitude: self.death_amplitude.unwrap_or(d.death_amplitude),
                    half_width: positive("half_width", self.half_width.unwrap_or(d.half_width))?,
                };
                if p.birth_amplitude.abs() >= 1.0 || p.death_amplitude.abs() >= 1.0 {
                    return Err(LabError::Config("seasonal amplitudes must lie in (-1, 1)".into()));
                }
                Ok(presets::separable(self.dim, p))
            }
            "fluctuation-example" => {
                let d = FluctuationParams::for_dim(self.dim);
                let p = FluctuationParams {
                    b0: positive("b0", self.b0.unwrap_or(d.b0))?,
                    center: self.center(d.center)?,
                    amplitude: self.amplitude.unwrap_or(d.amplitude),
                    exponent: self.exponent.unwrap_or(d.exponent),
                    half_width: positive("half_width", self.half_width.unwrap_or(d.half_width))?,
                };
                if p.amplitude.abs() >= 1.0 || !(p.exponent > 0.0 && p.exponent <= 1.0) {
                    return Err(LabError::Config(
                        "fluctuation preset needs |amplitude| < 1 and 0 < exponent <= 1".into(),
                    ));
                }
                Ok(presets::fluctuation(self.dim, p))
            }
            other => Err(LabError::Config(format!("unknown model preset '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub nodes: usize,
}

impl GridSpec {
    pub fn build(&self, dim: usize) -> LabResult<TraitGrid> {
        Ok(TraitGrid::new(dim, self.half_width, self.nodes)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSpec {
    pub center: Vec<f64>,
    pub curvature: f64,
    pub mass: f64,
}

impl DatumSpec {
    pub fn build(&self) -> LabResult<InitialDatum> {
        if !(1..=2).contains(&self.center.len()) {
            return Err(LabError::Config("datum center must have 1 or 2 coordinates".into()));
        }
        Ok(InitialDatum::new(
            TraitPoint::new(&self.center),
            self.curvature,
            self.mass,
        )?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Fixed-point tolerance of the cell problem.
    pub orbit: f64,
    /// Hard limit on `|max u|` in the limit equation.
    pub drift: f64,
    /// `|A(x) - x|` for the ESD iteration.
    pub esd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            orbit: 1e-11,
            drift: 1e-2,
            esd: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelSpec,
    /// Grid of the direct (ε-scale) simulations.
    pub grid: GridSpec,
    /// Grid of the limit equation and effective-fitness surfaces.
    pub limit_grid: GridSpec,
    pub eps: Vec<f64>,
    pub horizon: f64,
    /// Horizon of the long limit-equation run (esd).
    pub long_horizon: f64,
    pub datum: DatumSpec,
    /// Record cadence of direct runs, in units of ε.
    pub cadence: f64,
    /// Record cadence of limit-equation runs.
    pub limit_cadence: f64,
    /// Running-average window, in units of ε.
    pub window: f64,
    /// Start of the comparison interval for residuals and spectra.
    pub compare_from: f64,
    pub orbit_samples: usize,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

/// Same layout with every key optional, for reading partial files.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    experiment: Option<Experiment>,
    model: Option<ModelSpec>,
    grid: Option<GridSpec>,
    limit_grid: Option<GridSpec>,
    eps: Option<Vec<f64>>,
    horizon: Option<f64>,
    long_horizon: Option<f64>,
    datum: Option<DatumSpec>,
    cadence: Option<f64>,
    limit_cadence: Option<f64>,
    window: Option<f64>,
    compare_from: Option<f64>,
    orbit_samples: Option<usize>,
    tolerances: Option<Tolerances>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

impl ExperimentConfig {
    /// Defaults of each experiment; these reproduce the documented runs.
    pub fn defaults(experiment: Experiment) -> Self {
        let fig_datum = DatumSpec {
            center: vec![1.0],
            curvature: 1.0,
            mass: 1.0,
        };
        let mut c = Self {
            experiment,
            model: ModelSpec::preset("figure1", 1),
            grid: GridSpec {
                half_width: 2.0,
                nodes: 1024,
            },
            limit_grid: GridSpec {
                half_width: 2.0,
                nodes: 513,
            },
            eps: vec![0.01],
            horizon: 2.0,
            long_horizon: 20.0,
            datum: fig_datum,
            cadence: 1.0 / 16.0,
            limit_cadence: 0.01,
            window: 10.0,
            compare_from: 0.5,
            orbit_samples: 2048,
            tolerances: Tolerances::default(),
            out: PathBuf::from("out").join(experiment.name()),
            seed: None,
        };
        match experiment {
            Experiment::EffectiveSurface => {
                c.limit_grid = GridSpec {
                    half_width: 1.3,
                    nodes: 105,
                };
            }
            Experiment::EpsSweep => {
                c.eps = vec![0.04, 0.02, 0.01];
                c.grid = GridSpec {
                    half_width: 3.0,
                    nodes: 1536,
                };
            }
            Experiment::Counterexample => {
                c.model = ModelSpec::preset("counterexample", 2);
                c.limit_grid = GridSpec {
                    half_width: 2.0,
                    nodes: 128,
                };
                c.horizon = 2.0 * std::f64::consts::PI;
                c.limit_cadence = 2.0 * std::f64::consts::PI / 200.0;
                c.datum = DatumSpec {
                    center: vec![1.0, 0.0],
                    curvature: 1.0,
                    mass: 1.0,
                };
            }
            Experiment::Esd => {
                c.horizon = 5.0;
                c.limit_grid = GridSpec {
                    half_width: 2.0,
                    nodes: 257,
                };
                c.limit_cadence = 0.05;
            }
            Experiment::Separable => {
                c.model = ModelSpec::preset("separable", 1);
                c.grid = GridSpec {
                    half_width: 1.5,
                    nodes: 256,
                };
                c.horizon = 5.0;
                c.datum = DatumSpec {
                    center: vec![-0.5],
                    curvature: 1.0,
                    mass: 1.0,
                };
            }
            Experiment::Fluctuation => {
                c.model = ModelSpec::preset("fluctuation-example", 1);
                c.limit_grid = GridSpec {
                    half_width: 1.0,
                    nodes: 201,
                };
            }
            _ => {}
        }
        c
    }

    /// Reads a JSON file. Keys absent from the file keep the defaults of
    /// the experiment named in the file, or of `fallback`.
    pub fn from_json(text: &str, fallback: Option<Experiment>) -> LabResult<Self> {
        let p: PartialConfig = serde_json::from_str(text)?;
        let experiment = p.experiment.or(fallback).ok_or_else(|| {
            LabError::Config("no experiment given in the config or on the command line".into())
        })?;
        let mut c = Self::defaults(experiment);
        if let Some(v) = p.model {
            c.model = v;
        }
        if let Some(v) = p.grid {
            c.grid = v;
        }
        if let Some(v) = p.limit_grid {
            c.limit_grid = v;
        }
        if let Some(v) = p.eps {
            c.eps = v;
        }
        if let Some(v) = p.horizon {
            c.horizon = v;
        }
        if let Some(v) = p.long_horizon {
            c.long_horizon = v;
        }
        if let Some(v) = p.datum {
            c.datum = v;
        }
        if let Some(v) = p.cadence {
            c.cadence = v;
        }
        if let Some(v) = p.limit_cadence {
            c.limit_cadence = v;
        }
        if let Some(v) = p.window {
            c.window = v;
        }
        if let Some(v) = p.compare_from {
            c.compare_from = v;
        }
        if let Some(v) = p.orbit_samples {
            c.orbit_samples = v;
        }
        if let Some(v) = p.tolerances {
            c.tolerances = v;
        }
        if let Some(v) = p.out {
            c.out = v;
        }
        if p.seed.is_some() {
            c.seed = p.seed;
        }
        Ok(c)
    }

    pub fn load(path: &Path, fallback: Option<Experiment>) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, fallback)
    }

    pub fn validate(&self) -> LabResult<()> {
        if self.eps.is_empty() {
            return Err(LabError::Config("eps list must be nonempty".into()));
        }
        if let Some(e) = self.eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(LabError::Config(format!("eps values must be positive, got {e}")));
        }
        positive("horizon", self.horizon)?;
        positive("long_horizon", self.long_horizon)?;
        positive("cadence", self.cadence)?;
        positive("limit_cadence", self.limit_cadence)?;
        positive("window", self.window)?;
        positive("orbit tolerance", self.tolerances.orbit)?;
        positive("drift tolerance", self.tolerances.drift)?;
        positive("esd tolerance", self.tolerances.esd)?;
        if self.compare_from < 0.0 || self.compare_from >= self.horizon {
            return Err(LabError::Config("compare_from must lie in [0, horizon)".into()));
        }
        if self.orbit_samples < 16 {
            return Err(LabError::Config("orbit_samples must be at least 16".into()));
        }
        let dim = if self.experiment == Experiment::Counterexample {
            2
        } else {
            self.model.build()?.dim()
        };
        if self.datum.center.len() != dim {
            return Err(LabError::Config(format!(
                "datum center has {} coordinates, the model has dimension {dim}",
                self.datum.center.len()
            )));
        }
        self.datum.build()?;
        self.grid.build(dim)?;
        self.limit_grid.build(dim)?;
        Ok(())
    }

    pub fn orbit_settings(&self) -> OrbitSettings {
        OrbitSettings {
            tolerance: self.tolerances.orbit,
            ..OrbitSettings::default().with_samples(self.orbit_samples)
        }
    }
}
