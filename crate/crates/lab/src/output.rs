//! Artifact files: CSV tables, JSON reports, manifest and summary.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use perenv_core::direct::History;
use perenv_core::hjlimit::CanonicalTrajectory;
use perenv_core::TraitGrid;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::LabResult;

/// A built-in check of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: value <= tolerance,
            value,
            tolerance,
        }
    }

    /// Passes when `value >= tolerance`.
    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: value >= tolerance,
            value,
            tolerance,
        }
    }

    pub fn flag(name: &str, pass: bool, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass,
            value,
            tolerance,
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table with a fixed header, written row by row.
pub struct CsvTable {
    out: BufWriter<fs::File>,
    columns: usize,
}

impl CsvTable {
    pub fn create(path: &Path, header: &[String]) -> LabResult<Self> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, values: &[f64]) -> LabResult<()> {
        debug_assert_eq!(values.len(), self.columns);
        let line: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(self.out, "{}", line.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> LabResult<()> {
        self.out.flush()?;
        Ok(())
    }
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |d| format!("{prefix}_{d}"))
}

/// `t, I_eps, xbar_0.., rho, max_u, d2u_min, d2u_max[, F_eps]`.
pub fn write_history(path: &Path, history: &History, dim: usize) -> LabResult<()> {
    let with_level = history.records.first().is_some_and(|r| r.level.is_some());
    let mut header: Vec<String> = vec!["t".into(), "I_eps".into()];
    header.extend(indexed("xbar", dim));
    header.extend(["rho", "max_u", "d2u_min", "d2u_max"].map(String::from));
    if with_level {
        header.push("F_eps".into());
    }
    let mut csv = CsvTable::create(path, &header)?;
    for r in &history.records {
        let mut row = vec![r.t, r.resource];
        row.extend_from_slice(r.xbar.as_slice());
        row.extend([r.rho, r.max_u, r.d2u_min, r.d2u_max]);
        if with_level {
            row.push(r.level.unwrap_or(f64::NAN));
        }
        csv.row(&row)?;
    }
    csv.finish()
}

/// `t, xbar_0.., max_u, m_00.., rho`.
pub fn write_trajectory(path: &Path, tr: &CanonicalTrajectory, dim: usize) -> LabResult<()> {
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(indexed("xbar", dim));
    header.push("max_u".into());
    for i in 0..dim {
        for j in 0..dim {
            header.push(format!("m_{i}{j}"));
        }
    }
    header.push("rho".into());
    let mut csv = CsvTable::create(path, &header)?;
    for p in &tr.points {
        let mut row = vec![p.t];
        row.extend_from_slice(p.xbar.as_slice());
        row.push(p.max_u);
        row.extend(p.hessian.row_major());
        row.push(p.rho.unwrap_or(f64::NAN));
        csv.row(&row)?;
    }
    csv.finish()
}

/// Long format `t, x_0.., u` for each snapshot.
pub fn write_snapshots(path: &Path, grid: &TraitGrid, snaps: &[(f64, &[f64])]) -> LabResult<()> {
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(indexed("x", grid.dim()));
    header.push("u".into());
    let mut csv = CsvTable::create(path, &header)?;
    for (t, u) in snaps {
        for (k, v) in u.iter().enumerate() {
            let mut row = vec![*t];
            row.extend_from_slice(grid.point(k).as_slice());
            row.push(*v);
            csv.row(&row)?;
        }
    }
    csv.finish()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Manifest written before the computation and completed after it.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub status: String,
    pub checks: Vec<Check>,
}

pub struct ArtifactDir {
    root: PathBuf,
}

impl ArtifactDir {
    pub fn create(root: &Path) -> LabResult<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
