//! CSV files and the per-run JSON manifest.
//!
//! Floats are written in shortest round-trip form, so identical inputs give
//! byte-identical CSV bodies.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pairwalk::ensemble::{EnsembleResult, WraparoundCheck};
use pairwalk::noise::CorrelationEstimate;
use pairwalk::spectral::{BandStructure, ProjectionSpectrum};
use serde::Serialize;

use crate::config::Regime;
use crate::error::{CliError, CliResult};

pub const VARIANCE_HEADER: [&str; 4] = ["tau", "sigma2_raw", "sigma2_shifted", "stderr"];
pub const OCCUPATION_HEADER: [&str; 3] = ["tau", "site", "n"];
pub const BANDS_HEADER: [&str; 4] = ["nu", "K", "E_over_J", "label"];
pub const PROJECTIONS_HEADER: [&str; 2] = ["E_over_J", "P"];
pub const GAIN_HEADER: [&str; 4] = ["U_over_J", "gamma", "g_sigma", "stderr"];
pub const AUTOCORR_HEADER: [&str; 4] = ["lag", "estimate", "stderr", "analytic"];

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GainRow {
    pub u: f64,
    pub gamma: f64,
    pub g_sigma: f64,
    pub stderr: f64,
}

/// Output directory plus the files written to it so far.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn write<F>(&mut self, name: &str, header: &[&str], body: F) -> CliResult<()>
    where
        F: FnOnce(&mut csv::Writer<std::fs::File>) -> csv::Result<()>,
    {
        let path = self.dir.join(name);
        let wrap = |e: csv::Error| CliError::Csv {
            path: path.display().to_string(),
            source: e,
        };
        let mut w = csv::Writer::from_path(&path).map_err(wrap)?;
        w.write_record(header).map_err(wrap)?;
        body(&mut w).map_err(wrap)?;
        w.flush().map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn variance(&mut self, name: &str, result: &EnsembleResult) -> CliResult<()> {
        let shifted = result.variance.shifted();
        self.write(name, &VARIANCE_HEADER, |w| {
            for (p, s) in result.variance.points.iter().zip(&shifted) {
                w.serialize((p.tau, p.sigma2, s.sigma2, p.stderr))?;
            }
            Ok(())
        })
    }

    pub fn occupation(&mut self, name: &str, result: &EnsembleResult) -> CliResult<()> {
        let map = &result.occupation;
        self.write(name, &OCCUPATION_HEADER, |w| {
            for (tau, row) in map.taus.iter().zip(&map.rows) {
                for (site, n) in row.iter().enumerate() {
                    w.serialize((tau, site, n))?;
                }
            }
            Ok(())
        })
    }

    pub fn bands(&mut self, name: &str, bands: &BandStructure) -> CliResult<()> {
        self.write(name, &BANDS_HEADER, |w| {
            for p in &bands.points {
                w.serialize((p.nu, p.k, p.energy, p.label.name()))?;
            }
            Ok(())
        })
    }

    pub fn projections(&mut self, name: &str, spectrum: &ProjectionSpectrum) -> CliResult<()> {
        self.write(name, &PROJECTIONS_HEADER, |w| {
            for l in &spectrum.levels {
                w.serialize((l.energy, l.weight))?;
            }
            Ok(())
        })
    }

    pub fn gain(&mut self, name: &str, rows: &[GainRow]) -> CliResult<()> {
        self.write(name, &GAIN_HEADER, |w| {
            for r in rows {
                w.serialize((r.u, r.gamma, r.g_sigma, r.stderr))?;
            }
            Ok(())
        })
    }

    pub fn autocorr(&mut self, name: &str, rows: &[(CorrelationEstimate, f64)]) -> CliResult<()> {
        self.write(name, &AUTOCORR_HEADER, |w| {
            for (c, analytic) in rows {
                w.serialize((c.lag, c.estimate, c.stderr, analytic))?;
            }
            Ok(())
        })
    }
}

/// One ensemble run inside a command.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub u: f64,
    pub g0: f64,
    pub gamma: f64,
    pub pair: (usize, usize),
    pub realizations: usize,
    pub seed: u64,
    pub regime: Regime,
    pub max_norm_drift: f64,
    pub wraparound: WraparoundCheck,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub preset: Option<String>,
    pub arguments: Vec<String>,
    pub version: &'static str,
    pub master_seed: u64,
    pub config: BTreeMap<&'static str, serde_json::Value>,
    pub regime: Regime,
    pub runs: Vec<RunRecord>,
    pub wraparound_flagged: bool,
    pub warnings: Vec<String>,
    /// Scalar results such as gaps or miniband weights, keyed by run tag.
    pub summary: BTreeMap<String, f64>,
    pub files: Vec<String>,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
}

impl Manifest {
    pub fn write(&self, dir: &Path, name: &str) -> CliResult<PathBuf> {
        let path = dir.join(name);
        let io = |e: std::io::Error| CliError::Io {
            path: path.display().to_string(),
            source: e,
        };
        let mut text = serde_json::to_string_pretty(self).map_err(|e| io(e.into()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(io)?;
        Ok(path)
    }
}
