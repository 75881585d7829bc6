//! Flat `key = value` run configuration.
//!
//! Precedence, lowest first: built-in defaults, preset template, config file,
//! `--set key=value` pairs, then the dedicated flags. Values are validated
//! once everything is merged, so a message always names the key at fault.

use std::collections::BTreeMap;
use std::path::Path;

use pairwalk::ensemble::{uniform_times, ExperimentConfig, DEFAULT_G0, DEFAULT_REALIZATIONS};
use pairwalk::{centered_pair, InteractionSpec, LatticeSpec, NoiseSpec, Statistics};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "n_sites",
    "u",
    "statistics",
    "g0",
    "gamma",
    "realizations",
    "seed",
    "tau_max",
    "intervals",
    "separation",
    "j",
    "k",
    "epsilon",
    "tolerance",
];

/// Switching rates at or below this are reported as slow noise.
pub const SLOW_GAMMA: f64 = 0.1;
/// Switching rates at or above this are reported as fast noise.
pub const FAST_GAMMA: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub n_sites: usize,
    pub u: f64,
    pub statistics: Statistics,
    pub g0: f64,
    pub gamma: f64,
    pub realizations: usize,
    pub seed: u64,
    pub tau_max: f64,
    pub intervals: usize,
    /// Used when `j`/`k` are not given: the pair is centred on the ring.
    pub separation: usize,
    pub j: Option<usize>,
    pub k: Option<usize>,
    pub epsilon: f64,
    pub tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            n_sites: 80,
            u: 0.0,
            statistics: Statistics::Fermion,
            g0: DEFAULT_G0,
            gamma: 10.0,
            realizations: DEFAULT_REALIZATIONS,
            seed: 0,
            tau_max: 15.0,
            intervals: 60,
            separation: 1,
            j: None,
            k: None,
            epsilon: 0.0,
            tolerance: pairwalk::propagator::DEFAULT_TOLERANCE,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.trim().parse().map_err(|_| CliError::Config {
        key: key.to_string(),
        message: format!("cannot parse '{}'", value.trim()),
    })
}

/// Reads `key = value` lines. `#` and `;` start comments; `[section]` headers
/// are ignored because every key lives in one flat namespace.
pub fn read_pairs(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
            key: line.to_string(),
            message: format!("line {} is not of the form key = value", lineno + 1),
        })?;
        out.push((key.trim().to_ascii_lowercase(), value.trim().to_string()));
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_pairs(&text)
}

/// Splits a `--set key=value` argument.
pub fn parse_assignment(arg: &str) -> CliResult<(String, String)> {
    let (key, value) = arg.split_once('=').ok_or_else(|| CliError::Config {
        key: arg.to_string(),
        message: "expected key=value".into(),
    })?;
    Ok((key.trim().to_ascii_lowercase(), value.trim().to_string()))
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "n_sites" => self.n_sites = parse_value(key, value)?,
            "u" => self.u = parse_value(key, value)?,
            "statistics" => {
                self.statistics = value.parse().map_err(|_| CliError::Config {
                    key: key.into(),
                    message: format!("expected fermion or boson, got '{value}'"),
                })?
            }
            "g0" => self.g0 = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "realizations" => self.realizations = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "tau_max" => self.tau_max = parse_value(key, value)?,
            "intervals" => self.intervals = parse_value(key, value)?,
            "separation" => self.separation = parse_value(key, value)?,
            "j" => self.j = Some(parse_value(key, value)?),
            "k" => self.k = Some(parse_value(key, value)?),
            "epsilon" => self.epsilon = parse_value(key, value)?,
            "tolerance" => self.tolerance = parse_value(key, value)?,
            _ => {
                return Err(CliError::Config {
                    key: key.into(),
                    message: format!("unknown key; expected one of {}", KEYS.join(", ")),
                })
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, pairs: &[(String, String)]) -> CliResult<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn pair(&self) -> (usize, usize) {
        let n = self.n_sites.max(1);
        match (self.j, self.k) {
            (Some(j), Some(k)) => (j, k),
            (Some(j), None) => (j, (j + self.separation) % n),
            (None, Some(k)) => ((k + n - self.separation % n) % n, k),
            (None, None) => centered_pair(self.n_sites, self.separation),
        }
    }

    fn range_error(key: &str, message: impl Into<String>) -> CliError {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Range checks. Returns non-fatal warnings.
    pub fn validate(&self) -> CliResult<Vec<String>> {
        let mut warnings = Vec::new();
        if self.n_sites < 3 {
            return Err(Self::range_error("n_sites", format!("must be at least 3, got {}", self.n_sites)));
        }
        for (key, v) in [("u", self.u), ("epsilon", self.epsilon)] {
            if !v.is_finite() {
                return Err(Self::range_error(key, "must be finite"));
            }
        }
        if !(self.g0 >= 0.0 && self.g0.is_finite()) {
            return Err(Self::range_error("g0", format!("must be >= 0, got {}", self.g0)));
        }
        if self.g0 > 1.0 {
            warnings.push(format!(
                "g0 = {} exceeds the hopping amplitude; links can change sign",
                self.g0
            ));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Self::range_error("gamma", format!("must be >= 0, got {}", self.gamma)));
        }
        if self.realizations == 0 {
            return Err(Self::range_error("realizations", "must be at least 1"));
        }
        if !(self.tau_max > 0.0 && self.tau_max.is_finite()) {
            return Err(Self::range_error("tau_max", format!("must be > 0, got {}", self.tau_max)));
        }
        if self.intervals == 0 {
            return Err(Self::range_error("intervals", "must be at least 1"));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Self::range_error("tolerance", format!("must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.separation >= self.n_sites {
            return Err(Self::range_error(
                "separation",
                format!("must be below n_sites = {}, got {}", self.n_sites, self.separation),
            ));
        }
        let (j, k) = self.pair();
        for (key, site) in [("j", j), ("k", k)] {
            if site >= self.n_sites {
                return Err(Self::range_error(key, format!("site {site} outside 0..{}", self.n_sites)));
            }
        }
        if self.statistics == Statistics::Fermion && j == k {
            let key = if self.k.is_some() { "k" } else if self.j.is_some() { "j" } else { "separation" };
            return Err(Self::range_error(key, format!("fermions cannot both start on site {j}")));
        }
        Ok(warnings)
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.g0, self.gamma)
    }

    pub fn lattice(&self) -> CliResult<LatticeSpec> {
        Ok(LatticeSpec::with_params(self.n_sites, 1.0, self.epsilon)?)
    }

    pub fn experiment(&self) -> CliResult<ExperimentConfig> {
        let lattice = self.lattice()?;
        let noise = NoiseSpec::new(self.g0, self.gamma, lattice.n_links())?;
        let mut config = ExperimentConfig::new(
            lattice,
            InteractionSpec::new(self.u),
            self.statistics,
            self.pair(),
            noise,
            uniform_times(self.tau_max, self.intervals),
        )
        .with_realizations(self.realizations)
        .with_seed(self.seed);
        config.tolerance = self.tolerance;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Noiseless,
    Static,
    Slow,
    Intermediate,
    Fast,
}

impl Regime {
    pub fn of(g0: f64, gamma: f64) -> Self {
        if g0 == 0.0 {
            Regime::Noiseless
        } else if gamma == 0.0 {
            Regime::Static
        } else if gamma <= SLOW_GAMMA {
            Regime::Slow
        } else if gamma >= FAST_GAMMA {
            Regime::Fast
        } else {
            Regime::Intermediate
        }
    }
}

/// Merges defaults, an optional template, an optional file and overrides.
pub fn resolve(
    template: &[(&str, &str)],
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> CliResult<Settings> {
    let mut s = Settings::default();
    for (k, v) in template {
        s.set(k, v)?;
    }
    if let Some(path) = file {
        s.apply(&read_file(path)?)?;
    }
    s.apply(overrides)?;
    Ok(s)
}

/// Every key with its merged value, for the manifest.
pub fn echo(settings: &Settings) -> BTreeMap<&'static str, serde_json::Value> {
    let v = serde_json::to_value(settings).unwrap_or_default();
    let (j, k) = settings.pair();
    let mut out = BTreeMap::new();
    for key in KEYS {
        let value = match *key {
            "j" => j.into(),
            "k" => k.into(),
            _ => v.get(*key).cloned().unwrap_or_default(),
        };
        out.insert(*key, value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let mut s = Settings::default();
        s.apply(&read_pairs("").unwrap()).unwrap();
        assert_eq!(s.n_sites, 80);
        assert_eq!(s.g0, 0.9);
        assert_eq!(s.realizations, 5000);
        assert_eq!(s.statistics, Statistics::Fermion);
        assert_eq!(s.epsilon, 0.0);
        assert_eq!(s.pair(), (39, 40));
        assert!(s.validate().unwrap().is_empty());
    }

    #[test]
    fn comments_and_sections_are_skipped() {
        let pairs = read_pairs("[run]\n# note\nN_SITES = 12 ; trailing\n\nstatistics=boson\n").unwrap();
        assert_eq!(
            pairs,
            vec![("n_sites".into(), "12".into()), ("statistics".into(), "boson".into())]
        );
    }

    #[test]
    fn errors_name_the_key() {
        let mut s = Settings::default();
        let e = s.set("lattice_size", "3").unwrap_err().to_string();
        assert!(e.contains("lattice_size"), "{e}");
        let e = s.set("gamma", "fast").unwrap_err().to_string();
        assert!(e.contains("gamma"), "{e}");

        let mut s = Settings::default();
        s.set("gamma", "-1").unwrap();
        assert!(s.validate().unwrap_err().to_string().contains("gamma"));

        let mut s = Settings::default();
        s.apply(&[("j".into(), "4".into()), ("k".into(), "4".into())]).unwrap();
        assert!(s.validate().unwrap_err().to_string().contains("'k'"));
        s.set("statistics", "boson").unwrap();
        assert!(s.validate().is_ok());
    }

    #[test]
    fn large_amplitude_is_a_warning() {
        let mut s = Settings::default();
        s.set("g0", "1.5").unwrap();
        let w = s.validate().unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("g0"));
    }

    #[test]
    fn regimes() {
        assert_eq!(Regime::of(0.9, 0.01), Regime::Slow);
        assert_eq!(Regime::of(0.9, 10.0), Regime::Fast);
        assert_eq!(Regime::of(0.9, 1.0), Regime::Intermediate);
        assert_eq!(Regime::of(0.9, 0.0), Regime::Static);
        assert_eq!(Regime::of(0.0, 10.0), Regime::Noiseless);
    }

    #[test]
    fn overrides_beat_template() {
        let s = resolve(&[("u", "14"), ("gamma", "0")], None, &[("u".into(), "6".into())]).unwrap();
        assert_eq!(s.u, 6.0);
        assert_eq!(s.gamma, 0.0);
    }

    #[test]
    fn one_sided_pair() {
        let mut s = Settings::default();
        s.set("j", "10").unwrap();
        s.set("separation", "3").unwrap();
        assert_eq!(s.pair(), (10, 13));
        let mut s = Settings::default();
        s.set("k", "1").unwrap();
        s.set("separation", "3").unwrap();
        assert_eq!(s.pair(), (78, 1));
    }
}
