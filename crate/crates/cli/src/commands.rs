//! Subcommands and the experiment presets behind them.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use pairwalk::ensemble::{run_ensemble, EnsembleResult, WRAP_THRESHOLD};
use pairwalk::noise::{empirical_autocorrelation, link_rng};
use pairwalk::observables::variance_gain;
use pairwalk::spectral::BlockDecomposition;
use pairwalk::{InteractionSpec, NoiseSpec};

use crate::config::{echo, resolve, Settings};
use crate::error::{CliError, CliResult};
use crate::output::{GainRow, Manifest, OutputSet, RunRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvolvePreset {
    VarianceVsStart,
    NoiseRegimes,
    InteractionCompare,
    OccupationMaps,
}

impl EvolvePreset {
    pub fn name(self) -> &'static str {
        match self {
            EvolvePreset::VarianceVsStart => "variance-vs-start",
            EvolvePreset::NoiseRegimes => "noise-regimes",
            EvolvePreset::InteractionCompare => "interaction-compare",
            EvolvePreset::OccupationMaps => "occupation-maps",
        }
    }

    pub fn template(self) -> &'static [(&'static str, &'static str)] {
        match self {
            EvolvePreset::VarianceVsStart => &[("u", "14"), ("g0", "0")],
            EvolvePreset::NoiseRegimes => &[("u", "0")],
            EvolvePreset::InteractionCompare | EvolvePreset::OccupationMaps => &[("gamma", "10")],
        }
    }
}

pub const VARIANCE_VS_START_SEPARATIONS: [usize; 6] = [1, 3, 10, 20, 30, 40];
pub const NOISE_REGIME_GAMMAS: [f64; 2] = [0.01, 10.0];
pub const INTERACTION_COMPARE_U: [f64; 3] = [6.0, 14.0, 40.0];
pub const INTERACTION_COMPARE_SEPARATIONS: [usize; 2] = [1, 3];
pub const OCCUPATION_MAP_U: [f64; 2] = [14.0, 40.0];
pub const GAMMA_SWEEP: [f64; 6] = [0.0, 1.0, 10.0, 50.0, 100.0, 200.0];
pub const GAIN_U: [f64; 5] = [40.0, 60.0, 70.0, 80.0, 100.0];
pub const GAIN_TEMPLATE: [(&str, &str); 2] = [("tau_max", "12.5"), ("intervals", "25")];

/// `points` values spaced evenly in `ln γ` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Flags shared by every subcommand, already parsed.
pub struct Common {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub out_dir: PathBuf,
    pub strict_guard: bool,
    pub set: Vec<(String, String)>,
    pub arguments: Vec<String>,
}

/// Output files, ensemble records and warnings accumulated by one command.
pub struct Session {
    command: &'static str,
    preset: Option<&'static str>,
    arguments: Vec<String>,
    settings: Settings,
    out: OutputSet,
    out_dir: PathBuf,
    strict: bool,
    runs: Vec<RunRecord>,
    warnings: Vec<String>,
    summary: BTreeMap<String, f64>,
    started: Instant,
    started_unix: u64,
}

impl Session {
    pub fn open(
        command: &'static str,
        preset: Option<&'static str>,
        template: &[(&str, &str)],
        common: Common,
    ) -> CliResult<Self> {
        let mut overrides = common.set;
        if let Some(seed) = common.seed {
            overrides.push(("seed".into(), seed.to_string()));
        }
        if let Some(r) = common.realizations {
            overrides.push(("realizations".into(), r.to_string()));
        }
        let settings = resolve(template, common.config.as_deref(), &overrides)?;
        let warnings = settings.validate()?;
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        let out = OutputSet::create(&common.out_dir)?;
        Ok(Session {
            command,
            preset,
            arguments: common.arguments,
            settings,
            out,
            out_dir: common.out_dir,
            strict: common.strict_guard,
            runs: Vec::new(),
            warnings,
            summary: BTreeMap::new(),
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    fn ensemble(&mut self, label: &str, s: &Settings) -> CliResult<EnsembleResult> {
        for w in s.validate()? {
            if !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
        let config = s.experiment()?;
        eprintln!(
            "{label}: N={} U={} g0={} gamma={} realizations={}",
            s.n_sites, s.u, s.g0, s.gamma, s.realizations
        );
        let result = run_ensemble(&config)?;
        if result.wraparound.flagged {
            let msg = format!(
                "{label}: occupation {:.3e} at antipodal sites {:?} exceeds {WRAP_THRESHOLD:e}",
                result.wraparound.max_occupation, result.wraparound.antipodal_sites
            );
            eprintln!("warning: {msg}");
            self.warnings.push(msg);
        }
        self.runs.push(RunRecord {
            label: label.to_string(),
            u: s.u,
            g0: s.g0,
            gamma: s.gamma,
            pair: config.pair,
            realizations: result.realizations,
            seed: s.seed,
            regime: s.regime(),
            max_norm_drift: result.max_norm_drift,
            wraparound: result.wraparound.clone(),
        });
        Ok(result)
    }

    /// Writes the manifest. In strict mode a tripped guard becomes an error
    /// after all outputs are on disk.
    pub fn finish(self) -> CliResult<PathBuf> {
        let flagged: Vec<&str> = self
            .runs
            .iter()
            .filter(|r| r.wraparound.flagged)
            .map(|r| r.label.as_str())
            .collect();
        let manifest = Manifest {
            command: self.command.to_string(),
            preset: self.preset.map(str::to_string),
            arguments: self.arguments.clone(),
            version: env!("CARGO_PKG_VERSION"),
            master_seed: self.settings.seed,
            config: echo(&self.settings),
            regime: self.settings.regime(),
            runs: self.runs.clone(),
            wraparound_flagged: !flagged.is_empty(),
            warnings: self.warnings.clone(),
            summary: self.summary.clone(),
            files: self.out.files().to_vec(),
            started_unix_seconds: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let name = format!("{}.manifest.json", self.preset.unwrap_or(self.command));
        let path = manifest.write(&self.out_dir, &name)?;
        if self.strict && !flagged.is_empty() {
            return Err(CliError::Guard(flagged.join(", ")));
        }
        Ok(path)
    }
}

pub fn bands(session: &mut Session, u_values: &[f64]) -> CliResult<()> {
    let s = session.settings.clone();
    let lattice = s.lattice()?;
    for &u in u_values {
        let d = BlockDecomposition::new(&lattice, &InteractionSpec::new(u), s.statistics)?;
        session.out.bands(&format!("bands_U{}.csv", num(u)), &d.band_structure())?;
        if let Some(gap) = d.gap_at_k0() {
            session.summary.insert(format!("gap_K0_U{}", num(u)), gap);
        }
    }
    Ok(())
}

pub fn projections(session: &mut Session, u_values: &[f64], separations: &[usize]) -> CliResult<()> {
    let s = session.settings.clone();
    let lattice = s.lattice()?;
    for &u in u_values {
        let d = BlockDecomposition::new(&lattice, &InteractionSpec::new(u), s.statistics)?;
        for &r in separations {
            let mut v = s.clone();
            v.separation = r;
            v.validate()?;
            let (j, k) = v.pair();
            let spectrum = d.projections(j, k)?;
            let tag = format!("U{}_r{r}", num(u));
            session.out.projections(&format!("projections_{tag}.csv"), &spectrum)?;
            session.summary.insert(format!("miniband_weight_{tag}"), spectrum.miniband_weight());
        }
    }
    Ok(())
}

/// Single configured run without a preset.
pub fn evolve_plain(session: &mut Session) -> CliResult<()> {
    let s = session.settings.clone();
    let result = session.ensemble("evolve", &s)?;
    session.out.variance("variance.csv", &result)?;
    session.out.occupation("occupation.csv", &result)?;
    Ok(())
}

fn noiseless(s: &Settings) -> Settings {
    let mut v = s.clone();
    v.g0 = 0.0;
    v
}

fn with_separation(s: &Settings, r: usize) -> Settings {
    let mut v = s.clone();
    v.separation = r;
    v.j = None;
    v.k = None;
    v
}

pub fn evolve_preset(session: &mut Session, preset: EvolvePreset) -> CliResult<()> {
    let s = session.settings.clone();
    match preset {
        EvolvePreset::VarianceVsStart => {
            for r in VARIANCE_VS_START_SEPARATIONS {
                if r >= s.n_sites {
                    continue;
                }
                let v = with_separation(&s, r);
                let res = session.ensemble(&format!("r{r}"), &v)?;
                session.out.variance(&format!("variance_r{r}.csv"), &res)?;
            }
        }
        EvolvePreset::NoiseRegimes => {
            let mut variants = vec![("noiseless".to_string(), noiseless(&s))];
            for g in NOISE_REGIME_GAMMAS {
                let mut v = s.clone();
                v.gamma = g;
                variants.push((format!("gamma{}", num(g)), v));
            }
            for (tag, v) in variants {
                let res = session.ensemble(&tag, &v)?;
                session.out.variance(&format!("variance_{tag}.csv"), &res)?;
                session.out.occupation(&format!("occupation_{tag}.csv"), &res)?;
            }
        }
        EvolvePreset::InteractionCompare => {
            for u in INTERACTION_COMPARE_U {
                for r in INTERACTION_COMPARE_SEPARATIONS {
                    let mut base = with_separation(&s, r);
                    base.u = u;
                    for (kind, v) in [("noiseless", noiseless(&base)), ("noisy", base.clone())] {
                        let tag = format!("U{}_r{r}_{kind}", num(u));
                        let res = session.ensemble(&tag, &v)?;
                        session.out.variance(&format!("variance_{tag}.csv"), &res)?;
                    }
                }
            }
        }
        EvolvePreset::OccupationMaps => {
            for u in OCCUPATION_MAP_U {
                let mut base = s.clone();
                base.u = u;
                for (kind, v) in [("noiseless", noiseless(&base)), ("noisy", base.clone())] {
                    let tag = format!("U{}_{kind}", num(u));
                    let res = session.ensemble(&tag, &v)?;
                    session.out.occupation(&format!("occupation_{tag}.csv"), &res)?;
                    session.out.variance(&format!("variance_{tag}.csv"), &res)?;
                }
            }
        }
    }
    Ok(())
}

pub fn gamma_sweep(session: &mut Session, gammas: &[f64]) -> CliResult<()> {
    let s = session.settings.clone();
    for &g in gammas {
        let mut v = s.clone();
        v.gamma = g;
        let tag = format!("gamma{}", num(g));
        let res = session.ensemble(&tag, &v)?;
        session.out.variance(&format!("variance_{tag}.csv"), &res)?;
    }
    Ok(())
}

/// Gain `σ²_noisy/σ²_noiseless − 1` at `tau_max` for every `(U, γ)` pair.
pub fn gain(session: &mut Session, u_values: &[f64], gammas: &[f64]) -> CliResult<()> {
    let s = session.settings.clone();
    let mut rows = Vec::new();
    for &u in u_values {
        let mut base = s.clone();
        base.u = u;
        let reference = session.ensemble(&format!("U{}_noiseless", num(u)), &noiseless(&base))?;
        for &g in gammas {
            let mut v = base.clone();
            v.gamma = g;
            let noisy = session.ensemble(&format!("U{}_gamma{}", num(u), num(g)), &v)?;
            let gain = variance_gain(&noisy.variance, &reference.variance, s.tau_max)?;
            rows.push(GainRow {
                u,
                gamma: g,
                g_sigma: gain.value,
                stderr: gain.stderr,
            });
        }
    }
    session.out.gain("gain.csv", &rows)
}

/// Empirical telegraph autocorrelation of one link against `g₀² e^{−2γ·lag}`.
pub fn autocorr(session: &mut Session, max_lag: f64, points: usize) -> CliResult<()> {
    let s = session.settings.clone();
    if !(max_lag > 0.0) || points == 0 {
        return Err(CliError::Config {
            key: "max-lag".into(),
            message: "need a positive lag range and at least one point".into(),
        });
    }
    let spec = NoiseSpec::new(s.g0, s.gamma, 1)?;
    let lags: Vec<f64> = (0..=points).map(|i| max_lag * i as f64 / points as f64).collect();
    let estimates = empirical_autocorrelation(&spec, &lags, s.realizations, &mut link_rng(s.seed, 0, 0))?;
    let mut worst: f64 = 0.0;
    let rows: Vec<_> = estimates
        .into_iter()
        .map(|c| {
            let analytic = spec.autocorrelation(c.lag);
            // at zero lag every product equals g0², so only rounding remains
            let se = c.stderr.max(1e-12 * analytic.abs().max(1.0));
            worst = worst.max((c.estimate - analytic).abs() / se);
            (c, analytic)
        })
        .collect();
    session.summary.insert("max_abs_z".into(), worst);
    if worst > 4.0 {
        session
            .warnings
            .push(format!("estimate deviates from the analytic curve by {worst:.2} standard errors"));
    }
    session.out.autocorr("autocorr.csv", &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_spans_endpoints() {
        let g = log_grid(1.0, 200.0, 12);
        assert_eq!(g.len(), 12);
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((g[11] - 200.0).abs() < 1e-9);
        let r = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-9));
    }
}
