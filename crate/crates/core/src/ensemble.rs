//! Monte Carlo average over telegraph-noise realizations.
//!
//! Occupations and the first two position moments are linear in the density
//! matrix, so their per-realization averages equal their values on the
//! noise-averaged state; the variance is then formed from the averaged
//! moments. Realizations are grouped into fixed-size chunks, each
//! chunk accumulates sequentially, and the chunk accumulators are merged in a
//! fixed pairwise tree. The result therefore depends on the master seed only,
//! never on how many worker threads ran.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{InteractionSpec, LinkConfiguration, SparseHamiltonian};
use crate::lattice::{LatticeSpec, StateVector, Statistics, TwoParticleBasis};
use crate::noise::{merge_events, sample_realization, NoiseSpec, RtnTrajectory};
use crate::observables::{
    populations_to_marginal, position_moments, position_variance, OccupationMap, VariancePoint,
    VarianceSeries,
};
use crate::propagator::{
    evolve_piecewise_with, PropagationRequest, Workspace, DEFAULT_TOLERANCE,
};

/// Realizations handled sequentially by one task.
pub const CHUNK_SIZE: usize = 8;

/// Occupation at the sites farthest from the initial pair above which the run
/// is flagged as affected by the ring closing on itself.
pub const WRAP_THRESHOLD: f64 = 1e-3;

pub const DEFAULT_REALIZATIONS: usize = 5000;
pub const DEFAULT_G0: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub lattice: LatticeSpec,
    pub interaction: InteractionSpec,
    pub statistics: Statistics,
    pub pair: (usize, usize),
    pub noise: NoiseSpec,
    pub sample_times: Vec<f64>,
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Also average the reduced-basis populations `|ψ_b|²`.
    pub record_populations: bool,
    pub tolerance: f64,
}

impl ExperimentConfig {
    pub fn new(
        lattice: LatticeSpec,
        interaction: InteractionSpec,
        statistics: Statistics,
        pair: (usize, usize),
        noise: NoiseSpec,
        sample_times: Vec<f64>,
    ) -> Self {
        ExperimentConfig {
            lattice,
            interaction,
            statistics,
            pair,
            noise,
            sample_times,
            n_realizations: DEFAULT_REALIZATIONS,
            master_seed: 0,
            record_populations: false,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_realizations(mut self, n: usize) -> Self {
        self.n_realizations = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn horizon(&self) -> f64 {
        self.sample_times.last().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.noise.validate()?;
        if self.noise.n_links != self.lattice.n_links() {
            return Err(Error::DimensionMismatch {
                expected: self.lattice.n_links(),
                got: self.noise.n_links,
            });
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidParameter("n_realizations must be >= 1".into()));
        }
        if self.sample_times.is_empty() {
            return Err(Error::InvalidParameter("sample_times must not be empty".into()));
        }
        if self.sample_times.windows(2).any(|w| !(w[0] < w[1])) || !(self.sample_times[0] >= 0.0) {
            return Err(Error::UnsortedSampleTimes);
        }
        let n = self.lattice.n_sites;
        if self.pair.0 >= n || self.pair.1 >= n {
            return Err(Error::InvalidParameter(format!(
                "initial pair ({}, {}) outside the lattice",
                self.pair.0, self.pair.1
            )));
        }
        if self.statistics == Statistics::Fermion && self.pair.0 == self.pair.1 {
            return Err(Error::PauliExclusion { site: self.pair.0 });
        }
        Ok(())
    }
}

/// `n + 1` equally spaced times from 0 to `tau_max` inclusive.
pub fn uniform_times(tau_max: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|i| tau_max * i as f64 / intervals as f64)
        .collect()
}

/// Observables recorded for one realization.
#[derive(Clone, Debug)]
pub struct RealizationRecord {
    /// `[⟨x⟩, ⟨x²⟩]` about the run's fixed origin, per sample time.
    pub moments: Vec<[f64; 2]>,
    pub occupations: Vec<Vec<f64>>,
    pub populations: Option<Vec<Vec<f64>>>,
    pub max_norm_drift: f64,
}

/// Running mean and co-moment matrix of the pair `(⟨x⟩, ⟨x²⟩)` at one sample time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MomentStats {
    pub mean: [f64; 2],
    /// Summed co-moments `[C_xx, C_xy, C_yy]`.
    pub comoment: [f64; 3],
}

impl MomentStats {
    /// Welford update; `n` is the count including `v`.
    fn push(&mut self, n: f64, v: [f64; 2]) {
        let dx = v[0] - self.mean[0];
        let dy = v[1] - self.mean[1];
        self.mean[0] += dx / n;
        self.mean[1] += dy / n;
        self.comoment[0] += dx * (v[0] - self.mean[0]);
        self.comoment[1] += dx * (v[1] - self.mean[1]);
        self.comoment[2] += dy * (v[1] - self.mean[1]);
    }

    fn merge(a: &Self, na: f64, b: &Self, nb: f64) -> Self {
        let n = na + nb;
        let dx = b.mean[0] - a.mean[0];
        let dy = b.mean[1] - a.mean[1];
        let w = na * nb / n;
        MomentStats {
            mean: [a.mean[0] + dx * nb / n, a.mean[1] + dy * nb / n],
            comoment: [
                a.comoment[0] + b.comoment[0] + dx * dx * w,
                a.comoment[1] + b.comoment[1] + dx * dy * w,
                a.comoment[2] + b.comoment[2] + dy * dy * w,
            ],
        }
    }

    /// Variance of the averaged state, `E⟨x²⟩ − (E⟨x⟩)²`.
    pub fn sigma2(&self) -> f64 {
        (self.mean[1] - self.mean[0] * self.mean[0]).max(0.0)
    }

    /// First-order (delta method) standard error of `sigma2` over `n` realizations.
    pub fn stderr(&self, n: u64) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let s = 1.0 / (n - 1) as f64;
        let (sxx, sxy, syy) = (self.comoment[0] * s, self.comoment[1] * s, self.comoment[2] * s);
        let m = self.mean[0];
        let var = 4.0 * m * m * sxx - 4.0 * m * sxy + syy;
        (var.max(0.0) / n as f64).sqrt()
    }
}

/// Streaming statistics over realizations, per sample time.
///
/// The variance is not linear in the state, so it is formed from the averaged
/// first and second position moments rather than averaged itself.
#[derive(Clone, Debug, PartialEq)]
pub struct Accumulator {
    pub taus: Vec<f64>,
    pub count: u64,
    pub moments: Vec<MomentStats>,
    pub occupation_mean: Vec<Vec<f64>>,
    pub population_mean: Option<Vec<Vec<f64>>>,
    pub max_norm_drift: f64,
}

impl Accumulator {
    pub fn empty(taus: &[f64], n_sites: usize, populations: Option<usize>) -> Self {
        Accumulator {
            taus: taus.to_vec(),
            count: 0,
            moments: vec![MomentStats::default(); taus.len()],
            occupation_mean: vec![vec![0.0; n_sites]; taus.len()],
            population_mean: populations.map(|d| vec![vec![0.0; d]; taus.len()]),
            max_norm_drift: 0.0,
        }
    }

    pub fn push(&mut self, rec: &RealizationRecord) {
        self.count += 1;
        let n = self.count as f64;
        for (m, &v) in self.moments.iter_mut().zip(&rec.moments) {
            m.push(n, v);
        }
        for (mean, row) in self.occupation_mean.iter_mut().zip(&rec.occupations) {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += (x - *m) / n;
            }
        }
        if let (Some(acc), Some(pops)) = (self.population_mean.as_mut(), rec.populations.as_ref()) {
            for (mean, row) in acc.iter_mut().zip(pops) {
                for (m, &x) in mean.iter_mut().zip(row) {
                    *m += (x - *m) / n;
                }
            }
        }
        self.max_norm_drift = self.max_norm_drift.max(rec.max_norm_drift);
    }

    pub fn sigma2(&self) -> Vec<f64> {
        self.moments.iter().map(MomentStats::sigma2).collect()
    }

    pub fn sigma2_stderr(&self) -> Vec<f64> {
        self.moments.iter().map(|m| m.stderr(self.count)).collect()
    }
}

fn merge_means(a: &mut [f64], b: &[f64], weight_b: f64) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x += (y - *x) * weight_b;
    }
}

/// Pairwise (Chan et al.) merge of two accumulators over the same grid.
pub fn merge_partials(a: &Accumulator, b: &Accumulator) -> Result<Accumulator> {
    if a.taus != b.taus
        || a.occupation_mean.first().map(Vec::len) != b.occupation_mean.first().map(Vec::len)
        || a.population_mean.is_some() != b.population_mean.is_some()
    {
        return Err(Error::GridMismatch);
    }
    if b.count == 0 {
        return Ok(a.clone());
    }
    if a.count == 0 {
        return Ok(b.clone());
    }
    let na = a.count as f64;
    let nb = b.count as f64;
    let wb = nb / (na + nb);
    let mut out = a.clone();
    out.count = a.count + b.count;
    for i in 0..a.taus.len() {
        out.moments[i] = MomentStats::merge(&a.moments[i], na, &b.moments[i], nb);
        merge_means(&mut out.occupation_mean[i], &b.occupation_mean[i], wb);
    }
    if let (Some(pa), Some(pb)) = (out.population_mean.as_mut(), b.population_mean.as_ref()) {
        for (x, y) in pa.iter_mut().zip(pb) {
            merge_means(x, y, wb);
        }
    }
    out.max_norm_drift = a.max_norm_drift.max(b.max_norm_drift);
    Ok(out)
}

/// Merges in a fixed balanced tree over the given order.
fn tree_reduce(mut parts: Vec<Accumulator>) -> Result<Accumulator> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge_partials(&a, &b)?),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().ok_or(Error::GridMismatch)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WraparoundCheck {
    pub antipodal_sites: Vec<usize>,
    pub max_occupation: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleResult {
    pub config: ExperimentConfig,
    pub realizations: usize,
    pub variance: VarianceSeries,
    pub occupation: OccupationMap,
    pub populations: Option<Vec<Vec<f64>>>,
    pub max_norm_drift: f64,
    pub wraparound: WraparoundCheck,
}

/// Sites whose ring distance to the nearer particle of the initial pair is
/// largest.
pub fn antipodal_sites(lattice: &LatticeSpec, pair: (usize, usize)) -> Vec<usize> {
    let dist: Vec<usize> = (0..lattice.n_sites)
        .map(|s| lattice.ring_distance(s, pair.0).min(lattice.ring_distance(s, pair.1)))
        .collect();
    let far = *dist.iter().max().unwrap_or(&0);
    (0..lattice.n_sites).filter(|&s| dist[s] == far).collect()
}

/// Everything one realization needs, shared read-only between workers.
struct Setup {
    basis: TwoParticleBasis,
    initial: StateVector,
    template: SparseHamiltonian,
    /// Mean position of the initial state; moments are taken about it.
    origin: f64,
}

impl Setup {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let basis = TwoParticleBasis::new(&config.lattice, config.statistics);
        let initial = basis.localized_pair_state(config.pair.0, config.pair.1)?;
        let template = SparseHamiltonian::two_particle(
            &config.lattice,
            &config.interaction,
            &basis,
            &LinkConfiguration::uniform(config.lattice.n_links()),
        )?;
        let origin = position_moments(&populations_to_marginal(&basis, &initial.populations()), 0.0)[0];
        Ok(Setup {
            basis,
            initial,
            template,
            origin,
        })
    }
}

fn run_realization(
    config: &ExperimentConfig,
    setup: &Setup,
    trajectories: &[RtnTrajectory],
    h: &mut SparseHamiltonian,
    ws: &mut Workspace,
) -> Result<RealizationRecord> {
    let horizon = config.horizon();
    let grid = merge_events(trajectories, &config.sample_times, horizon)?;
    let req = PropagationRequest::new(&setup.initial, &grid).with_tolerance(config.tolerance);
    let n_t = config.sample_times.len();
    let mut rec = RealizationRecord {
        moments: vec![[0.0; 2]; n_t],
        occupations: vec![Vec::new(); n_t],
        populations: config.record_populations.then(|| vec![Vec::new(); n_t]),
        max_norm_drift: 0.0,
    };
    // norm the state would have without the renormalization at each sample
    let mut cumulative = 1.0;
    evolve_piecewise_with(h, &req, ws, |i, _tau, state, norm| {
        let pops = state.populations();
        let p = populations_to_marginal(&setup.basis, &pops);
        rec.moments[i] = position_moments(&p, setup.origin);
        rec.occupations[i] = p.iter().map(|x| 2.0 * x).collect();
        if let Some(all) = rec.populations.as_mut() {
            all[i] = pops;
        }
        cumulative *= norm;
        rec.max_norm_drift = rec.max_norm_drift.max((cumulative - 1.0).abs());
    })?;
    Ok(rec)
}

pub fn run_ensemble(config: &ExperimentConfig) -> Result<EnsembleResult> {
    config.validate()?;
    let setup = Setup::new(config)?;
    let n_sites = config.lattice.n_sites;
    let pop_dim = config.record_populations.then(|| setup.basis.dim());
    let horizon = config.horizon();

    let acc = if config.noise.is_noiseless() {
        // Without noise every realization is the same deterministic evolution.
        let mut h = setup.template.clone();
        let mut ws = Workspace::new(setup.basis.dim());
        let trs: Vec<_> = (0..config.lattice.n_links())
            .map(|_| RtnTrajectory::constant(1.0, 0.0, horizon))
            .collect();
        let rec = run_realization(config, &setup, &trs, &mut h, &mut ws)?;
        let mut acc = Accumulator::empty(&config.sample_times, n_sites, pop_dim);
        for _ in 0..config.n_realizations {
            acc.push(&rec);
        }
        acc
    } else {
        let n_chunks = config.n_realizations.div_ceil(CHUNK_SIZE);
        let partials: Vec<Result<Accumulator>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut h = setup.template.clone();
                let mut ws = Workspace::new(setup.basis.dim());
                let mut acc = Accumulator::empty(&config.sample_times, n_sites, pop_dim);
                let end = ((c + 1) * CHUNK_SIZE).min(config.n_realizations);
                for r in c * CHUNK_SIZE..end {
                    let trs = sample_realization(&config.noise, horizon, config.master_seed, r as u64);
                    let rec = run_realization(config, &setup, &trs, &mut h, &mut ws)?;
                    acc.push(&rec);
                }
                Ok(acc)
            })
            .collect();
        tree_reduce(partials.into_iter().collect::<Result<Vec<_>>>()?)?
    };

    Ok(finish(config, acc))
}

fn finish(config: &ExperimentConfig, acc: Accumulator) -> EnsembleResult {
    let stderr = acc.sigma2_stderr();
    let sigma2 = acc.sigma2();
    let variance = VarianceSeries::new(
        acc.taus
            .iter()
            .zip(&sigma2)
            .zip(&stderr)
            .map(|((&tau, &sigma2), &stderr)| VariancePoint { tau, sigma2, stderr })
            .collect(),
    );
    let antipodal = antipodal_sites(&config.lattice, config.pair);
    let max_occupation = acc
        .occupation_mean
        .iter()
        .flat_map(|row| antipodal.iter().map(move |&s| row[s]))
        .fold(0.0, f64::max);
    EnsembleResult {
        config: config.clone(),
        realizations: acc.count as usize,
        variance,
        occupation: OccupationMap {
            taus: acc.taus.clone(),
            rows: acc.occupation_mean,
        },
        populations: acc.population_mean,
        max_norm_drift: acc.max_norm_drift,
        wraparound: WraparoundCheck {
            antipodal_sites: antipodal,
            max_occupation,
            flagged: max_occupation > WRAP_THRESHOLD,
        },
    }
}

/// Noiseless single-walker variance σ²(τ) from one site.
pub fn single_walker_variance(lattice: &LatticeSpec, site: usize, sample_times: &[f64]) -> Result<Vec<f64>> {
    let links = LinkConfiguration::uniform(lattice.n_links());
    let mut h = SparseHamiltonian::single_particle(lattice, &links)?;
    let horizon = sample_times.last().copied().unwrap_or(0.0);
    let trs: Vec<_> = (0..lattice.n_links())
        .map(|_| RtnTrajectory::constant(1.0, 0.0, horizon))
        .collect();
    let grid = merge_events(&trs, sample_times, horizon)?;
    let initial = StateVector::site(lattice.n_sites, site);
    let mut out = vec![0.0; sample_times.len()];
    let mut ws = Workspace::new(lattice.n_sites);
    evolve_piecewise_with(&mut h, &PropagationRequest::new(&initial, &grid), &mut ws, |i, _, s, _| {
        out[i] = position_variance(&s.populations());
    })?;
    Ok(out)
}

/// Same experiment with the noise switched off.
pub fn noiseless_reference(config: &ExperimentConfig) -> ExperimentConfig {
    let mut c = config.clone();
    c.noise = NoiseSpec::noiseless(config.lattice.n_links());
    c.n_realizations = 1;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::centered_pair;

    fn small_config(n: usize, gamma: f64, realizations: usize) -> ExperimentConfig {
        let lat = LatticeSpec::new(n).unwrap();
        ExperimentConfig::new(
            lat,
            InteractionSpec::new(0.0),
            Statistics::Fermion,
            centered_pair(n, 1),
            NoiseSpec::new(0.9, gamma, n).unwrap(),
            uniform_times(1.0, 10),
        )
        .with_realizations(realizations)
        .with_seed(3)
    }

    fn record(v: f64, n_t: usize) -> RealizationRecord {
        RealizationRecord {
            moments: vec![[v.sin(), v]; n_t],
            occupations: vec![vec![v, 2.0 - v]; n_t],
            populations: None,
            max_norm_drift: 0.0,
        }
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let taus = [0.0, 1.0];
        let mut a = Accumulator::empty(&taus, 2, None);
        a.push(&record(1.0, 2));
        a.push(&record(3.0, 2));
        let e = Accumulator::empty(&taus, 2, None);
        assert_eq!(merge_partials(&a, &e).unwrap(), a);
        assert_eq!(merge_partials(&e, &a).unwrap(), a);
    }

    #[test]
    fn three_way_split_matches_single_pass() {
        let taus = [0.0];
        let values: Vec<f64> = (0..300).map(|i| ((i * 37 % 101) as f64).sqrt()).collect();
        let mut single = Accumulator::empty(&taus, 2, None);
        let mut parts = vec![Accumulator::empty(&taus, 2, None); 3];
        for (i, &v) in values.iter().enumerate() {
            single.push(&record(v, 1));
            parts[i * 3 / values.len()].push(&record(v, 1));
        }
        let merged = merge_partials(&merge_partials(&parts[0], &parts[1]).unwrap(), &parts[2]).unwrap();
        assert_eq!(merged.count, 300);
        let (m, c) = (merged.moments[0], single.moments[0]);
        for i in 0..2 {
            assert!((m.mean[i] - c.mean[i]).abs() < 1e-12);
        }
        for i in 0..3 {
            assert!((m.comoment[i] - c.comoment[i]).abs() < 1e-10 * (1.0 + c.comoment[i].abs()));
        }
        assert!((merged.occupation_mean[0][0] - single.occupation_mean[0][0]).abs() < 1e-12);

        // direct two-pass statistics
        let xs: Vec<f64> = values.iter().map(|v| v.sin()).collect();
        let mx = xs.iter().sum::<f64>() / 300.0;
        let my = values.iter().sum::<f64>() / 300.0;
        assert!((merged.sigma2()[0] - (my - mx * mx).max(0.0)).abs() < 1e-12);
        // influence values of f = my − mx²: y − 2 mx x
        let inf: Vec<f64> = xs.iter().zip(&values).map(|(x, y)| y - 2.0 * mx * x).collect();
        let mi = inf.iter().sum::<f64>() / 300.0;
        let var = inf.iter().map(|v| (v - mi).powi(2)).sum::<f64>() / 299.0;
        assert!((merged.sigma2_stderr()[0] - (var / 300.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = Accumulator::empty(&[0.0, 1.0], 2, None);
        let b = Accumulator::empty(&[0.0, 2.0], 2, None);
        assert_eq!(merge_partials(&a, &b).unwrap_err(), Error::GridMismatch);
        let c = Accumulator::empty(&[0.0, 1.0], 3, None);
        assert_eq!(merge_partials(&a, &c).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn noiseless_single_realization_matches_direct_evolution() {
        let mut cfg = small_config(10, 10.0, 1);
        cfg.noise = NoiseSpec::noiseless(10);
        let res = run_ensemble(&cfg).unwrap();
        let lat = &cfg.lattice;
        let basis = TwoParticleBasis::new(lat, Statistics::Fermion);
        let h = SparseHamiltonian::two_particle(lat, &cfg.interaction, &basis, &LinkConfiguration::uniform(10)).unwrap();
        let psi0 = basis.localized_pair_state(cfg.pair.0, cfg.pair.1).unwrap();
        let psi = crate::propagator::apply_segment(&h, 1.0, &psi0, 1e-10).unwrap();
        let p = crate::observables::single_particle_diagonal(&basis, &psi);
        let last = res.variance.points.last().unwrap();
        assert!((last.sigma2 - position_variance(&p)).abs() < 1e-9);
        assert_eq!(last.stderr, 0.0);
    }

    #[test]
    fn normalization_of_averages() {
        let res = run_ensemble(&small_config(12, 5.0, 20)).unwrap();
        for (row, point) in res.occupation.rows.iter().zip(&res.variance.points) {
            assert!((row.iter().sum::<f64>() - 2.0).abs() < 1e-6);
            assert!(row.iter().all(|&x| x >= 0.0));
            // the variance belongs to the averaged marginal
            assert!((point.sigma2 - position_variance(row)).abs() < 1e-9);
        }
        assert!(res.max_norm_drift < 1e-9);
    }

    #[test]
    fn result_independent_of_worker_count() {
        let cfg = small_config(10, 8.0, 40);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_ensemble(&cfg).unwrap());
        let b = four.install(|| run_ensemble(&cfg).unwrap());
        for (x, y) in a.variance.points.iter().zip(&b.variance.points) {
            assert_eq!(x.sigma2.to_bits(), y.sigma2.to_bits());
            assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        }
        assert_eq!(a.occupation.rows, b.occupation.rows);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small_config(10, 1.0, 0);
        assert!(run_ensemble(&cfg).is_err());
        cfg.n_realizations = 1;
        cfg.pair = (3, 3);
        assert_eq!(run_ensemble(&cfg).unwrap_err(), Error::PauliExclusion { site: 3 });
        cfg.pair = (3, 4);
        cfg.sample_times = vec![0.0, 2.0, 1.0];
        assert_eq!(run_ensemble(&cfg).unwrap_err(), Error::UnsortedSampleTimes);
    }

    #[test]
    fn antipodes_of_adjacent_pair() {
        let lat = LatticeSpec::new(80).unwrap();
        assert_eq!(antipodal_sites(&lat, (39, 40)), vec![0, 79]);
        let lat = LatticeSpec::new(10).unwrap();
        assert_eq!(antipodal_sites(&lat, (4, 5)), vec![0, 9]);
    }

    #[test]
    fn wraparound_flag_trips_on_long_runs() {
        let lat = LatticeSpec::new(10).unwrap();
        let cfg = ExperimentConfig::new(
            lat,
            InteractionSpec::none(),
            Statistics::Fermion,
            centered_pair(10, 1),
            NoiseSpec::noiseless(10),
            uniform_times(6.0, 12),
        )
        .with_realizations(1);
        assert!(run_ensemble(&cfg).unwrap().wraparound.flagged);
        let short = ExperimentConfig {
            sample_times: uniform_times(0.3, 3),
            ..cfg
        };
        assert!(!run_ensemble(&short).unwrap().wraparound.flagged);
    }
}
