//! Random telegraph fluctuators on the links and the merged event timeline.
//!
//! Each link carries an independent dichotomic signal `±g₀` whose flips form a
//! Poisson process of rate `γ`. With an equiprobable initial sign the signal is
//! stationary with autocorrelation `g₀² e^{−2γτ}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::LinkConfiguration;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Amplitude in units of `J`.
    pub g0: f64,
    /// Switching rate in units of `J`.
    pub gamma: f64,
    pub n_links: usize,
}

impl NoiseSpec {
    pub fn new(g0: f64, gamma: f64, n_links: usize) -> Result<Self> {
        let spec = NoiseSpec { g0, gamma, n_links };
        spec.validate()?;
        Ok(spec)
    }

    pub fn noiseless(n_links: usize) -> Self {
        NoiseSpec {
            g0: 0.0,
            gamma: 0.0,
            n_links,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g0 >= 0.0) || !self.g0.is_finite() {
            return Err(Error::InvalidParameter(format!("g0 must be >= 0, got {}", self.g0)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.g0 == 0.0
    }

    /// Stationary autocorrelation `g₀² e^{−2γ·lag}`.
    pub fn autocorrelation(&self, lag: f64) -> f64 {
        self.g0 * self.g0 * (-2.0 * self.gamma * lag.abs()).exp()
    }
}

/// Independent random stream for one `(master seed, realization, link)` triple.
///
/// The ChaCha key carries the master seed and the link, the stream id carries the
/// realization, so every triple owns a disjoint keystream regardless of which
/// worker draws it.
pub fn link_rng(master_seed: u64, realization: u64, link: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&link.to_le_bytes());
    key[16..24].copy_from_slice(b"rtn-link");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(realization);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct RtnTrajectory {
    pub initial_sign: f64,
    pub flip_times: Vec<f64>,
    pub amplitude: f64,
    pub horizon: f64,
}

impl RtnTrajectory {
    pub fn constant(sign: f64, amplitude: f64, horizon: f64) -> Self {
        RtnTrajectory {
            initial_sign: sign,
            flip_times: Vec::new(),
            amplitude,
            horizon,
        }
    }

    /// `initial_sign · g₀ · (−1)^{#flips ≤ t}`.
    pub fn value_at(&self, t: f64) -> f64 {
        let flips = self.flip_times.partition_point(|&f| f <= t);
        let sign = if flips % 2 == 0 {
            self.initial_sign
        } else {
            -self.initial_sign
        };
        sign * self.amplitude
    }
}

pub fn sample_trajectory<R: Rng + ?Sized>(spec: &NoiseSpec, horizon: f64, rng: &mut R) -> RtnTrajectory {
    let initial_sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut flip_times = Vec::new();
    if spec.gamma > 0.0 {
        let waiting = Exp::new(spec.gamma).expect("positive rate");
        let mut t = waiting.sample(rng);
        while t <= horizon {
            flip_times.push(t);
            t += waiting.sample(rng);
        }
    }
    RtnTrajectory {
        initial_sign,
        flip_times,
        amplitude: spec.g0,
        horizon,
    }
}

/// One trajectory per link for a given realization.
pub fn sample_realization(
    spec: &NoiseSpec,
    horizon: f64,
    master_seed: u64,
    realization: u64,
) -> Vec<RtnTrajectory> {
    (0..spec.n_links)
        .map(|link| {
            let mut rng = link_rng(master_seed, realization, link as u64);
            sample_trajectory(spec, horizon, &mut rng)
        })
        .collect()
}

/// Piecewise-constant link timeline.
///
/// `boundaries` is strictly increasing from `0` to the horizon. Entering segment
/// `i` (which starts at `boundaries[i]`) flips the links in `flips[i]`;
/// `flips[0]` is always empty because the initial configuration already holds
/// the values on `[0, boundaries[1])`.
#[derive(Clone, Debug)]
pub struct EventGrid {
    pub horizon: f64,
    pub initial: LinkConfiguration,
    pub boundaries: Vec<f64>,
    pub flips: Vec<Vec<usize>>,
    /// For every requested sample time, the index into `boundaries`.
    pub sample_boundaries: Vec<usize>,
}

impl EventGrid {
    pub fn n_segments(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Walks the segments in time order as `(start, end, links)`.
    pub fn segments(&self) -> SegmentIter<'_> {
        SegmentIter {
            grid: self,
            next: 0,
            current: self.initial.clone(),
        }
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.sample_boundaries.iter().map(|&b| self.boundaries[b]).collect()
    }
}

pub struct SegmentIter<'a> {
    grid: &'a EventGrid,
    next: usize,
    current: LinkConfiguration,
}

impl<'a> Iterator for SegmentIter<'a> {
    type Item = (f64, f64, LinkConfiguration);

    fn next(&mut self) -> Option<Self::Item> {
        let i = self.next;
        if i + 1 >= self.grid.boundaries.len() {
            return None;
        }
        for &l in &self.grid.flips[i] {
            self.current.values[l] = -self.current.values[l];
        }
        self.next += 1;
        Some((self.grid.boundaries[i], self.grid.boundaries[i + 1], self.current.clone()))
    }
}

/// Merges all flip times and sample times into one sorted set of boundaries.
pub fn merge_events(trajectories: &[RtnTrajectory], sample_times: &[f64], horizon: f64) -> Result<EventGrid> {
    if sample_times.windows(2).any(|w| !(w[0] <= w[1])) || sample_times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::UnsortedSampleTimes);
    }
    if let Some(&t) = sample_times.iter().find(|&&t| t > horizon) {
        return Err(Error::SampleOutsideHorizon { time: t, horizon });
    }

    let initial = LinkConfiguration::from_values(
        trajectories
            .iter()
            .map(|tr| tr.initial_sign * tr.amplitude)
            .collect(),
    );

    let mut flips: Vec<(f64, usize)> = trajectories
        .iter()
        .enumerate()
        .flat_map(|(l, tr)| tr.flip_times.iter().filter(|&&t| t < horizon).map(move |&t| (t, l)))
        .collect();
    flips.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut boundaries = vec![0.0];
    let mut flip_sets: Vec<Vec<usize>> = vec![Vec::new()];
    let mut sample_boundaries = Vec::with_capacity(sample_times.len());

    let push_boundary = |t: f64, boundaries: &mut Vec<f64>, flip_sets: &mut Vec<Vec<usize>>| -> usize {
        if t > *boundaries.last().unwrap() {
            boundaries.push(t);
            flip_sets.push(Vec::new());
        }
        boundaries.len() - 1
    };

    let mut si = 0;
    for &(t, link) in &flips {
        while si < sample_times.len() && sample_times[si] < t {
            let b = push_boundary(sample_times[si], &mut boundaries, &mut flip_sets);
            sample_boundaries.push(b);
            si += 1;
        }
        // A flip exactly at t = 0 redefines the initial value instead.
        let b = push_boundary(t, &mut boundaries, &mut flip_sets);
        flip_sets[b].push(link);
    }
    while si < sample_times.len() {
        let b = push_boundary(sample_times[si], &mut boundaries, &mut flip_sets);
        sample_boundaries.push(b);
        si += 1;
    }
    push_boundary(horizon, &mut boundaries, &mut flip_sets);

    let mut initial = initial;
    for l in std::mem::take(&mut flip_sets[0]) {
        initial.values[l] = -initial.values[l];
    }

    Ok(EventGrid {
        horizon,
        initial,
        boundaries,
        flips: flip_sets,
        sample_boundaries,
    })
}

/// One point of an empirical correlation estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub lag: f64,
    pub estimate: f64,
    pub stderr: f64,
}

fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample average of `g(0)·g(lag)` over independent stationary trajectories.
pub fn empirical_autocorrelation<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    lags: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<CorrelationEstimate>> {
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    let horizon = lags.iter().cloned().fold(0.0, f64::max);
    let mut products = vec![Vec::with_capacity(n_samples); lags.len()];
    for _ in 0..n_samples {
        let tr = sample_trajectory(spec, horizon, rng);
        let g0 = tr.value_at(0.0);
        for (i, &lag) in lags.iter().enumerate() {
            products[i].push(g0 * tr.value_at(lag));
        }
    }
    Ok(lags
        .iter()
        .zip(products)
        .map(|(&lag, p)| {
            let (estimate, stderr) = mean_and_stderr(&p);
            CorrelationEstimate { lag, estimate, stderr }
        })
        .collect())
}

/// Sample average of `g_a(0)·g_b(lag)` for two links of the same realization,
/// drawn from their own keyed streams.
pub fn empirical_cross_correlation(
    spec: &NoiseSpec,
    lags: &[f64],
    n_samples: usize,
    master_seed: u64,
    links: (usize, usize),
) -> Result<Vec<CorrelationEstimate>> {
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    let horizon = lags.iter().cloned().fold(0.0, f64::max);
    let mut products = vec![Vec::with_capacity(n_samples); lags.len()];
    for r in 0..n_samples as u64 {
        let a = sample_trajectory(spec, horizon, &mut link_rng(master_seed, r, links.0 as u64));
        let b = sample_trajectory(spec, horizon, &mut link_rng(master_seed, r, links.1 as u64));
        let a0 = a.value_at(0.0);
        for (i, &lag) in lags.iter().enumerate() {
            products[i].push(a0 * b.value_at(lag));
        }
    }
    Ok(lags
        .iter()
        .zip(products)
        .map(|(&lag, p)| {
            let (estimate, stderr) = mean_and_stderr(&p);
            CorrelationEstimate { lag, estimate, stderr }
        })
        .collect())
}
