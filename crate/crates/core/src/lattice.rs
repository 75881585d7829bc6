//! Ring lattice, symmetry-reduced two-particle basis and localized pair states.
//!
//! A two-particle state of identical particles lives in the (anti)symmetric
//! subspace of the product space. We store it in the reduced basis of unordered
//! site pairs: for `j < k` the element `(j, k)` stands for
//! `(|j,k⟩ ± |k,j⟩)/√2`, and for bosons the doublon `(j, j)` stands for `|j,j⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic one-dimensional lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n_sites: usize,
    /// Nearest-neighbour hopping `J`. Everything downstream works in units of `J`.
    pub hopping: f64,
    /// On-site energy `ε`; only contributes a global phase.
    pub onsite: f64,
}

impl LatticeSpec {
    pub fn new(n_sites: usize) -> Result<Self> {
        Self::with_params(n_sites, 1.0, 0.0)
    }

    pub fn with_params(n_sites: usize, hopping: f64, onsite: f64) -> Result<Self> {
        let spec = LatticeSpec {
            n_sites,
            hopping,
            onsite,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 3 {
            return Err(Error::InvalidParameter(format!(
                "n_sites must be at least 3, got {}",
                self.n_sites
            )));
        }
        if !(self.hopping > 0.0) || !self.hopping.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hopping must be positive, got {}",
                self.hopping
            )));
        }
        if !self.onsite.is_finite() {
            return Err(Error::InvalidParameter("onsite energy must be finite".into()));
        }
        Ok(())
    }

    /// Number of links on the ring; link `l` joins sites `l` and `l + 1 mod N`.
    pub fn n_links(&self) -> usize {
        self.n_sites
    }

    /// Shortest distance between two sites around the ring.
    pub fn ring_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b) % self.n_sites;
        d.min(self.n_sites - d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    /// Sign picked up when the two particles are exchanged.
    pub fn exchange_sign(self) -> f64 {
        match self {
            Statistics::Boson => 1.0,
            Statistics::Fermion => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::Boson => "boson",
            Statistics::Fermion => "fermion",
        }
    }
}

impl std::str::FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "boson" | "bosons" => Ok(Statistics::Boson),
            "fermion" | "fermions" => Ok(Statistics::Fermion),
            other => Err(Error::InvalidParameter(format!(
                "unknown particle statistics '{other}'"
            ))),
        }
    }
}

const NO_INDEX: u32 = u32::MAX;

/// Lexicographically ordered unordered site pairs with an `N × N` lookup table.
#[derive(Clone, Debug)]
pub struct TwoParticleBasis {
    statistics: Statistics,
    n_sites: usize,
    configs: Vec<(usize, usize)>,
    lookup: Vec<u32>,
}

impl TwoParticleBasis {
    pub fn new(lattice: &LatticeSpec, statistics: Statistics) -> Self {
        let n = lattice.n_sites;
        let mut configs = Vec::with_capacity(Self::dimension_for(n, statistics));
        let mut lookup = vec![NO_INDEX; n * n];
        for j in 0..n {
            let start = match statistics {
                Statistics::Boson => j,
                Statistics::Fermion => j + 1,
            };
            for k in start..n {
                let idx = configs.len() as u32;
                lookup[j * n + k] = idx;
                lookup[k * n + j] = idx;
                configs.push((j, k));
            }
        }
        TwoParticleBasis {
            statistics,
            n_sites: n,
            configs,
            lookup,
        }
    }

    pub fn dimension_for(n_sites: usize, statistics: Statistics) -> usize {
        match statistics {
            Statistics::Boson => n_sites * (n_sites + 1) / 2,
            Statistics::Fermion => n_sites * (n_sites - 1) / 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn configs(&self) -> &[(usize, usize)] {
        &self.configs
    }

    pub fn config(&self, index: usize) -> (usize, usize) {
        self.configs[index]
    }

    /// Resolves the ordered pair `(j, k)` to a basis index and the sign relating
    /// `(|j,k⟩ ± |k,j⟩)/√2` to the stored element. `None` for a fermionic
    /// double occupancy.
    pub fn index_of(&self, j: usize, k: usize) -> Option<(usize, f64)> {
        let n = self.n_sites;
        let idx = self.lookup[(j % n) * n + (k % n)];
        if idx == NO_INDEX {
            return None;
        }
        let sign = if j % n <= k % n {
            1.0
        } else {
            self.statistics.exchange_sign()
        };
        Some((idx as usize, sign))
    }

    /// Amplitude of the product-space ket `|j,k⟩` in a reduced-basis state.
    pub fn full_amplitude(&self, state: &StateVector, j: usize, k: usize) -> Complex64 {
        match self.index_of(j, k) {
            None => Complex64::new(0.0, 0.0),
            Some((idx, sign)) => {
                let amp = state.amplitudes[idx] * sign;
                if j == k {
                    amp
                } else {
                    amp * std::f64::consts::FRAC_1_SQRT_2
                }
            }
        }
    }

    /// Builds `(|j,k⟩ ± |k,j⟩)/√2` (or `|j,j⟩` for a bosonic doublon).
    pub fn localized_pair_state(&self, j: usize, k: usize) -> Result<StateVector> {
        if j >= self.n_sites || k >= self.n_sites {
            return Err(Error::InvalidParameter(format!(
                "site pair ({j}, {k}) outside a lattice of {} sites",
                self.n_sites
            )));
        }
        let (idx, sign) = self.index_of(j, k).ok_or(Error::PauliExclusion { site: j })?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.dim()];
        amplitudes[idx] = Complex64::new(sign, 0.0);
        Ok(StateVector { amplitudes })
    }

    /// Applies the rigid translation `|j,k⟩ → |j+1,k+1⟩` of both particles.
    pub fn translate(&self, state: &StateVector) -> StateVector {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (idx, &(j, k)) in self.configs.iter().enumerate() {
            let (target, sign) = self
                .index_of(j + 1, k + 1)
                .expect("translation preserves the basis");
            out[target] = state.amplitudes[idx] * sign;
        }
        StateVector { amplitudes: out }
    }
}

/// Centered initial pair with the given separation: `(j0, j0 + r)` with
/// `j0 = (N − r) / 2`.
pub fn centered_pair(n_sites: usize, separation: usize) -> (usize, usize) {
    let j0 = (n_sites.saturating_sub(separation)) / 2;
    (j0, (j0 + separation) % n_sites)
}

/// Pure state as a complex amplitude vector over some basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        StateVector {
            amplitudes: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Single particle localized on `site` (used by the one-walker propagator).
    pub fn site(dim: usize, site: usize) -> Self {
        let mut s = Self::zeros(dim);
        s.amplitudes[site] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}
