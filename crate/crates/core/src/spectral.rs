//! Exact two-particle spectrum on the uniform ring, one centre-of-mass momentum
//! block at a time.
//!
//! The translation `T: |j,k⟩ → |j+1,k+1⟩` maps every reduced basis element to
//! `±` another one, so the basis splits into orbits. For an orbit with
//! representative `r`, length `L` and closing sign `s` (`T^L|r⟩ = s|r⟩`), the
//! vector `φ = L^{-1/2} Σ_m e^{iKm} T^m|r⟩` satisfies `Tφ = e^{-iK}φ` whenever
//! `e^{iKL}s = 1`. The Hamiltonian commutes with `T`, so it is block diagonal in
//! these vectors with one Hermitian block per `K = 2πν/N`, `ν = 1..=N`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{InteractionSpec, LinkConfiguration, SparseHamiltonian};
use crate::lattice::{LatticeSpec, StateVector, Statistics, TwoParticleBasis};

/// Orbits whose inter-particle distance is at most this count as "close".
pub const BOUND_DISTANCE: usize = 2;

/// An eigenstate with more than this weight on close orbits is labelled bound.
pub const BOUND_WEIGHT_THRESHOLD: f64 = 0.5;

/// Levels closer than this are merged in projection spectra.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandLabel {
    Scattering,
    Bound,
}

impl BandLabel {
    pub fn name(self) -> &'static str {
        match self {
            BandLabel::Scattering => "scattering",
            BandLabel::Bound => "bound",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Orbit {
    pub rep: usize,
    pub len: usize,
    pub sign: f64,
    /// Ring distance between the two particles, constant along the orbit.
    pub distance: usize,
}

/// Position of a basis element inside its orbit: `T^shift|rep⟩ = sign·|element⟩`.
#[derive(Clone, Copy, Debug)]
pub struct OrbitSlot {
    pub orbit: usize,
    pub shift: usize,
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct OrbitTable {
    pub orbits: Vec<Orbit>,
    pub slots: Vec<OrbitSlot>,
    pub members: Vec<Vec<usize>>,
}

impl OrbitTable {
    pub fn new(lattice: &LatticeSpec, basis: &TwoParticleBasis) -> Self {
        let n = basis.n_sites();
        let dim = basis.dim();
        let unset = OrbitSlot {
            orbit: usize::MAX,
            shift: 0,
            sign: 0.0,
        };
        let mut slots = vec![unset; dim];
        let mut orbits = Vec::new();
        let mut members = Vec::new();
        for rep in 0..dim {
            if slots[rep].orbit != usize::MAX {
                continue;
            }
            let id = orbits.len();
            let mut cur = rep;
            let mut sign = 1.0;
            let mut list = Vec::new();
            loop {
                slots[cur] = OrbitSlot {
                    orbit: id,
                    shift: list.len(),
                    sign,
                };
                list.push(cur);
                let (j, k) = basis.config(cur);
                let (next, s) = basis
                    .index_of((j + 1) % n, (k + 1) % n)
                    .expect("translation stays inside the basis");
                sign *= s;
                cur = next;
                if cur == rep {
                    break;
                }
            }
            let (j, k) = basis.config(rep);
            orbits.push(Orbit {
                rep,
                len: list.len(),
                sign,
                distance: lattice.ring_distance(j, k),
            });
            members.push(list);
        }
        OrbitTable {
            orbits,
            slots,
            members,
        }
    }

    pub fn valid_in(&self, orbit: usize, k: f64) -> bool {
        let o = &self.orbits[orbit];
        let phase = Complex64::from_polar(1.0, k * o.len as f64) * o.sign;
        (phase - Complex64::new(1.0, 0.0)).norm() < 1e-9
    }
}

#[derive(Clone, Debug)]
pub struct MomentumBlock {
    pub nu: usize,
    pub k: f64,
    pub orbits: Vec<usize>,
    /// Ascending.
    pub energies: Vec<f64>,
    /// Column `i` holds the orbit coefficients of eigenstate `i`.
    pub vectors: DMatrix<Complex64>,
    pub bound_weight: Vec<f64>,
}

impl MomentumBlock {
    pub fn label(&self, i: usize) -> BandLabel {
        if self.bound_weight[i] > BOUND_WEIGHT_THRESHOLD {
            BandLabel::Bound
        } else {
            BandLabel::Scattering
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub lattice: LatticeSpec,
    pub basis: TwoParticleBasis,
    pub table: OrbitTable,
    pub blocks: Vec<MomentumBlock>,
}

impl BlockDecomposition {
    pub fn new(lattice: &LatticeSpec, interaction: &InteractionSpec, statistics: Statistics) -> Result<Self> {
        lattice.validate()?;
        let basis = TwoParticleBasis::new(lattice, statistics);
        let h = SparseHamiltonian::two_particle(
            lattice,
            interaction,
            &basis,
            &LinkConfiguration::uniform(lattice.n_links()),
        )?;
        let table = OrbitTable::new(lattice, &basis);

        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); basis.dim()];
        for (r, c, v) in h.entries() {
            rows[r].push((c, v));
        }

        let n = lattice.n_sites;
        let blocks = (1..=n)
            .into_par_iter()
            .map(|nu| {
                let k = 2.0 * std::f64::consts::PI * nu as f64 / n as f64;
                build_block(&table, &rows, nu, k)
            })
            .collect();
        Ok(BlockDecomposition {
            lattice: lattice.clone(),
            basis,
            table,
            blocks,
        })
    }

    pub fn n_states(&self) -> usize {
        self.blocks.iter().map(|b| b.energies.len()).sum()
    }

    /// The `K = 0` block, stored as `ν = N`.
    pub fn zero_momentum(&self) -> &MomentumBlock {
        self.blocks.last().expect("at least three blocks")
    }

    /// Eigenstate `i` of `block` written in the reduced basis.
    pub fn eigenstate(&self, block: usize, i: usize) -> StateVector {
        let b = &self.blocks[block];
        let mut psi = StateVector::zeros(self.basis.dim());
        for (row, &o) in b.orbits.iter().enumerate() {
            let coeff = b.vectors[(row, i)];
            let norm = (self.table.orbits[o].len as f64).sqrt();
            for &c in &self.table.members[o] {
                let slot = self.table.slots[c];
                let phase = Complex64::from_polar(slot.sign / norm, b.k * slot.shift as f64);
                psi.amplitudes[c] = coeff * phase;
            }
        }
        psi
    }

    /// `⟨E|ψ⟩` for every eigenstate, grouped like `blocks`.
    pub fn overlaps(&self, state: &StateVector) -> Result<Vec<Vec<Complex64>>> {
        if state.dim() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                got: state.dim(),
            });
        }
        Ok(self
            .blocks
            .iter()
            .map(|b| {
                // components of ψ along each orbit vector φ_o
                let proj: Vec<Complex64> = b
                    .orbits
                    .iter()
                    .map(|&o| {
                        let norm = (self.table.orbits[o].len as f64).sqrt();
                        self.table.members[o]
                            .iter()
                            .map(|&c| {
                                let slot = self.table.slots[c];
                                Complex64::from_polar(slot.sign / norm, -b.k * slot.shift as f64)
                                    * state.amplitudes[c]
                            })
                            .sum()
                    })
                    .collect();
                (0..b.energies.len())
                    .map(|i| {
                        proj.iter()
                            .enumerate()
                            .map(|(row, p)| b.vectors[(row, i)].conj() * p)
                            .sum()
                    })
                    .collect()
            })
            .collect())
    }

    /// `e^{−iHτ}ψ` assembled from the eigen decomposition.
    pub fn evolve(&self, state: &StateVector, tau: f64) -> Result<StateVector> {
        let overlaps = self.overlaps(state)?;
        let mut out = StateVector::zeros(self.basis.dim());
        for (bi, (b, ov)) in self.blocks.iter().zip(&overlaps).enumerate() {
            for (i, (&e, &c)) in b.energies.iter().zip(ov).enumerate() {
                let w = c * Complex64::from_polar(1.0, -e * tau);
                if w.norm() == 0.0 {
                    continue;
                }
                let v = self.eigenstate(bi, i);
                for (o, a) in out.amplitudes.iter_mut().zip(&v.amplitudes) {
                    *o += w * a;
                }
            }
        }
        Ok(out)
    }

    pub fn band_structure(&self) -> BandStructure {
        let points = self
            .blocks
            .iter()
            .flat_map(|b| {
                (0..b.energies.len()).map(move |i| BandPoint {
                    nu: b.nu,
                    k: b.k,
                    energy: b.energies[i],
                    label: b.label(i),
                })
            })
            .collect();
        BandStructure { points }
    }

    /// Energy gap between the bound miniband and the scattering continuum at `K = 0`.
    pub fn gap_at_k0(&self) -> Option<f64> {
        let b = self.zero_momentum();
        let (mut bound, mut scat) = (Vec::new(), Vec::new());
        for (i, &e) in b.energies.iter().enumerate() {
            match b.label(i) {
                BandLabel::Bound => bound.push(e),
                BandLabel::Scattering => scat.push(e),
            }
        }
        if bound.is_empty() || scat.is_empty() {
            return None;
        }
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        Some(if mean(&bound) > mean(&scat) {
            min(&bound) - max(&scat)
        } else {
            min(&scat) - max(&bound)
        })
    }

    /// `P(E) = |⟨E|j,k⟩|²` for a localized initial pair.
    pub fn projections(&self, j: usize, k: usize) -> Result<ProjectionSpectrum> {
        let (b, _) = self
            .basis
            .index_of(j, k)
            .ok_or(Error::PauliExclusion { site: j })?;
        let slot = self.table.slots[b];
        let len = self.table.orbits[slot.orbit].len as f64;
        let mut raw = Vec::new();
        for block in &self.blocks {
            if let Some(row) = block.orbits.iter().position(|&o| o == slot.orbit) {
                for i in 0..block.energies.len() {
                    let p = block.vectors[(row, i)].norm_sqr() / len;
                    raw.push((block.energies[i], p, block.label(i)));
                }
            }
        }
        Ok(ProjectionSpectrum::merge(raw))
    }
}

fn build_block(table: &OrbitTable, rows: &[Vec<(usize, f64)>], nu: usize, k: f64) -> MomentumBlock {
    let orbits: Vec<usize> = (0..table.orbits.len()).filter(|&o| table.valid_in(o, k)).collect();
    let mut position = vec![usize::MAX; table.orbits.len()];
    for (i, &o) in orbits.iter().enumerate() {
        position[o] = i;
    }
    let m = orbits.len();
    let mut hk = DMatrix::<Complex64>::zeros(m, m);
    for (row, &o_out) in orbits.iter().enumerate() {
        let rep = &table.orbits[o_out];
        let scale_out = (rep.len as f64).sqrt();
        for &(c, v) in &rows[rep.rep] {
            let slot = table.slots[c];
            let col = position[slot.orbit];
            if col == usize::MAX {
                continue;
            }
            let len_in = table.orbits[slot.orbit].len as f64;
            let phase = Complex64::from_polar(slot.sign * scale_out / len_in.sqrt(), k * slot.shift as f64);
            hk[(row, col)] += phase * v;
        }
    }
    // symmetrize away rounding before the Hermitian solver
    let hk = (&hk + hk.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hk);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    let bound_weight = (0..m)
        .map(|c| {
            orbits
                .iter()
                .enumerate()
                .filter(|(_, &o)| table.orbits[o].distance <= BOUND_DISTANCE)
                .map(|(r, _)| vectors[(r, c)].norm_sqr())
                .sum()
        })
        .collect();
    MomentumBlock {
        nu,
        k,
        orbits,
        energies,
        vectors,
        bound_weight,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandPoint {
    pub nu: usize,
    pub k: f64,
    pub energy: f64,
    pub label: BandLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandStructure {
    pub points: Vec<BandPoint>,
}

impl BandStructure {
    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.energy).collect()
    }

    pub fn with_label(&self, label: BandLabel) -> impl Iterator<Item = &BandPoint> {
        self.points.iter().filter(move |p| p.label == label)
    }
}

/// Groups sorted energies into bands separated by gaps wider than `min_gap`.
/// Returns a band index per input energy (input order preserved).
pub fn gap_bands(energies: &[f64], min_gap: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
    let mut band = vec![0; energies.len()];
    let mut current = 0;
    for w in 0..order.len() {
        if w > 0 && energies[order[w]] - energies[order[w - 1]] > min_gap {
            current += 1;
        }
        band[order[w]] = current;
    }
    band
}

/// Labels by band membership: everything outside the most populated band is bound.
pub fn classify_by_gaps(energies: &[f64], min_gap: f64) -> Vec<BandLabel> {
    let band = gap_bands(energies, min_gap);
    let n_bands = band.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_bands];
    for &b in &band {
        counts[b] += 1;
    }
    let main = (0..n_bands).max_by_key(|&b| counts[b]).unwrap_or(0);
    band.iter()
        .map(|&b| if b == main { BandLabel::Scattering } else { BandLabel::Bound })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectionLevel {
    pub energy: f64,
    pub weight: f64,
    /// Part of `weight` carried by bound eigenstates.
    pub bound_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionSpectrum {
    pub levels: Vec<ProjectionLevel>,
}

impl ProjectionSpectrum {
    fn merge(mut raw: Vec<(f64, f64, BandLabel)>) -> Self {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut levels: Vec<ProjectionLevel> = Vec::new();
        for (e, p, label) in raw {
            let bw = if label == BandLabel::Bound { p } else { 0.0 };
            match levels.last_mut() {
                Some(l) if (e - l.energy).abs() < DEGENERACY_TOLERANCE => {
                    l.weight += p;
                    l.bound_weight += bw;
                }
                _ => levels.push(ProjectionLevel {
                    energy: e,
                    weight: p,
                    bound_weight: bw,
                }),
            }
        }
        ProjectionSpectrum { levels }
    }

    pub fn total(&self) -> f64 {
        self.levels.iter().map(|l| l.weight).sum()
    }

    pub fn miniband_weight(&self) -> f64 {
        self.levels.iter().map(|l| l.bound_weight).sum()
    }

    pub fn main_band_weight(&self) -> f64 {
        self.total() - self.miniband_weight()
    }
}

/// `max |[H, T]_{ab}|` over the reduced basis.
pub fn translation_commutator_norm(h: &SparseHamiltonian, basis: &TwoParticleBasis) -> f64 {
    let dim = basis.dim();
    let mut hx = vec![Complex64::new(0.0, 0.0); dim];
    let mut worst: f64 = 0.0;
    for c in 0..dim {
        let e = StateVector::site(dim, c);
        let te = basis.translate(&e);
        let mut hte = vec![Complex64::new(0.0, 0.0); dim];
        h.apply(&te.amplitudes, &mut hte);
        h.apply(&e.amplitudes, &mut hx);
        let the = basis.translate(&StateVector { amplitudes: hx.clone() });
        for (a, b) in hte.iter().zip(&the.amplitudes) {
            worst = worst.max((a - b).norm());
        }
    }
    worst
}
