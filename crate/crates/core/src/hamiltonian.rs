//! Hopping Hamiltonians on the ring with per-link telegraph offsets.
//!
//! Every row stores its diagonal plus exactly [`ROW_SLOTS`] off-diagonal slots.
//! Unused slots point back at the row with a zero value, which keeps the
//! matrix-vector kernel branch free and lets the noise update rewrite values in
//! place without touching the pattern.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Statistics, TwoParticleBasis};

/// Two particles, two directions each.
pub const ROW_SLOTS: usize = 4;

const NO_LINK: u32 = u32::MAX;

/// Distance-dependent interaction: `U` on-site, `U/3` for nearest neighbours,
/// zero beyond. Distances are measured around the ring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub strength: f64,
}

impl InteractionSpec {
    pub fn new(strength: f64) -> Self {
        InteractionSpec { strength }
    }

    pub fn none() -> Self {
        InteractionSpec { strength: 0.0 }
    }

    pub fn at_distance(&self, distance: usize) -> f64 {
        match distance {
            0 => self.strength,
            1 => self.strength / 3.0,
            _ => 0.0,
        }
    }
}

/// Dimensionless hopping offsets `g_l` (units of `J`), one per link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkConfiguration {
    pub values: Vec<f64>,
}

impl LinkConfiguration {
    pub fn uniform(n_links: usize) -> Self {
        LinkConfiguration {
            values: vec![0.0; n_links],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        LinkConfiguration { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    dim: usize,
    hopping: f64,
    diag: Vec<f64>,
    cols: Vec<u32>,
    /// Exchange sign and bosonic `√2` factor of each slot; zero for padding.
    scale: Vec<f64>,
    vals: Vec<f64>,
    slot_link: Vec<u32>,
    link_slots: Vec<Vec<u32>>,
    links: LinkConfiguration,
    /// `Σ|scale|` per row.
    row_weight: Vec<f64>,
    /// Upper bound on `|1 + g_l|` over all links; only grows between full rebuilds.
    amp_bound: f64,
    bounds: (f64, f64),
}

struct Hop {
    target: usize,
    link: usize,
    scale: f64,
}

impl SparseHamiltonian {
    fn assemble(
        dim: usize,
        hopping: f64,
        diag: Vec<f64>,
        hops: impl Fn(usize) -> Vec<Hop>,
        links: &LinkConfiguration,
    ) -> Result<Self> {
        let n_links = links.len();
        let mut cols = Vec::with_capacity(dim * ROW_SLOTS);
        let mut scale = Vec::with_capacity(dim * ROW_SLOTS);
        let mut slot_link = Vec::with_capacity(dim * ROW_SLOTS);
        let mut link_slots = vec![Vec::new(); n_links];
        for row in 0..dim {
            let row_hops = hops(row);
            debug_assert!(row_hops.len() <= ROW_SLOTS);
            for slot in 0..ROW_SLOTS {
                let pos = (row * ROW_SLOTS + slot) as u32;
                match row_hops.get(slot) {
                    Some(h) => {
                        if h.link >= n_links {
                            return Err(Error::DimensionMismatch {
                                expected: h.link + 1,
                                got: n_links,
                            });
                        }
                        cols.push(h.target as u32);
                        scale.push(h.scale);
                        slot_link.push(h.link as u32);
                        link_slots[h.link].push(pos);
                    }
                    None => {
                        cols.push(row as u32);
                        scale.push(0.0);
                        slot_link.push(NO_LINK);
                    }
                }
            }
        }
        let row_weight = scale
            .chunks_exact(ROW_SLOTS)
            .map(|row| row.iter().map(|s| s.abs()).sum())
            .collect();
        let mut h = SparseHamiltonian {
            dim,
            hopping,
            diag,
            cols,
            vals: vec![0.0; scale.len()],
            scale,
            slot_link,
            link_slots,
            links: links.clone(),
            row_weight,
            amp_bound: 0.0,
            bounds: (0.0, 0.0),
        };
        for pos in 0..h.vals.len() {
            h.refresh_slot(pos);
        }
        h.reset_bounds();
        Ok(h)
    }

    /// Two-particle Hamiltonian `H₁⊗I + I⊗H₁ + H_int` in the reduced basis,
    /// hopping amplitudes `J(1 + g_l)` on each link.
    pub fn two_particle(
        lattice: &LatticeSpec,
        interaction: &InteractionSpec,
        basis: &TwoParticleBasis,
        links: &LinkConfiguration,
    ) -> Result<Self> {
        let n = lattice.n_sites;
        if basis.n_sites() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: basis.n_sites(),
            });
        }
        if links.len() != lattice.n_links() {
            return Err(Error::DimensionMismatch {
                expected: lattice.n_links(),
                got: links.len(),
            });
        }
        let diag = basis
            .configs()
            .iter()
            .map(|&(j, k)| 2.0 * lattice.onsite + interaction.at_distance(lattice.ring_distance(j, k)))
            .collect();
        let sqrt2 = std::f64::consts::SQRT_2;
        let hops = |row: usize| {
            let (j, k) = basis.config(row);
            let mut out = Vec::with_capacity(ROW_SLOTS);
            if j == k {
                // Bosonic doublon: moving either particle reaches the same state.
                for (dest, link) in [((j + 1) % n, j), ((j + n - 1) % n, (j + n - 1) % n)] {
                    let (target, _) = basis.index_of(dest, k).expect("boson basis");
                    out.push(Hop {
                        target,
                        link,
                        scale: sqrt2,
                    });
                }
                return out;
            }
            for moving_first in [true, false] {
                let (site, other) = if moving_first { (j, k) } else { (k, j) };
                for (dest, link) in [((site + 1) % n, site), ((site + n - 1) % n, (site + n - 1) % n)] {
                    if dest == other {
                        if basis.statistics() == Statistics::Boson {
                            let (target, _) = basis.index_of(dest, dest).expect("boson basis");
                            out.push(Hop {
                                target,
                                link,
                                scale: sqrt2,
                            });
                        }
                        continue;
                    }
                    let (target, sign) = if moving_first {
                        basis.index_of(dest, other)
                    } else {
                        basis.index_of(other, dest)
                    }
                    .expect("distinct sites always resolve");
                    out.push(Hop {
                        target,
                        link,
                        scale: sign,
                    });
                }
            }
            out
        };
        Self::assemble(basis.dim(), lattice.hopping, diag, hops, links)
    }

    /// One walker on the ring, same storage and noise model.
    pub fn single_particle(lattice: &LatticeSpec, links: &LinkConfiguration) -> Result<Self> {
        let n = lattice.n_sites;
        if links.len() != lattice.n_links() {
            return Err(Error::DimensionMismatch {
                expected: lattice.n_links(),
                got: links.len(),
            });
        }
        let diag = vec![lattice.onsite; n];
        let hops = |row: usize| {
            vec![
                Hop {
                    target: (row + 1) % n,
                    link: row,
                    scale: 1.0,
                },
                Hop {
                    target: (row + n - 1) % n,
                    link: (row + n - 1) % n,
                    scale: 1.0,
                },
            ]
        };
        Self::assemble(n, lattice.hopping, diag, hops, links)
    }

    #[inline]
    fn refresh_slot(&mut self, pos: usize) {
        let link = self.slot_link[pos];
        self.vals[pos] = if link == NO_LINK {
            0.0
        } else {
            -self.hopping * (1.0 + self.links.values[link as usize]) * self.scale[pos]
        };
    }

    fn reset_bounds(&mut self) {
        self.amp_bound = self
            .links
            .values
            .iter()
            .map(|g| (1.0 + g).abs())
            .fold(0.0, f64::max);
        self.refresh_bounds();
    }

    fn refresh_bounds(&mut self) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let amp = self.hopping * self.amp_bound;
        for (d, w) in self.diag.iter().zip(&self.row_weight) {
            lo = lo.min(d - amp * w);
            hi = hi.max(d + amp * w);
        }
        self.bounds = (lo, hi);
    }

    /// Rewrites the off-diagonal values for a new link configuration. Only slots
    /// crossing links whose value changed are touched.
    pub fn rebuild_offdiagonals(&mut self, links: &LinkConfiguration) -> Result<()> {
        if links.len() != self.link_slots.len() {
            return Err(Error::PatternMismatch(format!(
                "hamiltonian has {} links, configuration has {}",
                self.link_slots.len(),
                links.len()
            )));
        }
        for l in 0..links.len() {
            if links.values[l].to_bits() != self.links.values[l].to_bits() {
                self.set_link(l, links.values[l]);
            }
        }
        self.reset_bounds();
        Ok(())
    }

    /// Sets a single link offset and refreshes the slots crossing it.
    pub fn set_link(&mut self, link: usize, value: f64) {
        self.links.values[link] = value;
        let amp = (1.0 + value).abs();
        if amp > self.amp_bound {
            self.amp_bound = amp;
            self.refresh_bounds();
        }
        for i in 0..self.link_slots[link].len() {
            let pos = self.link_slots[link][i] as usize;
            self.refresh_slot(pos);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn links(&self) -> &LinkConfiguration {
        &self.links
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Slots crossing `link`, as `(row, col)` pairs.
    pub fn entries_on_link(&self, link: usize) -> Vec<(usize, usize)> {
        self.link_slots[link]
            .iter()
            .map(|&pos| (pos as usize / ROW_SLOTS, self.cols[pos as usize] as usize))
            .collect()
    }

    /// Stored nonzero entries `(row, col, value)`, diagonal included.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.dim * (ROW_SLOTS + 1));
        for row in 0..self.dim {
            if self.diag[row] != 0.0 {
                out.push((row, row, self.diag[row]));
            }
            for slot in 0..ROW_SLOTS {
                let pos = row * ROW_SLOTS + slot;
                if self.slot_link[pos] != NO_LINK {
                    out.push((row, self.cols[pos] as usize, self.vals[pos]));
                }
            }
        }
        out
    }

    pub fn offdiagonal_count(&self, row: usize) -> usize {
        (0..ROW_SLOTS)
            .filter(|&s| self.slot_link[row * ROW_SLOTS + s] != NO_LINK)
            .count()
    }

    /// Row-major dense copy for small test problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.dim]; self.dim];
        for (r, c, v) in self.entries() {
            m[r][c] += v;
        }
        m
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// Gershgorin interval containing the spectrum, with every link amplitude
    /// replaced by the largest one seen since the last full rebuild.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// `out = (H − shift)·x`.
    #[inline]
    pub fn apply_shifted(&self, x: &[Complex64], shift: f64, out: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        let rows = self
            .cols
            .chunks_exact(ROW_SLOTS)
            .zip(self.vals.chunks_exact(ROW_SLOTS))
            .zip(self.diag.iter());
        for ((o, ((cols, vals), &d)), &xr) in out.iter_mut().zip(rows).zip(x.iter()) {
            let mut acc = xr * (d - shift);
            for s in 0..ROW_SLOTS {
                acc += x[cols[s] as usize] * vals[s];
            }
            *o = acc;
        }
    }

    /// One Taylor term: `out = factor·(H − shift)·x`, `acc += out`. Returns `‖out‖²`.
    #[inline]
    pub fn taylor_term(
        &self,
        x: &[Complex64],
        shift: f64,
        factor: Complex64,
        out: &mut [Complex64],
        acc: &mut [Complex64],
    ) -> f64 {
        assert_eq!(x.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        assert_eq!(acc.len(), self.dim);
        let rows = self
            .cols
            .chunks_exact(ROW_SLOTS)
            .zip(self.vals.chunks_exact(ROW_SLOTS))
            .zip(self.diag.iter());
        let mut norm_sqr = 0.0;
        for (((o, a), ((cols, vals), &d)), &xr) in out.iter_mut().zip(acc.iter_mut()).zip(rows).zip(x.iter()) {
            let mut sum = xr * (d - shift);
            for s in 0..ROW_SLOTS {
                sum += x[cols[s] as usize] * vals[s];
            }
            let t = sum * factor;
            *o = t;
            *a += t;
            norm_sqr += t.norm_sqr();
        }
        norm_sqr
    }

    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.apply_shifted(x, 0.0, out);
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut hx = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply(x, &mut hx);
        x.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    fn build(n: usize, u: f64, stats: Statistics, links: &LinkConfiguration) -> SparseHamiltonian {
        let lat = LatticeSpec::new(n).unwrap();
        let basis = TwoParticleBasis::new(&lat, stats);
        SparseHamiltonian::two_particle(&lat, &InteractionSpec::new(u), &basis, links).unwrap()
    }

    #[test]
    fn interaction_profile() {
        let i = InteractionSpec::new(14.0);
        assert_eq!(i.at_distance(0), 14.0);
        assert!((i.at_distance(1) - 14.0 / 3.0).abs() < 1e-15);
        assert_eq!(i.at_distance(2), 0.0);
        assert_eq!(i.at_distance(5), 0.0);
        assert_eq!(i.at_distance(1), i.at_distance(0) / 3.0);
    }

    #[test]
    fn three_site_fermion_matrix() {
        // Configs (0,1), (0,2), (1,2). Hops of a single particle on the 3-ring;
        // moving the particle at 0 across the seam to 2 yields |2,1⟩ − |1,2⟩,
        // i.e. minus the stored (1,2) element, so that coupling is +J.
        let h = build(3, 0.0, Statistics::Fermion, &LinkConfiguration::uniform(3));
        let expected = [[0.0, -1.0, 1.0], [-1.0, 0.0, -1.0], [1.0, -1.0, 0.0]];
        let dense = h.to_dense();
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(dense[r][c], expected[r][c], "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn diagonal_follows_interaction() {
        let lat = LatticeSpec::new(4).unwrap();
        let basis = TwoParticleBasis::new(&lat, Statistics::Fermion);
        let h = SparseHamiltonian::two_particle(
            &lat,
            &InteractionSpec::new(14.0),
            &basis,
            &LinkConfiguration::uniform(4),
        )
        .unwrap();
        let (i12, _) = basis.index_of(1, 2).unwrap();
        let (i02, _) = basis.index_of(0, 2).unwrap();
        let (i03, _) = basis.index_of(0, 3).unwrap();
        assert!((h.diagonal()[i12] - 14.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.diagonal()[i02], 0.0);
        // (0,3) are neighbours across the seam.
        assert!((h.diagonal()[i03] - 14.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_with_bounded_row_fill() {
        let links = LinkConfiguration::from_values((0..7).map(|l| if l % 2 == 0 { 0.9 } else { -0.9 }).collect());
        for stats in [Statistics::Boson, Statistics::Fermion] {
            let h = build(7, 3.0, stats, &links);
            let d = h.to_dense();
            for (r, row) in d.iter().enumerate() {
                assert!(h.offdiagonal_count(r) <= ROW_SLOTS);
                for (c, v) in row.iter().enumerate() {
                    assert_eq!(*v, d[c][r]);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let lat = LatticeSpec::new(5).unwrap();
        let basis = TwoParticleBasis::new(&lat, Statistics::Fermion);
        let err = SparseHamiltonian::two_particle(
            &lat,
            &InteractionSpec::none(),
            &basis,
            &LinkConfiguration::uniform(4),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let other = TwoParticleBasis::new(&LatticeSpec::new(6).unwrap(), Statistics::Fermion);
        assert!(SparseHamiltonian::two_particle(&lat, &InteractionSpec::none(), &other, &LinkConfiguration::uniform(5)).is_err());
    }

    #[test]
    fn unchanged_links_leave_values_bitwise() {
        let links = LinkConfiguration::from_values(vec![0.9, -0.9, 0.9, 0.9, -0.9, 0.9]);
        let mut h = build(6, 14.0, Statistics::Fermion, &links);
        let before = h.entries();
        h.rebuild_offdiagonals(&links).unwrap();
        let after = h.entries();
        assert_eq!(before.len(), after.len());
        for (a, b) in before.iter().zip(&after) {
            assert_eq!(a.2.to_bits(), b.2.to_bits());
        }
    }

    #[test]
    fn single_flip_touches_only_its_link() {
        let g0 = 0.9;
        let mut links = LinkConfiguration::from_values(vec![g0; 6]);
        let mut h = build(6, 0.0, Statistics::Fermion, &links);
        let before = h.to_dense();
        links.values[2] = -g0;
        h.rebuild_offdiagonals(&links).unwrap();
        let after = h.to_dense();
        let crossing: std::collections::HashSet<_> = h.entries_on_link(2).into_iter().collect();
        for r in 0..h.dim() {
            for c in 0..h.dim() {
                let delta = (after[r][c] - before[r][c]).abs();
                if crossing.contains(&(r, c)) {
                    assert!((delta - 2.0 * g0).abs() < 1e-14);
                } else {
                    assert_eq!(delta, 0.0);
                }
            }
        }
    }

    #[test]
    fn rebuild_rejects_wrong_link_count() {
        let mut h = build(5, 0.0, Statistics::Fermion, &LinkConfiguration::uniform(5));
        assert!(matches!(
            h.rebuild_offdiagonals(&LinkConfiguration::uniform(6)),
            Err(Error::PatternMismatch(_))
        ));
    }

    #[test]
    fn gershgorin_contains_free_band() {
        let h = build(10, 0.0, Statistics::Fermion, &LinkConfiguration::uniform(10));
        let (lo, hi) = h.spectral_bounds();
        assert!(lo <= -4.0 + 1e-12 && hi >= 4.0 - 1e-12);
    }
}
