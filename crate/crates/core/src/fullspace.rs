//! Product-space reference for small rings.
//!
//! Builds `H₁⊗I + I⊗H₁ + H_int` directly as an `N² × N²` dense matrix, with no
//! use of the reduced basis, and converts reduced states to product-space
//! amplitudes. Used only to cross-check the symmetry-reduced code paths.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{InteractionSpec, LinkConfiguration};
use crate::lattice::{LatticeSpec, StateVector, Statistics, TwoParticleBasis};

pub const SITE_LIMIT: usize = 22;

/// Single-particle `H₁` with hopping `−J(1 + g_l)` on link `l`.
pub fn single_particle_matrix(lattice: &LatticeSpec, links: &LinkConfiguration) -> DMatrix<f64> {
    let n = lattice.n_sites;
    let mut h = DMatrix::from_diagonal_element(n, n, lattice.onsite);
    for l in 0..n {
        let a = l;
        let b = (l + 1) % n;
        let t = -lattice.hopping * (1.0 + links.values[l]);
        h[(a, b)] += t;
        h[(b, a)] += t;
    }
    h
}

/// Dense two-particle Hamiltonian on the full product space, index `j·N + k`.
pub fn product_hamiltonian(
    lattice: &LatticeSpec,
    interaction: &InteractionSpec,
    links: &LinkConfiguration,
) -> Result<DMatrix<f64>> {
    let n = lattice.n_sites;
    if n > SITE_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: n * n,
            limit: SITE_LIMIT * SITE_LIMIT,
        });
    }
    let h1 = single_particle_matrix(lattice, links);
    let id = DMatrix::<f64>::identity(n, n);
    let mut h = h1.kronecker(&id) + id.kronecker(&h1);
    for j in 0..n {
        for k in 0..n {
            let d = (j as isize - k as isize).unsigned_abs();
            let d = d.min(n - d);
            h[(j * n + k, j * n + k)] += interaction.at_distance(d);
        }
    }
    Ok(h)
}

/// Product-space amplitudes `ψ(j,k)` of a reduced-basis state.
pub fn to_product(basis: &TwoParticleBasis, state: &StateVector) -> DVector<Complex64> {
    let n = basis.n_sites();
    DVector::from_fn(n * n, |idx, _| basis.full_amplitude(state, idx / n, idx % n))
}

/// Localized (anti)symmetrized pair written directly in the product space.
pub fn product_pair_state(n: usize, statistics: Statistics, j: usize, k: usize) -> DVector<Complex64> {
    let mut v = DVector::from_element(n * n, Complex64::new(0.0, 0.0));
    if j == k {
        v[j * n + j] = Complex64::new(1.0, 0.0);
        return v;
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    v[j * n + k] += Complex64::new(r, 0.0);
    v[k * n + j] += Complex64::new(statistics.exchange_sign() * r, 0.0);
    v
}

/// Diagonal of the reduced density matrix of the first particle.
pub fn marginal(n: usize, psi: &DVector<Complex64>) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|k| psi[i * n + k].norm_sqr()).sum())
        .collect()
}

/// Population on the double occupancy `(k,k)`.
pub fn double_occupancy(n: usize, psi: &DVector<Complex64>, k: usize) -> f64 {
    psi[k * n + k].norm_sqr()
}

/// Product-space translation `|j,k⟩ → |j+1,k+1⟩`.
pub fn translation(n: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for k in 0..n {
            t[(((j + 1) % n) * n + (k + 1) % n, j * n + k)] = 1.0;
        }
    }
    t
}
