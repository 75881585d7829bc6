//! Single-particle marginals, position variance, occupations and variance gain.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{StateVector, TwoParticleBasis};

/// Diagonal of the single-particle reduced density matrix,
/// `p_i = Σ_k |ψ(i,k)|²` over product-space amplitudes.
pub fn single_particle_diagonal(basis: &TwoParticleBasis, state: &StateVector) -> Vec<f64> {
    populations_to_marginal(basis, &state.populations())
}

/// Same marginal from reduced-basis populations `|ψ_b|²` (possibly noise averaged).
///
/// A pair element `(j,k)`, `j ≠ k`, splits its weight evenly between the two
/// sites; a doublon puts all of it on its site.
pub fn populations_to_marginal(basis: &TwoParticleBasis, populations: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; basis.n_sites()];
    for (&(j, k), &w) in basis.configs().iter().zip(populations) {
        if j == k {
            p[j] += w;
        } else {
            p[j] += 0.5 * w;
            p[k] += 0.5 * w;
        }
    }
    p
}

/// `⟨n_k⟩ = 2 Σ_j ρ_{kj,kj}`, i.e. twice the single-particle marginal.
pub fn occupation_numbers(basis: &TwoParticleBasis, populations: &[f64]) -> Vec<f64> {
    populations_to_marginal(basis, populations)
        .into_iter()
        .map(|p| 2.0 * p)
        .collect()
}

/// `[⟨x⟩, ⟨x²⟩]` of the site label under `p` (labels `1..=N`), measured from
/// `origin`. Both are linear in `p`, so they can be averaged over noise.
pub fn position_moments(p: &[f64], origin: f64) -> [f64; 2] {
    let total: f64 = p.iter().sum();
    let mut m = [0.0; 2];
    for (i, w) in p.iter().enumerate() {
        let x = (i + 1) as f64 - origin;
        m[0] += x * w;
        m[1] += x * x * w;
    }
    [m[0] / total, m[1] / total]
}

/// Second central moment of the site label under `p` (labels `1..=N`).
pub fn position_variance(p: &[f64]) -> f64 {
    let total: f64 = p.iter().sum();
    let mean = p.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum::<f64>() / total;
    let var = p
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let d = (i + 1) as f64 - mean;
            d * d * w
        })
        .sum::<f64>()
        / total;
    var.max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VariancePoint {
    pub tau: f64,
    pub sigma2: f64,
    pub stderr: f64,
}

/// σ²(τ) with standard errors. The raw values are kept; `shifted` subtracts σ²(0).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceSeries {
    pub points: Vec<VariancePoint>,
    pub raw_initial: f64,
}

impl VarianceSeries {
    pub fn new(points: Vec<VariancePoint>) -> Self {
        let raw_initial = points.first().map(|p| p.sigma2).unwrap_or(0.0);
        VarianceSeries { points, raw_initial }
    }

    pub fn shifted(&self) -> Vec<VariancePoint> {
        self.points
            .iter()
            .map(|p| VariancePoint {
                sigma2: p.sigma2 - self.raw_initial,
                ..*p
            })
            .collect()
    }

    pub fn at(&self, tau: f64) -> Result<VariancePoint> {
        self.points
            .iter()
            .find(|p| (p.tau - tau).abs() < 1e-9)
            .copied()
            .ok_or(Error::MissingSample { tau })
    }

    pub fn taus(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sigma2).collect()
    }
}

/// Occupations `⟨n_k(τ)⟩`, one row per sample time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccupationMap {
    pub taus: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gain {
    pub value: f64,
    pub stderr: f64,
}

/// `g_σ = σ²_noisy/σ²_ref − 1` at `tau`, with first-order error propagation.
pub fn variance_gain(noisy: &VarianceSeries, reference: &VarianceSeries, tau: f64) -> Result<Gain> {
    let a = noisy.at(tau)?;
    let b = reference.at(tau)?;
    if b.sigma2 == 0.0 {
        return Err(Error::ZeroReferenceVariance { tau });
    }
    let value = a.sigma2 / b.sigma2 - 1.0;
    let stderr = ((a.stderr / b.sigma2).powi(2) + (a.sigma2 * b.stderr / (b.sigma2 * b.sigma2)).powi(2)).sqrt();
    Ok(Gain { value, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeSpec, Statistics};

    #[test]
    fn adjacent_pair_marginal_and_variance() {
        let lat = LatticeSpec::new(20).unwrap();
        let basis = TwoParticleBasis::new(&lat, Statistics::Fermion);
        let s = basis.localized_pair_state(9, 10).unwrap();
        let p = single_particle_diagonal(&basis, &s);
        assert_eq!(p[9], 0.5);
        assert_eq!(p[10], 0.5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((position_variance(&p) - 0.25).abs() < 1e-15);

        let n = occupation_numbers(&basis, &s.populations());
        assert_eq!(n[9], 1.0);
        assert_eq!(n[10], 1.0);
        assert_eq!(n.iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn three_apart_variance() {
        let lat = LatticeSpec::new(20).unwrap();
        let basis = TwoParticleBasis::new(&lat, Statistics::Boson);
        let s = basis.localized_pair_state(8, 11).unwrap();
        let p = single_particle_diagonal(&basis, &s);
        assert!((position_variance(&p) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn point_mass_has_zero_variance() {
        let mut p = vec![0.0; 10];
        p[4] = 1.0;
        assert_eq!(position_variance(&p), 0.0);
    }

    #[test]
    fn doublon_marginal() {
        let lat = LatticeSpec::new(6).unwrap();
        let basis = TwoParticleBasis::new(&lat, Statistics::Boson);
        let s = basis.localized_pair_state(2, 2).unwrap();
        let n = occupation_numbers(&basis, &s.populations());
        assert_eq!(n[2], 2.0);
    }

    fn series(vals: &[(f64, f64, f64)]) -> VarianceSeries {
        VarianceSeries::new(
            vals.iter()
                .map(|&(tau, sigma2, stderr)| VariancePoint { tau, sigma2, stderr })
                .collect(),
        )
    }

    #[test]
    fn shifted_series_starts_at_zero() {
        let s = series(&[(0.0, 0.25, 0.0), (1.0, 2.25, 0.1)]);
        let sh = s.shifted();
        assert_eq!(sh[0].sigma2, 0.0);
        assert_eq!(sh[1].sigma2, 2.0);
        assert_eq!(s.raw_initial, 0.25);
    }

    #[test]
    fn gain_of_equal_series_is_zero() {
        let s = series(&[(0.0, 0.25, 0.0), (2.0, 5.0, 0.0)]);
        let g = variance_gain(&s, &s, 2.0).unwrap();
        assert_eq!(g.value, 0.0);
    }

    #[test]
    fn gain_propagates_errors() {
        let noisy = series(&[(1.0, 3.0, 0.3)]);
        let clean = series(&[(1.0, 2.0, 0.0)]);
        let g = variance_gain(&noisy, &clean, 1.0).unwrap();
        assert!((g.value - 0.5).abs() < 1e-15);
        assert!((g.stderr - 0.15).abs() < 1e-15);
    }

    #[test]
    fn gain_errors() {
        let zero = series(&[(1.0, 0.0, 0.0)]);
        let s = series(&[(1.0, 1.0, 0.0)]);
        assert_eq!(variance_gain(&s, &zero, 1.0).unwrap_err(), Error::ZeroReferenceVariance { tau: 1.0 });
        assert!(matches!(variance_gain(&s, &s, 2.0), Err(Error::MissingSample { .. })));
    }
}
