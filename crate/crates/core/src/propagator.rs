//! Event-driven propagation through a piecewise-constant Hamiltonian.
//!
//! Within a segment the evolution is `exp(−iH·dt)`, applied to the state with a
//! truncated Taylor series around the spectral midpoint `μ` of `H`. With
//! `x = ‖H − μ‖·dt` (Gershgorin bound) consecutive terms shrink at least by
//! `x/(k+1)`, so after term `k` the discarded tail is bounded by
//! `‖t_k‖·r/(1 − r)` with `r = x/(k+1)`. Long segments are split so that
//! `x ≤ MAX_STEP_NORM`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::lattice::StateVector;
use crate::noise::EventGrid;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Per-segment truncation floor. Keeps the norm drift of a segment far below
/// `1e-12`, which matters once a realization has `10⁴–10⁵` segments.
pub const NORM_DRIFT_FLOOR: f64 = 1e-14;

const MAX_STEP_NORM: f64 = 2.0;
const MAX_TERMS: usize = 64;

/// Scratch buffers reused across segments of one realization.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    term: Vec<Complex64>,
    next: Vec<Complex64>,
    /// Total number of matrix-vector products, for diagnostics.
    pub matvecs: u64,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        Workspace {
            term: vec![Complex64::new(0.0, 0.0); dim],
            next: vec![Complex64::new(0.0, 0.0); dim],
            matvecs: 0,
        }
    }

    fn ensure(&mut self, dim: usize) {
        if self.term.len() != dim {
            self.term.resize(dim, Complex64::new(0.0, 0.0));
            self.next.resize(dim, Complex64::new(0.0, 0.0));
        }
    }
}

/// Advances `state` in place by `exp(−i h dt)`.
pub fn apply_segment_in_place(
    h: &SparseHamiltonian,
    dt: f64,
    state: &mut [Complex64],
    tol: f64,
    ws: &mut Workspace,
) -> Result<()> {
    if state.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: state.len(),
        });
    }
    let norm = state.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let phase = advance_without_phase(h, dt, state, tol, norm, ws)?;
    if phase != Complex64::new(1.0, 0.0) {
        for s in state.iter_mut() {
            *s *= phase;
        }
    }
    Ok(())
}

/// Applies `exp(−i (h − μ) dt)` and returns the global factor `e^{−iμ dt}` still
/// owed. `norm` is `‖state‖`, which the step preserves up to the tolerance.
fn advance_without_phase(
    h: &SparseHamiltonian,
    dt: f64,
    state: &mut [Complex64],
    tol: f64,
    norm: f64,
    ws: &mut Workspace,
) -> Result<Complex64> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!("segment length must be >= 0, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if !norm.is_finite() {
        return Err(Error::NonFinite);
    }
    ws.ensure(h.dim());
    let target = tol.min(NORM_DRIFT_FLOOR) * norm;
    let (lo, hi) = h.spectral_bounds();
    let shift = 0.5 * (lo + hi);
    let radius = 0.5 * (hi - lo);
    let n_steps = ((radius * dt) / MAX_STEP_NORM).ceil().max(1.0) as usize;
    let step = dt / n_steps as f64;
    let x = radius * step;

    for _ in 0..n_steps {
        ws.term.copy_from_slice(state);
        let mut converged = false;
        for k in 1..=MAX_TERMS {
            // t_k = (−i·step/k)·(H − μ)·t_{k−1}
            let factor = Complex64::new(0.0, -step / k as f64);
            let norm_sqr = h.taylor_term(&ws.term, shift, factor, &mut ws.next, state);
            ws.matvecs += 1;
            std::mem::swap(&mut ws.term, &mut ws.next);
            if !norm_sqr.is_finite() {
                return Err(Error::NonFinite);
            }
            let r = x / (k as f64 + 1.0);
            if r < 1.0 && norm_sqr.sqrt() * r / (1.0 - r) <= target {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::InvalidParameter(format!(
                "series did not converge within {MAX_TERMS} terms (x = {x})"
            )));
        }
    }
    Ok(Complex64::from_polar(1.0, -shift * dt))
}

/// `exp(−i h dt)·state`.
pub fn apply_segment(h: &SparseHamiltonian, dt: f64, state: &StateVector, tol: f64) -> Result<StateVector> {
    let mut out = state.clone();
    let mut ws = Workspace::new(h.dim());
    apply_segment_in_place(h, dt, &mut out.amplitudes, tol, &mut ws)?;
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PropagationRequest<'a> {
    pub initial: &'a StateVector,
    pub grid: &'a EventGrid,
    pub tolerance: f64,
}

impl<'a> PropagationRequest<'a> {
    pub fn new(initial: &'a StateVector, grid: &'a EventGrid) -> Self {
        PropagationRequest {
            initial,
            grid,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must lie in (0, 1e-6], got {}",
                self.tolerance
            )));
        }
        let nb = self.grid.boundaries.len();
        if self.grid.sample_boundaries.iter().any(|&b| b >= nb) {
            return Err(Error::SampleOutsideHorizon {
                time: f64::NAN,
                horizon: self.grid.horizon,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct StateSnapshots {
    pub snapshots: Vec<(f64, StateVector)>,
}

/// Drives `h` through the grid, calling `visit(sample_index, tau, state, norm_before)`
/// at each sample time. The state is renormalized right after the visit; the
/// norm it had before that is passed along so callers can monitor drift.
pub fn evolve_piecewise_with<F>(
    h: &mut SparseHamiltonian,
    req: &PropagationRequest<'_>,
    ws: &mut Workspace,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &StateVector, f64),
{
    req.validate()?;
    let grid = req.grid;
    if req.initial.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: req.initial.dim(),
        });
    }
    h.rebuild_offdiagonals(&grid.initial)?;
    let mut state = req.initial.clone();
    let mut norm = state.norm();
    // global phase accumulated since the last sample
    let mut phase = Complex64::new(1.0, 0.0);
    let mut next_sample = 0;
    let n_samples = grid.sample_boundaries.len();

    let mut emit = |boundary: usize, state: &mut StateVector, phase: &mut Complex64, norm: &mut f64, next_sample: &mut usize| {
        if *next_sample >= n_samples || grid.sample_boundaries[*next_sample] != boundary {
            return;
        }
        for a in state.amplitudes.iter_mut() {
            *a *= *phase;
        }
        *phase = Complex64::new(1.0, 0.0);
        while *next_sample < n_samples && grid.sample_boundaries[*next_sample] == boundary {
            let before = state.norm();
            visit(*next_sample, grid.boundaries[boundary], state, before);
            state.normalize();
            *norm = 1.0;
            *next_sample += 1;
        }
    };

    emit(0, &mut state, &mut phase, &mut norm, &mut next_sample);
    for seg in 0..grid.n_segments() {
        if seg > 0 {
            for &l in &grid.flips[seg] {
                let v = h.links().values[l];
                h.set_link(l, -v);
            }
        }
        let dt = grid.boundaries[seg + 1] - grid.boundaries[seg];
        phase *= advance_without_phase(h, dt, &mut state.amplitudes, req.tolerance, norm, ws)?;
        emit(seg + 1, &mut state, &mut phase, &mut norm, &mut next_sample);
    }
    Ok(())
}

/// Collects the state at every sample time.
pub fn evolve_piecewise(h: &mut SparseHamiltonian, req: &PropagationRequest<'_>) -> Result<StateSnapshots> {
    let mut ws = Workspace::new(h.dim());
    let mut snapshots = Vec::with_capacity(req.grid.sample_boundaries.len());
    evolve_piecewise_with(h, req, &mut ws, |_, tau, s, _| snapshots.push((tau, s.clone())))?;
    Ok(StateSnapshots { snapshots })
}

/// Dense reference propagation by full eigendecomposition of each segment.
pub mod dense {
    use nalgebra::{DMatrix, DVector, SymmetricEigen};
    use num_complex::Complex64;

    use crate::error::{Error, Result};
    use crate::lattice::StateVector;

    pub const DIM_LIMIT: usize = 500;

    /// `exp(−iH dt)` for a real symmetric `H`.
    pub fn unitary(h: &DMatrix<f64>, dt: f64) -> DMatrix<Complex64> {
        let eig = SymmetricEigen::new(h.clone());
        let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let phases = DVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * dt)),
        );
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * phases[c]);
        &scaled * v.adjoint()
    }

    /// Ordered product `U_n ⋯ U_1 |ψ⟩` where the first pair acts first.
    pub fn dense_oracle(sequence: &[(DMatrix<f64>, f64)], state: &StateVector) -> Result<StateVector> {
        let dim = state.dim();
        if dim > DIM_LIMIT {
            return Err(Error::DimensionTooLarge { dim, limit: DIM_LIMIT });
        }
        let mut psi = DVector::from_column_slice(&state.amplitudes);
        for (h, dt) in sequence {
            if h.nrows() != dim || h.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.nrows(),
                });
            }
            psi = unitary(h, *dt) * psi;
        }
        Ok(StateVector {
            amplitudes: psi.iter().cloned().collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::dense::dense_oracle;
    use super::*;
    use crate::hamiltonian::{InteractionSpec, LinkConfiguration};
    use crate::lattice::{LatticeSpec, Statistics, TwoParticleBasis};
    use crate::noise::{merge_events, RtnTrajectory};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_links(n: usize, g0: f64, rng: &mut ChaCha8Rng) -> LinkConfiguration {
        LinkConfiguration::from_values((0..n).map(|_| if rng.random::<bool>() { g0 } else { -g0 }).collect())
    }

    fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let mut s = StateVector {
            amplitudes: (0..dim)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        };
        s.normalize();
        s
    }

    #[test]
    fn zero_step_is_identity() {
        let lat = LatticeSpec::new(6).unwrap();
        let basis = TwoParticleBasis::new(&lat, Statistics::Fermion);
        let h = SparseHamiltonian::two_particle(&lat, &InteractionSpec::new(3.0), &basis, &LinkConfiguration::uniform(6)).unwrap();
        let s = basis.localized_pair_state(1, 2).unwrap();
        let out = apply_segment(&h, 0.0, &s, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn negative_step_rejected() {
        let lat = LatticeSpec::new(4).unwrap();
        let h = SparseHamiltonian::single_particle(&lat, &LinkConfiguration::uniform(4)).unwrap();
        assert!(apply_segment(&h, -1.0, &StateVector::site(4, 0), 1e-10).is_err());
    }

    #[test]
    fn segment_matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lat = LatticeSpec::new(6).unwrap();
        let basis = TwoParticleBasis::new(&lat, Statistics::Fermion);
        for _ in 0..5 {
            let links = random_links(6, 0.9, &mut rng);
            let h = SparseHamiltonian::two_particle(&lat, &InteractionSpec::new(14.0), &basis, &links).unwrap();
            let s = random_state(basis.dim(), &mut rng);
            let fast = apply_segment(&h, 0.7, &s, DEFAULT_TOLERANCE).unwrap();
            let exact = dense_oracle(&[(h.to_dmatrix(), 0.7)], &s).unwrap();
            assert!(fast.max_abs_diff(&exact) < 1e-9);
            assert!((fast.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn long_segment_is_split() {
        let lat = LatticeSpec::new(8).unwrap();
        let basis = TwoParticleBasis::new(&lat, Statistics::Boson);
        let h = SparseHamiltonian::two_particle(&lat, &InteractionSpec::new(40.0), &basis, &LinkConfiguration::uniform(8)).unwrap();
        let s = basis.localized_pair_state(2, 3).unwrap();
        let fast = apply_segment(&h, 25.0, &s, DEFAULT_TOLERANCE).unwrap();
        let exact = dense_oracle(&[(h.to_dmatrix(), 25.0)], &s).unwrap();
        assert!(fast.max_abs_diff(&exact) < 1e-9);
    }

    #[test]
    fn diagonal_oracle_gives_phases() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5]));
        let s = StateVector {
            amplitudes: vec![Complex64::new(1.0, 0.0); 3],
        };
        let out = dense_oracle(&[(h, 0.3)], &s).unwrap();
        for (a, e) in out.amplitudes.iter().zip([1.0, -2.0, 0.5]) {
            assert!((a - Complex64::from_polar(1.0, -e * 0.3)).norm() < 1e-14);
        }
    }

    #[test]
    fn commuting_segments_commute_and_generic_ones_do_not() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(4, |i, _| i as f64));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(4, |i, _| (i * i) as f64 * 0.3));
        let s = random_state(4, &mut rng);
        let ab = dense_oracle(&[(a.clone(), 0.4), (b.clone(), 0.9)], &s).unwrap();
        let ba = dense_oracle(&[(b, 0.9), (a, 0.4)], &s).unwrap();
        assert!(ab.max_abs_diff(&ba) < 1e-13);

        let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
        let p = sym(DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() - 0.5));
        let q = sym(DMatrix::from_fn(4, 4, |_, _| rng.random::<f64>() - 0.5));
        assert!((&p * &q - &q * &p).norm() > 1e-3);
        let pq = dense_oracle(&[(p.clone(), 1.0), (q.clone(), 1.0)], &s).unwrap();
        let qp = dense_oracle(&[(q, 1.0), (p, 1.0)], &s).unwrap();
        assert!(pq.max_abs_diff(&qp) > 1e-6);
    }

    #[test]
    fn oracle_rejects_large_dimension() {
        let s = StateVector::zeros(501);
        assert!(matches!(dense_oracle(&[], &s), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn piecewise_matches_ordered_dense_product() {
        let lat = LatticeSpec::new(5).unwrap();
        let basis = TwoParticleBasis::new(&lat, Statistics::Fermion);
        let g0 = 0.9;
        let trs: Vec<RtnTrajectory> = (0..5)
            .map(|l| RtnTrajectory {
                initial_sign: if l % 2 == 0 { 1.0 } else { -1.0 },
                flip_times: match l {
                    0 => vec![0.4],
                    2 => vec![0.9, 1.6],
                    _ => vec![],
                },
                amplitude: g0,
                horizon: 2.0,
            })
            .collect();
        let grid = merge_events(&trs, &[2.0], 2.0).unwrap();
        assert_eq!(grid.n_segments(), 4);
        let interaction = InteractionSpec::new(6.0);
        let mut h = SparseHamiltonian::two_particle(&lat, &interaction, &basis, &grid.initial).unwrap();
        let psi0 = basis.localized_pair_state(1, 2).unwrap();
        let snaps = evolve_piecewise(&mut h, &PropagationRequest::new(&psi0, &grid)).unwrap();

        let seq: Vec<_> = grid
            .segments()
            .map(|(a, b, links)| {
                let hs = SparseHamiltonian::two_particle(&lat, &interaction, &basis, &links).unwrap();
                (hs.to_dmatrix(), b - a)
            })
            .collect();
        let exact = dense_oracle(&seq, &psi0).unwrap();
        let (tau, last) = snaps.snapshots.last().unwrap();
        assert_eq!(*tau, 2.0);
        assert!(last.max_abs_diff(&exact) < 1e-8);
    }

    #[test]
    fn invalid_tolerance_rejected() {
        let lat = LatticeSpec::new(4).unwrap();
        let mut h = SparseHamiltonian::single_particle(&lat, &LinkConfiguration::uniform(4)).unwrap();
        let trs: Vec<_> = (0..4).map(|_| RtnTrajectory::constant(1.0, 0.0, 1.0)).collect();
        let grid = merge_events(&trs, &[1.0], 1.0).unwrap();
        let s = StateVector::site(4, 0);
        let req = PropagationRequest::new(&s, &grid).with_tolerance(1e-3);
        assert!(evolve_piecewise(&mut h, &req).is_err());
    }
}
