use nalgebra::SymmetricEigen;
use pairwalk::spectral::{translation_commutator_norm, BandLabel, BlockDecomposition};
use pairwalk::{InteractionSpec, LatticeSpec, LinkConfiguration, SparseHamiltonian, Statistics, TwoParticleBasis};

fn dense_spectrum(n: usize, u: f64, stats: Statistics) -> Vec<f64> {
    let lat = LatticeSpec::new(n).unwrap();
    let basis = TwoParticleBasis::new(&lat, stats);
    let h = SparseHamiltonian::two_particle(&lat, &InteractionSpec::new(u), &basis, &LinkConfiguration::uniform(n)).unwrap();
    let mut e: Vec<f64> = SymmetricEigen::new(h.to_dmatrix()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn free_spectrum_is_sum_of_single_particle_levels() {
    let n = 6;
    let eps: Vec<f64> = (0..n)
        .map(|q| -2.0 * (2.0 * std::f64::consts::PI * q as f64 / n as f64).cos())
        .collect();
    for stats in [Statistics::Fermion, Statistics::Boson] {
        let mut expect = Vec::new();
        for a in 0..n {
            for b in a..n {
                if a == b && stats == Statistics::Fermion {
                    continue;
                }
                expect.push(eps[a] + eps[b]);
            }
        }
        expect.sort_by(f64::total_cmp);
        let got = dense_spectrum(n, 0.0, stats);
        assert_eq!(got.len(), expect.len());
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12);
        }
    }
}

#[test]
fn interaction_sign_reversal_mirrors_spectrum_on_even_rings() {
    for stats in [Statistics::Fermion, Statistics::Boson] {
        let plus = dense_spectrum(8, 5.0, stats);
        let minus = dense_spectrum(8, -5.0, stats);
        for (p, m) in plus.iter().zip(minus.iter().rev()) {
            assert!((p + m).abs() < 1e-10);
        }
    }
}

#[test]
fn block_spectrum_equals_dense_spectrum() {
    for stats in [Statistics::Fermion, Statistics::Boson] {
        let lat = LatticeSpec::new(12).unwrap();
        let d = BlockDecomposition::new(&lat, &InteractionSpec::new(14.0), stats).unwrap();
        let mut blocks = d.band_structure().energies();
        blocks.sort_by(f64::total_cmp);
        for (a, b) in blocks.iter().zip(&dense_spectrum(12, 14.0, stats)) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn translation_symmetry_holds_for_both_statistics() {
    for stats in [Statistics::Fermion, Statistics::Boson] {
        let lat = LatticeSpec::new(11).unwrap();
        let basis = TwoParticleBasis::new(&lat, stats);
        let h = SparseHamiltonian::two_particle(&lat, &InteractionSpec::new(2.5), &basis, &LinkConfiguration::uniform(11)).unwrap();
        assert!(translation_commutator_norm(&h, &basis) < 1e-13);
    }
}

#[test]
fn bosons_have_two_bound_branches_for_strong_interaction() {
    // on-site and nearest-neighbour bound pairs
    let lat = LatticeSpec::new(30).unwrap();
    let d = BlockDecomposition::new(&lat, &InteractionSpec::new(40.0), Statistics::Boson).unwrap();
    for b in &d.blocks {
        let bound = (0..b.energies.len()).filter(|&i| b.label(i) == BandLabel::Bound).count();
        assert_eq!(bound, 2, "K = {}", b.k);
    }
}

#[test]
fn evolution_from_eigenstates_matches_direct_propagation() {
    for stats in [Statistics::Fermion, Statistics::Boson] {
        let lat = LatticeSpec::new(12).unwrap();
        let int = InteractionSpec::new(14.0);
        let d = BlockDecomposition::new(&lat, &int, stats).unwrap();
        let h = SparseHamiltonian::two_particle(&lat, &int, &d.basis, &LinkConfiguration::uniform(12)).unwrap();
        let psi0 = d.basis.localized_pair_state(5, 6).unwrap();
        for tau in [0.5, 2.0, 7.5] {
            let a = d.evolve(&psi0, tau).unwrap();
            let b = pairwalk::propagator::apply_segment(&h, tau, &psi0, 1e-12).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-9);
        }
    }
}

#[test]
fn weight_and_gap_classifiers_agree_where_the_miniband_is_detached() {
    let lat = LatticeSpec::new(80).unwrap();
    let d = BlockDecomposition::new(&lat, &InteractionSpec::new(14.0), Statistics::Fermion).unwrap();
    let bands = d.band_structure();
    let by_gap = pairwalk::spectral::classify_by_gaps(&bands.energies(), 0.5);
    let by_weight = bands.with_label(BandLabel::Bound).count();
    assert_eq!(by_gap.iter().filter(|&&l| l == BandLabel::Bound).count(), by_weight);
    assert_eq!(by_weight, 80);
}

#[test]
fn boson_upper_miniband_sits_near_the_onsite_energy() {
    let u = 14.0;
    let lat = LatticeSpec::new(40).unwrap();
    let d = BlockDecomposition::new(&lat, &InteractionSpec::new(u), Statistics::Boson).unwrap();
    for b in &d.blocks {
        let bound: Vec<f64> = (0..b.energies.len())
            .filter(|&i| b.label(i) == BandLabel::Bound)
            .map(|i| b.energies[i])
            .collect();
        assert_eq!(bound.len(), 2, "K = {}", b.k);
        let upper = bound.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((upper - u).abs() < 0.1 * u);
    }
}
