mod common;

use common::*;
use proptest::prelude::*;
use vampire_core::fock::{annihilation_matrix, creation_matrix};
use vampire_core::{fidelity, ModeSet, PureState, QuantumState, C64};

#[test]
fn ladder_algebra_on_basis_states() {
    let modes = ModeSet::new(2, 4).unwrap();
    let (a, ad) = (annihilation_matrix(4), creation_matrix(4));
    for i in 0..modes.dim() {
        let occ = modes.occupations(i);
        let basis = PureState::fock(modes, &occ).unwrap();
        for (k, &nk) in occ.iter().enumerate() {
            let n = nk as f64;
            let down_up = basis.apply_local(&[k], &a).unwrap().apply_local(&[k], &ad).unwrap();
            assert!(down_up.distance(&basis.scale(C64::new(n, 0.0))).unwrap() < 1e-14);
            if nk < 4 {
                let up_down = basis.apply_local(&[k], &ad).unwrap().apply_local(&[k], &a).unwrap();
                assert!(up_down.distance(&basis.scale(C64::new(n + 1.0, 0.0))).unwrap() < 1e-14);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn annihilation_norm_is_mean_photon_number(psi in pure_state(ModeSet::new(2, 4).unwrap()), k in 0usize..2) {
        let lowered = psi.apply_annihilation(k).unwrap();
        prop_assert!((lowered.norm_sqr() - psi.mean_photon_number(k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn split_annihilation_identity(psi in single_mode_state(5), bs in beamsplitter()) {
        let split_psi = split(&psi, &bs);
        let split_lowered = split(&psi.apply_annihilation(0).unwrap(), &bs);
        for (mode, coeff) in [(0, bs.mu().conj()), (1, bs.lambda().conj())] {
            let lhs = split_psi.apply_annihilation(mode).unwrap();
            let rhs = split_lowered.scale(coeff);
            prop_assert!(lhs.distance(&rhs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_keeps_trace_and_positivity(rho in mixed_state(ModeSet::new(2, 3).unwrap()), keep in 0usize..2) {
        let reduced = rho.partial_trace(&[keep]).unwrap();
        prop_assert!((reduced.trace() - rho.trace()).abs() < 1e-12);
        prop_assert!(reduced.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn fidelity_is_symmetric(a in mixed_state(ModeSet::single(4).unwrap()), b in mixed_state(ModeSet::single(4).unwrap())) {
        let (ab, ba) = (fidelity(&a, &b).unwrap(), fidelity(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() < 1e-8);
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-8);
        prop_assert!((0.0..=1.0 + 1e-8).contains(&ab));
    }
}

#[test]
fn fidelity_vanishes_on_orthogonal_supports() {
    for (m, n) in [(0, 1), (1, 3), (2, 4)] {
        assert!(fidelity(&fock_mixed(4, m), &fock_mixed(4, n)).unwrap().abs() < 1e-12);
    }
}

#[test]
fn creation_lacks_the_global_property() {
    // a_1^dag on |1> split 50:50 gives (|2,0> + |1,1>)/sqrt(2) up to phases;
    // its overlap with the split |2> is 2/3
    let modes = ModeSet::single(3).unwrap();
    let bs = vampire_core::BeamSplitter::balanced();
    let raised = split(&PureState::fock(modes, &[1]).unwrap(), &bs).apply_creation(0).unwrap().value;
    let (raised, _) = raised.normalize().unwrap();
    let back = vampire_core::apply_beamsplitter(&raised, 0, 1, &bs.inverse()).unwrap().value;
    let rho = vampire_core::MixedState::from(&back).partial_trace(&[0]).unwrap();
    let f = fidelity(&rho, &fock_mixed(3, 2)).unwrap();
    assert!((f - 2.0 / 3.0).abs() < 1e-12, "{f}");
}
