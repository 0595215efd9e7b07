mod common;

use common::*;
use proptest::prelude::*;
use vampire_core::linear_optics::split_fock;
use vampire_core::{apply_beamsplitter, split_mode, ModeSet, PureState, QuantumState, C64};

fn coherent_amplitudes(alpha: C64, cutoff: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(cutoff + 1);
    let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..=cutoff {
        out.push(term);
        term *= alpha / ((n + 1) as f64).sqrt();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beamsplitter_is_unitary(
        a in bounded_state(ModeSet::new(2, 4).unwrap()),
        b in bounded_state(ModeSet::new(2, 4).unwrap()),
        bs in beamsplitter(),
    ) {
        let ua = apply_beamsplitter(&a, 0, 1, &bs).unwrap();
        let ub = apply_beamsplitter(&b, 0, 1, &bs).unwrap();
        prop_assert!(ua.leakage < 1e-14);
        prop_assert!((ua.value.norm_sqr() - 1.0).abs() < 1e-12);
        let before = a.inner(&b).unwrap();
        let after = ua.value.inner(&ub.value).unwrap();
        prop_assert!((before - after).norm() < 1e-12);
    }

    #[test]
    fn inverse_undoes_beamsplitter(psi in bounded_state(ModeSet::new(2, 4).unwrap()), bs in beamsplitter()) {
        let there = apply_beamsplitter(&psi, 0, 1, &bs).unwrap().value;
        let back = apply_beamsplitter(&there, 0, 1, &bs.inverse()).unwrap().value;
        prop_assert!(back.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn coherent_light_splits_into_a_product(
        r in 0.0..0.5f64,
        phase in 0.0..std::f64::consts::TAU,
        bs in beamsplitter(),
    ) {
        let cutoff = 10;
        let alpha = C64::from_polar(r, phase);
        let modes = ModeSet::new(2, cutoff).unwrap();
        let input = PureState::coherent(ModeSet::single(cutoff).unwrap(), 0, alpha).unwrap().value;
        let out = split(&input, &bs);
        let (x, y) = (
            coherent_amplitudes(bs.mu().conj() * alpha, cutoff),
            coherent_amplitudes(bs.lambda().conj() * alpha, cutoff),
        );
        // the truncated input holds at most `cutoff` photons in total
        let product: Vec<C64> = (0..modes.dim())
            .map(|i| {
                let o = modes.occupations(i);
                if o[0] + o[1] <= cutoff { x[o[0]] * y[o[1]] } else { C64::new(0.0, 0.0) }
            })
            .collect();
        let (product, _) = PureState::from_amplitudes(modes, product).unwrap().normalize().unwrap();
        prop_assert!(out.distance(&product).unwrap() < 1e-12);
    }

    #[test]
    fn splitting_conserves_photons(
        psi in single_mode_state(3),
        coefficients in (2usize..=4).prop_flat_map(|k| pixel_coefficients(k, 0.0)),
    ) {
        let out = split_mode(&psi, &coefficients).unwrap();
        let total: f64 = (0..coefficients.len()).map(|k| out.mean_photon_number(k).unwrap()).sum();
        prop_assert!((total - psi.mean_photon_number(0).unwrap()).abs() < 1e-12);
        for (k, c) in coefficients.iter().enumerate() {
            let expected = psi.mean_photon_number(0).unwrap() * c.norm_sqr();
            prop_assert!((out.mean_photon_number(k).unwrap() - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn split_fock_matches_multinomial() {
    let c = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
    let s = split_fock(2, 2, &c).unwrap();
    let p20 = s.amplitude(&[2, 0]).unwrap().norm_sqr();
    let p11 = s.amplitude(&[1, 1]).unwrap().norm_sqr();
    assert!((p20 - 0.36f64.powi(2)).abs() < 1e-12);
    assert!((p11 - 2.0 * 0.36 * 0.64).abs() < 1e-12);
}
