#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use vampire_core::{BeamSplitter, MixedState, ModeSet, PureState, QuantumState, C64};

pub fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn normalized(v: Vec<C64>) -> Option<Vec<C64>> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (n > 1e-3).then(|| v.into_iter().map(|z| z / n).collect())
}

/// Random normalized state on `modes`.
pub fn pure_state(modes: ModeSet) -> impl Strategy<Value = PureState> {
    proptest::collection::vec(c64(), modes.dim())
        .prop_filter_map("zero vector", normalized)
        .prop_map(move |v| PureState::from_amplitudes(modes, v).unwrap())
}

/// Random normalized state with total photon number at most the cutoff, so
/// that passive optics never leaks.
pub fn bounded_state(modes: ModeSet) -> impl Strategy<Value = PureState> {
    proptest::collection::vec(c64(), modes.dim())
        .prop_map(move |mut v| {
            for (i, z) in v.iter_mut().enumerate() {
                if modes.occupations(i).iter().sum::<usize>() > modes.cutoff() {
                    *z = C64::new(0.0, 0.0);
                }
            }
            v
        })
        .prop_filter_map("zero vector", normalized)
        .prop_map(move |v| PureState::from_amplitudes(modes, v).unwrap())
}

pub fn single_mode_state(cutoff: usize) -> impl Strategy<Value = PureState> {
    pure_state(ModeSet::single(cutoff).unwrap())
}

/// Random density matrix `G G^dagger / tr`.
pub fn mixed_state(modes: ModeSet) -> impl Strategy<Value = MixedState> {
    let d = modes.dim();
    proptest::collection::vec(c64(), d * d).prop_filter_map("degenerate", move |v| {
        let g = DMatrix::from_vec(d, d, v);
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        (tr > 1e-6).then(|| MixedState::from_matrix(modes, m / C64::new(tr, 0.0)).unwrap())
    })
}

pub fn beamsplitter() -> impl Strategy<Value = BeamSplitter> {
    (0.05..1.52f64, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU).prop_map(|(t, a, b)| {
        BeamSplitter::new(C64::from_polar(t.cos(), a), C64::from_polar(t.sin(), b)).unwrap()
    })
}

/// Normalized pixel coefficients with every magnitude at least `floor`.
pub fn pixel_coefficients(pixels: usize, floor: f64) -> impl Strategy<Value = Vec<C64>> {
    proptest::collection::vec((floor..1.0f64, 0.0..std::f64::consts::TAU), pixels).prop_map(|v| {
        let n = v.iter().map(|(r, _)| r * r).sum::<f64>().sqrt();
        v.into_iter().map(|(r, p)| C64::from_polar(r / n, p)).collect()
    })
}

/// Nonempty strict subset of `0..pixels` from a bit mask.
pub fn strict_subset(pixels: usize) -> impl Strategy<Value = Vec<usize>> {
    (1u32..(1 << pixels) - 1).prop_map(move |mask| (0..pixels).filter(|k| mask & (1 << k) != 0).collect())
}

pub fn split(psi: &PureState, bs: &BeamSplitter) -> PureState {
    vampire_core::apply_beamsplitter(&psi.embed(1), 0, 1, bs).unwrap().value
}

pub fn fock_mixed(cutoff: usize, n: usize) -> MixedState {
    MixedState::fock(ModeSet::single(cutoff).unwrap(), &[n]).unwrap()
}
