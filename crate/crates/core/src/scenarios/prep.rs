use crate::channels::condition_on_click;
use crate::error::{Error, Result};
use crate::fock::{MixedState, ModeSet, PureState, QuantumState, WithLeakage, C64};
use crate::linear_optics::{apply_beamsplitter, BeamSplitter};

use super::ExperimentConfig;

/// Largest tolerated squeezing tail beyond the cutoff.
const MAX_TMSV_LEAKAGE: f64 = 1e-8;

/// Heralded signal state together with the herald probability.
#[derive(Debug, Clone)]
pub struct Heralded {
    pub state: MixedState,
    pub probability: f64,
}

/// `sqrt(1 - s^2) sum_n s^n |n, n>` on (signal, idler), truncated at `cutoff`.
pub fn two_mode_squeezed_vacuum(squeezing: f64, cutoff: usize) -> Result<WithLeakage<PureState>> {
    if !(squeezing > 0.0 && squeezing < 1.0) {
        return Err(Error::invalid(format!("squeezing {squeezing} outside (0, 1)")));
    }
    let leakage = squeezing.powi(2 * (cutoff as i32 + 1));
    if leakage >= MAX_TMSV_LEAKAGE {
        return Err(Error::TruncationRisk(format!(
            "squeezing {squeezing} leaks {leakage:e} beyond cutoff {cutoff}"
        )));
    }
    let modes = ModeSet::new(2, cutoff)?;
    let mut amps = vec![C64::new(0.0, 0.0); modes.dim()];
    let norm = (1.0 - squeezing * squeezing).sqrt();
    for n in 0..=cutoff {
        amps[modes.index_of(&[n, n])?] = C64::new(norm * squeezing.powi(n as i32), 0.0);
    }
    let state = PureState::from_amplitudes(modes, amps)?;
    let (state, _) = state.normalize()?;
    Ok(WithLeakage { value: state, leakage })
}

/// Signal state with the idler ignored (thermal).
pub fn tmsv_signal(config: &ExperimentConfig) -> Result<MixedState> {
    let tmsv = two_mode_squeezed_vacuum(config.squeezing, config.cutoff)?.value;
    MixedState::from(&tmsv).partial_trace(&[0])
}

/// Heralds an `n`-photon signal by clicks on one (`n = 1`) or two
/// (`n = 2`, idler split 50:50) detectors.
pub fn heralded_fock_prep(config: &ExperimentConfig, n: usize) -> Result<Heralded> {
    let tmsv = MixedState::from(&two_mode_squeezed_vacuum(config.squeezing, config.cutoff)?.value);
    let det = &config.herald_detector;
    match n {
        1 => {
            let (state, probability) = condition_on_click(&tmsv, 1, det)?;
            Ok(Heralded { state, probability })
        }
        2 => {
            let split = apply_beamsplitter(&tmsv.embed(1), 1, 2, &BeamSplitter::balanced())?.value;
            let (one, p1) = condition_on_click(&split, 2, det)?;
            let (state, p2) = condition_on_click(&one, 1, det)?;
            Ok(Heralded {
                state,
                probability: p1 * p2,
            })
        }
        _ => Err(Error::invalid(format!("heralded preparation supports n = 1 or 2, got {n}"))),
    }
}
