//! Non-unitary operations: exact photon annihilation, the tap-and-click
//! subtraction apparatus, photon loss, and threshold-detector POVMs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{MixedState, QuantumState, C64};
use crate::linear_optics::{apply_beamsplitter, BeamSplitter, CloudRotation};

/// Heralding events below this probability are treated as impossible.
pub const MIN_EVENT_PROBABILITY: f64 = 1e-15;

/// Threshold ("bucket") single-photon detector.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorModel {
    efficiency: f64,
    dark_prob: f64,
    number_resolving: bool,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::invalid(format!(
                "detector efficiency {efficiency} outside [0, 1]"
            )));
        }
        if !(0.0..1.0).contains(&dark_prob) {
            return Err(Error::invalid(format!(
                "dark-count probability {dark_prob} outside [0, 1)"
            )));
        }
        Ok(Self {
            efficiency,
            dark_prob,
            number_resolving: false,
        })
    }

    /// Unit efficiency, no dark counts.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_prob: 0.0,
            number_resolving: false,
        }
    }

    /// Diagnostic mode: a "click" means exactly one registered count.
    pub fn number_resolving(mut self, on: bool) -> Self {
        self.number_resolving = on;
        self
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_prob(&self) -> f64 {
        self.dark_prob
    }

    pub fn is_number_resolving(&self) -> bool {
        self.number_resolving
    }

    /// Probability of registering no count given `n` incident photons. Dark
    /// counts are independent of the signal and OR-ed with true detections.
    pub fn no_click_prob(&self, n: usize) -> f64 {
        (1.0 - self.dark_prob) * (1.0 - self.efficiency).powi(n as i32)
    }

    /// Probability of exactly one registered count given `n` incident photons.
    pub fn single_count_prob(&self, n: usize) -> f64 {
        let miss = 1.0 - self.efficiency;
        let one_true = if n == 0 {
            0.0
        } else {
            n as f64 * self.efficiency * miss.powi(n as i32 - 1)
        };
        (1.0 - self.dark_prob) * one_true + self.dark_prob * miss.powi(n as i32)
    }

    /// Diagonal of the operator for the heralding outcome.
    pub fn herald_element(&self, n: usize) -> f64 {
        if self.number_resolving {
            self.single_count_prob(n)
        } else {
            1.0 - self.no_click_prob(n)
        }
    }
}

/// Diagonal two-outcome POVM in the photon-number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickPovm {
    pub no_click: Vec<f64>,
    pub click: Vec<f64>,
}

impl ClickPovm {
    pub fn no_click_matrix(&self) -> DMatrix<C64> {
        diag(&self.no_click)
    }

    pub fn click_matrix(&self) -> DMatrix<C64> {
        diag(&self.click)
    }
}

fn diag(v: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        v.len(),
        v.iter().map(|&x| C64::new(x, 0.0)),
    ))
}

/// Click / no-click elements on a single mode of dimension `dim`.
pub fn click_povm(det: &DetectorModel, dim: usize) -> ClickPovm {
    let no_click: Vec<f64> = (0..dim).map(|n| det.no_click_prob(n)).collect();
    let click = no_click.iter().map(|p| 1.0 - p).collect();
    ClickPovm { no_click, click }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Click,
    NoClick,
}

/// Loss channel removing fraction `gamma` of the energy of one mode.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttenuationChannel {
    gamma: f64,
}

impl AttenuationChannel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!("loss {gamma} outside [0, 1]")));
        }
        Ok(Self { gamma })
    }

    /// Channel with transmissivity `eta`.
    pub fn with_efficiency(eta: f64) -> Result<Self> {
        Self::new(1.0 - eta)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Kraus operators `E_k |n> = sqrt(C(n,k) (1-gamma)^(n-k) gamma^k) |n-k>`.
    pub fn kraus_operators(&self, cutoff: usize) -> Vec<DMatrix<C64>> {
        let d = cutoff + 1;
        let keep = 1.0 - self.gamma;
        (0..d)
            .map(|k| {
                let mut e = DMatrix::zeros(d, d);
                for n in k..d {
                    let w = binomial(n, k) * keep.powi((n - k) as i32) * self.gamma.powi(k as i32);
                    e[(n - k, n)] = C64::new(w.sqrt(), 0.0);
                }
                e
            })
            .collect()
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Normalized `a|psi>` (or `a rho a^dag`) and its relative rate `<n_mode>`.
pub fn exact_annihilation<S: QuantumState>(state: &S, mode: usize) -> Result<(S, f64)> {
    let before = state.weight();
    if before <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let lowered = state.apply_annihilation(mode)?;
    let rate = lowered.weight() / before;
    let (normalized, _) = lowered.normalize()?;
    Ok((normalized, rate))
}

/// Annihilation of the cloud mode of a pixelated beam, by conjugation with
/// the cloud rotation.
pub fn annihilate_cloud<S: QuantumState>(state: &S, rotation: &CloudRotation) -> Result<(S, f64)> {
    let rotated = rotation.plan.apply(state)?.value;
    let (lowered, rate) = exact_annihilation(&rotated, rotation.cloud_mode)?;
    Ok((rotation.inverse.apply(&lowered)?.value, rate))
}

/// Applies the outcome element on `mode`, traces that mode out and
/// renormalizes. Returns the conditional state and the outcome probability.
pub fn condition_on(
    state: &MixedState,
    mode: usize,
    det: &DetectorModel,
    outcome: Outcome,
) -> Result<(MixedState, f64)> {
    state.modes().check_mode(mode)?;
    if state.modes().mode_count() < 2 {
        return Err(Error::invalid(
            "conditioning needs at least one mode left after tracing out the detector",
        ));
    }
    let total = state.trace();
    if total <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let keep: Vec<usize> = (0..state.modes().mode_count()).filter(|&m| m != mode).collect();
    let reduced = state.weighted_partial_trace(&keep, |occ| {
        let n = occ[0];
        match outcome {
            Outcome::Click => det.herald_element(n),
            Outcome::NoClick => det.no_click_prob(n),
        }
    })?;
    let probability = reduced.trace() / total;
    if probability < MIN_EVENT_PROBABILITY {
        return Err(Error::ImpossibleEvent { probability });
    }
    let (normalized, _) = reduced.normalize()?;
    let weight = state.trace_weight() * probability;
    Ok((normalized.with_trace_weight(weight), probability))
}

pub fn condition_on_click(state: &MixedState, mode: usize, det: &DetectorModel) -> Result<(MixedState, f64)> {
    condition_on(state, mode, det, Outcome::Click)
}

fn check_tap(tap_reflectivity: f64) -> Result<()> {
    if !(tap_reflectivity > 0.0 && tap_reflectivity < 1.0) {
        return Err(Error::invalid(format!(
            "tap reflectivity {tap_reflectivity} outside (0, 1)"
        )));
    }
    Ok(())
}

/// State with a vacuum tap mode appended and fraction `tap` of `mode`'s
/// energy routed into it.
fn tap_off(state: &MixedState, mode: usize, tap: f64) -> Result<(MixedState, usize)> {
    state.modes().check_mode(mode)?;
    let embedded = state.embed(1);
    let tap_mode = embedded.modes().mode_count() - 1;
    let bs = BeamSplitter::with_transmissivity(tap)?;
    Ok((apply_beamsplitter(&embedded, mode, tap_mode, &bs)?.value, tap_mode))
}

/// Photon subtraction as done in the lab: weakly reflect `mode` onto a
/// detector and keep the events where it clicks.
pub fn physical_subtraction(
    state: &MixedState,
    mode: usize,
    tap_reflectivity: f64,
    det: &DetectorModel,
) -> Result<(MixedState, f64)> {
    check_tap(tap_reflectivity)?;
    let (tapped, tap_mode) = tap_off(state, mode, tap_reflectivity)?;
    condition_on_click(&tapped, tap_mode, det)
}

/// The subtraction apparatus with the detector outcome ignored.
pub fn unconditional_map(
    state: &MixedState,
    mode: usize,
    tap_reflectivity: f64,
    det: &DetectorModel,
) -> Result<MixedState> {
    if tap_reflectivity == 0.0 {
        state.modes().check_mode(mode)?;
        return Ok(state.clone());
    }
    check_tap(tap_reflectivity)?;
    let (tapped, tap_mode) = tap_off(state, mode, tap_reflectivity)?;
    let povm = click_povm(det, state.modes().local_dim());
    let keep: Vec<usize> = (0..tap_mode).collect();
    tapped.weighted_partial_trace(&keep, |occ| povm.click[occ[0]] + povm.no_click[occ[0]])
}

/// Photon loss on one mode in Kraus form.
pub fn attenuate(state: &MixedState, mode: usize, channel: &AttenuationChannel) -> Result<MixedState> {
    state.modes().check_mode(mode)?;
    if channel.gamma() == 0.0 {
        return Ok(state.clone());
    }
    let mut acc: Option<MixedState> = None;
    for e in channel.kraus_operators(state.modes().cutoff()) {
        let term = state.apply_local(&[mode], &e)?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    Ok(acc.expect("at least one Kraus operator"))
}

/// Loss applied to the cloud mode of a pixelated beam.
pub fn attenuate_cloud(
    state: &MixedState,
    rotation: &CloudRotation,
    channel: &AttenuationChannel,
) -> Result<MixedState> {
    let rotated = rotation.plan.apply(state)?.value;
    let lossy = attenuate(&rotated, rotation.cloud_mode, channel)?;
    Ok(rotation.inverse.apply(&lossy)?.value)
}
