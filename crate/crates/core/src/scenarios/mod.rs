//! End-to-end experiments built from the lower layers.

mod pipeline;
mod prep;
mod shadow;

pub use pipeline::{
    vampire_pipeline, vampire_pipeline_with, BranchReport, ExactReference, HistogramRow, SubtractionMode,
    VampireReport,
};
pub use prep::{heralded_fock_prep, tmsv_signal, two_mode_squeezed_vacuum, Heralded};
pub use shadow::{gaussian_profile, shadow_demo, ShadowMechanism, ShadowReport};

use crate::channels::{exact_annihilation, physical_subtraction, DetectorModel};
use crate::error::{Error, Result};
use crate::fock::{MixedState, ModeSet, PureState, QuantumState, C64};
use crate::homodyne::uniform_phases;
use crate::linear_optics::{apply_beamsplitter, BeamSplitter};

/// Parameters of the heralded-subtraction experiment.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    /// Two-mode squeezing parameter `s` of the down-converter.
    pub squeezing: f64,
    pub herald_detector: DetectorModel,
    /// Fraction of mode `a_1`'s energy routed to the subtraction detector.
    pub tap_reflectivity: f64,
    pub subtraction_detector: DetectorModel,
    pub split_mu: C64,
    pub split_lambda: C64,
    pub detection_efficiency: f64,
    pub samples_per_phase: usize,
    pub phases: Vec<f64>,
    pub cutoff: usize,
    pub seed: u64,
}

/// Calibrated per-pulse dark-count probability of the subtraction detector.
pub const DEFAULT_DARK_PROB: f64 = 0.004;
pub const DEFAULT_SQUEEZING: f64 = 0.1;

impl Default for ExperimentConfig {
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            squeezing: DEFAULT_SQUEEZING,
            herald_detector: DetectorModel::ideal(),
            tap_reflectivity: 0.06,
            subtraction_detector: DetectorModel::new(1.0, DEFAULT_DARK_PROB).expect("valid defaults"),
            split_mu: C64::new(h, 0.0),
            split_lambda: C64::new(h, 0.0),
            detection_efficiency: 0.53,
            samples_per_phase: 4000,
            phases: uniform_phases(12),
            cutoff: 5,
            seed: 20140801,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Error::invalid(format!("{name}: {msg}"));
        if !(self.squeezing > 0.0 && self.squeezing < 1.0) {
            return Err(field("squeezing", format!("{} outside (0, 1)", self.squeezing)));
        }
        DetectorModel::new(self.herald_detector.efficiency(), self.herald_detector.dark_prob())
            .map_err(|e| field("herald_detector", e.to_string()))?;
        DetectorModel::new(self.subtraction_detector.efficiency(), self.subtraction_detector.dark_prob())
            .map_err(|e| field("subtraction_detector", e.to_string()))?;
        if !(self.tap_reflectivity > 0.0 && self.tap_reflectivity < 1.0) {
            return Err(field(
                "tap_reflectivity",
                format!("{} outside (0, 1)", self.tap_reflectivity),
            ));
        }
        self.splitter().map_err(|e| field("split_mu/split_lambda", e.to_string()))?;
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(field(
                "detection_efficiency",
                format!("{} outside (0, 1]", self.detection_efficiency),
            ));
        }
        if self.samples_per_phase == 0 {
            return Err(field("samples_per_phase", "must be at least 1".into()));
        }
        if self.phases.is_empty() {
            return Err(field("phases", "need at least one phase".into()));
        }
        if let Some(p) = self.phases.iter().find(|p| !(0.0..std::f64::consts::PI).contains(*p)) {
            return Err(field("phases", format!("{p} outside [0, pi)")));
        }
        if self.cutoff < 3 {
            return Err(field("cutoff", format!("{} below 3", self.cutoff)));
        }
        Ok(())
    }

    pub fn splitter(&self) -> Result<BeamSplitter> {
        let bs = BeamSplitter::new(self.split_mu, self.split_lambda)?;
        bs.require_nonvanishing()?;
        Ok(bs)
    }
}

/// Mean photon number in Bob's output when `|n>` is split with
/// transmissivity `lambda_sq`, before or after annihilation on Alice's side.
pub fn bob_mean_photons(n: usize, lambda_sq: f64, subtracted: bool) -> Result<f64> {
    if !(lambda_sq > 0.0 && lambda_sq < 1.0) {
        return Err(Error::invalid(format!("lambda^2 = {lambda_sq} outside (0, 1)")));
    }
    if subtracted {
        if n == 0 {
            return Err(Error::invalid("cannot subtract a photon from the vacuum"));
        }
        Ok((n - 1) as f64 * lambda_sq)
    } else {
        Ok(n as f64 * lambda_sq)
    }
}

fn split_fock_state(n: usize, lambda_sq: f64, cutoff: usize) -> Result<PureState> {
    let bs = BeamSplitter::with_transmissivity(lambda_sq)?;
    bs.require_nonvanishing()?;
    let input = PureState::fock(ModeSet::single(cutoff)?, &[n])?.embed(1);
    Ok(apply_beamsplitter(&input, 0, 1, &bs)?.value)
}

/// Same quantity from the simulator, with exact annihilation on mode 0.
pub fn bob_mean_photons_simulated(n: usize, lambda_sq: f64, subtracted: bool) -> Result<f64> {
    let split = split_fock_state(n, lambda_sq, n.max(1) + 3)?;
    if subtracted {
        exact_annihilation(&split, 0)?.0.mean_photon_number(1)
    } else {
        split.mean_photon_number(1)
    }
}

/// Bob's mean photon number after subtraction through a physical tap on
/// Alice's mode. Returns the value and the heralding probability.
pub fn bob_mean_photons_tapped(
    n: usize,
    lambda_sq: f64,
    tap_reflectivity: f64,
    det: &DetectorModel,
) -> Result<(f64, f64)> {
    let split = MixedState::from(&split_fock_state(n, lambda_sq, n.max(1) + 3)?);
    let (post, p) = physical_subtraction(&split, 0, tap_reflectivity, det)?;
    Ok((post.mean_photon_number(1)?, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bob_mean_photons_examples() {
        assert_eq!(bob_mean_photons(2, 0.5, false).unwrap(), 1.0);
        assert_eq!(bob_mean_photons(2, 0.5, true).unwrap(), 0.5);
        assert_eq!(bob_mean_photons(1, 0.3, true).unwrap(), 0.0);
        assert!(bob_mean_photons(0, 0.5, true).is_err());
        for (n, l, s) in [(2, 0.5, false), (2, 0.5, true), (3, 0.2, true), (1, 0.7, true)] {
            let sim = bob_mean_photons_simulated(n, l, s).unwrap();
            assert!((sim - bob_mean_photons(n, l, s).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn default_config_is_valid() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.tap_reflectivity, 0.06);
        assert_eq!(c.detection_efficiency, 0.53);
        assert!((c.split_mu.re - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.phases.len(), 12);
    }

    #[test]
    fn config_validation_names_field() {
        let c = ExperimentConfig {
            tap_reflectivity: 1.5,
            ..Default::default()
        };
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("tap_reflectivity"), "{msg}");
    }
}
