//! Shared fixtures for the simulator benchmarks.

use vampire_core::homodyne::uniform_phases;
use vampire_core::scenarios::ExperimentConfig;
use vampire_core::tomography::MaxLikProblem;
use vampire_core::{
    apply_beamsplitter, attenuate, sample_quadratures, AttenuationChannel, BeamSplitter, MixedState, ModeSet,
    PureState, QuantumState, TomographySettings,
};

/// `|n>` on mode 0 split 50:50 with mode 1, as a density matrix.
pub fn split_fock(n: usize, cutoff: usize) -> MixedState {
    let psi = PureState::fock(ModeSet::single(cutoff).expect("cutoff"), &[n]).expect("fock");
    let split = apply_beamsplitter(&psi.embed(1), 0, 1, &BeamSplitter::balanced()).expect("split");
    MixedState::from(&split.value)
}

/// Binned tomography problem for a lossy `|n>` with 12 phases.
pub fn tomography_problem(n: usize, samples_per_phase: usize) -> (MaxLikProblem, TomographySettings) {
    let settings = TomographySettings {
        efficiency_compensation: 0.53,
        ..Default::default()
    };
    let rho = MixedState::fock(ModeSet::single(settings.cutoff).expect("cutoff"), &[n]).expect("fock");
    let lossy = attenuate(&rho, 0, &AttenuationChannel::with_efficiency(0.53).expect("eta")).expect("loss");
    let data = sample_quadratures(&lossy, &uniform_phases(12), samples_per_phase, 1).expect("samples");
    (MaxLikProblem::from_dataset(&data, &settings).expect("problem"), settings)
}

/// Default experiment with fewer samples.
pub fn quick_config(samples_per_phase: usize) -> ExperimentConfig {
    ExperimentConfig {
        samples_per_phase,
        ..Default::default()
    }
}
