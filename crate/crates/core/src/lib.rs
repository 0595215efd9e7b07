//! Truncated Fock-space simulation of linear optics, conditional photon
//! subtraction and homodyne tomography.
//!
//! The crate reproduces a simple but striking effect: when a nonclassical
//! state is split over two modes and a photon is annihilated in one of them,
//! the photon is removed from the *whole* original mode. Its shape is left
//! intact, so a partially covering absorber that heralds an annihilation
//! casts no shadow.

pub mod channels;
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod linear_optics;
pub mod scenarios;
pub mod tomography;

pub use error::{Error, Result};
pub use fock::{fidelity, trace_distance, MixedState, ModeSet, PureState, QuantumState, WithLeakage, C64};
pub use linear_optics::{apply_beamsplitter, cloud_mode_rotation, split_mode, BeamSplitter, CloudRotation, InterferometerPlan};
pub use channels::{
    attenuate, click_povm, condition_on_click, exact_annihilation, physical_subtraction, unconditional_map,
    AttenuationChannel, DetectorModel,
};
pub use homodyne::{marginal_distribution, quadrature_wavefunction, sample_quadratures, QuadratureDataset, QuadratureSample};
pub use tomography::{maxlik_reconstruct, photon_number_distribution, povm_element, TomographyResult, TomographySettings};
pub use scenarios::{
    bob_mean_photons, heralded_fock_prep, shadow_demo, vampire_pipeline, ExperimentConfig, ShadowMechanism,
    ShadowReport, VampireReport,
};
