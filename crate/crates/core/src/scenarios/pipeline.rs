use crate::channels::{
    attenuate, exact_annihilation, physical_subtraction, unconditional_map, AttenuationChannel,
};
use crate::error::Result;
use crate::fock::{fidelity, MixedState, ModeSet, QuantumState};
use crate::homodyne::{histogram, marginal_distribution, sample_quadratures, uniform_grid, GRID_HALF_WIDTH};
use crate::linear_optics::apply_beamsplitter;
use crate::tomography::{maxlik_reconstruct, TomographyRecord, TomographySettings};

use super::{heralded_fock_prep, ExperimentConfig};

/// Width of the plotted marginal-histogram bins.
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.2;

/// How the photon is removed from Alice's share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubtractionMode {
    /// Weak tap onto a click detector.
    Physical,
    /// The bare annihilation operator.
    Exact,
    /// Nothing is removed; only the unconditioned branch is produced.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HistogramRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: u64,
    /// Phase-averaged marginal density of the detected state at the bin center.
    pub theory_density: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BranchReport {
    pub label: String,
    /// Herald probability times the branch's own event probability.
    pub heralding_probability: f64,
    /// Photon number the branch ideally ends up with.
    pub target_photons: usize,
    /// Diagonal of mode `a` after recombination, before detection loss.
    pub true_photon_numbers: Vec<f64>,
    pub true_fidelity: f64,
    /// Population of the `a_perp` output of the recombining beamsplitter.
    pub perp_population: f64,
    pub reconstructed_photon_numbers: Vec<f64>,
    pub reconstructed_fidelity: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub tomography: TomographyRecord,
    pub histogram: Vec<HistogramRow>,
}

/// Recombined `a_perp` population when the photon is removed by the bare
/// annihilation operator.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExactReference {
    pub perp_population: f64,
    pub fidelity_next_lower: f64,
    pub relative_rate: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct VampireReport {
    pub target_photons: usize,
    pub mode: SubtractionMode,
    pub config: ExperimentConfig,
    pub herald_probability: f64,
    pub unconditioned: BranchReport,
    pub conditioned: Option<BranchReport>,
    pub exact_reference: ExactReference,
}

impl VampireReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn branches(&self) -> impl Iterator<Item = &BranchReport> {
        std::iter::once(&self.unconditioned).chain(self.conditioned.as_ref())
    }
}

impl BranchReport {
    /// `bin_left,bin_right,count,theory_density` with a header line.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count,theory_density\n");
        for r in &self.histogram {
            out.push_str(&format!(
                "{:.4},{:.4},{},{:.10e}\n",
                r.bin_left, r.bin_right, r.count, r.theory_density
            ));
        }
        out
    }
}

/// Heralded `|n>` through the tap-based subtraction experiment.
pub fn vampire_pipeline(config: &ExperimentConfig, n: usize) -> Result<VampireReport> {
    vampire_pipeline_with(config, n, SubtractionMode::Physical)
}

pub fn vampire_pipeline_with(config: &ExperimentConfig, n: usize, mode: SubtractionMode) -> Result<VampireReport> {
    config.validate()?;
    let bs = config.splitter()?;
    let herald = heralded_fock_prep(config, n)?;
    let split = apply_beamsplitter(&herald.state.embed(1), 0, 1, &bs)?.value;

    let recombine = |s: &MixedState| -> Result<MixedState> {
        Ok(apply_beamsplitter(s, 0, 1, &bs.inverse())?.value)
    };

    let (exact_state, rate) = exact_annihilation(&split, 0)?;
    let exact_out = recombine(&exact_state)?;
    let exact_reference = ExactReference {
        perp_population: perp_population(&exact_out)?,
        fidelity_next_lower: fock_fidelity(&exact_out.partial_trace(&[0])?, n - 1)?,
        relative_rate: rate,
    };

    let det = &config.subtraction_detector;
    let (unconditioned, conditioned) = match mode {
        SubtractionMode::Physical => {
            let u = unconditional_map(&split, 0, config.tap_reflectivity, det)?;
            let (c, p) = physical_subtraction(&split, 0, config.tap_reflectivity, det)?;
            ((u, 1.0), Some((c, p)))
        }
        SubtractionMode::Exact => ((split.clone(), 1.0), Some((exact_state, rate))),
        SubtractionMode::Disabled => ((split.clone(), 1.0), None),
    };

    let unconditioned = run_branch(
        config,
        "unconditioned",
        &recombine(&unconditioned.0)?,
        herald.probability * unconditioned.1,
        n,
        config.seed,
    )?;
    let conditioned = match conditioned {
        Some((state, p)) => Some(run_branch(
            config,
            "conditioned",
            &recombine(&state)?,
            herald.probability * p,
            n - 1,
            config.seed.wrapping_add(1),
        )?),
        None => None,
    };

    Ok(VampireReport {
        target_photons: n,
        mode,
        config: config.clone(),
        herald_probability: herald.probability,
        unconditioned,
        conditioned,
        exact_reference,
    })
}

fn perp_population(recombined: &MixedState) -> Result<f64> {
    Ok(recombined.mode_populations(1)?.iter().skip(1).sum())
}

fn fock_fidelity(rho: &MixedState, n: usize) -> Result<f64> {
    let target = MixedState::fock(*rho.modes(), &[n])?;
    fidelity(rho, &target)
}

fn run_branch(
    config: &ExperimentConfig,
    label: &str,
    recombined: &MixedState,
    heralding_probability: f64,
    target: usize,
    seed: u64,
) -> Result<BranchReport> {
    let signal = recombined.partial_trace(&[0])?;
    let detected = attenuate(
        &signal,
        0,
        &AttenuationChannel::with_efficiency(config.detection_efficiency)?,
    )?;
    let data = sample_quadratures(&detected, &config.phases, config.samples_per_phase, seed)?.with_label(label);
    let settings = TomographySettings {
        cutoff: config.cutoff,
        efficiency_compensation: config.detection_efficiency,
        ..Default::default()
    };
    let result = maxlik_reconstruct(&data, &settings)?;
    let tomography = result.to_record();
    let recon_modes = ModeSet::single(config.cutoff)?;
    let reconstructed_fidelity = if target <= config.cutoff {
        fidelity(&result.rho, &MixedState::fock(recon_modes, &[target])?)?
    } else {
        0.0
    };

    Ok(BranchReport {
        label: label.to_string(),
        heralding_probability,
        target_photons: target,
        true_photon_numbers: signal.photon_number_distribution(),
        true_fidelity: fock_fidelity(&signal, target)?,
        perp_population: perp_population(recombined)?,
        reconstructed_photon_numbers: tomography.photon_numbers.clone(),
        reconstructed_fidelity,
        sample_count: data.len(),
        seed,
        tomography,
        histogram: histogram_rows(&detected, &config.phases, data.samples.iter().map(|s| s.value))?,
    })
}

fn histogram_rows(
    detected: &MixedState,
    phases: &[f64],
    values: impl IntoIterator<Item = f64>,
) -> Result<Vec<HistogramRow>> {
    let edges = uniform_grid(GRID_HALF_WIDTH, HISTOGRAM_BIN_WIDTH);
    let counts = histogram(values, &edges);
    let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut density = vec![0.0; centers.len()];
    for &phase in phases {
        for (d, p) in density.iter_mut().zip(marginal_distribution(detected, phase, &centers)?) {
            *d += p / phases.len() as f64;
        }
    }
    Ok(edges
        .windows(2)
        .zip(counts)
        .zip(density)
        .map(|((w, count), theory_density)| HistogramRow {
            bin_left: w[0],
            bin_right: w[1],
            count,
            theory_density,
        })
        .collect())
}
