use crate::channels::{annihilate_cloud, attenuate_cloud, AttenuationChannel};
use crate::error::{Error, Result};
use crate::fock::{QuantumState, C64};
use crate::linear_optics::{cloud_mode_rotation, split_fock};

/// Pixels whose input intensity is below this fraction of the photon number
/// carry no meaningful ratio.
const DARK_PIXEL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ShadowMechanism {
    /// Conditioned annihilation of the cloud mode.
    Annihilation,
    /// Unconditioned loss with probability `gamma` on the cloud mode.
    Attenuation { gamma: f64 },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ShadowReport {
    pub mechanism: ShadowMechanism,
    pub input_photons: usize,
    pub coefficients: Vec<C64>,
    pub subset: Vec<usize>,
    pub input_profile: Vec<f64>,
    pub output_profile: Vec<f64>,
    /// `I_k / I_k^in`, absent on dark pixels.
    pub ratios: Vec<Option<f64>>,
    pub mean_ratio: f64,
    /// `max_k |ratio_k - mean_ratio|`.
    pub contrast: f64,
    pub covered_ratio: f64,
    pub uncovered_ratio: f64,
    pub total_input: f64,
    pub total_output: f64,
    /// Relative rate of the annihilation event; 1 for attenuation.
    pub event_rate: f64,
}

impl ShadowReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Sampled Gaussian beam profile over `pixels`, normalized.
pub fn gaussian_profile(pixels: usize, width: f64) -> Vec<C64> {
    let center = (pixels as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..pixels)
        .map(|k| (-((k as f64 - center) / width).powi(2) / 2.0).exp())
        .collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    raw.into_iter().map(|v| C64::new(v / norm, 0.0)).collect()
}

/// Splits `|input_photons>` over pixels by `coefficients` and acts on the
/// mode of the pixels in `subset`.
pub fn shadow_demo(
    coefficients: &[C64],
    subset: &[usize],
    mechanism: ShadowMechanism,
    input_photons: usize,
) -> Result<ShadowReport> {
    let pixels = coefficients.len();
    let rotation = cloud_mode_rotation(pixels, coefficients, subset)?;
    let beam = split_fock(input_photons, input_photons.max(1), coefficients)?;
    let input_profile = (0..pixels)
        .map(|k| beam.mean_photon_number(k))
        .collect::<Result<Vec<_>>>()?;

    let (output_profile, event_rate) = match mechanism {
        ShadowMechanism::Annihilation => {
            let (out, rate) = annihilate_cloud(&beam, &rotation)?;
            let profile = (0..pixels)
                .map(|k| out.mean_photon_number(k))
                .collect::<Result<Vec<_>>>()?;
            (profile, rate)
        }
        ShadowMechanism::Attenuation { gamma } => {
            let out = attenuate_cloud(&beam.to_mixed(), &rotation, &AttenuationChannel::new(gamma)?)?;
            let profile = (0..pixels)
                .map(|k| out.mean_photon_number(k))
                .collect::<Result<Vec<_>>>()?;
            (profile, 1.0)
        }
    };

    let floor = DARK_PIXEL * input_photons.max(1) as f64;
    let ratios: Vec<Option<f64>> = input_profile
        .iter()
        .zip(&output_profile)
        .map(|(&i, &o)| (i > floor).then(|| o / i))
        .collect();
    let lit: Vec<(usize, f64)> = ratios
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.map(|r| (k, r)))
        .collect();
    if lit.is_empty() {
        return Err(Error::invalid("beam carries no intensity"));
    }
    let mean = |it: &mut dyn Iterator<Item = f64>| {
        let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            f64::NAN
        } else {
            s / n as f64
        }
    };
    let mean_ratio = mean(&mut lit.iter().map(|&(_, r)| r));
    let contrast = lit.iter().map(|&(_, r)| (r - mean_ratio).abs()).fold(0.0, f64::max);
    let covered: Vec<usize> = rotation_subset(subset);
    let covered_ratio = mean(&mut lit.iter().filter(|(k, _)| covered.contains(k)).map(|&(_, r)| r));
    let uncovered_ratio = mean(&mut lit.iter().filter(|(k, _)| !covered.contains(k)).map(|&(_, r)| r));

    Ok(ShadowReport {
        mechanism,
        input_photons,
        coefficients: coefficients.to_vec(),
        subset: covered,
        total_input: input_profile.iter().sum(),
        total_output: output_profile.iter().sum(),
        input_profile,
        output_profile,
        ratios,
        mean_ratio,
        contrast,
        covered_ratio,
        uncovered_ratio,
        event_rate,
    })
}

fn rotation_subset(subset: &[usize]) -> Vec<usize> {
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annihilation_casts_no_shadow() {
        let c = gaussian_profile(4, 1.2);
        for subset in [vec![0], vec![1, 2], vec![0, 1, 3]] {
            let r = shadow_demo(&c, &subset, ShadowMechanism::Annihilation, 2).unwrap();
            assert!(r.contrast < 1e-12, "{subset:?}: {}", r.contrast);
            assert!((r.total_output - 1.0).abs() < 1e-12);
            for (o, ck) in r.output_profile.iter().zip(&c) {
                assert!((o - ck.norm_sqr()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attenuation_dims_the_cloud() {
        let c = gaussian_profile(4, 1.2);
        let r = shadow_demo(&c, &[1, 2], ShadowMechanism::Attenuation { gamma: 0.5 }, 2).unwrap();
        assert!(r.contrast > 0.0);
        assert!(r.covered_ratio < r.uncovered_ratio - 0.1, "{r:?}");
    }

    #[test]
    fn zero_attenuation_is_identity() {
        let c = gaussian_profile(3, 1.0);
        let r = shadow_demo(&c, &[0], ShadowMechanism::Attenuation { gamma: 0.0 }, 2).unwrap();
        for (i, o) in r.input_profile.iter().zip(&r.output_profile) {
            assert!((i - o).abs() < 1e-12);
        }
        assert!(r.contrast < 1e-12);
    }

    #[test]
    fn bad_subset_is_rejected() {
        let c = gaussian_profile(3, 1.0);
        assert!(shadow_demo(&c, &[], ShadowMechanism::Annihilation, 2).is_err());
        assert!(shadow_demo(&c, &[0, 1, 2], ShadowMechanism::Annihilation, 2).is_err());
    }
}
