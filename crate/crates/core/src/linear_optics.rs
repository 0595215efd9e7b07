//! Passive two-mode transformations and their chains.
//!
//! Convention: a [`BeamSplitter`] applied to modes `(i, j)` takes the input
//! mode sitting in slot `i` to the output modes with
//!
//! ```text
//!     a_in   = mu * a_i + lambda * a_j
//!     a_perp = conj(lambda) * a_i - conj(mu) * a_j
//! ```
//!
//! where `a_perp` is the input mode sitting in slot `j`. In the Schrodinger
//! picture the input creation operators are replaced by
//! `conj(mu) a_i^dag + conj(lambda) a_j^dag` and `lambda a_i^dag - mu a_j^dag`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{ModeSet, PureState, QuantumState, WithLeakage, C64, NORM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BeamSplitter {
    mu: C64,
    lambda: C64,
}

impl BeamSplitter {
    pub fn new(mu: C64, lambda: C64) -> Result<Self> {
        let total = mu.norm_sqr() + lambda.norm_sqr();
        if (total - 1.0).abs() > NORM_TOL || !total.is_finite() {
            return Err(Error::invalid(format!(
                "|mu|^2 + |lambda|^2 = {total}, expected 1"
            )));
        }
        Ok(Self { mu, lambda })
    }

    /// Real splitter sending fraction `lambda_sq` of the energy to the second port.
    pub fn with_transmissivity(lambda_sq: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda_sq) {
            return Err(Error::invalid(format!(
                "transmissivity {lambda_sq} outside [0, 1]"
            )));
        }
        Self::new(
            C64::new((1.0 - lambda_sq).sqrt(), 0.0),
            C64::new(lambda_sq.sqrt(), 0.0),
        )
    }

    pub fn balanced() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            mu: C64::new(h, 0.0),
            lambda: C64::new(h, 0.0),
        }
    }

    pub fn mu(&self) -> C64 {
        self.mu
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    /// The splitter undoing this one: `(conj(mu), lambda)`.
    pub fn inverse(&self) -> Self {
        Self {
            mu: self.mu.conj(),
            lambda: self.lambda,
        }
    }

    /// Both reflectivity and transmissivity must be nonzero to share a state
    /// between two parties.
    pub fn require_nonvanishing(&self) -> Result<()> {
        if self.mu.norm_sqr() < NORM_TOL || self.lambda.norm_sqr() < NORM_TOL {
            return Err(Error::invalid(
                "beam splitter coefficients must both be nonzero",
            ));
        }
        Ok(())
    }

    /// Transformation of the input creation operators onto output creation operators.
    fn creation_map(&self) -> [[C64; 2]; 2] {
        [
            [self.mu.conj(), self.lambda.conj()],
            [self.lambda, -self.mu],
        ]
    }

    /// Matrix on the two-mode truncated space, columns `|m, n>` with the
    /// first mode most significant. Output components with an occupation
    /// above the cutoff are dropped.
    pub fn fock_matrix(&self, cutoff: usize) -> DMatrix<C64> {
        let d = cutoff + 1;
        let fact: Vec<f64> = factorials(2 * cutoff);
        let binom = |n: usize, k: usize| fact[n] / (fact[k] * fact[n - k]);
        let [[u00, u01], [u10, u11]] = self.creation_map();

        let mut out = DMatrix::zeros(d * d, d * d);
        for m in 0..d {
            for n in 0..d {
                let total = m + n;
                let norm_in = (fact[m] * fact[n]).sqrt();
                for p in total.saturating_sub(cutoff)..=total.min(cutoff) {
                    let q = total - p;
                    let mut amp = C64::new(0.0, 0.0);
                    // k photons of the first input and p - k of the second end in output mode p
                    for k in p.saturating_sub(n)..=m.min(p) {
                        let l = p - k;
                        amp += u00.powu(k as u32)
                            * u01.powu((m - k) as u32)
                            * u10.powu(l as u32)
                            * u11.powu((n - l) as u32)
                            * (binom(m, k) * binom(n, l));
                    }
                    out[(p * d + q, m * d + n)] = amp * ((fact[p] * fact[q]).sqrt() / norm_in);
                }
            }
        }
        out
    }
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Applies `bs` to modes `i` (input mode `a`) and `j` (orthogonal input mode).
pub fn apply_beamsplitter<S: QuantumState>(
    state: &S,
    i: usize,
    j: usize,
    bs: &BeamSplitter,
) -> Result<WithLeakage<S>> {
    if i == j {
        return Err(Error::invalid("beam splitter needs two distinct modes"));
    }
    let before = state.weight();
    let out = state.apply_local(&[i, j], &bs.fock_matrix(state.modes().cutoff()))?;
    let leakage = (before - out.weight()).max(0.0);
    Ok(WithLeakage {
        value: out,
        leakage,
    }
    .warn_if_significant("apply_beamsplitter"))
}

/// Ordered list of beam splitters, applied first to last.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct InterferometerPlan {
    steps: Vec<(usize, usize, BeamSplitter)>,
}

impl InterferometerPlan {
    pub fn new(steps: Vec<(usize, usize, BeamSplitter)>) -> Result<Self> {
        if let Some((i, _, _)) = steps.iter().find(|(i, j, _)| i == j) {
            return Err(Error::invalid(format!("plan step uses mode {i} twice")));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[(usize, usize, BeamSplitter)] {
        &self.steps
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self {
            steps: self
                .steps
                .iter()
                .rev()
                .map(|&(i, j, bs)| (i, j, bs.inverse()))
                .collect(),
        }
    }

    pub fn apply<S: QuantumState>(&self, state: &S) -> Result<WithLeakage<S>> {
        let mut current = state.clone();
        let mut leakage = 0.0;
        for (i, j, bs) in &self.steps {
            let step = apply_beamsplitter(&current, *i, *j, bs)?;
            leakage += step.leakage;
            current = step.value;
        }
        Ok(WithLeakage {
            value: current,
            leakage,
        })
    }
}

fn check_coefficients(coefficients: &[C64]) -> Result<()> {
    if coefficients.is_empty() {
        return Err(Error::invalid("need at least one pixel coefficient"));
    }
    let total: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!(
            "pixel coefficients have squared norm {total}, expected 1"
        )));
    }
    Ok(())
}

/// Distributes a single-mode state over `K = coefficients.len()` pixel modes
/// so that the input mode becomes `sum_k c_k a_k`.
pub fn split_mode<S: QuantumState>(state: &S, coefficients: &[C64]) -> Result<S> {
    if state.modes().mode_count() != 1 {
        return Err(Error::invalid("split_mode expects a single-mode state"));
    }
    check_coefficients(coefficients)?;
    let k = coefficients.len();
    if k == 1 {
        // a = c_0 a_0 is a pure phase
        let d = state.modes().local_dim();
        let phase = DMatrix::from_fn(d, d, |r, c| {
            if r == c {
                coefficients[0].conj().powu(r as u32)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        return state.apply_local(&[0], &phase);
    }

    // remaining[k] = norm of (c_k, ..., c_{K-1})
    let mut remaining: Vec<f64> = vec![0.0; k + 1];
    for idx in (0..k).rev() {
        remaining[idx] = (remaining[idx + 1].powi(2) + coefficients[idx].norm_sqr()).sqrt();
    }
    let mut current = state.embed(k - 1);
    for step in 0..k - 1 {
        let r = remaining[step];
        if r < 1e-15 {
            break;
        }
        let lambda = if step == k - 2 {
            coefficients[k - 1] / r
        } else {
            C64::new(remaining[step + 1] / r, 0.0)
        };
        let bs = BeamSplitter::new(coefficients[step] / r, lambda)?;
        current = apply_beamsplitter(&current, step, step + 1, &bs)?.value;
    }
    Ok(current)
}

/// Basis change isolating the mode of a sub-aperture ("cloud") of pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudRotation {
    /// Maps the pixel basis to one where `cloud_mode` is the cloud mode.
    pub plan: InterferometerPlan,
    pub inverse: InterferometerPlan,
    /// Computational mode that carries the cloud mode after `plan`.
    pub cloud_mode: usize,
    /// Norm of the coefficient restriction, i.e. the cloud's amplitude share of the beam.
    pub overlap: f64,
    /// After `plan`, `a_{cloud_mode}` equals `phase * sum_{k in S} c_k a_k / overlap`.
    pub phase: C64,
    /// Normalized cloud-mode coefficients on every pixel (zero outside the subset).
    pub cloud_coefficients: Vec<C64>,
}

/// Givens chain folding `sum_{k in S} c_k a_k` (normalized) into one pixel mode.
pub fn cloud_mode_rotation(
    pixels: usize,
    coefficients: &[C64],
    subset: &[usize],
) -> Result<CloudRotation> {
    if coefficients.len() != pixels {
        return Err(Error::invalid(format!(
            "{} coefficients for {pixels} pixels",
            coefficients.len()
        )));
    }
    let mut subset = subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    if subset.is_empty() {
        return Err(Error::invalid("cloud subset is empty"));
    }
    if subset.len() >= pixels {
        return Err(Error::invalid(
            "cloud subset covers every pixel; the cloud mode is the beam itself",
        ));
    }
    if let Some(&bad) = subset.iter().find(|&&k| k >= pixels) {
        return Err(Error::invalid(format!("pixel {bad} out of range")));
    }
    let overlap = subset
        .iter()
        .map(|&k| coefficients[k].norm_sqr())
        .sum::<f64>()
        .sqrt();
    if overlap < 1e-12 {
        return Err(Error::invalid("beam has no amplitude on the cloud pixels"));
    }

    let mut cloud_coefficients = vec![C64::new(0.0, 0.0); pixels];
    for &k in &subset {
        cloud_coefficients[k] = coefficients[k] / overlap;
    }
    let active: Vec<usize> = subset
        .iter()
        .copied()
        .filter(|&k| cloud_coefficients[k].norm() > 1e-15)
        .collect();
    let anchor = active[0];
    let phase = C64::from_polar(1.0, -cloud_coefficients[anchor].arg());

    let mut steps = Vec::new();
    let mut acc = cloud_coefficients[anchor].norm();
    for &k in &active[1..] {
        let d = cloud_coefficients[k] * phase;
        let next = (acc * acc + d.norm_sqr()).sqrt();
        steps.push((anchor, k, BeamSplitter::new(C64::new(acc / next, 0.0), d / next)?));
        acc = next;
    }
    let plan = InterferometerPlan::new(steps)?;
    Ok(CloudRotation {
        inverse: plan.inverse(),
        plan,
        cloud_mode: anchor,
        overlap,
        phase,
        cloud_coefficients,
    })
}

/// Convenience: splits `|n>` over pixels.
pub fn split_fock(n: usize, cutoff: usize, coefficients: &[C64]) -> Result<PureState> {
    split_mode(&PureState::fock(ModeSet::single(cutoff)?, &[n])?, coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{MixedState, PureState};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn rejects_non_unit_coefficients() {
        assert!(BeamSplitter::new(c(0.5), c(0.5)).is_err());
        assert!(BeamSplitter::new(c(0.6), C64::new(0.0, 0.8)).is_ok());
        assert!(BeamSplitter::new(c(1.0), c(0.0)).unwrap().require_nonvanishing().is_err());
    }

    #[test]
    fn vacuum_is_invariant() {
        let m = ModeSet::new(2, 3).unwrap();
        let bs = BeamSplitter::new(C64::new(0.6, 0.2), C64::new(0.3, -(1.0f64 - 0.36 - 0.04 - 0.09).sqrt())).unwrap();
        let out = apply_beamsplitter(&PureState::vacuum(m), 0, 1, &bs).unwrap();
        assert!(out.value.distance(&PureState::vacuum(m)).unwrap() < NORM_TOL);
    }

    #[test]
    fn single_photon_splits_evenly() {
        let m = ModeSet::new(2, 3).unwrap();
        let out = apply_beamsplitter(&PureState::fock(m, &[1, 0]).unwrap(), 0, 1, &BeamSplitter::balanced())
            .unwrap()
            .value;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitude(&[1, 0]).unwrap() - c(h)).norm() < NORM_TOL);
        assert!((out.amplitude(&[0, 1]).unwrap() - c(h)).norm() < NORM_TOL);
    }

    #[test]
    fn hong_ou_mandel() {
        let m = ModeSet::new(2, 3).unwrap();
        let out = apply_beamsplitter(&PureState::fock(m, &[1, 1]).unwrap(), 0, 1, &BeamSplitter::balanced())
            .unwrap()
            .value;
        // brute force: (a^dag + b^dag)(a^dag - b^dag)/2 |0> = (sqrt2|2,0> - sqrt2|0,2>)/2
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitude(&[2, 0]).unwrap() - c(h)).norm() < NORM_TOL);
        assert!((out.amplitude(&[0, 2]).unwrap() + c(h)).norm() < NORM_TOL);
        assert!(out.amplitude(&[1, 1]).unwrap().norm() < NORM_TOL);
    }

    #[test]
    fn same_mode_is_rejected() {
        let m = ModeSet::new(2, 3).unwrap();
        assert!(apply_beamsplitter(&PureState::vacuum(m), 1, 1, &BeamSplitter::balanced()).is_err());
    }

    #[test]
    fn leakage_reported_near_cutoff() {
        let m = ModeSet::new(2, 2).unwrap();
        let out = apply_beamsplitter(&PureState::fock(m, &[2, 1]).unwrap(), 0, 1, &BeamSplitter::balanced()).unwrap();
        assert!(out.leakage > 0.1);
        assert!((out.leakage + out.value.norm_sqr() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn split_mode_examples() {
        let s = split_fock(2, 3, &[c(1.0), c(0.0), c(0.0)]).unwrap();
        assert!(s.distance(&PureState::fock(ModeSet::new(3, 3).unwrap(), &[2, 0, 0]).unwrap()).unwrap() < NORM_TOL);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = split_fock(2, 3, &[c(h), c(h)]).unwrap();
        assert!((s.mean_photon_number(0).unwrap() - 1.0).abs() < NORM_TOL);
        assert!((s.mean_photon_number(1).unwrap() - 1.0).abs() < NORM_TOL);

        let s = split_fock(1, 2, &[c(0.5); 4]).unwrap();
        for k in 0..4 {
            assert!((s.mean_photon_number(k).unwrap() - 0.25).abs() < NORM_TOL);
        }

        assert!(split_fock(1, 2, &[c(0.5), c(0.5)]).is_err());
    }

    #[test]
    fn split_mode_realizes_mode_decomposition() {
        // a^dag = sum conj(c_k) a_k^dag on a single photon
        let coeffs = [C64::new(0.5, 0.1), C64::new(-0.3, 0.4), C64::new(0.0, 0.0)];
        let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut coeffs = coeffs.map(|z| z / norm);
        coeffs[2] = C64::new(0.0, 0.0);
        let s = split_fock(1, 2, &coeffs).unwrap();
        let m = ModeSet::new(3, 2).unwrap();
        for (k, ck) in coeffs.iter().enumerate() {
            let mut occ = [0; 3];
            occ[k] = 1;
            let a = s.amplitude(&occ).unwrap();
            assert!((a - ck.conj()).norm() < NORM_TOL, "pixel {k}: {a} vs {}", ck.conj());
        }
        assert_eq!(s.modes(), &m);
    }

    #[test]
    fn cloud_rotation_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rot = cloud_mode_rotation(2, &[c(h), c(h)], &[0]).unwrap();
        assert!(rot.plan.is_identity());
        assert_eq!(rot.cloud_mode, 0);
        assert!((rot.overlap - h).abs() < NORM_TOL);

        assert!(cloud_mode_rotation(2, &[c(h), c(h)], &[0, 1]).is_err());
        assert!(cloud_mode_rotation(2, &[c(h), c(h)], &[]).is_err());
        assert!(cloud_mode_rotation(3, &[c(1.0), c(0.0), c(0.0)], &[1, 2]).is_err());
    }

    #[test]
    fn cloud_rotation_round_trip() {
        let third = (1.0f64 / 3.0).sqrt();
        let rot = cloud_mode_rotation(3, &[c(third); 3], &[0, 1]).unwrap();
        let m = ModeSet::new(3, 2).unwrap();
        let amps: Vec<C64> = (0..m.dim())
            .map(|i| C64::new(((i * 7) % 11) as f64 - 5.0, ((i * 3) % 5) as f64 - 2.0))
            .collect();
        let psi = PureState::from_amplitudes(m, amps).unwrap().normalize().unwrap().0;
        // photon number is conserved, but products with n_i + n_j > cutoff leak; use a safe cutoff
        let m_big = ModeSet::new(3, 4).unwrap();
        let low: Vec<C64> = (0..m_big.dim())
            .map(|i| {
                let occ = m_big.occupations(i);
                if occ.iter().sum::<usize>() <= 2 {
                    psi.amplitude(&occ).unwrap_or(C64::new(0.0, 0.0))
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        let psi = PureState::from_amplitudes(m_big, low).unwrap();
        let there = rot.plan.apply(&psi).unwrap();
        assert!(there.leakage < NORM_TOL);
        let back = rot.inverse.apply(&there.value).unwrap().value;
        assert!(back.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn mixed_beamsplitter_matches_pure() {
        let m = ModeSet::new(2, 3).unwrap();
        let psi = PureState::fock(m, &[1, 1]).unwrap();
        let bs = BeamSplitter::with_transmissivity(0.3).unwrap();
        let p = apply_beamsplitter(&psi, 0, 1, &bs).unwrap().value.to_mixed();
        let r = apply_beamsplitter(&MixedState::from(&psi), 0, 1, &bs).unwrap().value;
        assert!(p.max_abs_diff(&r).unwrap() < 1e-14);
    }
}
