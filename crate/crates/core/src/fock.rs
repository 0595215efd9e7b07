//! Truncated multimode Fock space.
//!
//! A [`ModeSet`] fixes the number of bosonic modes and a common per-mode
//! photon-number cutoff. Basis states are occupation tuples `(n_0, ..., n_{M-1})`
//! laid out row-major with mode 0 most significant, so the flat index is
//! `sum_k n_k (cutoff+1)^(M-1-k)`.
//!
//! [`PureState`] stores a dense amplitude vector, [`MixedState`] a dense
//! density matrix. Both carry a weight scalar: the probability of the
//! conditioning events that produced them, kept separate from the
//! (normalized) amplitudes so that heralding rates are never lost.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for Hermiticity and positivity checks.
pub const PHYSICAL_TOL: f64 = 1e-10;
/// Tolerance for norm identities.
pub const NORM_TOL: f64 = 1e-12;
/// Leakage above this level is logged as a truncation warning.
pub const LEAKAGE_WARN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ModeSet {
    mode_count: usize,
    cutoff: usize,
}

impl ModeSet {
    pub fn new(mode_count: usize, cutoff: usize) -> Result<Self> {
        if mode_count == 0 {
            return Err(Error::invalid("mode_count must be at least 1"));
        }
        if cutoff == 0 {
            return Err(Error::invalid("cutoff must be at least 1"));
        }
        let local = cutoff + 1;
        if local.checked_pow(mode_count as u32).is_none_or(|d| d > 1 << 26) {
            return Err(Error::invalid(format!(
                "basis of {mode_count} modes at cutoff {cutoff} is too large"
            )));
        }
        Ok(Self { mode_count, cutoff })
    }

    pub fn single(cutoff: usize) -> Result<Self> {
        Self::new(1, cutoff)
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Dimension of a single mode's truncated space.
    pub fn local_dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.mode_count as u32)
    }

    pub fn stride(&self, mode: usize) -> usize {
        self.local_dim().pow((self.mode_count - 1 - mode) as u32)
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.mode_count {
            Err(Error::ModeOutOfRange {
                mode,
                mode_count: self.mode_count,
            })
        } else {
            Ok(())
        }
    }

    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.mode_count {
            return Err(Error::invalid(format!(
                "expected {} occupations, got {}",
                self.mode_count,
                occupations.len()
            )));
        }
        let mut index = 0;
        for (mode, &n) in occupations.iter().enumerate() {
            if n > self.cutoff {
                return Err(Error::CutoffViolation {
                    mode,
                    occupation: n,
                    cutoff: self.cutoff,
                });
            }
            index = index * self.local_dim() + n;
        }
        Ok(index)
    }

    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.local_dim()
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        (0..self.mode_count)
            .map(|m| self.occupation(index, m))
            .collect()
    }

    /// The same cutoff with `extra` additional modes appended.
    pub fn extended(&self, extra: usize) -> Result<Self> {
        Self::new(self.mode_count + extra, self.cutoff)
    }

    fn ensure_same(&self, other: &ModeSet) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ModeSetMismatch)
        }
    }
}

/// A value together with the squared-norm (or trace) lost to truncation while
/// producing it.
#[derive(Debug, Clone)]
pub struct WithLeakage<T> {
    pub value: T,
    pub leakage: f64,
}

impl<T> WithLeakage<T> {
    pub fn exact(value: T) -> Self {
        Self {
            value,
            leakage: 0.0,
        }
    }

    /// Logs a truncation warning when the leakage is significant.
    pub fn warn_if_significant(self, op: &str) -> Self {
        if self.leakage > LEAKAGE_WARN {
            log::warn!("{op}: truncation leakage {:.3e}", self.leakage);
        }
        self
    }

    pub fn into_value(self) -> T {
        self.value
    }
}

/// Single-mode annihilation operator on the local space.
pub fn annihilation_matrix(cutoff: usize) -> DMatrix<C64> {
    let d = cutoff + 1;
    DMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Single-mode creation operator, truncated: the image of `|cutoff>` is dropped.
pub fn creation_matrix(cutoff: usize) -> DMatrix<C64> {
    annihilation_matrix(cutoff).adjoint()
}

/// Applies `op`, an operator on the tensor product of the `targets` modes
/// (first target most significant), to a full-space vector.
pub fn apply_local(modes: &ModeSet, targets: &[usize], op: &DMatrix<C64>, vec: &[C64]) -> Vec<C64> {
    let ld = modes.local_dim();
    let local_dim = ld.pow(targets.len() as u32);
    debug_assert_eq!(op.nrows(), local_dim);
    debug_assert_eq!(vec.len(), modes.dim());

    let offsets: Vec<usize> = (0..local_dim)
        .map(|l| {
            let mut rem = l;
            let mut off = 0;
            for &t in targets.iter().rev() {
                off += (rem % ld) * modes.stride(t);
                rem /= ld;
            }
            off
        })
        .collect();

    let mut out = vec![C64::new(0.0, 0.0); vec.len()];
    let mut local = vec![C64::new(0.0, 0.0); local_dim];
    for base in 0..modes.dim() {
        if targets.iter().any(|&t| modes.occupation(base, t) != 0) {
            continue;
        }
        let mut any = false;
        for (l, &off) in offsets.iter().enumerate() {
            local[l] = vec[base + off];
            any |= local[l] != C64::new(0.0, 0.0);
        }
        if !any {
            continue;
        }
        for (r, &off) in offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c, &v) in local.iter().enumerate() {
                acc += op[(r, c)] * v;
            }
            out[base + off] = acc;
        }
    }
    out
}

/// Common surface of pure and mixed states used by the optics and channel layers.
pub trait QuantumState: Clone + Sized {
    fn modes(&self) -> &ModeSet;

    /// Squared norm for a pure state, trace for a mixed state.
    fn weight(&self) -> f64;

    /// `A|psi>` or `A rho A^dagger` for an operator on the given modes.
    fn apply_local(&self, targets: &[usize], op: &DMatrix<C64>) -> Result<Self>;

    /// Expectation of the number operator of `mode`, normalized by the weight.
    fn mean_photon_number(&self, mode: usize) -> Result<f64>;

    /// Rescales to unit weight; returns the state and the weight it had
    /// (the norm for pure states, the trace for mixed states).
    fn normalize(&self) -> Result<(Self, f64)>;

    /// Appends `extra` vacuum modes.
    fn embed(&self, extra: usize) -> Self;

    fn apply_annihilation(&self, mode: usize) -> Result<Self> {
        self.modes().check_mode(mode)?;
        let a = annihilation_matrix(self.modes().cutoff());
        self.apply_local(&[mode], &a)
    }
}

fn check_targets(modes: &ModeSet, targets: &[usize], op: &DMatrix<C64>) -> Result<()> {
    for (k, &t) in targets.iter().enumerate() {
        modes.check_mode(t)?;
        if targets[..k].contains(&t) {
            return Err(Error::invalid(format!("mode {t} repeated in target list")));
        }
    }
    let d = modes.local_dim().pow(targets.len() as u32);
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::invalid(format!(
            "local operator is {}x{}, expected {d}x{d}",
            op.nrows(),
            op.ncols()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    modes: ModeSet,
    amplitudes: Vec<C64>,
    norm_weight: f64,
}

impl PureState {
    pub fn from_amplitudes(modes: ModeSet, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != modes.dim() {
            return Err(Error::invalid(format!(
                "amplitude vector has length {}, basis dimension is {}",
                amplitudes.len(),
                modes.dim()
            )));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("non-finite amplitude"));
        }
        let norm_weight = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        Ok(Self {
            modes,
            amplitudes,
            norm_weight,
        })
    }

    pub fn vacuum(modes: ModeSet) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); modes.dim()];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self {
            modes,
            amplitudes,
            norm_weight: 1.0,
        }
    }

    /// Number state with the given occupation of every mode.
    pub fn fock(modes: ModeSet, occupations: &[usize]) -> Result<Self> {
        let index = modes.index_of(occupations)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); modes.dim()];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self {
            modes,
            amplitudes,
            norm_weight: 1.0,
        })
    }

    /// Coherent state `|alpha>` in `mode`, vacuum elsewhere, renormalized on
    /// the truncated space. The leakage is the Poisson tail beyond the cutoff.
    pub fn coherent(modes: ModeSet, mode: usize, alpha: C64) -> Result<WithLeakage<Self>> {
        modes.check_mode(mode)?;
        let mean = alpha.norm_sqr();
        if mean > modes.cutoff() as f64 / 4.0 {
            return Err(Error::TruncationRisk(format!(
                "|alpha|^2 = {mean} exceeds cutoff/4 = {}",
                modes.cutoff() as f64 / 4.0
            )));
        }
        let prefactor = (-mean / 2.0).exp();
        let mut amplitude = C64::new(prefactor, 0.0);
        let mut kept = 0.0;
        let mut amplitudes = vec![C64::new(0.0, 0.0); modes.dim()];
        for n in 0..=modes.cutoff() {
            if n > 0 {
                amplitude = amplitude * alpha / (n as f64).sqrt();
            }
            kept += amplitude.norm_sqr();
            amplitudes[n * modes.stride(mode)] = amplitude;
        }
        let scale = kept.sqrt();
        for a in &mut amplitudes {
            *a /= scale;
        }
        Ok(WithLeakage {
            value: Self {
                modes,
                amplitudes,
                norm_weight: 1.0,
            },
            leakage: (1.0 - kept).max(0.0),
        })
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupations: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.modes.index_of(occupations)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Conditioning probability carried alongside the amplitudes.
    pub fn norm_weight(&self) -> f64 {
        self.norm_weight
    }

    pub fn with_norm_weight(mut self, weight: f64) -> Self {
        self.norm_weight = weight;
        self
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.modes.ensure_same(&other.modes)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            modes: self.modes,
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
            norm_weight: self.norm_weight * factor.norm_sqr(),
        }
    }

    pub fn add(&self, other: &PureState) -> Result<Self> {
        self.modes.ensure_same(&other.modes)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_amplitudes(self.modes, amplitudes)
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &PureState) -> Result<f64> {
        self.modes.ensure_same(&other.modes)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// `a^dagger` on `mode`. Amplitude pushed above the cutoff is dropped and
    /// reported as leakage.
    pub fn apply_creation(&self, mode: usize) -> Result<WithLeakage<Self>> {
        self.modes.check_mode(mode)?;
        let before: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| (self.modes.occupation(i, mode) + 1) as f64 * a.norm_sqr())
            .sum();
        let out = QuantumState::apply_local(self, &[mode], &creation_matrix(self.modes.cutoff()))?;
        let leakage = (before - out.norm_sqr()).max(0.0);
        Ok(WithLeakage {
            value: out,
            leakage,
        }
        .warn_if_significant("apply_creation"))
    }

    /// Photon-number distribution of one mode, unnormalized.
    pub fn mode_populations(&self, mode: usize) -> Result<Vec<f64>> {
        self.modes.check_mode(mode)?;
        let mut pops = vec![0.0; self.modes.local_dim()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            pops[self.modes.occupation(i, mode)] += a.norm_sqr();
        }
        Ok(pops)
    }

    pub fn to_mixed(&self) -> MixedState {
        let v = nalgebra::DVector::from_column_slice(&self.amplitudes);
        MixedState {
            modes: self.modes,
            matrix: &v * v.adjoint(),
            trace_weight: self.norm_weight,
        }
    }
}

impl QuantumState for PureState {
    fn modes(&self) -> &ModeSet {
        &self.modes
    }

    fn weight(&self) -> f64 {
        self.norm_sqr()
    }

    fn apply_local(&self, targets: &[usize], op: &DMatrix<C64>) -> Result<Self> {
        check_targets(&self.modes, targets, op)?;
        let amplitudes = apply_local(&self.modes, targets, op, &self.amplitudes);
        let norm_weight = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        Ok(Self {
            modes: self.modes,
            amplitudes,
            norm_weight,
        })
    }

    fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        let pops = self.mode_populations(mode)?;
        let total: f64 = pops.iter().sum();
        if total <= 0.0 {
            return Err(Error::UndefinedExpectation);
        }
        Ok(pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total)
    }

    fn normalize(&self) -> Result<(Self, f64)> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok((
            Self {
                modes: self.modes,
                amplitudes: self.amplitudes.iter().map(|a| a / norm).collect(),
                norm_weight: self.norm_weight,
            },
            norm,
        ))
    }

    fn embed(&self, extra: usize) -> Self {
        let modes = self.modes.extended(extra).expect("embedding exceeds basis limit");
        let factor = self.modes.local_dim().pow(extra as u32);
        let mut amplitudes = vec![C64::new(0.0, 0.0); modes.dim()];
        for (i, &a) in self.amplitudes.iter().enumerate() {
            amplitudes[i * factor] = a;
        }
        Self {
            modes,
            amplitudes,
            norm_weight: self.norm_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    modes: ModeSet,
    matrix: DMatrix<C64>,
    trace_weight: f64,
}

impl MixedState {
    pub fn from_matrix(modes: ModeSet, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != modes.dim() || matrix.ncols() != modes.dim() {
            return Err(Error::invalid(format!(
                "density matrix is {}x{}, basis dimension is {}",
                matrix.nrows(),
                matrix.ncols(),
                modes.dim()
            )));
        }
        Ok(Self {
            modes,
            matrix,
            trace_weight: 1.0,
        })
    }

    /// Diagonal single-mode state with the given photon-number populations.
    pub fn from_populations(modes: ModeSet, populations: &[f64]) -> Result<Self> {
        if modes.mode_count() != 1 || populations.len() > modes.local_dim() {
            return Err(Error::invalid("populations must fit a single truncated mode"));
        }
        let mut matrix = DMatrix::zeros(modes.dim(), modes.dim());
        for (n, &p) in populations.iter().enumerate() {
            matrix[(n, n)] = C64::new(p, 0.0);
        }
        Self::from_matrix(modes, matrix)
    }

    pub fn maximally_mixed(modes: ModeSet) -> Self {
        let d = modes.dim();
        Self {
            modes,
            matrix: DMatrix::identity(d, d) / C64::new(d as f64, 0.0),
            trace_weight: 1.0,
        }
    }

    pub fn fock(modes: ModeSet, occupations: &[usize]) -> Result<Self> {
        Ok(PureState::fock(modes, occupations)?.to_mixed())
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Conditioning probability carried alongside the matrix.
    pub fn trace_weight(&self) -> f64 {
        self.trace_weight
    }

    pub fn with_trace_weight(mut self, weight: f64) -> Self {
        self.trace_weight = weight;
        self
    }

    pub fn element(&self, row: &[usize], col: &[usize]) -> Result<C64> {
        Ok(self.matrix[(self.modes.index_of(row)?, self.modes.index_of(col)?)])
    }

    /// Photon-number distribution of one mode, unnormalized.
    pub fn mode_populations(&self, mode: usize) -> Result<Vec<f64>> {
        self.modes.check_mode(mode)?;
        let mut pops = vec![0.0; self.modes.local_dim()];
        for i in 0..self.modes.dim() {
            pops[self.modes.occupation(i, mode)] += self.matrix[(i, i)].re;
        }
        Ok(pops)
    }

    /// Diagonal of a single-mode state.
    pub fn photon_number_distribution(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, PSD and trace at most one, all to `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol && self.min_eigenvalue() >= -tol && self.trace() <= 1.0 + tol
    }

    /// Reduced state on the `keep` modes, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<MixedState> {
        self.weighted_partial_trace(keep, |_| 1.0)
    }

    /// Partial trace in which the traced-out basis states are weighted by
    /// `weight(traced occupations)`. Used to apply a diagonal POVM element on
    /// the discarded modes.
    pub(crate) fn weighted_partial_trace(
        &self,
        keep: &[usize],
        weight: impl Fn(&[usize]) -> f64,
    ) -> Result<MixedState> {
        if keep.is_empty() {
            return Err(Error::invalid("partial trace needs at least one kept mode"));
        }
        for (k, &m) in keep.iter().enumerate() {
            self.modes.check_mode(m)?;
            if keep[..k].contains(&m) {
                return Err(Error::invalid(format!("mode {m} listed twice")));
            }
        }
        let traced: Vec<usize> = (0..self.modes.mode_count())
            .filter(|m| !keep.contains(m))
            .collect();
        let reduced = ModeSet::new(keep.len(), self.modes.cutoff())?;
        let traced_set = if traced.is_empty() {
            None
        } else {
            Some(ModeSet::new(traced.len(), self.modes.cutoff())?)
        };

        let full_index = |kept_idx: usize, traced_idx: usize| -> usize {
            let mut idx = 0;
            for (k, &m) in keep.iter().enumerate() {
                idx += reduced.occupation(kept_idx, k) * self.modes.stride(m);
            }
            if let Some(ts) = &traced_set {
                for (k, &m) in traced.iter().enumerate() {
                    idx += ts.occupation(traced_idx, k) * self.modes.stride(m);
                }
            }
            idx
        };

        let n_traced = traced_set.map_or(1, |t| t.dim());
        let weights: Vec<f64> = (0..n_traced)
            .map(|t| match &traced_set {
                Some(ts) => weight(&ts.occupations(t)),
                None => weight(&[]),
            })
            .collect();

        let d = reduced.dim();
        let mut out = DMatrix::zeros(d, d);
        for (t, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let rows: Vec<usize> = (0..d).map(|r| full_index(r, t)).collect();
            for (r, &fr) in rows.iter().enumerate() {
                for (c, &fc) in rows.iter().enumerate() {
                    out[(r, c)] += self.matrix[(fr, fc)] * w;
                }
            }
        }
        Ok(MixedState {
            modes: reduced,
            matrix: out,
            trace_weight: self.trace_weight,
        })
    }

    pub fn add(&self, other: &MixedState) -> Result<MixedState> {
        self.modes.ensure_same(&other.modes)?;
        Ok(MixedState {
            modes: self.modes,
            matrix: &self.matrix + &other.matrix,
            trace_weight: self.trace_weight,
        })
    }

    pub fn scale(&self, factor: f64) -> MixedState {
        MixedState {
            modes: self.modes,
            matrix: &self.matrix * C64::new(factor, 0.0),
            trace_weight: self.trace_weight,
        }
    }

    /// Largest absolute entry of the difference of two matrices.
    pub fn max_abs_diff(&self, other: &MixedState) -> Result<f64> {
        self.modes.ensure_same(&other.modes)?;
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }
}

impl QuantumState for MixedState {
    fn modes(&self) -> &ModeSet {
        &self.modes
    }

    fn weight(&self) -> f64 {
        self.trace()
    }

    fn apply_local(&self, targets: &[usize], op: &DMatrix<C64>) -> Result<Self> {
        check_targets(&self.modes, targets, op)?;
        let d = self.modes.dim();
        // (A (A rho)^dagger)^dagger = A rho A^dagger
        let mut half = DMatrix::zeros(d, d);
        for c in 0..d {
            let col: Vec<C64> = self.matrix.column(c).iter().copied().collect();
            half.set_column(c, &nalgebra::DVector::from_vec(apply_local(&self.modes, targets, op, &col)));
        }
        let half = half.adjoint();
        let mut out = DMatrix::zeros(d, d);
        for c in 0..d {
            let col: Vec<C64> = half.column(c).iter().copied().collect();
            out.set_column(c, &nalgebra::DVector::from_vec(apply_local(&self.modes, targets, op, &col)));
        }
        Ok(Self {
            modes: self.modes,
            matrix: out.adjoint(),
            trace_weight: self.trace_weight,
        })
    }

    fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        let pops = self.mode_populations(mode)?;
        let total: f64 = pops.iter().sum();
        if total <= 0.0 {
            return Err(Error::UndefinedExpectation);
        }
        Ok(pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total)
    }

    fn normalize(&self) -> Result<(Self, f64)> {
        let tr = self.trace();
        if tr <= 0.0 || !tr.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok((
            Self {
                modes: self.modes,
                matrix: &self.matrix / C64::new(tr, 0.0),
                trace_weight: self.trace_weight,
            },
            tr,
        ))
    }

    fn embed(&self, extra: usize) -> Self {
        let modes = self.modes.extended(extra).expect("embedding exceeds basis limit");
        let factor = self.modes.local_dim().pow(extra as u32);
        let d = self.modes.dim();
        let mut matrix = DMatrix::zeros(modes.dim(), modes.dim());
        for r in 0..d {
            for c in 0..d {
                matrix[(r * factor, c * factor)] = self.matrix[(r, c)];
            }
        }
        Self {
            modes,
            matrix,
            trace_weight: self.trace_weight,
        }
    }
}

impl From<&PureState> for MixedState {
    fn from(state: &PureState) -> Self {
        state.to_mixed()
    }
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().copied().collect()
}

fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let roots = eig
        .eigenvalues
        .map(|v| C64::new(v.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`. Both states must have unit trace.
pub fn fidelity(a: &MixedState, b: &MixedState) -> Result<f64> {
    a.modes.ensure_same(&b.modes)?;
    for s in [a, b] {
        if (s.trace() - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!(
                "fidelity needs unit-trace states, got trace {}",
                s.trace()
            )));
        }
    }
    let root = hermitian_sqrt(&a.matrix);
    let inner = &root * &b.matrix * &root;
    let f: f64 = hermitian_eigenvalues(&inner)
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    Ok((f * f).clamp(0.0, 1.0))
}

/// Trace distance `||a - b||_1 / 2`.
pub fn trace_distance(a: &MixedState, b: &MixedState) -> Result<f64> {
    a.modes.ensure_same(&b.modes)?;
    let diff = &a.matrix - &b.matrix;
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>())
}
