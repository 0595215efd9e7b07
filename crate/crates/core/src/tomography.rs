//! Maximum-likelihood reconstruction of a single-mode density matrix from
//! binned homodyne data.
//!
//! Detection loss is compensated inside the measurement operators: every
//! binned quadrature projector is replaced by its image under the adjoint of
//! the loss channel, so the iteration runs over the *pre-loss* state and every
//! iterate stays physical.

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;

use crate::channels::AttenuationChannel;
use crate::error::{Error, Result};
use crate::fock::{MixedState, ModeSet, C64};
use crate::homodyne::{wavefunctions, QuadratureDataset, GRID_HALF_WIDTH};

const QUAD_NODES: usize = 16;
const QUAD_PIECE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TomographySettings {
    pub cutoff: usize,
    /// Detection efficiency folded into the POVM; 1 means no compensation.
    pub efficiency_compensation: f64,
    pub max_iterations: usize,
    pub loglik_tolerance: f64,
    pub bin_width: f64,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self {
            cutoff: 5,
            efficiency_compensation: 1.0,
            max_iterations: 2000,
            loglik_tolerance: 1e-9,
            bin_width: 0.1,
        }
    }
}

impl TomographySettings {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff < 1 {
            return Err(Error::invalid("tomography cutoff must be at least 1"));
        }
        if !(self.efficiency_compensation > 0.0 && self.efficiency_compensation <= 1.0) {
            return Err(Error::invalid(format!(
                "efficiency compensation {} outside (0, 1]",
                self.efficiency_compensation
            )));
        }
        if self.loglik_tolerance.is_nan() || self.loglik_tolerance <= 0.0 {
            return Err(Error::invalid("log-likelihood tolerance must be positive"));
        }
        if self.bin_width.is_nan() || self.bin_width <= 0.0 || self.bin_width > GRID_HALF_WIDTH {
            return Err(Error::invalid(format!("bin width {} out of range", self.bin_width)));
        }
        Ok(())
    }

    fn bin_count(&self) -> usize {
        (2.0 * GRID_HALF_WIDTH / self.bin_width).round().max(1.0) as usize
    }

    /// Bin edges covering the quadrature grid.
    pub fn bin_edges(&self) -> Vec<f64> {
        let n = self.bin_count();
        let step = 2.0 * GRID_HALF_WIDTH / n as f64;
        (0..=n).map(|i| -GRID_HALF_WIDTH + i as f64 * step).collect()
    }

    fn bin_of(&self, x: f64) -> Option<usize> {
        if !(-GRID_HALF_WIDTH..=GRID_HALF_WIDTH).contains(&x) {
            return None;
        }
        let n = self.bin_count();
        let step = 2.0 * GRID_HALF_WIDTH / n as f64;
        Some((((x + GRID_HALF_WIDTH) / step).floor() as usize).min(n - 1))
    }
}

/// Integrals `int_lo^hi psi_a psi_b dx` for `a, b <= cutoff`. Infinite
/// bounds are clamped where every `psi_n` is negligible.
fn overlap_integrals(cutoff: usize, lo: f64, hi: f64, rule: &GaussLegendre) -> DMatrix<f64> {
    let reach = 12.0 + (2.0 * cutoff as f64 + 1.0).sqrt();
    let (lo, hi) = (lo.max(-reach), hi.min(reach));
    let d = cutoff + 1;
    let mut out = DMatrix::zeros(d, d);
    if hi <= lo {
        return out;
    }
    let pieces = ((hi - lo) / QUAD_PIECE).ceil().max(1.0) as usize;
    let width = (hi - lo) / pieces as f64;
    for p in 0..pieces {
        let a = lo + p as f64 * width;
        let b = a + width;
        for (node, weight) in rule.iter() {
            let x = 0.5 * (b - a) * node + 0.5 * (b + a);
            let w = 0.5 * (b - a) * weight;
            let psi = wavefunctions(cutoff, x);
            for r in 0..d {
                for c in r..d {
                    out[(r, c)] += w * psi[r] * psi[c];
                }
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            out[(r, c)] = out[(c, r)];
        }
    }
    out
}

fn quadrature_rule() -> GaussLegendre {
    GaussLegendre::new(QUAD_NODES).expect("degree above 1")
}

fn phased(integrals: &DMatrix<f64>, phase: f64) -> DMatrix<C64> {
    let d = integrals.nrows();
    DMatrix::from_fn(d, d, |a, b| {
        C64::from_polar(integrals[(a, b)], -(a as f64 - b as f64) * phase)
    })
}

fn compensate_loss(lossless: DMatrix<C64>, efficiency: f64, cutoff: usize) -> Result<DMatrix<C64>> {
    if efficiency >= 1.0 {
        return Ok(lossless);
    }
    let kraus = AttenuationChannel::with_efficiency(efficiency)?.kraus_operators(cutoff);
    let mut out = DMatrix::zeros(cutoff + 1, cutoff + 1);
    for e in &kraus {
        out += e.adjoint() * &lossless * e;
    }
    Ok(out)
}

/// Measurement operator for "quadrature at `phase` fell in `bin`", acting on
/// the pre-loss state.
pub fn povm_element(phase: f64, bin: (f64, f64), settings: &TomographySettings) -> Result<DMatrix<C64>> {
    settings.validate()?;
    if bin.0.is_nan() || bin.1.is_nan() || bin.1 <= bin.0 {
        return Err(Error::invalid(format!("empty bin [{}, {}]", bin.0, bin.1)));
    }
    let lossless = phased(&overlap_integrals(settings.cutoff, bin.0, bin.1, &quadrature_rule()), phase);
    compensate_loss(lossless, settings.efficiency_compensation, settings.cutoff)
}

/// Binned likelihood problem: measurement operators and observed frequencies.
#[derive(Debug, Clone)]
pub struct MaxLikProblem {
    cutoff: usize,
    povms: Vec<DMatrix<C64>>,
    frequencies: Vec<f64>,
    total_counts: f64,
}

impl MaxLikProblem {
    /// Bins the dataset per phase; only bins with counts enter the problem.
    pub fn from_dataset(data: &QuadratureDataset, settings: &TomographySettings) -> Result<Self> {
        settings.validate()?;
        if data.is_empty() {
            return Err(Error::invalid("dataset is empty"));
        }
        let phases = data.phases();
        let bins = settings.bin_count();
        let mut counts = vec![vec![0u64; bins]; phases.len()];
        for s in &data.samples {
            let bin = settings.bin_of(s.value).ok_or_else(|| {
                Error::invalid(format!(
                    "quadrature value {} outside the grid [-{GRID_HALF_WIDTH}, {GRID_HALF_WIDTH}]",
                    s.value
                ))
            })?;
            let p = phases.iter().position(|&p| p == s.phase).expect("phase listed");
            counts[p][bin] += 1;
        }

        let rule = quadrature_rule();
        let edges = settings.bin_edges();
        let mut integrals: Vec<Option<DMatrix<f64>>> = vec![None; bins];
        let mut povms = Vec::new();
        let mut frequencies = Vec::new();
        let total = data.len() as f64;
        for (p, &phase) in phases.iter().enumerate() {
            for b in 0..bins {
                let n = counts[p][b];
                if n == 0 {
                    continue;
                }
                let ints = integrals[b]
                    .get_or_insert_with(|| overlap_integrals(settings.cutoff, edges[b], edges[b + 1], &rule));
                let povm = compensate_loss(phased(ints, phase), settings.efficiency_compensation, settings.cutoff)?;
                if povm.trace().re < 1e-300 {
                    return Err(Error::IllPosedData(format!(
                        "bin [{}, {}] at phase {phase} has counts but zero probability for every state",
                        edges[b],
                        edges[b + 1]
                    )));
                }
                povms.push(povm);
                frequencies.push(n as f64 / total);
            }
        }
        Ok(Self {
            cutoff: settings.cutoff,
            povms,
            frequencies,
            total_counts: total,
        })
    }

    /// Frequencies equal to the exact bin probabilities of `rho`, including
    /// the two tails beyond the grid so the operators resolve the identity.
    pub fn exact_frequencies(rho: &MixedState, phases: &[f64], settings: &TomographySettings) -> Result<Self> {
        settings.validate()?;
        if rho.modes().mode_count() != 1 || rho.modes().cutoff() != settings.cutoff {
            return Err(Error::ModeSetMismatch);
        }
        let rule = quadrature_rule();
        let mut edges = vec![f64::NEG_INFINITY];
        edges.extend(settings.bin_edges());
        edges.push(f64::INFINITY);
        let ints: Vec<DMatrix<f64>> = edges
            .windows(2)
            .map(|w| overlap_integrals(settings.cutoff, w[0], w[1], &rule))
            .collect();
        let mut povms = Vec::new();
        let mut frequencies = Vec::new();
        for &phase in phases {
            for i in &ints {
                let povm = compensate_loss(phased(i, phase), settings.efficiency_compensation, settings.cutoff)?;
                let p = probability(&povm, rho.matrix());
                if p > 0.0 {
                    povms.push(povm);
                    frequencies.push(p);
                }
            }
        }
        let total: f64 = frequencies.iter().sum();
        for f in &mut frequencies {
            *f /= total;
        }
        Ok(Self {
            cutoff: settings.cutoff,
            povms,
            frequencies,
            total_counts: f64::INFINITY,
        })
    }

    pub fn len(&self) -> usize {
        self.povms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.povms.is_empty()
    }

    /// Mean log-likelihood per sample, `sum_j f_j ln p_j(rho)`.
    pub fn loglik(&self, rho: &DMatrix<C64>) -> f64 {
        self.povms
            .iter()
            .zip(&self.frequencies)
            .map(|(povm, &f)| f * probability(povm, rho).max(f64::MIN_POSITIVE).ln())
            .sum()
    }

    fn r_operator(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.cutoff + 1;
        let mut r = DMatrix::zeros(d, d);
        for (povm, &f) in self.povms.iter().zip(&self.frequencies) {
            let p = probability(povm, rho).max(f64::MIN_POSITIVE);
            r += povm * C64::new(f / p, 0.0);
        }
        r
    }

    /// One `rho -> N[R rho R]` step.
    pub fn step(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let r = self.r_operator(rho);
        renormalize(&r * rho * &r)
    }

    /// Diluted step `N[(1 + eps R) rho (1 + eps R)]`.
    fn diluted_step(&self, rho: &DMatrix<C64>, r: &DMatrix<C64>, eps: f64) -> DMatrix<C64> {
        let d = self.cutoff + 1;
        let g = DMatrix::<C64>::identity(d, d) + r * C64::new(eps, 0.0);
        renormalize(&g * rho * &g)
    }
}

fn probability(povm: &DMatrix<C64>, rho: &DMatrix<C64>) -> f64 {
    // Tr(povm rho) for Hermitian arguments
    let d = povm.nrows();
    let mut acc = 0.0;
    for a in 0..d {
        for b in 0..d {
            acc += (povm[(a, b)] * rho[(b, a)]).re;
        }
    }
    acc
}

fn renormalize(m: DMatrix<C64>) -> DMatrix<C64> {
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr = h.trace().re;
    h / C64::new(tr, 0.0)
}

#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub rho: MixedState,
    /// Mean log-likelihood of the initial state and of every iterate.
    pub loglik_trace: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    pub settings: TomographySettings,
}

/// Runs the iteration from the maximally mixed state.
pub fn maxlik_reconstruct(data: &QuadratureDataset, settings: &TomographySettings) -> Result<TomographyResult> {
    let problem = MaxLikProblem::from_dataset(data, settings)?;
    maxlik_solve(&problem, settings)
}

/// Iterates `rho -> N[R rho R]`. When a full step fails to raise the
/// likelihood the diluted form with a halving step size is used instead, so
/// the likelihood never decreases.
pub fn maxlik_solve(problem: &MaxLikProblem, settings: &TomographySettings) -> Result<TomographyResult> {
    settings.validate()?;
    let modes = ModeSet::single(settings.cutoff)?;
    let mut rho = MixedState::maximally_mixed(modes).into_matrix();
    let mut ll = problem.loglik(&rho);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        let mut next = problem.step(&rho);
        let mut next_ll = problem.loglik(&next);
        if next_ll < ll {
            let r = problem.r_operator(&rho);
            let mut eps = 1.0;
            loop {
                next = problem.diluted_step(&rho, &r, eps);
                next_ll = problem.loglik(&next);
                if next_ll >= ll || eps < 1e-12 {
                    break;
                }
                eps *= 0.5;
            }
            if next_ll < ll {
                next = rho.clone();
                next_ll = ll;
            }
        }
        let gain = next_ll - ll;
        rho = next;
        ll = next_ll;
        trace.push(ll);
        iterations += 1;
        if gain < settings.loglik_tolerance {
            converged = true;
            break;
        }
    }
    let total = problem.total_counts;
    log::debug!("maxlik: {iterations} iterations over {} bins ({total} counts)", problem.len());
    Ok(TomographyResult {
        rho: MixedState::from_matrix(modes, rho)?,
        loglik_trace: trace,
        iterations_used: iterations,
        converged,
        settings: *settings,
    })
}

/// Diagonal of the reconstruction, negative round-off clipped and renormalized.
pub fn photon_number_distribution(result: &TomographyResult) -> Vec<f64> {
    let diag: Vec<f64> = result
        .rho
        .photon_number_distribution()
        .into_iter()
        .map(|p| if p < -1e-10 { 0.0 } else { p.max(0.0) })
        .collect();
    let total: f64 = diag.iter().sum();
    diag.into_iter().map(|p| p / total).collect()
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TomographyRecord {
    pub cutoff: usize,
    /// Row-major matrix, entries as `[re, im]`.
    pub rho: Vec<Vec<[f64; 2]>>,
    pub photon_numbers: Vec<f64>,
    pub loglik_trace: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    pub settings: TomographySettings,
}

impl TomographyResult {
    pub fn to_record(&self) -> TomographyRecord {
        let m = self.rho.matrix();
        TomographyRecord {
            cutoff: self.settings.cutoff,
            rho: (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                .collect(),
            photon_numbers: photon_number_distribution(self),
            loglik_trace: self.loglik_trace.clone(),
            iterations_used: self.iterations_used,
            converged: self.converged,
            settings: self.settings,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("record serializes")
    }
}
