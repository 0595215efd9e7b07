//! Quadrature statistics of single-mode states and synthetic homodyne data.
//!
//! Quadratures follow `x = (a + a^dag)/sqrt(2)`, so the vacuum variance is 1/2.
//! The rotated quadrature at local-oscillator phase `theta` has eigenstates
//! with `<n|x_theta> = e^{-i n theta} psi_n(x)`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{MixedState, C64};

/// Half-width of the quadrature grid used for sampling and binning.
pub const GRID_HALF_WIDTH: f64 = 6.0;
/// Grid step for inverse-CDF sampling.
pub const SAMPLING_STEP: f64 = 0.005;

/// `<x|n>` by the three-term recurrence.
pub fn quadrature_wavefunction(n: usize, x: f64) -> f64 {
    wavefunctions(n, x)[n]
}

/// `[psi_0(x), ..., psi_nmax(x)]`.
pub fn wavefunctions(nmax: usize, x: f64) -> Vec<f64> {
    let mut psi = Vec::with_capacity(nmax + 1);
    psi.push(std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp());
    if nmax >= 1 {
        psi.push(std::f64::consts::SQRT_2 * x * psi[0]);
    }
    for n in 1..nmax {
        let next = (std::f64::consts::SQRT_2 * x * psi[n] - (n as f64).sqrt() * psi[n - 1]) / ((n + 1) as f64).sqrt();
        psi.push(next);
    }
    psi
}

fn check_single_mode(state: &MixedState) -> Result<()> {
    if state.modes().mode_count() != 1 {
        return Err(Error::invalid("quadrature statistics need a single-mode state"));
    }
    if (state.trace() - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!(
            "state must have unit trace, got {}",
            state.trace()
        )));
    }
    Ok(())
}

fn marginal_at(rho: &nalgebra::DMatrix<C64>, phases: &[C64], psi: &[f64]) -> f64 {
    let d = psi.len();
    let mut acc = 0.0;
    for m in 0..d {
        acc += rho[(m, m)].re * psi[m] * psi[m];
        for n in (m + 1)..d {
            // rho_mn e^{i(m-n)theta} + c.c.
            acc += 2.0 * (rho[(m, n)] * phases[n - m].conj()).re * psi[m] * psi[n];
        }
    }
    acc
}

/// Quadrature probability density `pr(x | theta)` on `grid`.
pub fn marginal_distribution(state: &MixedState, phase: f64, grid: &[f64]) -> Result<Vec<f64>> {
    check_single_mode(state)?;
    let d = state.modes().local_dim();
    let phases: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0, k as f64 * phase)).collect();
    Ok(grid
        .iter()
        .map(|&x| marginal_at(state.matrix(), &phases, &wavefunctions(d - 1, x)))
        .collect())
}

/// Uniform grid on `[-half_width, half_width]`.
pub fn uniform_grid(half_width: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * half_width / step).round() as usize;
    (0..=n).map(|i| -half_width + i as f64 * step).collect()
}

/// `count` phases evenly spaced on `[0, pi)`.
pub fn uniform_phases(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| k as f64 * std::f64::consts::PI / count as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSample {
    pub phase: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureDataset {
    pub samples: Vec<QuadratureSample>,
    pub seed: u64,
    pub source_label: String,
}

fn check_phase(phase: f64) -> Result<()> {
    if !(0.0..std::f64::consts::PI).contains(&phase) {
        return Err(Error::invalid(format!("phase {phase} outside [0, pi)")));
    }
    Ok(())
}

/// Draws `count_per_phase` i.i.d. quadrature values at each phase by
/// inverse-CDF sampling of the marginal. Phase `k` uses its own ChaCha
/// stream of `seed`, so the result depends only on `(seed, phases)`.
pub fn sample_quadratures(
    state: &MixedState,
    phases: &[f64],
    count_per_phase: usize,
    seed: u64,
) -> Result<QuadratureDataset> {
    check_single_mode(state)?;
    if count_per_phase == 0 {
        return Err(Error::invalid("count_per_phase must be at least 1"));
    }
    if phases.is_empty() {
        return Err(Error::invalid("need at least one phase"));
    }
    for &p in phases {
        check_phase(p)?;
    }
    let grid = uniform_grid(GRID_HALF_WIDTH, SAMPLING_STEP);
    let mut samples = Vec::with_capacity(phases.len() * count_per_phase);
    for (k, &phase) in phases.iter().enumerate() {
        let pdf = marginal_distribution(state, phase, &grid)?;
        let mut cdf = Vec::with_capacity(grid.len());
        cdf.push(0.0);
        for i in 1..grid.len() {
            let area = 0.5 * (pdf[i].max(0.0) + pdf[i - 1].max(0.0)) * (grid[i] - grid[i - 1]);
            cdf.push(cdf[i - 1] + area);
        }
        let total = *cdf.last().expect("grid is nonempty");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        for _ in 0..count_per_phase {
            let u = rng.random::<f64>() * total;
            let hi = cdf.partition_point(|&c| c <= u).clamp(1, grid.len() - 1);
            let (c0, c1) = (cdf[hi - 1], cdf[hi]);
            let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
            samples.push(QuadratureSample {
                phase,
                value: grid[hi - 1] + frac * (grid[hi] - grid[hi - 1]),
            });
        }
    }
    Ok(QuadratureDataset {
        samples,
        seed,
        source_label: String::new(),
    })
}

impl QuadratureDataset {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct phases in order of first appearance.
    pub fn phases(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for s in &self.samples {
            if !out.contains(&s.phase) {
                out.push(s.phase);
            }
        }
        out
    }

    /// Header line, column line, then one `phase,value` per sample with 17
    /// significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# seed={} source_label={}", self.seed, self.source_label)?;
        writeln!(out, "phase,value")?;
        let mut line = String::new();
        for s in &self.samples {
            line.clear();
            let _ = write!(line, "{:.16e},{:.16e}", s.phase, s.value);
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse { line, message };

        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty dataset file".into()))?;
        let header = header.map_err(|e| parse_err(1, e.to_string()))?;
        let rest = header
            .strip_prefix("# seed=")
            .ok_or_else(|| parse_err(1, "expected '# seed=<n> source_label=<text>'".into()))?;
        let (seed_text, label) = match rest.split_once(' ') {
            Some((s, l)) => (
                s,
                l.strip_prefix("source_label=")
                    .ok_or_else(|| parse_err(1, "missing source_label".into()))?,
            ),
            None => return Err(parse_err(1, "missing source_label".into())),
        };
        let seed = seed_text
            .parse::<u64>()
            .map_err(|e| parse_err(1, format!("bad seed: {e}")))?;

        let mut samples = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || (lineno == 2 && line == "phase,value") {
                continue;
            }
            let (p, v) = line
                .split_once(',')
                .ok_or_else(|| parse_err(lineno, "expected 'phase,value'".into()))?;
            let phase: f64 = p.trim().parse().map_err(|e| parse_err(lineno, format!("bad phase: {e}")))?;
            let value: f64 = v.trim().parse().map_err(|e| parse_err(lineno, format!("bad value: {e}")))?;
            if !value.is_finite() {
                return Err(parse_err(lineno, "non-finite quadrature value".into()));
            }
            check_phase(phase).map_err(|e| parse_err(lineno, e.to_string()))?;
            samples.push(QuadratureSample { phase, value });
        }
        Ok(Self {
            samples,
            seed,
            source_label: label.to_string(),
        })
    }
}

/// Counts of `values` in the bins delimited by `edges`; the last bin is closed.
pub fn histogram(values: impl IntoIterator<Item = f64>, edges: &[f64]) -> Vec<u64> {
    let bins = edges.len().saturating_sub(1);
    let mut counts = vec![0u64; bins];
    if bins == 0 {
        return counts;
    }
    let (lo, hi) = (edges[0], edges[bins]);
    for v in values {
        if v < lo || v > hi {
            continue;
        }
        let i = edges.partition_point(|&e| e <= v).saturating_sub(1).min(bins - 1);
        counts[i] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeSet;

    fn fock(n: usize) -> MixedState {
        MixedState::fock(ModeSet::single(5).unwrap(), &[n]).unwrap()
    }

    #[test]
    fn wavefunction_values() {
        assert!((quadrature_wavefunction(0, 0.0) - std::f64::consts::PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(quadrature_wavefunction(1, 0.0), 0.0);
        // psi_2 = (2x^2 - 1) e^{-x^2/2} / (sqrt(2) pi^{1/4})
        let x: f64 = 0.7;
        let direct = (2.0 * x * x - 1.0) * (-x * x / 2.0).exp() / (2f64.sqrt() * std::f64::consts::PI.powf(0.25));
        assert!((quadrature_wavefunction(2, x) - direct).abs() < 1e-14);
    }

    #[test]
    fn psi_two_is_normalized() {
        // composite Simpson on [-10, 10]
        let n = 4000;
        let h = 20.0 / n as f64;
        let f = |x: f64| quadrature_wavefunction(2, x).powi(2);
        let mut s = f(-10.0) + f(10.0);
        for i in 1..n {
            let x = -10.0 + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        assert!((s * h / 3.0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn marginal_examples() {
        let grid = uniform_grid(6.0, 0.01);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for theta in [0.0, 0.4, 2.0] {
            let vac = marginal_distribution(&fock(0), theta, &grid).unwrap();
            let one = marginal_distribution(&fock(1), theta, &grid).unwrap();
            for (i, &x) in grid.iter().enumerate() {
                let g = (-x * x).exp() / sqrt_pi;
                assert!((vac[i] - g).abs() < 1e-14);
                assert!((one[i] - 2.0 * x * x * g).abs() < 1e-14);
            }
        }
        let m = ModeSet::single(5).unwrap();
        let lossy = MixedState::from_populations(m, &[0.47, 0.53]).unwrap();
        let pr = marginal_distribution(&lossy, 1.1, &grid).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let g = (-x * x).exp() / sqrt_pi;
            assert!((pr[i] - (0.53 * 2.0 * x * x * g + 0.47 * g)).abs() < 1e-14);
        }
    }

    #[test]
    fn marginal_rejects_unnormalized() {
        assert!(marginal_distribution(&fock(1).scale(0.5), 0.0, &[0.0]).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_quadratures(&fock(1), &[0.0, 1.0], 200, 9).unwrap();
        let b = sample_quadratures(&fock(1), &[0.0, 1.0], 200, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_quadratures(&fock(1), &[0.0, 1.0], 200, 10).unwrap();
        assert_ne!(a, c);
        assert!(sample_quadratures(&fock(1), &[3.5], 10, 0).is_err());
        assert!(sample_quadratures(&fock(1), &[0.0], 0, 0).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = sample_quadratures(&fock(2), &uniform_phases(3), 50, 4)
            .unwrap()
            .with_label("two photons, lossless");
        let text = d.to_csv_string();
        let back = QuadratureDataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let bad = "# seed=1 source_label=x\nphase,value\n0.1,abc\n";
        match QuadratureDataset::read_csv(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(QuadratureDataset::read_csv("nonsense\n".as_bytes()).is_err());
    }

    #[test]
    fn histogram_bins() {
        let counts = histogram([-1.0, -0.5, 0.0, 0.49, 0.5, 1.0, 2.0], &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(counts, vec![1, 1, 2, 2]);
    }
}
