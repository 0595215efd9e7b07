//! Flat `key = value` experiment configuration with `#` comments.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use vampire_core::{DetectorModel, ExperimentConfig, C64};

/// Upper cutoff accepted from a config file; three modes at this cutoff
/// already need a 2197-dimensional density matrix.
pub const MAX_CUTOFF: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: {field}: cannot parse {value:?} as {expected}")]
    BadValue {
        line: usize,
        field: String,
        value: String,
        expected: &'static str,
    },
    #[error("line {line}: {field}: {message}")]
    OutOfRange { line: usize, field: String, message: String },
    #[error("{0}")]
    Inconsistent(String),
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Malformed { .. } => "config-malformed",
            ConfigError::UnknownKey { .. } => "config-unknown-key",
            ConfigError::Duplicate { .. } => "config-duplicate-key",
            ConfigError::BadValue { .. } => "config-bad-value",
            ConfigError::OutOfRange { .. } => "config-out-of-range",
            ConfigError::Inconsistent(_) => "config-inconsistent",
        }
    }
}

const KEYS: [&str; 16] = [
    "squeezing",
    "herald_efficiency",
    "herald_dark_prob",
    "herald_number_resolving",
    "tap_reflectivity",
    "subtraction_efficiency",
    "subtraction_dark_prob",
    "subtraction_number_resolving",
    "split_mu",
    "split_lambda",
    "detection_efficiency",
    "samples_per_phase",
    "phases",
    "phase_count",
    "cutoff",
    "seed",
];

struct Field<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Field<'_> {
    fn bad(&self, expected: &'static str) -> ConfigError {
        ConfigError::BadValue {
            line: self.line,
            field: self.key.to_string(),
            value: self.value.to_string(),
            expected,
        }
    }

    fn range(&self, message: String) -> ConfigError {
        ConfigError::OutOfRange {
            line: self.line,
            field: self.key.to_string(),
            message,
        }
    }

    fn real(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.value.parse().map_err(|_| self.bad("a real number"))?;
        if !v.is_finite() {
            return Err(self.bad("a finite real number"));
        }
        Ok(v)
    }

    fn real_in(&self, lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<f64, ConfigError> {
        let v = self.real()?;
        let ok = (if lo_open { v > lo } else { v >= lo }) && (if hi_open { v < hi } else { v <= hi });
        if !ok {
            let (l, r) = (if lo_open { "(" } else { "[" }, if hi_open { ")" } else { "]" });
            return Err(self.range(format!("{v} outside {l}{lo}, {hi}{r}")));
        }
        Ok(v)
    }

    fn integer(&self) -> Result<u64, ConfigError> {
        self.value.parse().map_err(|_| self.bad("a nonnegative integer"))
    }

    fn boolean(&self) -> Result<bool, ConfigError> {
        match self.value {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.bad("true or false")),
        }
    }

    fn complex(&self) -> Result<C64, ConfigError> {
        let parts: Vec<&str> = self.value.split(',').map(str::trim).collect();
        let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        match parts.as_slice() {
            [re] => parse(re).map(|re| C64::new(re, 0.0)),
            [re, im] => parse(re).zip(parse(im)).map(|(re, im)| C64::new(re, im)),
            _ => None,
        }
        .ok_or_else(|| self.bad("`re` or `re, im`"))
    }

    fn phases(&self) -> Result<Vec<f64>, ConfigError> {
        let mut out = Vec::new();
        for part in self.value.split(',').map(str::trim) {
            let v: f64 = part.parse().map_err(|_| self.bad("a comma-separated list of reals"))?;
            if !(0.0..PI).contains(&v) {
                return Err(self.range(format!("phase {v} outside [0, pi)")));
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// Parses a config document; absent keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = HashSet::new();
    let mut herald = (cfg.herald_detector.efficiency(), cfg.herald_detector.dark_prob(), false, 0);
    let mut sub = (
        cfg.subtraction_detector.efficiency(),
        cfg.subtraction_detector.dark_prob(),
        false,
        0,
    );
    let mut split_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Malformed {
            line,
            text: raw.trim().to_string(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: raw.trim().to_string(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        let f = Field { line, key, value };
        match key {
            "squeezing" => cfg.squeezing = f.real_in(0.0, 1.0, true, true)?,
            "herald_efficiency" => (herald.0, herald.3) = (f.real_in(0.0, 1.0, false, false)?, line),
            "herald_dark_prob" => (herald.1, herald.3) = (f.real_in(0.0, 1.0, false, true)?, line),
            "herald_number_resolving" => herald.2 = f.boolean()?,
            "tap_reflectivity" => cfg.tap_reflectivity = f.real_in(0.0, 1.0, true, true)?,
            "subtraction_efficiency" => (sub.0, sub.3) = (f.real_in(0.0, 1.0, false, false)?, line),
            "subtraction_dark_prob" => (sub.1, sub.3) = (f.real_in(0.0, 1.0, false, true)?, line),
            "subtraction_number_resolving" => sub.2 = f.boolean()?,
            "split_mu" => (cfg.split_mu, split_line) = (f.complex()?, line),
            "split_lambda" => (cfg.split_lambda, split_line) = (f.complex()?, line),
            "detection_efficiency" => cfg.detection_efficiency = f.real_in(0.0, 1.0, true, false)?,
            "samples_per_phase" => {
                let v = f.integer()?;
                if v == 0 {
                    return Err(f.range("must be at least 1".into()));
                }
                cfg.samples_per_phase = v as usize;
            }
            "phases" => {
                if seen.contains("phase_count") {
                    return Err(f.range("conflicts with phase_count".into()));
                }
                cfg.phases = f.phases()?;
            }
            "phase_count" => {
                if seen.contains("phases") {
                    return Err(f.range("conflicts with phases".into()));
                }
                let v = f.integer()?;
                if v == 0 || v > 1000 {
                    return Err(f.range(format!("{v} outside [1, 1000]")));
                }
                cfg.phases = vampire_core::homodyne::uniform_phases(v as usize);
            }
            "cutoff" => {
                let v = f.integer()? as usize;
                if !(3..=MAX_CUTOFF).contains(&v) {
                    return Err(f.range(format!("{v} outside [3, {MAX_CUTOFF}]")));
                }
                cfg.cutoff = v;
            }
            "seed" => cfg.seed = f.integer()?,
            _ => unreachable!("key list checked above"),
        }
    }

    cfg.herald_detector = DetectorModel::new(herald.0, herald.1)
        .map_err(|e| ConfigError::OutOfRange {
            line: herald.3,
            field: "herald_detector".into(),
            message: e.to_string(),
        })?
        .number_resolving(herald.2);
    cfg.subtraction_detector = DetectorModel::new(sub.0, sub.1)
        .map_err(|e| ConfigError::OutOfRange {
            line: sub.3,
            field: "subtraction_detector".into(),
            message: e.to_string(),
        })?
        .number_resolving(sub.2);
    if let Err(e) = cfg.splitter() {
        return Err(ConfigError::OutOfRange {
            line: split_line,
            field: "split_mu/split_lambda".into(),
            message: e.to_string(),
        });
    }
    cfg.validate().map_err(|e| ConfigError::Inconsistent(e.to_string()))?;
    Ok(cfg)
}

fn complex_text(z: C64) -> String {
    format!("{:?}, {:?}", z.re, z.im)
}

/// Writes every field, so that `parse_config` reproduces `cfg` exactly.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::from("# experiment configuration\n");
    let h = &cfg.herald_detector;
    let s = &cfg.subtraction_detector;
    let phases: Vec<String> = cfg.phases.iter().map(|p| format!("{p:?}")).collect();
    let rows: [(&str, String); 15] = [
        ("squeezing", format!("{:?}", cfg.squeezing)),
        ("herald_efficiency", format!("{:?}", h.efficiency())),
        ("herald_dark_prob", format!("{:?}", h.dark_prob())),
        ("herald_number_resolving", h.is_number_resolving().to_string()),
        ("tap_reflectivity", format!("{:?}", cfg.tap_reflectivity)),
        ("subtraction_efficiency", format!("{:?}", s.efficiency())),
        ("subtraction_dark_prob", format!("{:?}", s.dark_prob())),
        ("subtraction_number_resolving", s.is_number_resolving().to_string()),
        ("split_mu", complex_text(cfg.split_mu)),
        ("split_lambda", complex_text(cfg.split_lambda)),
        ("detection_efficiency", format!("{:?}", cfg.detection_efficiency)),
        ("samples_per_phase", cfg.samples_per_phase.to_string()),
        ("phases", phases.join(", ")),
        ("cutoff", cfg.cutoff.to_string()),
        ("seed", cfg.seed.to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}
