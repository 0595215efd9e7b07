use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use vampire_core::scenarios::{gaussian_profile, heralded_fock_prep, vampire_pipeline_with, SubtractionMode};
use vampire_core::tomography::maxlik_reconstruct;
use vampire_core::{
    fidelity, shadow_demo, ExperimentConfig, MixedState, QuadratureDataset, ShadowMechanism, ShadowReport,
    TomographySettings,
};

use crate::config::{parse_config, serialize_config, ConfigError};
use crate::selftest::selftest;

#[derive(Debug, Parser)]
#[command(name = "vampire", version, about = "Photon subtraction on split quantum states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long, global = true, default_value = "vampire-out")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Physical,
    Exact,
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Annihilation,
    Attenuation,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Heralded Fock state, split, subtraction, recombination and tomography.
    Vampire {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        n: u8,
        #[arg(long, value_enum, default_value_t = ModeArg::Physical)]
        mode: ModeArg,
    },
    /// Per-pixel intensities when a cloud covering some pixels acts on the beam.
    Shadow {
        /// Photons in the input Fock state.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        pixels: usize,
        /// Gaussian beam width in pixels.
        #[arg(long, default_value_t = 1.2)]
        width: f64,
        /// Covered pixels, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        subset: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, value_enum, default_value_t = MechanismArg::Both)]
        mechanism: MechanismArg,
    },
    /// Maximum-likelihood reconstruction of a quadrature CSV file.
    Tomo {
        #[arg(long)]
        data: PathBuf,
    },
    /// Heralded Fock-state preparation only.
    Prep {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        n: u8,
    },
    /// Runs the built-in invariant checks.
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Vampire { .. } => "vampire",
            Command::Shadow { .. } => "shadow",
            Command::Tomo { .. } => "tomo",
            Command::Prep { .. } => "prep",
            Command::Selftest => "selftest",
        }
    }
}

/// Failure with a stable machine-readable code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("error[{code}]: {message}")]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
        }
    }

    /// Single-line form for stderr.
    pub fn diagnostic(&self) -> String {
        self.to_string().replace('\n', " ")
    }
}

impl From<vampire_core::Error> for CliError {
    fn from(e: vampire_core::Error) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

fn config_error(path: &Path, e: ConfigError) -> CliError {
    CliError::new(e.code(), format!("{}: {e}", path.display()))
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new("io", format!("{}: {e}", path.display()))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            parse_config(&text).map_err(|e| config_error(path, e))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

struct Output<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, cli: &Cli, cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = serde_json::json!({
            "command": cli.command.name(),
            "timestamp_unix": timestamp,
            "version": env!("CARGO_PKG_VERSION"),
            "config_path": cli.config.as_ref().map(|p| p.display().to_string()),
            "seed": cfg.seed,
            "files": self.written,
        });
        let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        self.write("metadata.json", &text)?;
        Ok(self.written)
    }
}

fn distribution(p: &[f64]) -> String {
    p.iter()
        .enumerate()
        .map(|(n, v)| format!("p{n}={v:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Executes the command and returns the text summary.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let mut s = String::new();
    match &cli.command {
        Command::Selftest => {
            let checks = selftest();
            let failed = checks.iter().filter(|c| !c.pass).count();
            for c in &checks {
                let _ = writeln!(s, "{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                return Err(CliError::new(
                    "selftest-failed",
                    format!("{failed} of {} checks failed", checks.len()),
                ));
            }
            let _ = writeln!(s, "{} checks passed", checks.len());
        }
        Command::Vampire { n, mode } => {
            let cfg = load_config(cli)?;
            let mode = match mode {
                ModeArg::Physical => SubtractionMode::Physical,
                ModeArg::Exact => SubtractionMode::Exact,
                ModeArg::Disabled => SubtractionMode::Disabled,
            };
            let report = vampire_pipeline_with(&cfg, *n as usize, mode)?;
            let mut out = Output::new(&cli.out)?;
            out.write("report.json", &report.to_json())?;
            out.write("config.txt", &serialize_config(&cfg))?;
            for b in report.branches() {
                out.write(&format!("histogram_{}.csv", b.label), &b.histogram_csv())?;
            }
            let files = out.finish(cli, &cfg)?;
            let _ = writeln!(s, "vampire N={n}  herald probability {:.3e}", report.herald_probability);
            for b in report.branches() {
                let _ = writeln!(s, "[{}] heralding rate {:.3e}", b.label, b.heralding_probability);
                let _ = writeln!(s, "  true          {}", distribution(&b.true_photon_numbers));
                let _ = writeln!(s, "  reconstructed {}", distribution(&b.reconstructed_photon_numbers));
                let _ = writeln!(
                    s,
                    "  fidelity with |{}>: true {:.4}, reconstructed {:.4}; a_perp population {:.2e}",
                    b.target_photons, b.true_fidelity, b.reconstructed_fidelity, b.perp_population
                );
            }
            let _ = writeln!(
                s,
                "exact annihilation: a_perp population {:.2e}, fidelity with |{}> {:.6}",
                report.exact_reference.perp_population,
                n - 1,
                report.exact_reference.fidelity_next_lower
            );
            let _ = writeln!(s, "wrote {} in {}", files.join(", "), cli.out.display());
        }
        Command::Shadow {
            n,
            pixels,
            width,
            subset,
            gamma,
            mechanism,
        } => {
            if *pixels < 2 || *pixels > 6 {
                return Err(CliError::new("invalid-argument", format!("pixels {pixels} outside [2, 6]")));
            }
            if width.is_nan() || *width <= 0.0 {
                return Err(CliError::new("invalid-argument", format!("width {width} must be positive")));
            }
            let c = gaussian_profile(*pixels, *width);
            let mut reports: Vec<ShadowReport> = Vec::new();
            if matches!(mechanism, MechanismArg::Annihilation | MechanismArg::Both) {
                reports.push(shadow_demo(&c, subset, ShadowMechanism::Annihilation, *n)?);
            }
            if matches!(mechanism, MechanismArg::Attenuation | MechanismArg::Both) {
                reports.push(shadow_demo(&c, subset, ShadowMechanism::Attenuation { gamma: *gamma }, *n)?);
            }
            let mut out = Output::new(&cli.out)?;
            out.write(
                "shadow.json",
                &serde_json::to_string_pretty(&reports).expect("report serializes"),
            )?;
            let files = out.finish(cli, &ExperimentConfig::default())?;
            for r in &reports {
                let _ = writeln!(s, "{:?}", r.mechanism);
                let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
                let _ = writeln!(s, "  input  {}", fmt(&r.input_profile));
                let _ = writeln!(s, "  output {}", fmt(&r.output_profile));
                let _ = writeln!(
                    s,
                    "  covered/uncovered ratio {:.4}/{:.4}, contrast {:.2e}",
                    r.covered_ratio, r.uncovered_ratio, r.contrast
                );
            }
            let _ = writeln!(s, "wrote {} in {}", files.join(", "), cli.out.display());
        }
        Command::Tomo { data } => {
            let cfg = load_config(cli)?;
            let file = fs::File::open(data).map_err(|e| io_error(data, e))?;
            let dataset = QuadratureDataset::read_csv(std::io::BufReader::new(file))
                .map_err(|e| CliError::new(e.code(), format!("{}: {e}", data.display())))?;
            let settings = TomographySettings {
                cutoff: cfg.cutoff,
                efficiency_compensation: cfg.detection_efficiency,
                ..Default::default()
            };
            let result = maxlik_reconstruct(&dataset, &settings)?;
            let mut out = Output::new(&cli.out)?;
            out.write("tomography.json", &result.to_json())?;
            let files = out.finish(cli, &cfg)?;
            let record = result.to_record();
            let _ = writeln!(
                s,
                "{} samples, {} iterations (converged: {})",
                dataset.len(),
                record.iterations_used,
                record.converged
            );
            let _ = writeln!(s, "  {}", distribution(&record.photon_numbers));
            let _ = writeln!(s, "wrote {} in {}", files.join(", "), cli.out.display());
        }
        Command::Prep { n } => {
            let cfg = load_config(cli)?;
            let h = heralded_fock_prep(&cfg, *n as usize)?;
            let target = MixedState::fock(*h.state.modes(), &[*n as usize])?;
            let f = fidelity(&h.state, &target)?;
            let p = h.state.photon_number_distribution();
            let report = serde_json::json!({
                "target_photons": n,
                "herald_probability": h.probability,
                "photon_numbers": p,
                "fidelity": f,
                "config": cfg,
            });
            let mut out = Output::new(&cli.out)?;
            out.write("prep.json", &serde_json::to_string_pretty(&report).expect("report serializes"))?;
            let files = out.finish(cli, &cfg)?;
            let _ = writeln!(s, "heralded |{n}>: probability {:.3e}, fidelity {f:.5}", h.probability);
            let _ = writeln!(s, "  {}", distribution(&p));
            let _ = writeln!(s, "wrote {} in {}", files.join(", "), cli.out.display());
        }
    }
    Ok(s)
}
