//! Command implementations for the `lossbench` binary.

pub mod config;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use lossbench_core::analysis::{self, ExactModel};
use lossbench_core::protocol::{self, DecayDataset};
use lossbench_core::{
    fit_loss_decay, fit_rb_decay, plateau_test, prop1_check, BoundReport, FitOptions, MarkovFlag,
    Thresholds,
};

pub use config::{parse_config, parse_noise, ConfigError, Experiment, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Precondition(#[from] lossbench_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    /// 1 for bad input, 2 for filesystem failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 2,
            _ => 1,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Model {
    Loss,
    Rb,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Outcome of `simulate`.
#[derive(Debug)]
pub struct Simulation {
    pub out_dir: PathBuf,
    pub dataset: DecayDataset,
    pub metadata: serde_json::Value,
}

/// Runs the protocol described by the config at `config_path` and writes
/// `decay.csv` and `metadata.json`.
///
/// The output directory is `out`, else the config's `output_dir` resolved
/// against the config's directory, else the current directory.
pub fn simulate(
    config_path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<Simulation, CliError> {
    let cfg = parse_config(&read(config_path)?)?;
    let exp = cfg.build(seed)?;
    let p = &exp.protocol;
    let dataset = protocol::run_protocol(p)?;

    let out_dir = match (out, &cfg.output_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => config_path.parent().unwrap_or(Path::new(".")).join(d),
        (None, None) => PathBuf::from("."),
    };
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;

    let logical = p.gateset.logical().unwrap_or(&p.gateset);
    let identity_included = logical.index_of("I").is_some();
    let metadata = json!({
        "tool": "lossbench",
        "version": VERSION,
        "fingerprint": p.fingerprint(),
        "seed": p.master_seed,
        "variant": p.variant.as_str(),
        "gateset": p.gateset.name(),
        "gate_labels": p.gateset.labels(),
        "identity_in_gateset": identity_included,
        "dim": p.dim(),
        "m_grid": p.m_grid,
        "n_sequences": p.n_sequences,
        "shots": p.shots.to_string(),
        "leakage_theta": exp.leakage_theta,
        "detector_mean_response": p.measurement.mean_response(),
        "ideal_detector_mean_response": exp.ideal_detector.mean_response(),
        "average_survival": analysis::average_survival(&p.noise),
        "state_survival": analysis::state_survival(&p.noise, &p.rho0)?,
    });

    let csv_path = out_dir.join("decay.csv");
    write(&csv_path, &dataset.to_csv_string())?;
    write(&out_dir.join("metadata.json"), &to_json(&metadata))?;
    Ok(Simulation {
        out_dir,
        dataset,
        metadata,
    })
}

/// Outcome of `fit`: the JSON report and a one-line summary.
#[derive(Debug)]
pub struct FitReport {
    pub json: serde_json::Value,
    pub summary: String,
}

fn flag_names(flags: &[MarkovFlag]) -> Vec<serde_json::Value> {
    flags
        .iter()
        .map(|f| serde_json::to_value(f).expect("unit enum"))
        .collect()
}

/// Fits the decay curve in `csv_path`; writes `fit.json` to `out` (default:
/// the CSV's directory).
pub fn fit(csv_path: &Path, model: Model, out: Option<&Path>) -> Result<FitReport, CliError> {
    let file = fs::File::open(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    let ds = DecayDataset::read_csv(file)?;
    let thresholds = Thresholds::default();
    let report = match model {
        Model::Loss => {
            let f = fit_loss_decay(&ds, FitOptions::default())?;
            let plateau = if ds.points.len() >= 8 && f.converged {
                Some(plateau_test(&ds, &f, thresholds)?)
            } else {
                None
            };
            let mut flags = Vec::new();
            if plateau.is_some_and(|p| p.flagged) {
                flags.push(MarkovFlag::Plateau);
            }
            let d_hat = if f.s_hat > 0.0 {
                f.b0_hat / f.s_hat
            } else {
                f64::NAN
            };
            FitReport {
                summary: format!("S_hat = {:.6} ± {:.6}", f.s_hat, f.stderr_s),
                json: json!({
                    "model": "loss",
                    "S_hat": f.s_hat,
                    "S_stderr": f.stderr_s,
                    "B0_hat": f.b0_hat,
                    "B0_stderr": f.stderr_b0,
                    "D_hat": d_hat,
                    "chi2_per_dof": f.chi2_per_dof,
                    "converged": f.converged,
                    "n_iterations": f.n_iterations,
                    "weighted": f.weighted,
                    "plateau": plateau,
                    "flags": flag_names(&flags),
                }),
            }
        }
        Model::Rb => {
            let f = fit_rb_decay(&ds, FitOptions::default())?;
            let b_minus_a = f.b_hat - f.a_hat;
            let var = f.stderr_a.powi(2) + f.stderr_b.powi(2) - 2.0 * f.cov_ab;
            let sigma = var.max(0.0).sqrt();
            let mut flags = Vec::new();
            if f.converged && b_minus_a < 0.0 && -b_minus_a > thresholds.z * sigma {
                flags.push(MarkovFlag::BMinusANegative);
            }
            FitReport {
                summary: format!("p_hat = {:.6} ± {:.6}", f.p_hat, f.stderr_p),
                json: json!({
                    "model": "rb",
                    "A_hat": f.a_hat,
                    "A_stderr": f.stderr_a,
                    "B_hat": f.b_hat,
                    "B_stderr": f.stderr_b,
                    "p_hat": f.p_hat,
                    "p_stderr": f.stderr_p,
                    "B_minus_A": b_minus_a,
                    "B_minus_A_stderr": sigma,
                    "chi2_per_dof": f.chi2_per_dof,
                    "converged": f.converged,
                    "n_iterations": f.n_iterations,
                    "weighted": f.weighted,
                    "flags": flag_names(&flags),
                }),
            }
        }
    };
    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| csv_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    write(&out_dir.join("fit.json"), &to_json(&report.json))?;
    Ok(report)
}

/// Average and worst-case loss of the channel in the config's `noise`
/// section.
pub fn check_channel(config_path: &Path) -> Result<BoundReport, CliError> {
    let (noise, seed) = parse_noise(&read(config_path)?)?;
    let (channel, _) = noise.build(2, seed)?;
    Ok(prop1_check(&channel))
}

/// JSON rendering used on stdout by `check-channel`.
pub fn bound_report_json(report: &BoundReport) -> String {
    to_json(report)
}

/// The exact model of a built experiment, for diagnostics.
pub fn exact_model(exp: &Experiment) -> ExactModel<'_> {
    ExactModel {
        channel: &exp.protocol.noise,
        rho: &exp.protocol.rho0,
        measurement: &exp.protocol.measurement,
    }
}
