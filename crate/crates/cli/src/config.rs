//! Run-configuration documents.
//!
//! A config is a TOML document with the sections `gateset`, `noise`,
//! `state`, `detector` and `protocol`, plus a top-level `seed` and an
//! optional `output_dir`. Explicit matrices are nested arrays of `[re, im]`
//! pairs, row-major.

use std::fmt;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use lossbench_core::gates::{clifford_gateset, pauli_gateset};
use lossbench_core::linalg::CMatrix;
use lossbench_core::noise::{self, DetectorBasis, DetectorSpec, LeakageModelSpec, LossModelSpec};
use lossbench_core::protocol::{ProtocolConfig, Shots, Variant};
use lossbench_core::{DensityMatrix, GateSet, MeasurementOperator, QuantumChannel};

const TOP_LEVEL_KEYS: [&str; 7] = [
    "seed",
    "output_dir",
    "gateset",
    "noise",
    "state",
    "detector",
    "protocol",
];
const REQUIRED: [&str; 6] = ["seed", "gateset", "noise", "state", "detector", "protocol"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every problem found in a config document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub errors: Vec<FieldError>,
}

impl ConfigError {
    fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            errors: vec![FieldError {
                path: path.into(),
                message: message.into(),
            }],
        }
    }

    pub fn paths(&self) -> Vec<&str> {
        self.errors.iter().map(|e| e.path.as_str()).collect()
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config:")?;
        for e in &self.errors {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Default)]
struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError {
            path: path.into(),
            message: message.into(),
        });
    }

    fn finish<T>(self, value: T) -> Result<T, ConfigError> {
        if self.0.is_empty() {
            Ok(value)
        } else {
            Err(ConfigError { errors: self.0 })
        }
    }
}

pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateSetKind {
    Pauli,
    Clifford,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSetSection {
    pub kind: GateSetKind,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseSection {
    Identity {
        dim: Option<usize>,
    },
    Loss {
        alpha: f64,
        level: usize,
        dim: Option<usize>,
    },
    Depolarizing {
        q: f64,
        dim: Option<usize>,
    },
    Random {
        dim: Option<usize>,
        loss_scale: f64,
        seed: u64,
    },
    Kraus {
        kraus: Vec<MatrixSpec>,
    },
    Leakage {
        epsilon: Option<f64>,
        theta: Option<f64>,
        hamiltonian_seed: u64,
        phase_seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatePreset {
    Ground,
    Excited,
    MaximallyMixed,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub preset: Option<StatePreset>,
    pub matrix: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub eigenvalues: Vec<f64>,
    pub basis_seed: Option<u64>,
    pub basis: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<usize>),
    Range {
        start: usize,
        stop: usize,
        step: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ShotsSpec {
    Count(u64),
    Word(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantSpec {
    Loss,
    Rb,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub m_grid: GridSpec,
    pub n_sequences: usize,
    pub shots: ShotsSpec,
    pub variant: Option<VariantSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: Option<String>,
    pub gateset: GateSetSection,
    pub noise: NoiseSection,
    pub state: StateSection,
    pub detector: DetectorSection,
    pub protocol: ProtocolSection,
}

/// A fully built run: the engine configuration plus what the reports need.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub protocol: ProtocolConfig,
    /// Relative phase of the leakage level, for leakage runs.
    pub leakage_theta: Option<f64>,
    /// `Q_ideal`: the perfect detector on the qubit, padded like `Q`.
    pub ideal_detector: MeasurementOperator,
}

fn section<T: DeserializeOwned>(table: &toml::Table, name: &str, errors: &mut Errors) -> Option<T> {
    let value = table.get(name)?;
    match T::deserialize(value.clone()) {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(name, e.message().to_string());
            None
        }
    }
}

fn parse_table(text: &str) -> Result<toml::Table, ConfigError> {
    text.parse::<toml::Table>()
        .map_err(|e| ConfigError::single("<document>", format!("syntax error: {}", e.message())))
}

fn matrix_from_spec(spec: &MatrixSpec, path: &str, errors: &mut Errors) -> Option<CMatrix> {
    let n = spec.len();
    if n == 0 || spec.iter().any(|row| row.len() != n) {
        errors.push(path, "matrix must be square and non-empty");
        return None;
    }
    Some(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(spec[i][j][0], spec[i][j][1])
    }))
}

impl NoiseSection {
    /// Dimension of the channel this section describes.
    fn dim(&self, default: usize) -> usize {
        match self {
            NoiseSection::Identity { dim }
            | NoiseSection::Loss { dim, .. }
            | NoiseSection::Depolarizing { dim, .. }
            | NoiseSection::Random { dim, .. } => dim.unwrap_or(default),
            NoiseSection::Kraus { kraus } => kraus.first().map_or(default, Vec::len),
            NoiseSection::Leakage { .. } => 3,
        }
    }

    /// Builds the channel; `run_seed` supplies the leakage phase when no
    /// explicit `theta` or `phase_seed` is given.
    pub fn build(
        &self,
        default_dim: usize,
        run_seed: u64,
    ) -> Result<(QuantumChannel, Option<f64>), ConfigError> {
        let wrap = |field: &str, e: lossbench_core::Error| {
            ConfigError::single(format!("noise.{field}"), e.to_string())
        };
        let dim = self.dim(default_dim);
        match self {
            NoiseSection::Identity { .. } => Ok((QuantumChannel::identity(dim), None)),
            NoiseSection::Loss { alpha, level, .. } => {
                let mut errors = Errors::default();
                if !(0.0..=1.0).contains(alpha) {
                    errors.push("noise.alpha", format!("{alpha} outside [0, 1]"));
                }
                if *level >= dim {
                    errors.push("noise.level", format!("{level} not below dim {dim}"));
                }
                errors.finish(())?;
                let spec = LossModelSpec::new(*alpha, *level, dim).map_err(|e| wrap("alpha", e))?;
                Ok((
                    noise::basis_loss_channel(&spec).map_err(|e| wrap("alpha", e))?,
                    None,
                ))
            }
            NoiseSection::Depolarizing { q, .. } => Ok((
                noise::depolarizing_channel(dim, *q).map_err(|e| wrap("q", e))?,
                None,
            )),
            NoiseSection::Random {
                loss_scale, seed, ..
            } => Ok((
                noise::random_lossy_channel(dim, *loss_scale, *seed)
                    .map_err(|e| wrap("loss_scale", e))?,
                None,
            )),
            NoiseSection::Kraus { kraus } => {
                let mut errors = Errors::default();
                let mats: Vec<CMatrix> = kraus
                    .iter()
                    .enumerate()
                    .filter_map(|(i, k)| {
                        matrix_from_spec(k, &format!("noise.kraus[{i}]"), &mut errors)
                    })
                    .collect();
                errors.finish(())?;
                Ok((
                    QuantumChannel::new(mats).map_err(|e| wrap("kraus", e))?,
                    None,
                ))
            }
            NoiseSection::Leakage {
                epsilon,
                theta,
                hamiltonian_seed,
                phase_seed,
            } => {
                let epsilon = epsilon.unwrap_or(LeakageModelSpec::DEFAULT_EPSILON);
                let spec = match theta {
                    Some(theta) => LeakageModelSpec {
                        epsilon,
                        theta: *theta,
                        hamiltonian_seed: *hamiltonian_seed,
                    },
                    None => LeakageModelSpec::with_random_theta(
                        epsilon,
                        *hamiltonian_seed,
                        phase_seed.unwrap_or(run_seed),
                    ),
                };
                let ch = noise::coherent_leakage_error(&spec).map_err(|e| wrap("epsilon", e))?;
                Ok((ch, Some(spec.theta)))
            }
        }
    }
}

impl GridSpec {
    fn lengths(&self) -> Vec<usize> {
        match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range { start, stop, step } => {
                if *step == 0 {
                    Vec::new()
                } else {
                    (*start..=*stop).step_by(*step).collect()
                }
            }
        }
    }
}

/// Parses only the `noise` section, for channel checks.
pub fn parse_noise(text: &str) -> Result<(NoiseSection, u64), ConfigError> {
    let table = parse_table(text)?;
    let mut errors = Errors::default();
    if !table.contains_key("noise") {
        errors.push("noise", "missing required section");
    }
    let noise: Option<NoiseSection> = section(&table, "noise", &mut errors);
    let seed = table
        .get("seed")
        .and_then(toml::Value::as_integer)
        .unwrap_or(0) as u64;
    let noise = errors.finish(noise)?;
    Ok((noise.expect("present when no errors"), seed))
}

/// Parses and validates a run config.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table = parse_table(text)?;
    let mut errors = Errors::default();
    for key in table.keys() {
        if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
            errors.push(key.clone(), "unknown key");
        }
    }
    for key in REQUIRED {
        if !table.contains_key(key) {
            errors.push(key, "missing required section");
        }
    }

    let seed = match table.get("seed") {
        Some(toml::Value::Integer(s)) if *s >= 0 => Some(*s as u64),
        Some(_) => {
            errors.push("seed", "must be a non-negative integer");
            None
        }
        None => None,
    };
    let output_dir = match table.get("output_dir") {
        Some(toml::Value::String(s)) => Some(s.clone()),
        Some(_) => {
            errors.push("output_dir", "must be a string");
            None
        }
        None => None,
    };
    let gateset: Option<GateSetSection> = section(&table, "gateset", &mut errors);
    let noise: Option<NoiseSection> = section(&table, "noise", &mut errors);
    let state: Option<StateSection> = section(&table, "state", &mut errors);
    let detector: Option<DetectorSection> = section(&table, "detector", &mut errors);
    let protocol: Option<ProtocolSection> = section(&table, "protocol", &mut errors);

    if let Some(d) = &detector {
        for (i, e) in d.eigenvalues.iter().enumerate() {
            if !(0.0..=1.0).contains(e) {
                errors.push(
                    format!("detector.eigenvalues[{i}]"),
                    format!("{e} outside [0, 1]"),
                );
            }
        }
        if d.basis.is_some() && d.basis_seed.is_some() {
            errors.push(
                "detector.basis",
                "give either `basis` or `basis_seed`, not both",
            );
        }
    }
    if let Some(s) = &state {
        if s.preset.is_some() == s.matrix.is_some() {
            errors.push("state", "give exactly one of `preset` or `matrix`");
        }
    }
    if let Some(p) = &protocol {
        let grid = p.m_grid.lengths();
        if grid.is_empty() {
            errors.push("protocol.m_grid", "empty grid");
        } else if grid[0] == 0 {
            errors.push("protocol.m_grid", "lengths must be positive");
        } else if grid.windows(2).any(|w| w[0] >= w[1]) {
            errors.push("protocol.m_grid", "must be strictly increasing");
        }
        if p.n_sequences == 0 {
            errors.push("protocol.n_sequences", "must be positive");
        }
        match &p.shots {
            ShotsSpec::Count(0) => errors.push("protocol.shots", "must be positive"),
            ShotsSpec::Word(w) if w != "exact" => errors.push(
                "protocol.shots",
                format!("expected `exact` or a count, found `{w}`"),
            ),
            _ => {}
        }
    }

    errors.finish(())?;
    let config = RunConfig {
        seed: seed.expect("checked"),
        output_dir,
        gateset: gateset.expect("checked"),
        noise: noise.expect("checked"),
        state: state.expect("checked"),
        detector: detector.expect("checked"),
        protocol: protocol.expect("checked"),
    };
    // Surface dimension problems at parse time.
    config.build(None)?;
    Ok(config)
}

impl RunConfig {
    pub fn gateset(&self) -> GateSet {
        match self.gateset.kind {
            GateSetKind::Pauli => pauli_gateset(),
            GateSetKind::Clifford => clifford_gateset(),
        }
    }

    pub fn shots(&self) -> Shots {
        match self.protocol.shots {
            ShotsSpec::Count(n) => Shots::Count(n),
            ShotsSpec::Word(_) => Shots::Exact,
        }
    }

    /// Builds the engine configuration, optionally overriding the seed.
    pub fn build(&self, seed_override: Option<u64>) -> Result<Experiment, ConfigError> {
        let seed = seed_override.unwrap_or(self.seed);
        let logical = self.gateset();
        let qubit_dim = logical.dim();
        let (channel, theta) = self.noise.build(qubit_dim, seed)?;
        let leakage = theta.is_some();
        let dim = if leakage { 3 } else { qubit_dim };
        let mut errors = Errors::default();
        if channel.dim() != dim {
            errors.push(
                "noise",
                format!(
                    "channel acts on dimension {}, gate set on {dim}",
                    channel.dim()
                ),
            );
        }

        let rho = match (&self.state.preset, &self.state.matrix) {
            (Some(StatePreset::Ground), _) => Some(DensityMatrix::basis(0, qubit_dim)),
            (Some(StatePreset::Excited), _) => Some(DensityMatrix::basis(1, qubit_dim)),
            (Some(StatePreset::MaximallyMixed), _) => {
                Some(DensityMatrix::maximally_mixed(qubit_dim))
            }
            (None, Some(m)) => matrix_from_spec(m, "state.matrix", &mut errors).and_then(|m| {
                if m.nrows() != qubit_dim {
                    errors.push(
                        "state.matrix",
                        format!(
                            "dimension {} does not match gate set dimension {qubit_dim}",
                            m.nrows()
                        ),
                    );
                    return None;
                }
                DensityMatrix::checked(m)
                    .map_err(|e| errors.push("state.matrix", e.to_string()))
                    .ok()
            }),
            (None, None) => None,
        };

        let det = &self.detector;
        if det.eigenvalues.len() != qubit_dim {
            errors.push(
                "detector.eigenvalues",
                format!(
                    "{} eigenvalues for dimension {qubit_dim}",
                    det.eigenvalues.len()
                ),
            );
        }
        let basis = match (&det.basis, det.basis_seed) {
            (Some(b), _) => {
                matrix_from_spec(b, "detector.basis", &mut errors).map(DetectorBasis::Explicit)
            }
            (None, Some(seed)) => Some(DetectorBasis::Seeded(seed)),
            (None, None) => Some(DetectorBasis::Computational),
        };
        let q = basis.and_then(|basis| {
            if det.eigenvalues.len() != qubit_dim {
                return None;
            }
            noise::detector_model(&DetectorSpec {
                eigenvalues: det.eigenvalues.clone(),
                basis,
            })
            .map_err(|e| errors.push("detector", e.to_string()))
            .ok()
        });
        let (rho, q) = errors.finish((rho, q))?;
        let (rho, q) = (rho.expect("valid"), q.expect("valid"));

        let ideal = MeasurementOperator::identity(qubit_dim);
        let (gateset, rho, q, ideal) = if let Some(theta) = theta {
            let pad = |e: lossbench_core::Error| ConfigError::single("noise", e.to_string());
            (
                logical.embedded_in_qutrit(theta).map_err(pad)?,
                rho.padded(3).map_err(pad)?,
                q.padded(3).map_err(pad)?,
                ideal.padded(3).map_err(pad)?,
            )
        } else {
            (logical, rho, q, ideal)
        };

        let protocol = ProtocolConfig {
            gateset,
            noise: channel,
            rho0: rho,
            measurement: q,
            m_grid: self.protocol.m_grid.lengths(),
            n_sequences: self.protocol.n_sequences,
            shots: self.shots(),
            master_seed: seed,
            variant: match self.protocol.variant {
                Some(VariantSpec::Rb) => Variant::Rb,
                _ => Variant::Loss,
            },
            keep_raw: false,
        };
        Ok(Experiment {
            protocol,
            leakage_theta: theta,
            ideal_detector: ideal,
        })
    }
}

/// Inverse of the `[re, im]` encoding.
pub fn matrix_spec(m: &CMatrix) -> MatrixSpec {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}
