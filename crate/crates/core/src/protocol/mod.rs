//! The randomized-sequence loss protocol and its RB variant.
//!
//! Noise follows the convention `E_g = g∘E`: the fixed error map acts
//! before every gate. A sequence `k = (k_1, …, k_m)` therefore produces
//! `Q_k = Tr[Q g_{k_m}∘E∘…∘g_{k_1}∘E(ρ₀)]`. The RB variant appends the
//! inversion gate (again preceded by `E`) before measuring.

mod dataset;

use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use dataset::{DecayDataset, DecayPoint, RunMetadata, SequenceOutcome, Shots, CSV_HEADER};

use crate::error::{Error, Result};
use crate::gates::{self, GateSet};
use crate::linalg::CMatrix;
use crate::quantum::{self, DensityMatrix, MeasurementOperator, QuantumChannel};
use crate::rng::{self, purpose};

/// Sequence lengths used for the loss curve: 5, 10, …, 100.
pub fn default_loss_grid() -> Vec<usize> {
    (5..=100).step_by(5).collect()
}

/// Sequence lengths used for the leakage curve: 10, 20, …, 300.
pub fn default_leakage_grid() -> Vec<usize> {
    (10..=300).step_by(10).collect()
}

pub const DEFAULT_SEQUENCES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// No inversion gate before measurement.
    Loss,
    /// Inversion gate appended, as in randomized benchmarking.
    Rb,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Loss => "loss",
            Variant::Rb => "rb",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub gateset: GateSet,
    pub noise: QuantumChannel,
    pub rho0: DensityMatrix,
    pub measurement: MeasurementOperator,
    /// Strictly increasing, positive.
    pub m_grid: Vec<usize>,
    pub n_sequences: usize,
    pub shots: Shots,
    pub master_seed: u64,
    pub variant: Variant,
    /// Keep every [`SequenceOutcome`] in the dataset.
    pub keep_raw: bool,
}

impl ProtocolConfig {
    /// Loss-variant configuration with exact per-sequence values on the
    /// default loss grid.
    pub fn new(
        gateset: GateSet,
        noise: QuantumChannel,
        rho0: DensityMatrix,
        measurement: MeasurementOperator,
    ) -> Self {
        Self {
            gateset,
            noise,
            rho0,
            measurement,
            m_grid: default_loss_grid(),
            n_sequences: DEFAULT_SEQUENCES,
            shots: Shots::Exact,
            master_seed: 0,
            variant: Variant::Loss,
            keep_raw: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.gateset.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for found in [self.noise.dim(), self.rho0.dim(), self.measurement.dim()] {
            if found != d {
                return Err(Error::DimensionMismatch { expected: d, found });
            }
        }
        if self.m_grid.is_empty() {
            return Err(Error::param("m_grid", "empty"));
        }
        if self.m_grid[0] == 0 {
            return Err(Error::param("m_grid", "lengths must be positive"));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("m_grid", "must be strictly increasing"));
        }
        if self.n_sequences == 0 {
            return Err(Error::param("n_sequences", "must be positive"));
        }
        if self.shots == Shots::Count(0) {
            return Err(Error::param("shots", "must be positive"));
        }
        Ok(())
    }

    /// SHA-256 over everything that determines the dataset except the seed.
    pub fn fingerprint(&self) -> String {
        fn matrix(h: &mut Sha256, m: &CMatrix) {
            h.update((m.nrows() as u64).to_le_bytes());
            for z in m.iter() {
                h.update(z.re.to_bits().to_le_bytes());
                h.update(z.im.to_bits().to_le_bytes());
            }
        }
        let mut h = Sha256::new();
        h.update(self.gateset.name().as_bytes());
        for (g, label) in self.gateset.gates().iter().zip(self.gateset.labels()) {
            h.update(label.as_bytes());
            matrix(&mut h, g);
        }
        for k in self.noise.kraus() {
            matrix(&mut h, k);
        }
        matrix(&mut h, self.rho0.matrix());
        matrix(&mut h, self.measurement.matrix());
        for m in &self.m_grid {
            h.update((*m as u64).to_le_bytes());
        }
        h.update((self.n_sequences as u64).to_le_bytes());
        h.update(self.shots.to_string().as_bytes());
        h.update(self.variant.as_str().as_bytes());
        hex::encode(h.finalize())
    }

    pub fn metadata(&self) -> RunMetadata {
        RunMetadata {
            master_seed: self.master_seed,
            fingerprint: self.fingerprint(),
            variant: self.variant.as_str().to_string(),
            gateset: self.gateset.name().to_string(),
            gate_labels: self.gateset.labels().to_vec(),
        }
    }
}

/// `m` gate indices drawn independently and uniformly from the set.
pub fn sample_sequence<R: Rng + ?Sized>(
    set: &GateSet,
    m: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::param("m", "sequence length must be positive"));
    }
    Ok((0..m).map(|_| rng.random_range(0..set.len())).collect())
}

fn noisy_gate(noise: &QuantumChannel, gate: &CMatrix, rho: &CMatrix) -> CMatrix {
    gate * noise.apply_matrix(rho) * gate.adjoint()
}

/// State just before measurement for sequence `k`.
pub fn final_state(cfg: &ProtocolConfig, sequence: &[usize]) -> Result<CMatrix> {
    let set = &cfg.gateset;
    let mut rho = cfg.rho0.matrix().clone();
    for &k in sequence {
        rho = noisy_gate(&cfg.noise, set.gate(k)?, &rho);
    }
    if cfg.variant == Variant::Rb {
        let inverse = gates::inverse_gate(set, sequence)?;
        rho = noisy_gate(&cfg.noise, set.gate(inverse)?, &rho);
    }
    Ok(rho)
}

/// Runs one sequence. `rng` is consumed only in finite-shot mode.
pub fn execute_sequence<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    sequence: &[usize],
    rng: &mut R,
) -> Result<SequenceOutcome> {
    if cfg.noise.dim() != cfg.dim() || cfg.rho0.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            found: cfg.rho0.dim(),
        });
    }
    let rho = final_state(cfg, sequence)?;
    let p = cfg.measurement.expectation_matrix(&rho)?;
    let value = match cfg.shots {
        Shots::Exact => p,
        Shots::Count(n) => quantum::draw_clicks(p, n, rng)? as f64 / n as f64,
    };
    Ok(SequenceOutcome {
        m: sequence.len(),
        sequence: sequence.to_vec(),
        value,
        shots: cfg.shots,
    })
}

/// Executes the whole protocol over `cfg.m_grid`.
///
/// Sequence `s` at grid position `i` draws its gates from the stream
/// `(master_seed, i, s, SEQUENCE)` and its shot noise from
/// `(master_seed, i, s, SHOTS)`; tasks run in parallel and are gathered in
/// `(i, s)` order.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<DecayDataset> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.m_grid.len())
        .flat_map(|i| (0..cfg.n_sequences).map(move |s| (i, s)))
        .collect();
    let outcomes = tasks
        .par_iter()
        .map(|&(i, s)| {
            let mut seq_rng = rng::stream(cfg.master_seed, i as u64, s as u64, purpose::SEQUENCE);
            let mut shot_rng = rng::stream(cfg.master_seed, i as u64, s as u64, purpose::SHOTS);
            let k = sample_sequence(&cfg.gateset, cfg.m_grid[i], &mut seq_rng)?;
            execute_sequence(cfg, &k, &mut shot_rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let points = outcomes
        .chunks(cfg.n_sequences)
        .zip(&cfg.m_grid)
        .map(|(chunk, &m)| {
            let values: Vec<f64> = chunk.iter().map(|o| o.value).collect();
            DecayPoint::from_values(m, &values, cfg.shots)
        })
        .collect();
    Ok(DecayDataset {
        points,
        raw: cfg.keep_raw.then_some(outcomes),
        metadata: Some(cfg.metadata()),
    })
}

/// The sequence average `E_k Q_k` without sampling: the twirl `Ḡ` replaces
/// each random gate, so the result is `Tr[Q (Ḡ∘E)^m (ρ₀)]`.
///
/// Only meaningful for [`Variant::Loss`]; the variant field is ignored.
pub fn exact_sequence_average(cfg: &ProtocolConfig, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::param("m", "sequence length must be positive"));
    }
    let mut rho = cfg.rho0.matrix().clone();
    for _ in 0..m {
        rho = gates::twirl(&cfg.gateset, &cfg.noise.apply_matrix(&rho))?;
    }
    cfg.measurement.expectation_matrix(&rho)
}
