//! Noise and detector models.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::quantum::{MeasurementOperator, QuantumChannel};
use crate::rng;

/// Amplitude damping of a single basis level: `K = 𝟙 + (α−1)|level⟩⟨level|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModelSpec {
    /// Amplitude retained by the lossy level.
    pub alpha: f64,
    pub level: usize,
    pub dim: usize,
}

impl LossModelSpec {
    pub fn new(alpha: f64, level: usize, dim: usize) -> Result<Self> {
        let spec = Self { alpha, level, dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param(
                "alpha",
                format!("{} outside [0, 1]", self.alpha),
            ));
        }
        if self.dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        if self.level >= self.dim {
            return Err(Error::param(
                "level",
                format!("{} not below dim {}", self.level, self.dim),
            ));
        }
        Ok(())
    }
}

pub fn basis_loss_channel(spec: &LossModelSpec) -> Result<QuantumChannel> {
    spec.validate()?;
    let k = linalg::identity(spec.dim)
        + linalg::projector(spec.level, spec.dim) * c(spec.alpha - 1.0, 0.0);
    QuantumChannel::new(vec![k])
}

/// Basis in which a detector operator is diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorBasis {
    Computational,
    /// Haar-random basis drawn from this seed.
    Seeded(u64),
    /// Columns are the basis vectors.
    Explicit(CMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub eigenvalues: Vec<f64>,
    pub basis: DetectorBasis,
}

impl DetectorSpec {
    pub fn ideal(dim: usize) -> Self {
        Self {
            eigenvalues: vec![1.0; dim],
            basis: DetectorBasis::Computational,
        }
    }
}

/// The random orthonormal basis used by [`DetectorBasis::Seeded`].
pub fn seeded_basis(dim: usize, seed: u64) -> CMatrix {
    linalg::random_unitary(dim, &mut rng::from_seed(seed))
}

/// `Q = Σᵢ eᵢ |bᵢ⟩⟨bᵢ|`.
pub fn detector_model(spec: &DetectorSpec) -> Result<MeasurementOperator> {
    let dim = spec.eigenvalues.len();
    if dim == 0 {
        return Err(Error::param("eigenvalues", "empty"));
    }
    if let Some((i, e)) = spec
        .eigenvalues
        .iter()
        .enumerate()
        .find(|(_, e)| !(0.0..=1.0).contains(*e))
    {
        return Err(Error::param(
            "eigenvalues",
            format!("eigenvalues[{i}] = {e} outside [0, 1]"),
        ));
    }
    let diag = linalg::from_real_diagonal(&spec.eigenvalues);
    let q = match &spec.basis {
        DetectorBasis::Computational => diag,
        DetectorBasis::Seeded(seed) => {
            let b = seeded_basis(dim, *seed);
            &b * diag * b.adjoint()
        }
        DetectorBasis::Explicit(b) => {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.nrows(),
                });
            }
            if linalg::unitarity_deviation(b) >= 1e-12 {
                return Err(Error::param("basis", "not orthonormal"));
            }
            b * diag * b.adjoint()
        }
    };
    MeasurementOperator::new(linalg::hermitian_part(&q))
}

/// Seeded random trace-non-increasing channel.
///
/// A Haar-random Stinespring isometry with `d` Kraus operators is followed
/// by a diagonal attenuation whose amplitude factors are drawn uniformly
/// from `[1 − loss_scale, 1]`.
pub fn random_lossy_channel(dim: usize, loss_scale: f64, seed: u64) -> Result<QuantumChannel> {
    if dim < 2 {
        return Err(Error::param("dim", "must be at least 2"));
    }
    if !(loss_scale > 0.0 && loss_scale < 1.0) {
        return Err(Error::param(
            "loss_scale",
            format!("{loss_scale} outside (0, 1)"),
        ));
    }
    let mut r = rng::from_seed(seed);
    let n_kraus = dim;
    let isometry = linalg::random_isometry(dim * n_kraus, dim, &mut r);
    let factors: Vec<f64> = (0..dim)
        .map(|_| 1.0 - loss_scale * r.random::<f64>())
        .collect();
    let attenuation = linalg::from_real_diagonal(&factors);
    let kraus = (0..n_kraus)
        .map(|i| &attenuation * isometry.rows(i * dim, dim).into_owned())
        .collect();
    QuantumChannel::new(kraus)
}

/// `E(ρ) = (1−q)ρ + q·Tr(ρ)·𝟙/d`.
pub fn depolarizing_channel(dim: usize, q: f64) -> Result<QuantumChannel> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} outside [0, 1]")));
    }
    let mut kraus = vec![linalg::identity(dim) * c((1.0 - q).sqrt(), 0.0)];
    let amp = c((q / dim as f64).sqrt(), 0.0);
    for i in 0..dim {
        for j in 0..dim {
            kraus.push(linalg::ket_bra(i, j, dim) * amp);
        }
    }
    QuantumChannel::new(kraus)
}

/// Coherent leakage between the qubit levels and a third level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageModelSpec {
    /// Strength of the error unitary `exp(−iεH)`.
    pub epsilon: f64,
    /// Relative phase of the leakage level under the ideal gates.
    pub theta: f64,
    pub hamiltonian_seed: u64,
}

impl LeakageModelSpec {
    pub const DEFAULT_EPSILON: f64 = 0.1;

    /// Spec with `θ` drawn uniformly from `[0, 2π)` using `phase_seed`.
    pub fn with_random_theta(epsilon: f64, hamiltonian_seed: u64, phase_seed: u64) -> Self {
        let theta = rng::stream(phase_seed, 0, 1, rng::purpose::MODEL).random_range(0.0..2.0 * PI);
        Self {
            epsilon,
            theta,
            hamiltonian_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param(
                "epsilon",
                format!("{} must be non-negative", self.epsilon),
            ));
        }
        if !self.theta.is_finite() {
            return Err(Error::param("theta", "must be finite"));
        }
        Ok(())
    }
}

/// Seeded random 3×3 Hermitian matrix with unit spectral norm.
pub fn leakage_hamiltonian(seed: u64) -> CMatrix {
    let g = linalg::complex_gaussian(3, 3, &mut rng::from_seed(seed));
    let h = linalg::hermitian_part(&g);
    let norm = linalg::hermitian_eigenvalues(&h)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max);
    h / Complex64::new(norm, 0.0)
}

/// Single unitary Kraus operator `V = exp(−iεH)` on a qutrit.
pub fn coherent_leakage_error(spec: &LeakageModelSpec) -> Result<QuantumChannel> {
    spec.validate()?;
    let h = leakage_hamiltonian(spec.hamiltonian_seed);
    QuantumChannel::unitary(linalg::unitary_exp(&h, spec.epsilon))
}
