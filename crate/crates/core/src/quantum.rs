//! States, trace-non-increasing channels and detector operators.
//!
//! States are allowed to be sub-normalized: loss shrinks the trace and
//! nothing here renormalizes.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Tolerance for properties that hold by construction.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for properties subject to accumulated arithmetic error.
pub const ARITHMETIC_TOL: f64 = 1e-10;

/// A broken state invariant together with the measured deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotHermitian { deviation: f64 },
    NegativeEigenvalue { min_eigenvalue: f64 },
    NonPositiveTrace { trace: f64 },
    TraceAboveOne { trace: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotHermitian { deviation } => {
                write!(f, "not Hermitian (max deviation {deviation:e})")
            }
            Violation::NegativeEigenvalue { min_eigenvalue } => {
                write!(f, "negative eigenvalue {min_eigenvalue}")
            }
            Violation::NonPositiveTrace { trace } => write!(f, "trace {trace} is not positive"),
            Violation::TraceAboveOne { trace } => write!(f, "trace {trace} exceeds 1"),
        }
    }
}

fn check_square(dim: usize, m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows(),
        });
    }
    Ok(())
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Lists every violated state invariant of `matrix` read as a `dim`-level
/// density matrix. An empty list means the state is valid.
pub fn validate_state(dim: usize, matrix: &CMatrix) -> Result<Vec<Violation>> {
    check_square(dim, matrix)?;
    let mut report = Vec::new();
    let deviation = linalg::hermitian_deviation(matrix);
    if deviation > CONSTRUCTION_TOL {
        report.push(Violation::NotHermitian { deviation });
    }
    let min_eigenvalue = linalg::hermitian_eigenvalues(matrix)[0];
    if min_eigenvalue < -CONSTRUCTION_TOL {
        report.push(Violation::NegativeEigenvalue { min_eigenvalue });
    }
    let trace = linalg::trace(matrix).re;
    if trace <= 0.0 {
        report.push(Violation::NonPositiveTrace { trace });
    }
    if trace > 1.0 + CONSTRUCTION_TOL {
        report.push(Violation::TraceAboveOne { trace });
    }
    Ok(report)
}

/// A possibly sub-normalized density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps `matrix` after checking only its shape; call
    /// [`DensityMatrix::validate`] to inspect the state invariants.
    pub fn new(dim: usize, matrix: CMatrix) -> Result<Self> {
        check_square(dim, &matrix)?;
        Ok(Self { matrix })
    }

    /// Wraps `matrix`, rejecting it if any state invariant is violated.
    pub fn checked(matrix: CMatrix) -> Result<Self> {
        let report = validate_state(matrix.nrows(), &matrix)?;
        if let Some(v) = report.first() {
            return Err(Error::InvalidState(v.to_string()));
        }
        Ok(Self { matrix })
    }

    /// `|i⟩⟨i|` in dimension `dim`.
    pub fn basis(i: usize, dim: usize) -> Self {
        Self {
            matrix: linalg::projector(i, dim),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: linalg::identity(dim) / Complex64::new(dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_state(self.dim(), &self.matrix).expect("shape checked on construction")
    }

    /// Same state with a zero row and column appended for every extra level.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.matrix);
        Ok(Self { matrix: m })
    }

    /// `c·ρ` for `c ∈ (0, 1]`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::param("c", format!("scale {c} outside (0, 1]")));
        }
        Ok(Self {
            matrix: &self.matrix * Complex64::new(c, 0.0),
        })
    }
}

/// A completely positive, trace-non-increasing map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<CMatrix>,
    survival: CMatrix,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::InvalidChannel(
                "zero-dimensional Kraus operator".into(),
            ));
        }
        for k in &kraus {
            check_square(dim, k)?;
        }
        let survival = kraus
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        let deviation = linalg::hermitian_deviation(&survival);
        if deviation > CONSTRUCTION_TOL {
            return Err(Error::InvalidChannel(format!(
                "ΣKᴴK not Hermitian (deviation {deviation:e})"
            )));
        }
        let eig = linalg::hermitian_eigenvalues(&survival);
        let max = eig[eig.len() - 1];
        if max > 1.0 + ARITHMETIC_TOL {
            return Err(Error::InvalidChannel(format!(
                "trace-increasing: largest eigenvalue of ΣKᴴK is {max}"
            )));
        }
        Ok(Self { kraus, survival })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            kraus: vec![linalg::identity(dim)],
            survival: linalg::identity(dim),
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        let deviation = linalg::unitarity_deviation(&u);
        if deviation > CONSTRUCTION_TOL {
            return Err(Error::InvalidChannel(format!(
                "operator is not unitary (deviation {deviation:e})"
            )));
        }
        Self::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.survival.nrows()
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `M = Σ KᵢᴴKᵢ`, so that `Tr E(ρ) = Tr(ρM)`.
    pub fn survival_operator(&self) -> &CMatrix {
        &self.survival
    }

    /// Applies the channel to a raw matrix without validation.
    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(rho.nrows(), rho.ncols()), |acc, k| {
                acc + k * rho * k.adjoint()
            })
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_dims(self.dim(), rho.dim())?;
        Ok(DensityMatrix {
            matrix: self.apply_matrix(rho.matrix()),
        })
    }
}

/// `E(ρ) = Σ KᵢρKᵢᴴ`.
pub fn apply_channel(channel: &QuantumChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    channel.apply(rho)
}

pub fn survival_operator(channel: &QuantumChannel) -> CMatrix {
    channel.survival_operator().clone()
}

/// A POVM element `0 ⪯ Q ⪯ 𝟙`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    matrix: CMatrix,
}

impl MeasurementOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(matrix.nrows(), &matrix)?;
        let deviation = linalg::hermitian_deviation(&matrix);
        if deviation > CONSTRUCTION_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "not Hermitian (deviation {deviation:e})"
            )));
        }
        let eig = linalg::hermitian_eigenvalues(&matrix);
        let (min, max) = (eig[0], eig[eig.len() - 1]);
        if min < -CONSTRUCTION_TOL || max > 1.0 + CONSTRUCTION_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "eigenvalues must lie in [0, 1], found range [{min}, {max}]"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: linalg::identity(dim),
        }
    }

    pub fn projector(i: usize, dim: usize) -> Self {
        Self {
            matrix: linalg::projector(i, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `D(Q) = Tr Q / d`, the response averaged over all states.
    pub fn mean_response(&self) -> f64 {
        linalg::trace(&self.matrix).re / self.dim() as f64
    }

    /// `Q ⊕ 0`: the same detector, blind to the added levels.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.matrix);
        Ok(Self { matrix: m })
    }

    /// `Tr(Qρ)` on a raw matrix, with the imaginary-part and boundary
    /// handling of [`expectation`].
    pub fn expectation_matrix(&self, rho: &CMatrix) -> Result<f64> {
        check_dims(self.dim(), rho.nrows())?;
        let value: Complex64 = self
            .matrix
            .iter()
            .zip(rho.transpose().iter())
            .map(|(q, r)| q * r)
            .sum();
        if value.im.abs() >= ARITHMETIC_TOL {
            return Err(Error::ComplexExpectation(value.im));
        }
        let v = value.re;
        Ok(if v < 0.0 && v > -ARITHMETIC_TOL {
            0.0
        } else if v > 1.0 && v < 1.0 + ARITHMETIC_TOL {
            1.0
        } else {
            v
        })
    }
}

/// Click probability `Re Tr(Qρ)`.
pub fn expectation(q: &MeasurementOperator, rho: &DensityMatrix) -> Result<f64> {
    q.expectation_matrix(rho.matrix())
}

/// Number of detector clicks in `shots` independent repetitions.
pub fn sample_clicks<R: Rng + ?Sized>(
    q: &MeasurementOperator,
    rho: &DensityMatrix,
    shots: u64,
    rng: &mut R,
) -> Result<u64> {
    let p = expectation(q, rho)?;
    draw_clicks(p, shots, rng)
}

pub(crate) fn draw_clicks<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> Result<u64> {
    if shots == 0 {
        return Err(Error::param("shots", "must be positive"));
    }
    let binomial =
        Binomial::new(shots, p.clamp(0.0, 1.0)).map_err(|e| Error::param("p", e.to_string()))?;
    Ok(binomial.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_diagonal, max_abs_diff};
    use crate::rng;

    fn diag_state(d: &[f64]) -> DensityMatrix {
        DensityMatrix::new(d.len(), from_real_diagonal(d)).unwrap()
    }

    #[test]
    fn maximally_mixed_is_valid() {
        assert!(DensityMatrix::maximally_mixed(2).validate().is_empty());
    }

    #[test]
    fn subnormalized_state_is_valid() {
        assert!(diag_state(&[0.98, 0.0]).validate().is_empty());
    }

    #[test]
    fn negative_eigenvalue_is_reported() {
        let report = diag_state(&[1.5, -0.5]).validate();
        assert_eq!(report.len(), 1);
        match report[0] {
            Violation::NegativeEigenvalue { min_eigenvalue } => {
                assert!((min_eigenvalue + 0.5).abs() < 1e-12)
            }
            other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn non_hermitian_and_trace_violations() {
        let mut m = from_real_diagonal(&[0.7, 0.6]);
        m[(0, 1)] = c(0.1, 0.0);
        let report = validate_state(2, &m).unwrap();
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::NotHermitian { .. })));
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::TraceAboveOne { .. })));
        assert!(DensityMatrix::checked(m).is_err());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let m = from_real_diagonal(&[0.5, 0.5]);
        assert!(matches!(
            validate_state(3, &m),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            DensityMatrix::new(2, CMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn identity_channel_leaves_state_unchanged() {
        let mut r = rng::from_seed(1);
        let rho = DensityMatrix::checked(linalg::random_mixed_state(3, &mut r)).unwrap();
        let out = apply_channel(&QuantumChannel::identity(3), &rho).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn attenuation_of_excited_level() {
        let ch = QuantumChannel::new(vec![from_real_diagonal(&[1.0, 0.99])]).unwrap();
        let out = apply_channel(&ch, &DensityMatrix::basis(1, 2)).unwrap();
        let expected = from_real_diagonal(&[0.0, 0.99 * 0.99]);
        assert!(max_abs_diff(out.matrix(), &expected) < 1e-15);
        assert!((out.trace() - 0.9801).abs() < 1e-15);
    }

    #[test]
    fn survival_operator_of_level_zero_loss() {
        let ch = QuantumChannel::new(vec![from_real_diagonal(&[0.9, 1.0])]).unwrap();
        let expected = from_real_diagonal(&[0.81, 1.0]);
        assert!(max_abs_diff(&survival_operator(&ch), &expected) < 1e-15);
        assert_eq!(
            survival_operator(&QuantumChannel::identity(2)),
            linalg::identity(2)
        );
    }

    #[test]
    fn trace_increasing_channel_rejected() {
        assert!(QuantumChannel::new(vec![from_real_diagonal(&[1.1, 1.0])]).is_err());
        assert!(QuantumChannel::new(vec![]).is_err());
        assert!(QuantumChannel::new(vec![linalg::identity(2), linalg::identity(3)]).is_err());
    }

    #[test]
    fn channel_state_dimension_mismatch() {
        let ch = QuantumChannel::identity(3);
        assert!(apply_channel(&ch, &DensityMatrix::basis(0, 2)).is_err());
    }

    #[test]
    fn expectation_examples() {
        let rho = DensityMatrix::basis(0, 2);
        assert_eq!(
            expectation(&MeasurementOperator::identity(2), &rho).unwrap(),
            1.0
        );
        let q0 = MeasurementOperator::projector(0, 2);
        assert_eq!(expectation(&q0, &DensityMatrix::basis(1, 2)).unwrap(), 0.0);

        let mut r = rng::from_seed(11);
        let basis = linalg::random_unitary(2, &mut r);
        let q = &basis * from_real_diagonal(&[0.87, 0.95]) * basis.adjoint();
        let q = MeasurementOperator::new(linalg::hermitian_part(&q)).unwrap();
        let v = expectation(&q, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!((v - 0.91).abs() < 1e-14);
    }

    #[test]
    fn expectation_rejects_complex_value() {
        let q = MeasurementOperator::identity(2);
        let mut m = linalg::projector(0, 2);
        m[(1, 1)] = c(0.0, 0.5);
        let bad = DensityMatrix::new(2, m).unwrap();
        assert!(matches!(
            expectation(&q, &bad),
            Err(Error::ComplexExpectation(_))
        ));
    }

    #[test]
    fn invalid_measurement_rejected() {
        assert!(MeasurementOperator::new(from_real_diagonal(&[1.2, 0.5])).is_err());
        assert!(MeasurementOperator::new(from_real_diagonal(&[-0.1, 0.5])).is_err());
    }

    #[test]
    fn sample_clicks_edges() {
        let mut r = rng::from_seed(0);
        let one = MeasurementOperator::identity(2);
        let rho = DensityMatrix::basis(0, 2);
        assert_eq!(sample_clicks(&one, &rho, 100, &mut r).unwrap(), 100);
        let zero = MeasurementOperator::projector(1, 2);
        assert_eq!(sample_clicks(&zero, &rho, 100, &mut r).unwrap(), 0);
        assert!(sample_clicks(&one, &rho, 0, &mut r).is_err());
    }

    #[test]
    fn sample_clicks_concentrates() {
        let q = MeasurementOperator::new(from_real_diagonal(&[0.87, 0.95])).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let shots = 1_000_000;
        let clicks = sample_clicks(&q, &rho, shots, &mut rng::from_seed(42)).unwrap();
        let freq = clicks as f64 / shots as f64;
        let sigma = (0.91f64 * 0.09 / shots as f64).sqrt();
        assert!((freq - 0.91).abs() <= 5.0 * sigma, "freq {freq}");
        let again = sample_clicks(&q, &rho, shots, &mut rng::from_seed(42)).unwrap();
        assert_eq!(clicks, again);
    }
}
