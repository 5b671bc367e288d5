use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::{DensityMatrix, MeasurementOperator, QuantumChannel, ARITHMETIC_TOL};

/// `S(ρ|E) = Tr[E(ρ)] / Tr ρ`.
pub fn state_survival(channel: &QuantumChannel, rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != channel.dim() {
        return Err(Error::DimensionMismatch {
            expected: channel.dim(),
            found: rho.dim(),
        });
    }
    let tr = rho.trace();
    if tr <= 0.0 {
        return Err(Error::InvalidState(format!("trace {tr} is not positive")));
    }
    Ok(linalg::inner(channel.survival_operator(), rho.matrix()).re / tr)
}

pub fn state_loss(channel: &QuantumChannel, rho: &DensityMatrix) -> Result<f64> {
    state_survival(channel, rho).map(|s| 1.0 - s)
}

/// Survival rate of the maximally mixed state, `Tr(M)/d`.
pub fn average_survival(channel: &QuantumChannel) -> f64 {
    linalg::trace(channel.survival_operator()).re / channel.dim() as f64
}

pub fn average_loss(channel: &QuantumChannel) -> f64 {
    1.0 - average_survival(channel)
}

/// `1 − λ_min(M)`, the largest loss over all states.
pub fn worst_case_loss(channel: &QuantumChannel) -> f64 {
    1.0 - linalg::hermitian_eigenvalues(channel.survival_operator())[0]
}

/// The pure state achieving [`worst_case_loss`].
pub fn worst_case_state(channel: &QuantumChannel) -> DensityMatrix {
    let (_, vectors) = linalg::hermitian_eigen(channel.survival_operator());
    let v = vectors.column(0);
    let m: CMatrix = v * v.adjoint();
    DensityMatrix::new(channel.dim(), m).expect("square by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub dim: usize,
    pub avg_loss: f64,
    pub worst_loss: f64,
    /// `d · avg_loss`.
    pub bound: f64,
    pub satisfied: bool,
    /// `bound − worst_loss`.
    pub slack: f64,
    /// `Tr E(ρ′)` for `ρ′ = (𝟙 − ρ*)/(d − 1)` with `ρ*` the worst-case state;
    /// absent for `d = 1`.
    pub complement_survival: Option<f64>,
}

/// Checks `L(ρ|E) ≤ d·L(E)` at the worst-case state, together with the
/// complementary-state probability that the bound rests on.
pub fn prop1_check(channel: &QuantumChannel) -> BoundReport {
    let d = channel.dim();
    let avg_loss = average_loss(channel);
    let worst_loss = worst_case_loss(channel);
    let bound = d as f64 * avg_loss;
    let complement_survival = (d > 1).then(|| {
        let worst = worst_case_state(channel);
        let complement = (linalg::identity(d) - worst.matrix())
            / num_complex::Complex64::new((d - 1) as f64, 0.0);
        linalg::inner(channel.survival_operator(), &complement).re
    });
    let complement_ok =
        complement_survival.is_none_or(|t| (-ARITHMETIC_TOL..=1.0 + ARITHMETIC_TOL).contains(&t));
    BoundReport {
        dim: d,
        avg_loss,
        worst_loss,
        bound,
        satisfied: worst_loss <= bound + ARITHMETIC_TOL && complement_ok,
        slack: bound - worst_loss,
        complement_survival,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorEfficiency {
    /// `D(Q)/D(Q_ideal)`.
    pub eta: f64,
    /// Estimated `D(Q) = B₀/S`.
    pub d_hat: f64,
    /// `(d−1)·(1−S)`: the relative accuracy of `d_hat`.
    pub relative_uncertainty: f64,
}

pub fn detector_efficiency(
    b0_hat: f64,
    s_hat: f64,
    q_ideal: &MeasurementOperator,
) -> Result<DetectorEfficiency> {
    if s_hat <= 0.0 || !s_hat.is_finite() {
        return Err(Error::param("s_hat", format!("{s_hat} must be positive")));
    }
    let ideal = q_ideal.mean_response();
    if ideal <= 0.0 {
        return Err(Error::param("q_ideal", "ideal detector never clicks"));
    }
    let d_hat = b0_hat / s_hat;
    Ok(DetectorEfficiency {
        eta: d_hat / ideal,
        d_hat,
        relative_uncertainty: ((q_ideal.dim() - 1) as f64 * (1.0 - s_hat)).max(0.0),
    })
}
