//! Signatures of non-Markovian noise: RB constant consistency and
//! plateauing decay curves.

use serde::Serialize;

use super::fit::{DecayFit, RbFit};
use crate::error::{Error, Result};
use crate::linalg;
use crate::protocol::{DecayDataset, DecayPoint};
use crate::quantum::{DensityMatrix, MeasurementOperator, QuantumChannel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// z-score above which a discrepancy is flagged.
    pub z: f64,
    /// Largest acceptable reduced χ² for a single exponential.
    pub chi2_per_dof: f64,
    /// Number of trailing sequence lengths compared against the fit.
    pub tail_points: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            z: 3.0,
            chi2_per_dof: 4.0,
            tail_points: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MarkovFlag {
    BMinusANegative,
    M1Mismatch,
    Plateau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauReport {
    pub chi2_per_dof: f64,
    pub tail_excess_z: f64,
    pub flagged: bool,
}

/// `x/σ`, with `0/0` read as no discrepancy and `x/0` as an infinite one.
fn z_score(x: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        x / sigma
    } else if x.abs() <= 1e-12 {
        0.0
    } else {
        x.signum() * f64::INFINITY
    }
}

/// Compares the tail of the data with a single-exponential fit.
pub fn plateau_test(
    ds: &DecayDataset,
    fit: &DecayFit,
    thresholds: Thresholds,
) -> Result<PlateauReport> {
    let n = ds.points.len();
    if n < 8 {
        return Err(Error::InsufficientData(format!(
            "{n} sequence lengths, plateau test needs at least 8"
        )));
    }
    let mut points: Vec<&DecayPoint> = ds.points.iter().collect();
    points.sort_by_key(|p| p.m);
    let tail = &points[n - thresholds.tail_points.min(n)..];
    let k = tail.len() as f64;
    let excess = tail.iter().map(|p| p.mean - fit.predict(p.m)).sum::<f64>() / k;
    let sigma = tail
        .iter()
        .map(|p| p.sem.unwrap_or(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
        / k;
    let tail_excess_z = z_score(excess, sigma);
    Ok(PlateauReport {
        chi2_per_dof: fit.chi2_per_dof,
        tail_excess_z,
        flagged: fit.chi2_per_dof > thresholds.chi2_per_dof || tail_excess_z > thresholds.z,
    })
}

/// The simulated truth, when known.
#[derive(Debug, Clone, Copy)]
pub struct ExactModel<'a> {
    pub channel: &'a QuantumChannel,
    pub rho: &'a DensityMatrix,
    pub measurement: &'a MeasurementOperator,
}

#[derive(Debug, Clone, Copy)]
pub struct MarkovInputs<'a> {
    pub rb: &'a RbFit,
    /// Loss-protocol estimate at `m = 1`.
    pub loss_m1: &'a DecayPoint,
    pub exact: Option<ExactModel<'a>>,
    pub plateau: Option<&'a PlateauReport>,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovReport {
    pub b_minus_a: f64,
    pub b_minus_a_sigma: f64,
    pub m1_intercept: f64,
    pub m1_sigma: f64,
    pub rb_b: f64,
    pub rb_b_sigma: f64,
    /// `Tr[Q E(ρ⊥)]` for a qubit, when the true channel is supplied.
    pub exact_b_minus_a: Option<f64>,
    pub flags: Vec<MarkovFlag>,
}

/// `Tr[Q E(ρ⊥)]` with `ρ⊥ = Tr(ρ)𝟙 − ρ` the qubit state of opposite Bloch
/// vector.
pub fn opposite_state_response(exact: &ExactModel<'_>) -> Result<f64> {
    if exact.rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: exact.rho.dim(),
        });
    }
    let perp = linalg::identity(2) * num_complex::Complex64::new(exact.rho.trace(), 0.0)
        - exact.rho.matrix();
    let out = exact.channel.apply(&DensityMatrix::new(2, perp)?)?;
    exact.measurement.expectation_matrix(out.matrix())
}

/// Consistency checks between the RB constants and the loss-protocol
/// intercept.
pub fn markovianity_tests(inputs: &MarkovInputs<'_>) -> Result<MarkovReport> {
    let rb = inputs.rb;
    if !rb.converged {
        return Err(Error::NotConverged);
    }
    let b_minus_a = rb.b_hat - rb.a_hat;
    let var = rb.stderr_a.powi(2) + rb.stderr_b.powi(2) - 2.0 * rb.cov_ab;
    let b_minus_a_sigma = if var.is_finite() {
        var.max(0.0).sqrt()
    } else {
        0.0
    };
    let m1_intercept = inputs.loss_m1.mean;
    let m1_sigma = inputs.loss_m1.sem.unwrap_or(0.0);
    let rb_b_sigma = if rb.stderr_b.is_finite() {
        rb.stderr_b
    } else {
        0.0
    };

    let mut flags = Vec::new();
    if z_score(b_minus_a, b_minus_a_sigma) < -inputs.thresholds.z {
        flags.push(MarkovFlag::BMinusANegative);
    }
    let combined = (m1_sigma.powi(2) + rb_b_sigma.powi(2)).sqrt();
    if z_score(rb.b_hat - m1_intercept, combined).abs() > inputs.thresholds.z {
        flags.push(MarkovFlag::M1Mismatch);
    }
    if inputs.plateau.is_some_and(|p| p.flagged) {
        flags.push(MarkovFlag::Plateau);
    }
    let exact_b_minus_a = match &inputs.exact {
        Some(exact) if exact.rho.dim() == 2 => Some(opposite_state_response(exact)?),
        _ => None,
    };
    Ok(MarkovReport {
        b_minus_a,
        b_minus_a_sigma,
        m1_intercept,
        m1_sigma,
        rb_b: rb.b_hat,
        rb_b_sigma,
        exact_b_minus_a,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fit_loss_decay, FitOptions};
    use crate::noise::depolarizing_channel;
    use crate::protocol::Shots;

    fn rb_fit(a: f64, b: f64, sa: f64, sb: f64) -> RbFit {
        RbFit {
            a_hat: a,
            b_hat: b,
            p_hat: 0.98,
            stderr_a: sa,
            stderr_b: sb,
            stderr_p: 1e-4,
            cov_ab: 0.0,
            chi2_per_dof: 1.0,
            converged: true,
            n_iterations: 3,
            weighted: true,
        }
    }

    fn point(mean: f64, sem: f64) -> DecayPoint {
        DecayPoint {
            m: 1,
            mean,
            sem: Some(sem),
            n_sequences: 30,
            shots: Shots::Exact,
        }
    }

    #[test]
    fn identity_noise_has_zero_opposite_response() {
        let ch = QuantumChannel::identity(2);
        let rho = DensityMatrix::basis(0, 2);
        let q = MeasurementOperator::projector(0, 2);
        let fit = rb_fit(0.5, 0.5, 0.0, 0.0);
        let m1 = point(0.5, 0.01);
        let report = markovianity_tests(&MarkovInputs {
            rb: &fit,
            loss_m1: &m1,
            exact: Some(ExactModel {
                channel: &ch,
                rho: &rho,
                measurement: &q,
            }),
            plateau: None,
            thresholds: Thresholds::default(),
        })
        .unwrap();
        assert_eq!(report.exact_b_minus_a, Some(0.0));
        assert!(report.flags.is_empty());
    }

    #[test]
    fn depolarizing_opposite_response_is_half_q() {
        let ch = depolarizing_channel(2, 0.02).unwrap();
        let rho = DensityMatrix::basis(0, 2);
        let q = MeasurementOperator::projector(0, 2);
        let v = opposite_state_response(&ExactModel {
            channel: &ch,
            rho: &rho,
            measurement: &q,
        })
        .unwrap();
        assert!((v - 0.01).abs() < 1e-15);
    }

    #[test]
    fn flags_raised_on_discrepancies() {
        let fit = rb_fit(0.6, 0.4, 0.01, 0.01);
        let m1 = point(0.5, 0.01);
        let plateau = PlateauReport {
            chi2_per_dof: 10.0,
            tail_excess_z: 5.0,
            flagged: true,
        };
        let report = markovianity_tests(&MarkovInputs {
            rb: &fit,
            loss_m1: &m1,
            exact: None,
            plateau: Some(&plateau),
            thresholds: Thresholds::default(),
        })
        .unwrap();
        assert_eq!(
            report.flags,
            [
                MarkovFlag::BMinusANegative,
                MarkovFlag::M1Mismatch,
                MarkovFlag::Plateau
            ]
        );
    }

    #[test]
    fn unconverged_fit_rejected() {
        let mut fit = rb_fit(0.5, 0.5, 0.0, 0.0);
        fit.converged = false;
        let m1 = point(0.5, 0.01);
        assert!(markovianity_tests(&MarkovInputs {
            rb: &fit,
            loss_m1: &m1,
            exact: None,
            plateau: None,
            thresholds: Thresholds::default(),
        })
        .is_err());
    }

    #[test]
    fn exact_exponential_is_not_a_plateau() {
        let ds = DecayDataset::from_points(
            (1..=12)
                .map(|m| DecayPoint {
                    m: m * 10,
                    mean: 0.8 * 0.97f64.powi(m as i32 * 10 - 1),
                    sem: None,
                    n_sequences: 30,
                    shots: Shots::Exact,
                })
                .collect(),
        );
        let fit = fit_loss_decay(&ds, FitOptions::default()).unwrap();
        let report = plateau_test(&ds, &fit, Thresholds::default()).unwrap();
        assert!(report.chi2_per_dof < 1e-20);
        assert!(!report.flagged);
    }

    #[test]
    fn plateau_detected_and_short_data_rejected() {
        let ds = DecayDataset::from_points(
            (1..=30)
                .map(|i| {
                    let m = 10 * i;
                    DecayPoint {
                        m,
                        mean: 0.6 + 0.4 * (-(m as f64) / 40.0).exp(),
                        sem: Some(0.002),
                        n_sequences: 30,
                        shots: Shots::Exact,
                    }
                })
                .collect(),
        );
        let fit = fit_loss_decay(&ds, FitOptions::default()).unwrap();
        assert!(
            plateau_test(&ds, &fit, Thresholds::default())
                .unwrap()
                .flagged
        );
        let short = DecayDataset::from_points(ds.points[..7].to_vec());
        assert!(plateau_test(&short, &fit, Thresholds::default()).is_err());
    }
}
