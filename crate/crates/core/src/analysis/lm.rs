//! Levenberg–Marquardt for weighted least squares with a handful of
//! parameters and analytic derivatives.

use nalgebra::{DMatrix, DVector};

/// Curve `f(x; θ)` with its gradient in `θ`.
pub(crate) trait Curve {
    fn n_params(&self) -> usize;
    /// Writes `∂f/∂θ` into `grad` and returns `f`.
    fn eval(&self, params: &[f64], x: f64, grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmSettings {
    pub gradient_tol: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub params: Vec<f64>,
    /// Inverse of `JᵀJ` (weighted Jacobian) at the optimum, if invertible.
    pub inverse_normal: Option<DMatrix<f64>>,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Linearization {
    residuals: DVector<f64>,
    jacobian: DMatrix<f64>,
    chi2: f64,
}

fn linearize<C: Curve>(curve: &C, p: &[f64], xs: &[f64], ys: &[f64], ws: &[f64]) -> Linearization {
    let n = xs.len();
    let k = curve.n_params();
    let mut residuals = DVector::zeros(n);
    let mut jacobian = DMatrix::zeros(n, k);
    let mut grad = vec![0.0; k];
    for i in 0..n {
        let f = curve.eval(p, xs[i], &mut grad);
        residuals[i] = ws[i] * (ys[i] - f);
        for j in 0..k {
            jacobian[(i, j)] = ws[i] * grad[j];
        }
    }
    let chi2 = residuals.norm_squared();
    Linearization {
        residuals,
        jacobian,
        chi2,
    }
}

fn chi2_at<C: Curve>(curve: &C, p: &[f64], xs: &[f64], ys: &[f64], ws: &[f64]) -> f64 {
    let mut grad = vec![0.0; curve.n_params()];
    xs.iter()
        .zip(ys)
        .zip(ws)
        .map(|((&x, &y), &w)| (w * (y - curve.eval(p, x, &mut grad))).powi(2))
        .sum()
}

/// Minimizes `Σ wᵢ² (yᵢ − f(xᵢ; θ))²` from `start`.
///
/// `ws` are amplitude weights (`1/σᵢ`). Converges when the gradient of
/// `χ²/2` falls below `gradient_tol` in max-norm, or when it is orthogonal
/// to the residual to working precision.
pub(crate) fn minimize<C: Curve>(
    curve: &C,
    start: &[f64],
    xs: &[f64],
    ys: &[f64],
    ws: &[f64],
    settings: LmSettings,
) -> LmOutcome {
    let k = curve.n_params();
    let mut params = start.to_vec();
    let mut lin = linearize(curve, &params, xs, ys, ws);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iterations {
        let gradient = lin.jacobian.transpose() * &lin.residuals;
        let gmax = gradient.amax();
        let scale = lin.jacobian.norm() * lin.chi2.sqrt();
        if !gmax.is_finite() {
            break;
        }
        if gmax <= settings.gradient_tol || gmax <= 1e-13 * scale {
            converged = true;
            break;
        }
        iterations += 1;
        let normal = lin.jacobian.transpose() * &lin.jacobian;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = normal.clone();
            for j in 0..k {
                damped[(j, j)] += lambda * normal[(j, j)].max(1e-300);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&gradient);
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let trial_chi2 = chi2_at(curve, &trial, xs, ys, ws);
            // Near the optimum χ² is flat to its round-off (a few parts in
            // 10¹⁴); a step that keeps it level is accepted when it shrinks
            // the gradient.
            let next = if !trial_chi2.is_finite() {
                None
            } else if trial_chi2 < lin.chi2 {
                Some(linearize(curve, &trial, xs, ys, ws))
            } else if trial_chi2 - lin.chi2 <= 1e-12 * lin.chi2 {
                let next = linearize(curve, &trial, xs, ys, ws);
                let next_gmax = (next.jacobian.transpose() * &next.residuals).amax();
                (next_gmax < gmax).then_some(next)
            } else {
                None
            };
            if let Some(next) = next {
                let tiny_step = step
                    .iter()
                    .zip(&params)
                    .all(|(s, p)| s.abs() <= 1e-15 * (p.abs() + 1e-15));
                params = trial;
                lin = next;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if tiny_step {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // No downhill step at any damping: we sit at a minimum to
            // working precision unless the gradient is still large.
            let gradient = lin.jacobian.transpose() * &lin.residuals;
            converged = gradient.amax() <= 1e-8 * (lin.jacobian.norm() * lin.chi2.sqrt()).max(1.0);
            break;
        }
    }

    if converged {
        // χ² is flat to round-off near the optimum, but the gradient is not:
        // a few undamped Gauss-Newton steps drive it to zero.
        for _ in 0..3 {
            let gradient = lin.jacobian.transpose() * &lin.residuals;
            let Some(chol) = (lin.jacobian.transpose() * &lin.jacobian).cholesky() else {
                break;
            };
            let step = chol.solve(&gradient);
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let next = linearize(curve, &trial, xs, ys, ws);
            let next_gradient = next.jacobian.transpose() * &next.residuals;
            // NaN compares as not-less and stops the polish.
            if next_gradient.amax().partial_cmp(&gradient.amax()) != Some(std::cmp::Ordering::Less)
            {
                break;
            }
            params = trial;
            lin = next;
        }
    }

    let normal = lin.jacobian.transpose() * &lin.jacobian;
    LmOutcome {
        params,
        inverse_normal: normal.try_inverse(),
        chi2: lin.chi2,
        iterations,
        converged,
    }
}
