//! Binary logistic regression fitted by iteratively reweighted least squares.

use serde::{Deserialize, Serialize};

use super::{cholesky_solve, Matrix};
use crate::error::{Error, Result};

/// Ridge penalty on the slope coefficients (the intercept is unpenalized).
pub const RIDGE_PENALTY: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 100;
pub const PARAMETER_TOLERANCE: f64 = 1e-8;

const MAX_STEP_HALVINGS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

/// A fitted model plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub converged: bool,
    pub iterations: usize,
    /// Penalized log-likelihood after each accepted iterate, starting at zero parameters.
    pub objective_trace: Vec<f64>,
}

#[inline]
fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^eta)` without overflow.
#[inline]
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

fn linear_predictor(features: &Matrix, params: &[f64]) -> Vec<f64> {
    (0..features.rows())
        .map(|i| {
            params[0]
                + features
                    .row(i)
                    .iter()
                    .zip(&params[1..])
                    .map(|(x, b)| x * b)
                    .sum::<f64>()
        })
        .collect()
}

fn penalized_log_likelihood(features: &Matrix, labels: &[bool], params: &[f64]) -> f64 {
    let eta = linear_predictor(features, params);
    let ll: f64 = eta
        .iter()
        .zip(labels)
        .map(|(&e, &y)| if y { e - softplus(e) } else { -softplus(e) })
        .sum();
    let penalty: f64 = params[1..].iter().map(|b| b * b).sum();
    ll - 0.5 * RIDGE_PENALTY * penalty
}

/// Maximizes the ridge-penalized Bernoulli log-likelihood with Newton steps,
/// halving a step until the objective does not decrease.
pub fn logistic_fit(features: &Matrix, labels: &[bool]) -> Result<LogisticFit> {
    let (n, m) = features.shape();
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} labels for {n} feature rows",
            labels.len()
        )));
    }
    let treated = labels.iter().filter(|&&y| y).count();
    if treated == 0 || treated == n {
        return Err(Error::DegenerateLabels);
    }

    let p = m + 1;
    let mut params = vec![0.0; p];
    let mut objective = penalized_log_likelihood(features, labels, &params);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let eta = linear_predictor(features, &params);

        // Gradient and negative Hessian of the penalized objective, with a
        // leading constant column for the intercept.
        let mut grad = vec![0.0; p];
        let mut hess = Matrix::zeros(p, p);
        let mut design = vec![1.0; p];
        for (i, (&e, &y)) in eta.iter().zip(labels).enumerate() {
            design[1..].copy_from_slice(features.row(i));
            let prob = sigmoid(e);
            let resid = if y { 1.0 } else { 0.0 } - prob;
            let w = prob * (1.0 - prob);
            for a in 0..p {
                grad[a] += design[a] * resid;
                let wa = w * design[a];
                for b in a..p {
                    hess[(a, b)] += wa * design[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        for a in 1..p {
            grad[a] -= RIDGE_PENALTY * params[a];
            hess[(a, a)] += RIDGE_PENALTY;
        }

        let direction = match solve_spd_with_jitter(&hess, &grad) {
            Some(d) => d,
            None => break,
        };

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_STEP_HALVINGS {
            let candidate: Vec<f64> = params
                .iter()
                .zip(&direction)
                .map(|(b, d)| b + step * d)
                .collect();
            let cand_obj = penalized_log_likelihood(features, labels, &candidate);
            if cand_obj >= objective {
                accepted = Some((candidate, cand_obj));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, cand_obj)) = accepted else {
            // No ascent direction left at working precision.
            converged = true;
            break;
        };

        let max_change = candidate
            .iter()
            .zip(&params)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        params = candidate;
        objective = cand_obj;
        trace.push(objective);
        if max_change < PARAMETER_TOLERANCE {
            converged = true;
            break;
        }
    }

    Ok(LogisticFit {
        model: LogisticModel {
            intercept: params[0],
            coefficients: params[1..].to_vec(),
        },
        converged,
        iterations,
        objective_trace: trace,
    })
}

fn solve_spd_with_jitter(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    if let Some(x) = cholesky_solve(a, b) {
        return Some(x);
    }
    let scale = (0..a.rows()).map(|i| a[(i, i)].abs()).fold(1e-300, f64::max);
    let mut jitter = scale * 1e-12;
    for _ in 0..8 {
        let mut shifted = a.clone();
        for i in 0..a.rows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(x) = cholesky_solve(&shifted, b) {
            return Some(x);
        }
        jitter *= 100.0;
    }
    None
}

/// `sigmoid(intercept + features * coefficients)` per row.
pub fn logistic_predict(model: &LogisticModel, features: &Matrix) -> Result<Vec<f64>> {
    if features.cols() != model.coefficients.len() {
        return Err(Error::Dimension(format!(
            "model has {} coefficients, features have {} columns",
            model.coefficients.len(),
            features.cols()
        )));
    }
    let mut params = Vec::with_capacity(model.coefficients.len() + 1);
    params.push(model.intercept);
    params.extend_from_slice(&model.coefficients);
    Ok(linear_predictor(features, &params)
        .into_iter()
        .map(sigmoid)
        .collect())
}
