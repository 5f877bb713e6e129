//! Independent reference implementations used to check the library.
//!
//! Nothing here calls into the code paths it checks: eigenvalues come from a
//! cyclic two-sided Jacobi solver on plain `Vec<Vec<f64>>`, logistic fits
//! from plain gradient ascent, matching from an exhaustive scan.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Approximately standard normal draws via Box-Muller.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Dense {
    (0..rows).map(|_| (0..cols).map(|_| normal(rng)).collect()).collect()
}

pub fn transpose(a: &Dense) -> Dense {
    let (n, m) = (a.len(), a[0].len());
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

pub fn frobenius(a: &Dense) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn sub(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations,
/// sorted descending.
pub fn symmetric_eigenvalues(a: &Dense) -> Vec<f64> {
    let n = a.len();
    let mut a = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Singular values from the eigenvalues of the Gram matrix.
pub fn singular_values(a: &Dense) -> Vec<f64> {
    let at = transpose(a);
    let gram = if a.len() >= a[0].len() { matmul(&at, a) } else { matmul(a, &at) };
    symmetric_eigenvalues(&gram)
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

/// Column means and sample standard deviations, computed one column at a time.
pub fn column_stats(a: &Dense) -> (Vec<f64>, Vec<f64>) {
    let n = a.len() as f64;
    let m = a[0].len();
    let mut means = Vec::new();
    let mut sds = Vec::new();
    for j in 0..m {
        let col: Vec<f64> = a.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        means.push(mean);
        sds.push(var.sqrt());
    }
    (means, sds)
}

/// Maximizes sum(y*eta - ln(1+e^eta)) - lambda/2 * |slopes|^2 by plain gradient
/// ascent with a fixed step bounded by the Lipschitz constant of the gradient.
pub fn logistic_gradient_ascent(features: &Dense, labels: &[bool], lambda: f64) -> Vec<f64> {
    let n = features.len();
    let p = features[0].len() + 1;
    let design: Dense = features
        .iter()
        .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
        .collect();
    // Lipschitz bound: ||X||_F^2 / 4 + lambda.
    let lip = design.iter().flatten().map(|v| v * v).sum::<f64>() / 4.0 + lambda;
    let step = 1.0 / lip;
    let mut beta = vec![0.0; p];
    let mut velocity = vec![0.0; p];
    for iter in 0..2_000_000 {
        // Nesterov momentum on the concave objective.
        let momentum = iter as f64 / (iter as f64 + 3.0);
        let look: Vec<f64> = beta.iter().zip(&velocity).map(|(b, v)| b + momentum * v).collect();
        let mut grad = vec![0.0; p];
        for i in 0..n {
            let eta: f64 = design[i].iter().zip(&look).map(|(x, b)| x * b).sum();
            let prob = 1.0 / (1.0 + (-eta).exp());
            let r = if labels[i] { 1.0 } else { 0.0 } - prob;
            for a in 0..p {
                grad[a] += r * design[i][a];
            }
        }
        for a in 1..p {
            grad[a] -= lambda * look[a];
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        for a in 0..p {
            let next = look[a] + step * grad[a];
            velocity[a] = next - beta[a];
            beta[a] = next;
        }
        if gnorm < 1e-11 {
            break;
        }
    }
    beta
}

/// Exhaustive O(n^2) nearest-opposite-group matching, smallest index on ties.
pub fn brute_force_matching(scores: &[f64], treated: &[bool]) -> Vec<usize> {
    (0..scores.len())
        .map(|i| {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for j in 0..scores.len() {
                if treated[j] == treated[i] {
                    continue;
                }
                let d = (scores[i] - scores[j]).abs();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Matching estimators written directly from their defining sums.
pub fn psm_ate_formula(pairs: &[usize], treated: &[bool], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mut total = 0.0;
    for i in 0..y.len() {
        if treated[i] {
            total += y[i] - y[pairs[i]];
        } else {
            total += y[pairs[i]] - y[i];
        }
    }
    total / n
}

pub fn psm_att_formula(pairs: &[usize], treated: &[bool], y: &[f64]) -> f64 {
    let idx: Vec<usize> = (0..y.len()).filter(|&i| treated[i]).collect();
    idx.iter().map(|&i| y[i] - y[pairs[i]]).sum::<f64>() / idx.len() as f64
}

pub fn ipw_ate_formula(e: &[f64], z: &[bool], y: &[f64]) -> f64 {
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let zi = if z[i] { 1.0 } else { 0.0 };
        a += zi / e[i] * y[i];
        b += zi / e[i];
        c += (1.0 - zi) / (1.0 - e[i]) * y[i];
        d += (1.0 - zi) / (1.0 - e[i]);
    }
    a / b - c / d
}

pub fn ipw_att_formula(e: &[f64], z: &[bool], y: &[f64]) -> f64 {
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let zi = if z[i] { 1.0 } else { 0.0 };
        a += zi * y[i];
        b += zi;
        c += (1.0 - zi) * e[i] / (1.0 - e[i]) * y[i];
        d += (1.0 - zi) * e[i] / (1.0 - e[i]);
    }
    a / b - c / d
}

/// Standardized mean difference of one covariate, optionally weighted,
/// using the frequency-weight variance `sum(w)/(sum(w)^2 - sum(w^2)) * sum(w (x - mean)^2)`.
pub fn smd_formula(x: &[f64], z: &[bool], w: Option<&[f64]>) -> f64 {
    let stats = |group: bool| {
        let idx: Vec<usize> = (0..x.len()).filter(|&i| z[i] == group).collect();
        let wt: Vec<f64> = idx.iter().map(|&i| w.map_or(1.0, |w| w[i])).collect();
        let sw: f64 = wt.iter().sum();
        let sw2: f64 = wt.iter().map(|v| v * v).sum();
        let mean = idx.iter().zip(&wt).map(|(&i, wi)| wi * x[i]).sum::<f64>() / sw;
        let ss = idx.iter().zip(&wt).map(|(&i, wi)| wi * (x[i] - mean).powi(2)).sum::<f64>();
        (mean, sw / (sw * sw - sw2) * ss)
    };
    let (mt, vt) = stats(true);
    let (mc, vc) = stats(false);
    (mt - mc) / ((vt + vc) / 2.0).sqrt()
}

/// Fixed 200x3 logistic dataset shared by the oracle tests.
pub fn logistic_dataset() -> (Dense, Vec<bool>) {
    let mut r = rng(20240601);
    let x = random_dense(&mut r, 200, 3);
    let beta = [0.3, 1.2, -0.8, 0.5];
    let y = x
        .iter()
        .map(|row| {
            let eta = beta[0] + row.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
            let p = 1.0 / (1.0 + (-eta).exp());
            r.random::<f64>() < p
        })
        .collect();
    (x, y)
}
