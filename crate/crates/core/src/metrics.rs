//! Evaluation measures: gap from a benchmark effect, propensity-score
//! inconsistency and covariate balance (standardized mean differences).

use serde::{Deserialize, Serialize};

use crate::causal::{Estimand, MatchingResult, Method};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDistribution {
    pub estimates: Vec<f64>,
    pub estimand: Estimand,
    pub method: Method,
}

impl BootstrapDistribution {
    pub fn mean(&self) -> f64 {
        mean(&self.estimates)
    }

    pub fn standard_error(&self) -> f64 {
        sample_sd(&self.estimates)
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Root-mean-square deviation of the bootstrap estimates from `benchmark`.
pub fn gap(estimates: &BootstrapDistribution, benchmark: f64) -> f64 {
    let b = estimates.estimates.len() as f64;
    (estimates
        .estimates
        .iter()
        .map(|t| (t - benchmark).powi(2))
        .sum::<f64>()
        / b)
        .sqrt()
}

/// Root-mean-square difference between two score vectors.
pub fn inconsistency(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::Dimension(format!(
            "score vectors of length {} and {}",
            scores_a.len(),
            scores_b.len()
        )));
    }
    if scores_a.is_empty() {
        return Err(Error::Dimension("empty score vectors".into()));
    }
    let ss: f64 = scores_a
        .iter()
        .zip(scores_b)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok((ss / scores_a.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub smd_per_covariate: Vec<f64>,
    /// Maximum absolute standardized mean difference.
    pub masmd: f64,
}

/// Weighted mean and frequency-weight variance of one group.
fn group_moments(values: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let pairs: Vec<(f64, f64)> = values.collect();
    let sw: f64 = pairs.iter().map(|p| p.1).sum();
    let sw2: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
    let mean = pairs.iter().map(|(x, w)| w * x).sum::<f64>() / sw;
    let denom = sw * sw - sw2;
    let var = if denom > 0.0 {
        sw / denom * pairs.iter().map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>()
    } else {
        // A single effective observation carries no spread.
        0.0
    };
    (mean, var)
}

/// Standardized mean differences `(mean_T - mean_C) / sqrt((var_T + var_C) / 2)`
/// per covariate; with weights, means and variances are the weighted forms.
pub fn smd(covariates: &Matrix, treatments: &[bool], weights: Option<&[f64]>) -> Result<BalanceReport> {
    let n = covariates.rows();
    if treatments.len() != n {
        return Err(Error::Dimension(format!("{} treatments for {n} rows", treatments.len())));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::Dimension(format!("{} weights for {n} rows", w.len())));
        }
        if let Some(i) = w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidData(format!("weight {} at row {i} is not positive", w[i])));
        }
    }
    if !treatments.iter().any(|&z| z) || treatments.iter().all(|&z| z) {
        return Err(Error::DegenerateLabels);
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut smds = Vec::with_capacity(covariates.cols());
    for j in 0..covariates.cols() {
        let group = |g: bool| {
            group_moments(
                (0..n)
                    .filter(move |&i| treatments[i] == g)
                    .map(move |i| (covariates[(i, j)], weight(i))),
            )
        };
        let (mt, vt) = group(true);
        let (mc, vc) = group(false);
        let pooled = ((vt + vc) / 2.0).sqrt();
        let d = if pooled > 0.0 {
            (mt - mc) / pooled
        } else if mt == mc {
            0.0
        } else {
            return Err(Error::InfiniteImbalance { covariate: j });
        };
        smds.push(d);
    }
    let masmd = smds.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(BalanceReport {
        smd_per_covariate: smds,
        masmd,
    })
}

/// Balance of the matched sample: every (subject, match) pair contributes one
/// treated and one control occurrence. ATT uses treated subjects' pairs only;
/// ATE uses pairs in both directions.
pub fn matched_balance(
    covariates: &Matrix,
    matching: &MatchingResult,
    estimand: Estimand,
) -> Result<BalanceReport> {
    let subjects: Vec<usize> = match estimand {
        Estimand::Att => matching.treated.clone(),
        Estimand::Ate => (0..matching.pairs.len()).collect(),
    };
    let mut rows = Vec::with_capacity(subjects.len() * 2);
    let mut groups = Vec::with_capacity(subjects.len() * 2);
    for &i in &subjects {
        let j = matching.pairs[i];
        let i_treated = matching.is_treated(i);
        rows.push(i);
        groups.push(i_treated);
        rows.push(j);
        groups.push(!i_treated);
    }
    let sample = covariates.select_rows(&rows)?;
    smd(&sample, &groups, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> BootstrapDistribution {
        BootstrapDistribution {
            estimates: v.to_vec(),
            estimand: Estimand::Ate,
            method: Method::Psm,
        }
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap(&dist(&[1.0, 1.0, 1.0]), 1.0), 0.0);
        assert_eq!(gap(&dist(&[2.0]), 1.0), 1.0);
        assert_eq!(gap(&dist(&[0.0, 2.0]), 1.0), 1.0);
    }

    #[test]
    fn inconsistency_examples() {
        assert_eq!(inconsistency(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((inconsistency(&[0.2, 0.8], &[0.4, 0.6]).unwrap() - 0.2).abs() < 1e-15);
        assert!(inconsistency(&[0.2], &[0.2, 0.3]).is_err());
    }

    #[test]
    fn identical_group_distributions_are_balanced() {
        let cov = Matrix::from_rows(&[[1.0, 5.0], [2.0, 7.0], [1.0, 5.0], [2.0, 7.0]]).unwrap();
        let r = smd(&cov, &[true, true, false, false], None).unwrap();
        assert_eq!(r.smd_per_covariate, vec![0.0, 0.0]);
        assert_eq!(r.masmd, 0.0);
    }

    #[test]
    fn zero_variance_handling() {
        let cov = Matrix::from_rows(&[[1.0], [1.0], [1.0], [1.0]]).unwrap();
        assert_eq!(smd(&cov, &[true, true, false, false], None).unwrap().masmd, 0.0);
        let cov = Matrix::from_rows(&[[1.0], [1.0], [2.0], [2.0]]).unwrap();
        assert_eq!(
            smd(&cov, &[true, true, false, false], None).unwrap_err(),
            Error::InfiniteImbalance { covariate: 0 }
        );
    }

    #[test]
    fn unit_weights_match_unweighted() {
        let cov = Matrix::from_rows(&[[1.0, 0.2], [3.0, -1.0], [2.5, 0.7], [0.1, 0.4], [1.7, 2.2]]).unwrap();
        let z = [true, false, true, false, false];
        let a = smd(&cov, &z, None).unwrap();
        let b = smd(&cov, &z, Some(&[1.0; 5])).unwrap();
        for (x, y) in a.smd_per_covariate.iter().zip(&b.smd_per_covariate) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_positive_weights() {
        let cov = Matrix::zeros(2, 1);
        assert!(smd(&cov, &[true, false], Some(&[1.0, 0.0])).is_err());
    }
}
