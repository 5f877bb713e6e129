//! Propensity scores and treatment-effect estimators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{logistic_fit, logistic_predict, Matrix};

/// Estimated scores are clipped into `[CLIP, 1 - CLIP]`.
pub const PROPENSITY_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    True,
    Centralized,
    Individual,
    Dcqe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityScores {
    pub values: Vec<f64>,
    pub source: ScoreSource,
}

impl PropensityScores {
    /// Wraps externally known probabilities (e.g. the data-generating ones).
    pub fn new(values: Vec<f64>, source: ScoreSource) -> Result<Self> {
        if let Some(i) = values.iter().position(|p| !(p.is_finite() && *p > 0.0 && *p < 1.0)) {
            return Err(Error::InvalidData(format!(
                "propensity score {} at index {i} is not inside (0, 1)",
                values[i]
            )));
        }
        Ok(Self { values, source })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Scores of the given subjects, in order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> PropensityScores {
        PropensityScores {
            values: indices.iter().map(|&i| self.values[i]).collect(),
            source: self.source,
        }
    }
}

/// Logistic regression of treatment on `features` plus a constant term.
pub fn estimate_propensity(
    features: &Matrix,
    treatments: &[bool],
    source: ScoreSource,
) -> Result<PropensityScores> {
    let fit = logistic_fit(features, treatments)?;
    let values = logistic_predict(&fit.model, features)?
        .into_iter()
        .map(|p| p.clamp(PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP))
        .collect();
    Ok(PropensityScores { values, source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Estimand {
    #[serde(alias = "ate")]
    Ate,
    #[serde(alias = "att")]
    Att,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    #[serde(alias = "psm")]
    Psm,
    #[serde(alias = "ipw")]
    Ipw,
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimand::Ate => "ATE",
            Estimand::Att => "ATT",
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Psm => "PSM",
            Method::Ipw => "IPW",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub estimand: Estimand,
    pub method: Method,
    pub value: f64,
}

/// One-to-one nearest-neighbour matching with replacement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingResult {
    /// `pairs[i]` is the opposite-group subject matched to subject `i`.
    pub pairs: Vec<usize>,
    pub treated: Vec<usize>,
    pub control: Vec<usize>,
}

impl MatchingResult {
    pub fn is_treated(&self, i: usize) -> bool {
        self.treated.binary_search(&i).is_ok()
    }
}

/// Matches every subject to the opposite-group subject with the closest
/// score, breaking ties by smallest index.
///
/// Each group is sorted once; a query inspects only the run of candidates at
/// the minimal distance on either side of its insertion point, so the result
/// is identical to an exhaustive scan.
pub fn match_pairs(scores: &PropensityScores, treatments: &[bool]) -> Result<MatchingResult> {
    let n = treatments.len();
    if scores.len() != n {
        return Err(Error::Dimension(format!("{} scores for {n} subjects", scores.len())));
    }
    let treated: Vec<usize> = (0..n).filter(|&i| treatments[i]).collect();
    let control: Vec<usize> = (0..n).filter(|&i| !treatments[i]).collect();
    if treated.is_empty() || control.is_empty() {
        return Err(Error::DegenerateLabels);
    }
    let e = &scores.values;
    let sorted = |group: &[usize]| {
        let mut g = group.to_vec();
        g.sort_by(|&a, &b| e[a].total_cmp(&e[b]).then(a.cmp(&b)));
        g
    };
    let sorted_treated = sorted(&treated);
    let sorted_control = sorted(&control);

    let pairs = (0..n)
        .map(|i| {
            let pool = if treatments[i] { &sorted_control } else { &sorted_treated };
            nearest(e, e[i], pool)
        })
        .collect();
    Ok(MatchingResult {
        pairs,
        treated,
        control,
    })
}

fn nearest(e: &[f64], s: f64, pool: &[usize]) -> usize {
    // `split` is the first candidate with score >= s.
    let split = pool.partition_point(|&j| e[j] < s);
    let dist = |j: usize| (s - e[j]).abs();
    let left = split.checked_sub(1).map(|p| dist(pool[p]));
    let right = pool.get(split).map(|&j| dist(j));
    let best = match (left, right) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => unreachable!("pool is non-empty"),
    };
    // Distances grow monotonically away from the split, so minimal-distance
    // candidates form contiguous runs adjacent to it.
    let mut choice = usize::MAX;
    for &j in pool[..split].iter().rev() {
        if dist(j) != best {
            break;
        }
        choice = choice.min(j);
    }
    for &j in &pool[split..] {
        if dist(j) != best {
            break;
        }
        choice = choice.min(j);
    }
    choice
}

/// Matching estimator: ATE averages the signed matched differences over all
/// subjects, ATT over treated subjects only.
pub fn estimate_psm(
    matching: &MatchingResult,
    outcomes: &[f64],
    estimand: Estimand,
) -> Result<EffectEstimate> {
    if outcomes.len() != matching.pairs.len() {
        return Err(Error::Dimension(format!(
            "{} outcomes for {} matched subjects",
            outcomes.len(),
            matching.pairs.len()
        )));
    }
    let diff = |i: usize| outcomes[i] - outcomes[matching.pairs[i]];
    let value = match estimand {
        Estimand::Ate => {
            let t: f64 = matching.treated.iter().map(|&i| diff(i)).sum();
            let c: f64 = matching.control.iter().map(|&i| -diff(i)).sum();
            (t + c) / outcomes.len() as f64
        }
        Estimand::Att => {
            matching.treated.iter().map(|&i| diff(i)).sum::<f64>() / matching.treated.len() as f64
        }
    };
    Ok(EffectEstimate {
        estimand,
        method: Method::Psm,
        value,
    })
}

/// Inverse-probability weights: `1/e` and `1/(1-e)` for ATE; `1` and `e/(1-e)` for ATT.
pub fn ipw_weights(scores: &[f64], treatments: &[bool], estimand: Estimand) -> Vec<f64> {
    scores
        .iter()
        .zip(treatments)
        .map(|(&e, &z)| match (estimand, z) {
            (Estimand::Ate, true) => 1.0 / e,
            (Estimand::Ate, false) => 1.0 / (1.0 - e),
            (Estimand::Att, true) => 1.0,
            (Estimand::Att, false) => e / (1.0 - e),
        })
        .collect()
}

/// Self-normalized (ratio-of-sums) weighted difference of group means.
pub fn estimate_ipw(
    scores: &PropensityScores,
    treatments: &[bool],
    outcomes: &[f64],
    estimand: Estimand,
) -> Result<EffectEstimate> {
    let n = treatments.len();
    if scores.len() != n || outcomes.len() != n {
        return Err(Error::Dimension(format!(
            "{} scores, {n} treatments, {} outcomes",
            scores.len(),
            outcomes.len()
        )));
    }
    let weights = ipw_weights(&scores.values, treatments, estimand);
    let (mut wy_t, mut w_t, mut wy_c, mut w_c) = (0.0, 0.0, 0.0, 0.0);
    for ((&w, &z), &y) in weights.iter().zip(treatments).zip(outcomes) {
        if z {
            wy_t += w * y;
            w_t += w;
        } else {
            wy_c += w * y;
            w_c += w;
        }
    }
    if w_t == 0.0 || w_c == 0.0 {
        return Err(Error::DegenerateLabels);
    }
    Ok(EffectEstimate {
        estimand,
        method: Method::Ipw,
        value: wy_t / w_t - wy_c / w_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(v: &[f64]) -> PropensityScores {
        PropensityScores::new(v.to_vec(), ScoreSource::True).unwrap()
    }

    #[test]
    fn enumeration_example() {
        // Subject 0 treated at 0.6; controls 1, 2 at 0.5 and 0.9.
        let m = match_pairs(&scores(&[0.6, 0.5, 0.9]), &[true, false, false]).unwrap();
        assert_eq!(m.pairs, vec![1, 0, 0]);
        assert_eq!(m.treated, vec![0]);
        assert_eq!(m.control, vec![1, 2]);
    }

    #[test]
    fn equal_scores_match_smallest_index() {
        let z = [false, true, true, false, true, false];
        let m = match_pairs(&scores(&[0.3; 6]), &z).unwrap();
        assert_eq!(m.pairs, vec![1, 0, 0, 1, 0, 1]);
    }

    #[test]
    fn equidistant_neighbours_prefer_smaller_index() {
        // Treated at 0.5; controls at 0.25 (index 2) and 0.75 (index 1).
        let m = match_pairs(&scores(&[0.5, 0.75, 0.25]), &[true, false, false]).unwrap();
        assert_eq!(m.pairs[0], 1);
    }

    #[test]
    fn single_pair_effects() {
        let m = match_pairs(&scores(&[0.5, 0.5]), &[true, false]).unwrap();
        let y = [5.0, 3.0];
        assert_eq!(estimate_psm(&m, &y, Estimand::Att).unwrap().value, 2.0);
        assert_eq!(estimate_psm(&m, &y, Estimand::Ate).unwrap().value, 2.0);
        let same = [4.0, 4.0];
        assert_eq!(estimate_psm(&m, &same, Estimand::Ate).unwrap().value, 0.0);
    }

    #[test]
    fn uniform_weights_reduce_to_difference_of_means() {
        let est = estimate_ipw(&scores(&[0.5, 0.5]), &[true, false], &[3.0, 1.0], Estimand::Ate).unwrap();
        assert_eq!(est.value, 2.0);
        assert_eq!(est.method, Method::Ipw);
    }

    #[test]
    fn uninformative_features_give_treated_fraction() {
        let features = Matrix::zeros(8, 2);
        let z = [true, false, false, true, false, false, true, false];
        let s = estimate_propensity(&features, &z, ScoreSource::Centralized).unwrap();
        assert!(s.values.iter().all(|p| (p - 3.0 / 8.0).abs() < 1e-9));
    }

    #[test]
    fn single_group_is_rejected() {
        assert_eq!(
            match_pairs(&scores(&[0.2, 0.4]), &[true, true]).unwrap_err(),
            Error::DegenerateLabels
        );
        assert!(estimate_propensity(&Matrix::zeros(2, 1), &[false, false], ScoreSource::Individual).is_err());
    }

    #[test]
    fn score_validation() {
        assert!(PropensityScores::new(vec![0.0, 0.5], ScoreSource::True).is_err());
        assert!(PropensityScores::new(vec![f64::NAN], ScoreSource::True).is_err());
    }
}
