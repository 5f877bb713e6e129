//! Synthetic data with a known unit treatment effect.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::causal::{PropensityScores, ScoreSource};
use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArtificialDataConfig {
    pub n: usize,
    pub m: usize,
    /// Common off-diagonal correlation of the covariates.
    pub rho: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for ArtificialDataConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            m: 6,
            rho: 0.5,
            noise_sd: 0.1,
            seed: 0,
        }
    }
}

impl ArtificialDataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n = {} but at least 2 subjects are needed", self.n)));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be positive".into()));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config(format!("noise_sd = {} must be positive", self.noise_sd)));
        }
        let lower = if self.m > 1 { -1.0 / (self.m as f64 - 1.0) } else { f64::NEG_INFINITY };
        if !(self.rho > lower && self.rho < 1.0) {
            return Err(Error::Config(format!(
                "rho = {} leaves the covariance singular or indefinite for m = {}",
                self.rho, self.m
            )));
        }
        Ok(())
    }

    /// Unit diagonal, `rho` elsewhere.
    pub fn covariance(&self) -> Matrix {
        let mut s = Matrix::zeros(self.m, self.m);
        for i in 0..self.m {
            for j in 0..self.m {
                s[(i, j)] = if i == j { 1.0 } else { self.rho };
            }
        }
        s
    }
}

/// `P(z = 1 | x) = 1 / (1 + exp(-sum(x) / 6))`.
pub fn true_propensity(x: &[f64]) -> f64 {
    let eta: f64 = x.iter().sum::<f64>() / 6.0;
    1.0 / (1.0 + (-eta).exp())
}

/// Draws covariates from `N(0, S)`, then treatments, then outcomes
/// `y = sum(x) + z + noise`. The treatment effect is exactly 1.
pub fn generate_artificial(config: &ArtificialDataConfig) -> Result<(Dataset, PropensityScores)> {
    config.validate()?;
    let (n, m) = (config.n, config.m);
    let l = cholesky(&config.covariance())
        .ok_or_else(|| Error::Config("covariance is not positive definite".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut x = Matrix::zeros(n, m);
    let mut z_std = vec![0.0; m];
    for i in 0..n {
        for v in z_std.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for j in 0..m {
            x[(i, j)] = (0..=j).map(|k| l[(j, k)] * z_std[k]).sum();
        }
    }
    let probs: Vec<f64> = (0..n).map(|i| true_propensity(x.row(i))).collect();
    let treatments: Vec<bool> = probs.iter().map(|&p| rng.random::<f64>() < p).collect();
    let outcomes: Vec<f64> = (0..n)
        .map(|i| {
            let eps: f64 = rng.sample(StandardNormal);
            x.row(i).iter().sum::<f64>() + f64::from(u8::from(treatments[i])) + config.noise_sd * eps
        })
        .collect();
    let data = Dataset::new(x, treatments, outcomes)?;
    Ok((data, PropensityScores::new(probs, ScoreSource::True)?))
}
