//! Seeded inputs shared by the benchmarks.

use dcqe_core::causal::{PropensityScores, ScoreSource};
use dcqe_core::datamodel::Dataset;
use dcqe_core::experiments::{generate_artificial, ArtificialDataConfig};
use dcqe_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Entries uniform on [-1, 1).
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Matrix::new(rows, cols, data).expect("non-empty shape")
}

/// Scores and labels with a treated fraction near one half.
pub fn scores_and_labels(n: usize, seed: u64) -> (PropensityScores, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
    let mut z: Vec<bool> = e.iter().map(|&p| rng.random::<f64>() < p).collect();
    z[0] = true;
    z[n - 1] = false;
    (PropensityScores::new(e, ScoreSource::True).expect("valid scores"), z)
}

pub fn synthetic(n: usize, seed: u64) -> (Dataset, PropensityScores) {
    generate_artificial(&ArtificialDataConfig { n, seed, ..Default::default() }).expect("default config is valid")
}
