use serde::{Deserialize, Serialize};

use super::svd::thin_svd_tall;
use super::Matrix;
use crate::error::{Error, Result};

/// Standard deviations below this are replaced by 1.0.
pub const DEGENERATE_STDDEV: f64 = 1e-12;

/// Column means and sample standard deviations of a fitted matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl StandardizationParams {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    /// `(x - mean) / stddev`, column by column.
    pub fn apply(&self, data: &Matrix) -> Result<Matrix> {
        if data.cols() != self.dim() {
            return Err(Error::Dimension(format!(
                "standardization fitted on {} columns, got {}",
                self.dim(),
                data.cols()
            )));
        }
        let mut out = data.clone();
        for i in 0..out.rows() {
            for j in 0..out.cols() {
                out[(i, j)] = (out[(i, j)] - self.means[j]) / self.stddevs[j];
            }
        }
        Ok(out)
    }
}

pub fn standardize_fit(data: &Matrix) -> Result<StandardizationParams> {
    if let Some(bad) = data.as_slice().iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite value {bad}")));
    }
    let n = data.rows();
    let m = data.cols();
    let mut means = vec![0.0; m];
    for i in 0..n {
        for (acc, v) in means.iter_mut().zip(data.row(i)) {
            *acc += v;
        }
    }
    for mean in &mut means {
        *mean /= n as f64;
    }
    let mut ss = vec![0.0; m];
    for i in 0..n {
        for ((acc, v), mean) in ss.iter_mut().zip(data.row(i)).zip(&means) {
            let d = v - mean;
            *acc += d * d;
        }
    }
    let stddevs = ss
        .into_iter()
        .map(|s| {
            let sd = if n > 1 { (s / (n - 1) as f64).sqrt() } else { 0.0 };
            if sd < DEGENERATE_STDDEV {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(StandardizationParams { means, stddevs })
}

/// Principal components of standardized data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub params: StandardizationParams,
    /// Input dim x target dim, orthonormal columns.
    pub components: Matrix,
    /// Variance captured by each component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Total variance of the standardized data (sum over all components).
    pub total_variance: f64,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.components.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.components.cols()
    }
}

pub fn pca_fit(data: &Matrix, target_dim: usize) -> Result<PcaModel> {
    let (n, m) = data.shape();
    if n < 2 {
        return Err(Error::Dimension(format!("PCA needs at least 2 rows, got {n}")));
    }
    if target_dim == 0 || target_dim > m {
        return Err(Error::Dimension(format!(
            "PCA target dimension {target_dim} outside 1..={m}"
        )));
    }
    let params = standardize_fit(data)?;
    let standardized = params.apply(data)?;
    // Zero rows leave the right singular vectors unchanged; padding gives a
    // full orthogonal basis when there are fewer rows than columns.
    let tall = if n < m {
        Matrix::vstack(&[&standardized, &Matrix::zeros(m - n, m)])?
    } else {
        standardized
    };
    let svd = thin_svd_tall(&tall);
    let denom = (n - 1) as f64;
    let variances: Vec<f64> = svd.sigma.iter().map(|s| s * s / denom).collect();
    let cols: Vec<usize> = (0..target_dim).collect();
    Ok(PcaModel {
        params,
        components: svd.v.select_columns(&cols)?,
        explained_variance: variances[..target_dim].to_vec(),
        total_variance: variances.iter().sum(),
    })
}

/// Projects rows onto the fitted components: `standardize(data) * components`.
pub fn pca_transform(model: &PcaModel, data: &Matrix) -> Result<Matrix> {
    if data.cols() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "PCA fitted on {} columns, got {}",
            model.input_dim(),
            data.cols()
        )));
    }
    model.params.apply(data)?.matmul(&model.components)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_sample_sd() {
        let p = standardize_fit(&Matrix::from_rows(&[[1.0], [3.0]]).unwrap()).unwrap();
        assert_eq!(p.means, vec![2.0]);
        assert!((p.stddevs[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_column_uses_unit_divisor() {
        let p = standardize_fit(&Matrix::from_rows(&[[5.0], [5.0], [5.0]]).unwrap()).unwrap();
        assert_eq!(p.means, vec![5.0]);
        assert_eq!(p.stddevs, vec![1.0]);
    }

    #[test]
    fn perfectly_correlated_columns_have_one_component() {
        let data = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [5.0, 10.0]]).unwrap();
        let model = pca_fit(&data, 1).unwrap();
        assert!((model.explained_variance[0] - model.total_variance).abs() < 1e-8);
        assert!((model.total_variance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn row_at_means_maps_to_origin() {
        let data = Matrix::from_rows(&[[1.0, 0.0, 2.0], [3.0, 1.0, 1.0], [2.0, 5.0, 0.0]]).unwrap();
        let model = pca_fit(&data, 2).unwrap();
        let mean_row = Matrix::from_rows(&[model.params.means.clone()]).unwrap();
        let out = pca_transform(&model, &mean_row).unwrap();
        assert!(out.max_abs() < 1e-15);
    }

    #[test]
    fn dimension_checks() {
        let data = Matrix::from_rows(&[[1.0, 0.0], [3.0, 1.0]]).unwrap();
        assert!(pca_fit(&data, 0).is_err());
        assert!(pca_fit(&data, 3).is_err());
        assert!(pca_fit(&Matrix::from_rows(&[[1.0, 2.0]]).unwrap(), 1).is_err());
        let model = pca_fit(&data, 1).unwrap();
        assert!(pca_transform(&model, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn fewer_rows_than_columns_still_yields_orthonormal_components() {
        let data = Matrix::from_rows(&[[1.0, 0.0, 2.0, 4.0], [3.0, 1.0, 1.0, 0.0]]).unwrap();
        let model = pca_fit(&data, 4).unwrap();
        let gram = model.components.transpose().matmul(&model.components).unwrap();
        assert!(gram.sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-12);
    }
}
