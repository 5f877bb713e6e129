//! Datasets, their block partition across parties, and collaboration scopes.
//!
//! Subjects are split into `c` row blocks (institutions) and covariates into
//! `d` column blocks. Party `(k, l)` owns the covariate block at row block `k`
//! and column block `l`, plus the treatments and outcomes of row block `k`.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Covariates, binary treatments and real outcomes for `n` subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    covariates: Matrix,
    treatments: Vec<bool>,
    outcomes: Vec<f64>,
}

impl Dataset {
    pub fn new(covariates: Matrix, treatments: Vec<bool>, outcomes: Vec<f64>) -> Result<Self> {
        let n = covariates.rows();
        if treatments.len() != n || outcomes.len() != n {
            return Err(Error::Dimension(format!(
                "{n} covariate rows, {} treatments, {} outcomes",
                treatments.len(),
                outcomes.len()
            )));
        }
        if let Some(i) = outcomes.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidData(format!("outcome of subject {i} is not finite")));
        }
        let treated = treatments.iter().filter(|&&z| z).count();
        if treated == 0 || treated == n {
            return Err(Error::DegenerateLabels);
        }
        Ok(Self {
            covariates,
            treatments,
            outcomes,
        })
    }

    pub fn covariates(&self) -> &Matrix {
        &self.covariates
    }

    pub fn treatments(&self) -> &[bool] {
        &self.treatments
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn n_subjects(&self) -> usize {
        self.covariates.rows()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.cols()
    }

    pub fn n_treated(&self) -> usize {
        self.treatments.iter().filter(|&&z| z).count()
    }

    /// Sub-dataset with the given subjects (repeats allowed) and covariate columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Result<Dataset> {
        let covariates = self.covariates.select_rows(rows)?.select_columns(cols)?;
        let treatments = rows.iter().map(|&i| self.treatments[i]).collect();
        let outcomes = rows.iter().map(|&i| self.outcomes[i]).collect();
        Dataset::new(covariates, treatments, outcomes)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let cols: Vec<usize> = (0..self.n_covariates()).collect();
        self.select(rows, &cols)
    }
}

/// Block sizes of a `c x d` partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    row_blocks: Vec<usize>,
    col_blocks: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(row_blocks: Vec<usize>, col_blocks: Vec<usize>) -> Result<Self> {
        if row_blocks.is_empty() || col_blocks.is_empty() {
            return Err(Error::Partition("at least one row and column block required".into()));
        }
        if row_blocks.contains(&0) || col_blocks.contains(&0) {
            return Err(Error::Partition("every block must be non-empty".into()));
        }
        Ok(Self { row_blocks, col_blocks })
    }

    /// `c` row blocks and `d` column blocks of (nearly) equal size; earlier blocks take the remainder.
    pub fn even(n: usize, m: usize, c: usize, d: usize) -> Result<Self> {
        let split = |total: usize, parts: usize| -> Vec<usize> {
            (0..parts)
                .map(|i| total / parts + usize::from(i < total % parts))
                .collect()
        };
        if c == 0 || d == 0 || c > n || d > m {
            return Err(Error::Partition(format!(
                "cannot split {n}x{m} into {c}x{d} non-empty blocks"
            )));
        }
        Self::new(split(n, c), split(m, d))
    }

    pub fn row_blocks(&self) -> &[usize] {
        &self.row_blocks
    }

    pub fn col_blocks(&self) -> &[usize] {
        &self.col_blocks
    }

    /// Number of row blocks `c`.
    pub fn n_row_blocks(&self) -> usize {
        self.row_blocks.len()
    }

    /// Number of column blocks `d`.
    pub fn n_col_blocks(&self) -> usize {
        self.col_blocks.len()
    }

    pub fn n_subjects(&self) -> usize {
        self.row_blocks.iter().sum()
    }

    pub fn n_covariates(&self) -> usize {
        self.col_blocks.iter().sum()
    }

    pub fn row_range(&self, k: usize) -> Range<usize> {
        let start: usize = self.row_blocks[..k].iter().sum();
        start..start + self.row_blocks[k]
    }

    pub fn col_range(&self, l: usize) -> Range<usize> {
        let start: usize = self.col_blocks[..l].iter().sum();
        start..start + self.col_blocks[l]
    }

    pub fn check_against(&self, data: &Dataset) -> Result<()> {
        if self.n_subjects() != data.n_subjects() || self.n_covariates() != data.n_covariates() {
            return Err(Error::Partition(format!(
                "partition covers {}x{} but dataset is {}x{}",
                self.n_subjects(),
                self.n_covariates(),
                data.n_subjects(),
                data.n_covariates()
            )));
        }
        Ok(())
    }
}

/// Party `(k, l)`'s private block together with its row block's labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyView {
    pub row_index: usize,
    pub col_index: usize,
    pub covariates: Matrix,
    pub treatments: Vec<bool>,
    pub outcomes: Vec<f64>,
}

/// Splits a dataset into `c * d` party views, row-major in `(k, l)`.
pub fn partition(data: &Dataset, spec: &PartitionSpec) -> Result<Vec<PartyView>> {
    spec.check_against(data)?;
    let mut views = Vec::with_capacity(spec.n_row_blocks() * spec.n_col_blocks());
    for k in 0..spec.n_row_blocks() {
        let rows = spec.row_range(k);
        let treatments = data.treatments()[rows.clone()].to_vec();
        let outcomes = data.outcomes()[rows.clone()].to_vec();
        for l in 0..spec.n_col_blocks() {
            views.push(PartyView {
                row_index: k,
                col_index: l,
                covariates: data.covariates().block(rows.clone(), spec.col_range(l))?,
                treatments: treatments.clone(),
                outcomes: outcomes.clone(),
            });
        }
    }
    Ok(views)
}

/// Inverse of [`partition`]: concatenates views back into a dataset.
pub fn reassemble(views: &[PartyView], spec: &PartitionSpec) -> Result<Dataset> {
    let (c, d) = (spec.n_row_blocks(), spec.n_col_blocks());
    if views.len() != c * d {
        return Err(Error::Partition(format!("expected {} views, got {}", c * d, views.len())));
    }
    let mut row_mats = Vec::with_capacity(c);
    let mut treatments = Vec::new();
    let mut outcomes = Vec::new();
    for k in 0..c {
        let row: Vec<&Matrix> = (0..d).map(|l| &views[k * d + l].covariates).collect();
        row_mats.push(Matrix::hstack(&row)?);
        treatments.extend_from_slice(&views[k * d].treatments);
        outcomes.extend_from_slice(&views[k * d].outcomes);
    }
    let refs: Vec<&Matrix> = row_mats.iter().collect();
    Dataset::new(Matrix::vstack(&refs)?, treatments, outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeKind {
    Left,
    Right,
    Top,
    Bottom,
    Whole,
    Custom,
}

/// The set of parties pooling their representations, always a full
/// rectangular sub-grid `rows x cols` of the partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollaborationScope {
    pub kind: ScopeKind,
    parties: BTreeSet<(usize, usize)>,
}

impl CollaborationScope {
    pub fn left(spec: &PartitionSpec) -> Self {
        Self::grid(ScopeKind::Left, 0..spec.n_row_blocks(), 0..1)
    }

    pub fn right(spec: &PartitionSpec) -> Self {
        let d = spec.n_col_blocks();
        Self::grid(ScopeKind::Right, 0..spec.n_row_blocks(), d - 1..d)
    }

    pub fn top(spec: &PartitionSpec) -> Self {
        Self::grid(ScopeKind::Top, 0..1, 0..spec.n_col_blocks())
    }

    pub fn bottom(spec: &PartitionSpec) -> Self {
        let c = spec.n_row_blocks();
        Self::grid(ScopeKind::Bottom, c - 1..c, 0..spec.n_col_blocks())
    }

    pub fn whole(spec: &PartitionSpec) -> Self {
        Self::grid(ScopeKind::Whole, 0..spec.n_row_blocks(), 0..spec.n_col_blocks())
    }

    /// A single party, as used for individual analyses.
    pub fn single(k: usize, l: usize) -> Self {
        Self::grid(ScopeKind::Custom, k..k + 1, l..l + 1)
    }

    /// Arbitrary party set; must form a rectangular sub-grid.
    pub fn custom<I: IntoIterator<Item = (usize, usize)>>(parties: I) -> Result<Self> {
        let parties: BTreeSet<_> = parties.into_iter().collect();
        if parties.is_empty() {
            return Err(Error::Scope("custom scope has no parties".into()));
        }
        let scope = Self {
            kind: ScopeKind::Custom,
            parties,
        };
        let (rows, cols) = (scope.row_indices(), scope.col_indices());
        if rows.len() * cols.len() != scope.parties.len() {
            return Err(Error::Scope(format!(
                "parties {:?} do not form a rectangular sub-grid",
                scope.parties
            )));
        }
        Ok(scope)
    }

    fn grid(kind: ScopeKind, rows: Range<usize>, cols: Range<usize>) -> Self {
        let parties = rows
            .flat_map(|k| cols.clone().map(move |l| (k, l)))
            .collect();
        Self { kind, parties }
    }

    pub fn parties(&self) -> &BTreeSet<(usize, usize)> {
        &self.parties
    }

    pub fn contains(&self, k: usize, l: usize) -> bool {
        self.parties.contains(&(k, l))
    }

    /// Distinct row-block indices, ascending.
    pub fn row_indices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.parties.iter().map(|p| p.0).collect();
        set.into_iter().collect()
    }

    /// Distinct column-block indices, ascending.
    pub fn col_indices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.parties.iter().map(|p| p.1).collect();
        set.into_iter().collect()
    }

    pub fn is_single_party(&self) -> bool {
        self.parties.len() == 1
    }

    pub fn validate(&self, spec: &PartitionSpec) -> Result<()> {
        if let Some(&(k, l)) = self
            .parties
            .iter()
            .find(|&&(k, l)| k >= spec.n_row_blocks() || l >= spec.n_col_blocks())
        {
            return Err(Error::Scope(format!(
                "party ({k}, {l}) outside the {}x{} partition",
                spec.n_row_blocks(),
                spec.n_col_blocks()
            )));
        }
        if self.row_indices().len() * self.col_indices().len() != self.parties.len() {
            return Err(Error::Scope("scope is not a rectangular sub-grid".into()));
        }
        Ok(())
    }

    /// Dataset rows covered by the scope, in row-block order.
    pub fn subject_indices(&self, spec: &PartitionSpec) -> Result<Vec<usize>> {
        self.validate(spec)?;
        Ok(self
            .row_indices()
            .into_iter()
            .flat_map(|k| spec.row_range(k))
            .collect())
    }

    /// Dataset columns covered by the scope, in column-block order.
    pub fn covariate_indices(&self, spec: &PartitionSpec) -> Result<Vec<usize>> {
        self.validate(spec)?;
        Ok(self
            .col_indices()
            .into_iter()
            .flat_map(|l| spec.col_range(l))
            .collect())
    }
}

/// The ground-truth sub-dataset a scope could at best see.
pub fn scope_dataset(
    data: &Dataset,
    spec: &PartitionSpec,
    scope: &CollaborationScope,
) -> Result<Dataset> {
    spec.check_against(data)?;
    let rows = scope.subject_indices(spec)?;
    let cols = scope.covariate_indices(spec)?;
    data.select(&rows, &cols)
}
