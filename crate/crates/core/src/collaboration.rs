//! Construction of collaborative representations.
//!
//! User side: every party reduces its private block with PCA fitted on its own
//! data and applies the same map to its column slice of a shared anchor
//! dataset. Only the two reduced matrices (plus treatments and outcomes) leave
//! the party, as a [`PartyShare`].
//!
//! Analyst side: the anchor images of each row block are concatenated, a
//! truncated SVD of the side-by-side concatenation yields a common target
//! basis `U1`, and each row block gets a linear integration map
//! `G_k = pinv(anchor_k) * U1`. The collaborative representation stacks
//! `X~_k * G_k` over row blocks.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{partition, CollaborationScope, Dataset, PartitionSpec, PartyView};
use crate::error::{Error, Result};
use crate::numerics::{pca_fit, pca_transform, pseudoinverse, svd_truncated, Matrix};

/// Shareable dummy data with the same covariates as the real dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorDataset {
    pub values: Matrix,
    col_blocks: Vec<usize>,
}

impl AnchorDataset {
    /// Assigns the column partition used to slice the anchor per party.
    pub fn partitioned(mut self, spec: &PartitionSpec) -> Result<Self> {
        if spec.n_covariates() != self.values.cols() {
            return Err(Error::Anchor(format!(
                "anchor has {} columns, partition covers {}",
                self.values.cols(),
                spec.n_covariates()
            )));
        }
        self.col_blocks = spec.col_blocks().to_vec();
        Ok(self)
    }

    pub fn col_blocks(&self) -> &[usize] {
        &self.col_blocks
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    /// Columns of column block `l`.
    pub fn column_block(&self, l: usize) -> Result<Matrix> {
        if l >= self.col_blocks.len() {
            return Err(Error::Anchor(format!("no column block {l}")));
        }
        let start: usize = self.col_blocks[..l].iter().sum();
        self.values
            .block(0..self.values.rows(), start..start + self.col_blocks[l])
    }
}

/// `r` rows drawn uniformly within per-column `(min, max)` bounds.
pub fn generate_anchor(col_ranges: &[(f64, f64)], r: usize, seed: u64) -> Result<AnchorDataset> {
    if col_ranges.is_empty() {
        return Err(Error::Anchor("no column bounds given".into()));
    }
    if r == 0 {
        return Err(Error::Anchor("anchor needs at least one row".into()));
    }
    if let Some((j, &(lo, hi))) = col_ranges
        .iter()
        .enumerate()
        .find(|(_, &(lo, hi))| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(Error::Anchor(format!("invalid bounds ({lo}, {hi}) for column {j}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = col_ranges.len();
    let mut values = Vec::with_capacity(r * m);
    for _ in 0..r {
        for &(lo, hi) in col_ranges {
            let u: f64 = rng.random();
            values.push(lo + (hi - lo) * u);
        }
    }
    Ok(AnchorDataset {
        values: Matrix::new(r, m, values)?,
        col_blocks: vec![m],
    })
}

/// A party's reduced data and reduced anchor slice. The reduction function
/// itself never leaves the party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateRepresentation {
    pub party: (usize, usize),
    pub data_rep: Matrix,
    pub anchor_rep: Matrix,
    pub reduced_dim: usize,
}

/// Everything a party hands to the analyst.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyShare {
    pub representation: IntermediateRepresentation,
    pub treatments: Vec<bool>,
    pub outcomes: Vec<f64>,
}

pub fn make_intermediate(
    view: &PartyView,
    anchor_block: &Matrix,
    target_dim: usize,
) -> Result<IntermediateRepresentation> {
    let m_l = view.covariates.cols();
    if anchor_block.cols() != m_l {
        return Err(Error::Dimension(format!(
            "anchor block has {} columns, party ({}, {}) holds {m_l}",
            anchor_block.cols(),
            view.row_index,
            view.col_index
        )));
    }
    if target_dim == 0 || target_dim >= m_l {
        return Err(Error::Dimension(format!(
            "party ({}, {}): reduction must be strict, need 1 <= {target_dim} < {m_l}",
            view.row_index, view.col_index
        )));
    }
    let model = pca_fit(&view.covariates, target_dim)?;
    Ok(IntermediateRepresentation {
        party: (view.row_index, view.col_index),
        data_rep: pca_transform(&model, &view.covariates)?,
        anchor_rep: pca_transform(&model, anchor_block)?,
        reduced_dim: target_dim,
    })
}

/// User-side step: reduce the private block and package it with the labels.
pub fn share(view: &PartyView, anchor: &AnchorDataset, target_dim: usize) -> Result<PartyShare> {
    let block = anchor.column_block(view.col_index)?;
    Ok(PartyShare {
        representation: make_intermediate(view, &block, target_dim)?,
        treatments: view.treatments.clone(),
        outcomes: view.outcomes.clone(),
    })
}

/// Linear map `g_k` from row block `k`'s concatenated representation into the
/// collaborative space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationFunction {
    pub row_index: usize,
    pub matrix: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Integration {
    /// One map per row block, ascending `k`.
    pub functions: Vec<IntegrationFunction>,
    /// Common target basis `U1` (r x effective_dim).
    pub target: Matrix,
    pub singular_values: Vec<f64>,
    pub requested_dim: usize,
    /// Requested dimension capped at the concatenated width, the anchor size
    /// and the numerical rank of the anchor images.
    pub effective_dim: usize,
    /// `||anchor_k G_k - U1||_F` per row block.
    pub residuals: Vec<f64>,
}

impl Integration {
    pub fn function(&self, k: usize) -> Option<&IntegrationFunction> {
        self.functions.iter().find(|f| f.row_index == k)
    }
}

/// Groups representations by row block, each sorted by column block, and
/// checks that every row block supplies the same column blocks.
fn group_by_row_block<'a>(
    reps: impl Iterator<Item = &'a IntermediateRepresentation>,
) -> Result<BTreeMap<usize, Vec<&'a IntermediateRepresentation>>> {
    let mut groups: BTreeMap<usize, Vec<&IntermediateRepresentation>> = BTreeMap::new();
    for rep in reps {
        groups.entry(rep.party.0).or_default().push(rep);
    }
    if groups.is_empty() {
        return Err(Error::IncompleteCollaboration("no representations supplied".into()));
    }
    let mut expected: Option<Vec<usize>> = None;
    for (k, group) in groups.iter_mut() {
        group.sort_by_key(|r| r.party.1);
        let cols: Vec<usize> = group.iter().map(|r| r.party.1).collect();
        if cols.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::IncompleteCollaboration(format!(
                "row block {k} supplied a column block twice"
            )));
        }
        match &expected {
            None => expected = Some(cols),
            Some(e) if *e != cols => {
                return Err(Error::IncompleteCollaboration(format!(
                    "row block {k} supplies column blocks {cols:?}, expected {e:?}"
                )))
            }
            _ => {}
        }
    }
    Ok(groups)
}

fn concatenated_anchor(group: &[&IntermediateRepresentation]) -> Result<Matrix> {
    let parts: Vec<&Matrix> = group.iter().map(|r| &r.anchor_rep).collect();
    Matrix::hstack(&parts)
}

fn concatenated_data(group: &[&IntermediateRepresentation]) -> Result<Matrix> {
    let parts: Vec<&Matrix> = group.iter().map(|r| &r.data_rep).collect();
    Matrix::hstack(&parts).map_err(|e| Error::Assembly(e.to_string()))
}

/// Analyst-side fit of the integration maps from anchor images only.
pub fn fit_integration(
    intermediates: &[IntermediateRepresentation],
    collaborative_dim: usize,
) -> Result<Integration> {
    let groups = group_by_row_block(intermediates.iter())?;
    let anchors: Vec<(usize, Matrix)> = groups
        .iter()
        .map(|(k, g)| concatenated_anchor(g).map(|a| (*k, a)))
        .collect::<Result<_>>()?;
    let r = anchors[0].1.rows();
    if anchors.iter().any(|(_, a)| a.rows() != r) {
        return Err(Error::Dimension("anchor images have different row counts".into()));
    }
    let refs: Vec<&Matrix> = anchors.iter().map(|(_, a)| a).collect();
    let combined = Matrix::hstack(&refs)?;
    if collaborative_dim == 0 {
        return Err(Error::Dimension("collaborative dimension must be positive".into()));
    }
    // A scope narrower than the requested width keeps what it has.
    let svd = svd_truncated(&combined, collaborative_dim.min(combined.cols()).min(r))?;
    let target = svd.u;

    let mut functions = Vec::with_capacity(anchors.len());
    let mut residuals = Vec::with_capacity(anchors.len());
    for (k, anchor) in &anchors {
        let g = pseudoinverse(anchor).matmul(&target)?;
        residuals.push(anchor.matmul(&g)?.sub(&target)?.frobenius_norm());
        functions.push(IntegrationFunction {
            row_index: *k,
            matrix: g,
        });
    }
    Ok(Integration {
        functions,
        effective_dim: target.cols(),
        target,
        singular_values: svd.sigma,
        requested_dim: collaborative_dim,
        residuals,
    })
}

/// Analyst-side data for the downstream estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollaborativeRepresentation {
    pub values: Matrix,
    /// Subject counts per contributing row block, ascending `k`.
    pub row_blocks: Vec<usize>,
    pub treatments: Vec<bool>,
    pub outcomes: Vec<f64>,
}

/// Stacks `X~_k G_k` over row blocks, with treatments and outcomes in the same order.
pub fn assemble_collaborative(
    shares: &[PartyShare],
    integration: &Integration,
) -> Result<CollaborativeRepresentation> {
    let groups = group_by_row_block(shares.iter().map(|s| &s.representation))?;
    let mut blocks = Vec::with_capacity(groups.len());
    let mut row_blocks = Vec::with_capacity(groups.len());
    let mut treatments = Vec::new();
    let mut outcomes = Vec::new();
    for (k, group) in &groups {
        let func = integration.function(*k).ok_or_else(|| {
            Error::Assembly(format!("no integration function for row block {k}"))
        })?;
        let data = concatenated_data(group)?;
        if data.cols() != func.matrix.rows() {
            return Err(Error::Assembly(format!(
                "row block {k}: representation width {} vs integration input {}",
                data.cols(),
                func.matrix.rows()
            )));
        }
        blocks.push(data.matmul(&func.matrix)?);
        row_blocks.push(data.rows());

        let members: Vec<&PartyShare> = shares.iter().filter(|s| s.representation.party.0 == *k).collect();
        let first = members[0];
        if first.treatments.len() != data.rows() || first.outcomes.len() != data.rows() {
            return Err(Error::Assembly(format!("row block {k}: label length mismatch")));
        }
        if members
            .iter()
            .any(|s| s.treatments != first.treatments || s.outcomes != first.outcomes)
        {
            return Err(Error::Assembly(format!(
                "row block {k}: parties disagree on treatments or outcomes"
            )));
        }
        treatments.extend_from_slice(&first.treatments);
        outcomes.extend_from_slice(&first.outcomes);
    }
    let refs: Vec<&Matrix> = blocks.iter().collect();
    Ok(CollaborativeRepresentation {
        values: Matrix::vstack(&refs)?,
        row_blocks,
        treatments,
        outcomes,
    })
}

/// Runs both sides of the protocol for the parties in `scope`.
///
/// `intermediate_dims[l]` is the reduced width for parties in column block `l`.
pub fn run_protocol(
    data: &Dataset,
    spec: &PartitionSpec,
    scope: &CollaborationScope,
    anchor: &AnchorDataset,
    intermediate_dims: &[usize],
    collaborative_dim: usize,
) -> Result<(CollaborativeRepresentation, Integration)> {
    scope.validate(spec)?;
    if intermediate_dims.len() != spec.n_col_blocks() {
        return Err(Error::Dimension(format!(
            "{} intermediate dimensions for {} column blocks",
            intermediate_dims.len(),
            spec.n_col_blocks()
        )));
    }
    let anchor = anchor.clone().partitioned(spec)?;
    let views: Vec<PartyView> = partition(data, spec)?
        .into_iter()
        .filter(|v| scope.contains(v.row_index, v.col_index))
        .collect();
    let shares: Vec<PartyShare> = views
        .iter()
        .map(|v| share(v, &anchor, intermediate_dims[v.col_index]))
        .collect::<Result<_>>()?;
    drop(views);

    let reps: Vec<IntermediateRepresentation> =
        shares.iter().map(|s| s.representation.clone()).collect();
    let integration = fit_integration(&reps, collaborative_dim)?;
    let collaborative = assemble_collaborative(&shares, &integration)?;
    Ok((collaborative, integration))
}
