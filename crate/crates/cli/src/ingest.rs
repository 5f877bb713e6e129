//! CSV input: comma-separated, one header row, UTF-8, decimal point.

use std::fs::File;
use std::path::Path;

use dcqe_core::datamodel::{Dataset, PartitionSpec};
use dcqe_core::Matrix;

use crate::config::{RunConfig, RunSection};
use crate::error::{CliError, CliResult};

/// Which columns to take from a file.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    /// `None` takes every column not named below, in file order.
    pub covariates: Option<Vec<String>>,
    pub treatment: Option<String>,
    pub outcome: Option<String>,
    pub id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub n_rows: usize,
    pub covariate_names: Vec<String>,
    /// `None` when the file holds no covariate columns.
    pub covariates: Option<Matrix>,
    pub treatments: Option<Vec<bool>>,
    pub outcomes: Option<Vec<f64>>,
    pub ids: Option<Vec<String>>,
}

fn ingest_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Ingest(format!("{}: {msg}", path.display()))
}

fn cell_err(path: &Path, row: usize, column: &str, msg: impl std::fmt::Display) -> CliError {
    // Rows count data records from 0; line numbers include the header.
    ingest_err(path, format!("row {row} (line {}), column {column:?}: {msg}", row + 2))
}

pub fn read_table(path: &Path, schema: &Schema) -> CliResult<Table> {
    let file = File::open(path).map_err(|e| ingest_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| ingest_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| -> CliResult<usize> {
        let mut hits = header.iter().enumerate().filter(|(_, h)| *h == name);
        match (hits.next(), hits.next()) {
            (Some((j, _)), None) => Ok(j),
            (Some(_), Some(_)) => Err(ingest_err(path, format!("column {name:?} appears twice in the header"))),
            (None, _) => Err(ingest_err(path, format!("missing column {name:?}"))),
        }
    };
    let treat_col = schema.treatment.as_deref().map(find).transpose()?;
    let out_col = schema.outcome.as_deref().map(find).transpose()?;
    let id_col = schema.id.as_deref().map(find).transpose()?;
    let reserved = [treat_col, out_col, id_col];
    let cov_cols: Vec<usize> = match &schema.covariates {
        Some(names) => names.iter().map(|n| find(n)).collect::<CliResult<_>>()?,
        None => (0..header.len()).filter(|j| !reserved.contains(&Some(*j))).collect(),
    };
    if let Some(j) = cov_cols.iter().find(|j| reserved.contains(&Some(**j))) {
        return Err(ingest_err(path, format!("column {:?} is both a covariate and a label", header[*j])));
    }

    let mut values = Vec::new();
    let mut treatments = treat_col.map(|_| Vec::new());
    let mut outcomes = out_col.map(|_| Vec::new());
    let mut ids = id_col.map(|_| Vec::new());
    let mut n = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ingest_err(path, format!("row {row}: {e}")))?;
        let cell = |j: usize| -> CliResult<&str> {
            let s = record.get(j).unwrap_or("");
            if s.trim().is_empty() {
                Err(cell_err(path, row, &header[j], "missing value"))
            } else {
                Ok(s)
            }
        };
        let number = |j: usize| -> CliResult<f64> {
            let s = cell(j)?;
            match s.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(cell_err(path, row, &header[j], format!("non-finite value {s:?}"))),
                Err(_) => Err(cell_err(path, row, &header[j], format!("not a number: {s:?}"))),
            }
        };
        for &j in &cov_cols {
            values.push(number(j)?);
        }
        if let (Some(j), Some(t)) = (treat_col, treatments.as_mut()) {
            t.push(match cell(j)? {
                "0" => false,
                "1" => true,
                s => return Err(cell_err(path, row, &header[j], format!("treatment must be \"0\" or \"1\", found {s:?}"))),
            });
        }
        if let (Some(j), Some(o)) = (out_col, outcomes.as_mut()) {
            o.push(number(j)?);
        }
        if let (Some(j), Some(v)) = (id_col, ids.as_mut()) {
            v.push(cell(j)?.to_string());
        }
        n += 1;
    }
    if n < 2 {
        return Err(ingest_err(path, format!("{n} data rows; at least 2 are required")));
    }
    Ok(Table {
        n_rows: n,
        covariate_names: cov_cols.iter().map(|&j| header[j].clone()).collect(),
        covariates: if cov_cols.is_empty() {
            None
        } else {
            Some(Matrix::new(n, cov_cols.len(), values).map_err(|e| ingest_err(path, e))?)
        },
        treatments,
        outcomes,
        ids,
    })
}

/// One file holding covariates, treatment and outcome for every subject.
pub fn ingest_csv(path: &Path, schema: &Schema) -> CliResult<Dataset> {
    if schema.treatment.is_none() || schema.outcome.is_none() {
        return Err(ingest_err(path, "schema needs treatment and outcome columns"));
    }
    let t = read_table(path, schema)?;
    let x = t.covariates.ok_or_else(|| ingest_err(path, "no covariate columns"))?;
    Dataset::new(x, t.treatments.unwrap(), t.outcomes.unwrap()).map_err(|e| ingest_err(path, e))
}

fn check_ids(
    path: &Path,
    ids: &Option<Vec<String>>,
    reference: &Option<(String, Vec<String>)>,
) -> CliResult<()> {
    let (Some(ids), Some((ref_path, want))) = (ids, reference) else {
        return Ok(());
    };
    if ids.len() != want.len() {
        return Err(ingest_err(path, format!("{} rows but {ref_path} has {}", ids.len(), want.len())));
    }
    if let Some(i) = (0..ids.len()).find(|&i| ids[i] != want[i]) {
        return Err(ingest_err(
            path,
            format!("row {i} (line {}): id {:?} does not match {:?} in {ref_path}", i + 2, ids[i], want[i]),
        ));
    }
    Ok(())
}

/// Reads the party grid of a `run` config and stacks it into one dataset.
///
/// Every file of a row block must list the same subjects in the same order;
/// with an id column this is checked row by row.
pub fn ingest_parties(cfg: &RunConfig) -> CliResult<(Dataset, PartitionSpec)> {
    let run: &RunSection = &cfg.run;
    let id = run.id_column.clone();
    let mut col_widths: Option<Vec<usize>> = None;
    let mut row_sizes = Vec::new();
    let mut blocks: Vec<Matrix> = Vec::new();
    let mut treatments = Vec::new();
    let mut outcomes = Vec::new();

    for (k, row_files) in run.party_files.iter().enumerate() {
        let label_path = cfg.resolve(&run.label_files[k]);
        let labels = read_table(
            &label_path,
            &Schema {
                covariates: Some(Vec::new()),
                treatment: Some(run.treatment_column.clone()),
                outcome: Some(run.outcome_column.clone()),
                id: id.clone(),
            },
        )?;
        let n_k = labels.n_rows;
        let reference = labels.ids.clone().map(|v| (label_path.display().to_string(), v));
        let mut parts = Vec::new();
        for (l, p) in row_files.iter().enumerate() {
            let path = cfg.resolve(p);
            let t = read_table(&path, &Schema { id: id.clone(), ..Schema::default() })?;
            if t.n_rows != n_k {
                return Err(ingest_err(
                    &path,
                    format!("{} rows but {} has {n_k}", t.n_rows, label_path.display()),
                ));
            }
            check_ids(&path, &t.ids, &reference)?;
            let x = t.covariates.ok_or_else(|| ingest_err(&path, "no covariate columns"))?;
            if let Some(w) = &col_widths {
                if w[l] != x.cols() {
                    return Err(ingest_err(
                        &path,
                        format!("{} covariates; row block 0 has {} in column block {l}", x.cols(), w[l]),
                    ));
                }
            }
            parts.push(x);
        }
        if col_widths.is_none() {
            col_widths = Some(parts.iter().map(Matrix::cols).collect());
        }
        let refs: Vec<&Matrix> = parts.iter().collect();
        blocks.push(Matrix::hstack(&refs).map_err(|e| CliError::Ingest(e.to_string()))?);
        treatments.extend(labels.treatments.unwrap());
        outcomes.extend(labels.outcomes.unwrap());
        row_sizes.push(n_k);
    }
    let refs: Vec<&Matrix> = blocks.iter().collect();
    let x = Matrix::vstack(&refs).map_err(|e| CliError::Ingest(e.to_string()))?;
    let data = Dataset::new(x, treatments, outcomes).map_err(|e| CliError::Ingest(e.to_string()))?;
    let spec = PartitionSpec::new(row_sizes, col_widths.unwrap_or_default())
        .map_err(|e| CliError::Ingest(e.to_string()))?;
    Ok((data, spec))
}

/// Writes a dataset in the input dialect; floats use the shortest
/// representation that parses back to the same value.
pub fn write_dataset_csv(
    path: &Path,
    data: &Dataset,
    covariate_names: &[String],
    treatment: &str,
    outcome: &str,
) -> CliResult<()> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header: Vec<&str> = covariate_names.iter().map(String::as_str).collect();
    header.extend([treatment, outcome]);
    w.write_record(&header).map_err(io)?;
    for i in 0..data.n_subjects() {
        let mut rec: Vec<String> = data.covariates().row(i).iter().map(f64::to_string).collect();
        rec.push(if data.treatments()[i] { "1" } else { "0" }.into());
        rec.push(data.outcomes()[i].to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
