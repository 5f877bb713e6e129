use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dcqe_core::experiments::{ResultTable, ScenarioResult, Summary};
use serde::{Deserialize, Serialize};

use crate::config::{Command, Format, RunConfig};
use crate::error::{CliError, CliResult};

/// Everything a report file carries: the results plus what produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Command,
    pub seed: u64,
    pub config: RunConfig,
    pub table: ResultTable,
}

const CSV_COLUMNS: [&str; 21] = [
    "estimator",
    "collaboration",
    "analysis",
    "method",
    "estimand",
    "point_estimate",
    "mean",
    "se",
    "benchmark",
    "gap",
    "inconsistency_true_mean",
    "inconsistency_true_se",
    "inconsistency_true_point",
    "inconsistency_ca_mean",
    "inconsistency_ca_se",
    "inconsistency_ca_point",
    "masmd_mean",
    "masmd_se",
    "masmd_point",
    "collaborative_dim",
    "bootstrap",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn summary_cells(s: Option<&Summary>) -> [String; 3] {
    [opt(s.map(|s| s.mean)), opt(s.map(|s| s.se)), opt(s.map(|s| s.point))]
}

fn csv_row(r: &ScenarioResult) -> Vec<String> {
    let mut row = vec![
        r.estimator_label(),
        r.collaboration.clone(),
        r.analysis.to_string(),
        r.method.to_string(),
        r.estimand.to_string(),
        r.point_estimate.to_string(),
        r.mean.to_string(),
        r.standard_error.to_string(),
        opt(r.benchmark),
        opt(r.gap),
    ];
    row.extend(summary_cells(r.inconsistency_with_true.as_ref()));
    row.extend(summary_cells(Some(&r.inconsistency_with_ca)));
    row.extend(summary_cells(Some(&r.masmd)));
    row.push(opt(r.collaborative_dim));
    row.push(r.bootstrap.estimates.len().to_string());
    row
}

impl Report {
    fn preamble(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# dcqe {}", self.command).unwrap();
        writeln!(s, "# seed = {}", self.seed).unwrap();
        writeln!(s, "# {} ({}, B = {})", self.table.title, self.table.estimand, self.table.bootstrap).unwrap();
        for line in self.config.to_toml().lines() {
            if line.is_empty() {
                s.push_str("#\n");
            } else {
                writeln!(s, "# {line}").unwrap();
            }
        }
        s
    }

    /// Commented config lines, a header, then one full-precision line per row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).unwrap();
        for r in &self.table.rows {
            w.write_record(csv_row(r)).unwrap();
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
        self.preamble() + &body
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> CliResult<Report> {
        serde_json::from_str(text).map_err(|e| CliError::Ingest(format!("report: {e}")))
    }

    /// Table with "mean (se)" cells to four decimals.
    pub fn to_txt(&self) -> String {
        let t = &self.table;
        let fmt = |v: f64| format!("{v:.4}");
        let ms = |s: &Summary| format!("{:.4} ({:.4})", s.mean, s.se);
        let header = [
            "Estimator".to_string(),
            "Collaboration".to_string(),
            t.estimand.to_string(),
            "Gap".to_string(),
            "InconsistencyTrue".to_string(),
            "InconsistencyCA".to_string(),
            "MASMD".to_string(),
        ];
        let mut cells = vec![header];
        for r in &t.rows {
            cells.push([
                r.estimator_label(),
                r.collaboration.clone(),
                format!("{:.4} ({:.4})", r.mean, r.standard_error),
                r.gap.map(fmt).unwrap_or_else(|| "-".into()),
                r.inconsistency_with_true.as_ref().map(ms).unwrap_or_else(|| "-".into()),
                ms(&r.inconsistency_with_ca),
                ms(&r.masmd),
            ]);
        }
        let widths: Vec<usize> = (0..7).map(|j| cells.iter().map(|c| c[j].len()).max().unwrap()).collect();
        let mut s = String::new();
        let bench = t.benchmark.map(|b| format!(", benchmark {b}")).unwrap_or_default();
        writeln!(s, "{} ({}{bench}, B = {}, seed {})", t.title, t.estimand, t.bootstrap, self.seed).unwrap();
        for row in &cells {
            let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            writeln!(s, "{}", line.join("  ").trim_end()).unwrap();
        }
        s
    }

    /// Long format: one line per bootstrap replicate.
    pub fn bootstrap_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["estimator", "collaboration", "replicate", "estimate"]).unwrap();
        for r in &self.table.rows {
            let label = r.estimator_label();
            for (b, v) in r.bootstrap.estimates.iter().enumerate() {
                w.write_record([label.as_str(), &r.collaboration, &b.to_string(), &v.to_string()])
                    .unwrap();
            }
        }
        self.preamble() + &String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }

    /// Writes the requested formats into `dir`, returning the paths written.
    pub fn write(&self, dir: &Path, formats: &[Format], sidecar: bool) -> CliResult<Vec<PathBuf>> {
        if self.table.rows.is_empty() {
            return Err(CliError::Io("no results to write".into()));
        }
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let mut files: Vec<(&str, String)> = Vec::new();
        for f in formats {
            files.push(match f {
                Format::Csv => ("results.csv", self.to_csv()),
                Format::Json => ("results.json", self.to_json()),
                Format::Txt => ("results.txt", self.to_txt()),
            });
        }
        if sidecar {
            files.push(("bootstrap.csv", self.bootstrap_csv()));
        }
        let mut written = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}
