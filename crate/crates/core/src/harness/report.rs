use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::pipeline::{read_results, ResultRow};
use crate::datasets::Concept;
use crate::error::{Error, Result};
use crate::features::FeatureKind;

const MISSING: &str = "—";

/// Test metric of the selected probe per (representation, concept).
#[derive(Clone, Debug, PartialEq)]
pub struct ReportTable {
    pub columns: Vec<Concept>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl ReportTable {
    /// Builds the table from result rows; only `selected` rows count, and a
    /// later row for the same cell replaces an earlier one. Columns are the
    /// concepts present, in report order; handcrafted features come first.
    pub fn from_rows(rows: &[ResultRow]) -> Self {
        let mut cells: BTreeMap<(String, Concept), f64> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.selected) {
            cells.insert((r.representation.clone(), r.concept), r.test_metric);
        }
        let columns: Vec<Concept> = Concept::REPORT_ORDER
            .into_iter()
            .filter(|c| cells.keys().any(|(_, k)| k == c))
            .collect();
        let mut names: Vec<String> = cells.keys().map(|(n, _)| n.clone()).collect();
        names.dedup();
        let rank = |name: &str| {
            FeatureKind::HANDCRAFTED
                .iter()
                .position(|k| k.display_name() == name)
                .unwrap_or(FeatureKind::HANDCRAFTED.len())
        };
        names.sort_by(|a, b| rank(a).cmp(&rank(b)).then(a.cmp(b)));
        let rows = names
            .into_iter()
            .map(|name| {
                let values = columns
                    .iter()
                    .map(|c| cells.get(&(name.clone(), *c)).copied())
                    .collect();
                (name, values)
            })
            .collect();
        ReportTable { columns, rows }
    }

    /// Reads every `*.csv` under `dir` (sorted by file name).
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::Validation(format!("no result CSV files in {}", dir.display())));
        }
        let mut rows = Vec::new();
        for p in paths {
            rows.extend(read_results(&p)?);
        }
        Ok(Self::from_rows(&rows))
    }

    /// Mean over present cells and the number of present cells.
    pub fn average(values: &[Option<f64>]) -> (Option<f64>, usize) {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        if present.is_empty() {
            return (None, 0);
        }
        (Some(present.iter().sum::<f64>() / present.len() as f64), present.len())
    }

    fn cell(v: Option<f64>) -> String {
        v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.3}"))
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let mut header = vec!["Representation".to_string()];
        header.extend(self.columns.iter().map(|c| c.display_name().to_string()));
        header.push("Average".into());
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(out, "|{}", " --- |".repeat(header.len()));
        let mut notes = Vec::new();
        for (name, values) in &self.rows {
            let (avg, n) = Self::average(values);
            let mut line = vec![name.clone()];
            line.extend(values.iter().map(|&v| Self::cell(v)));
            let mut avg_cell = Self::cell(avg);
            if n < values.len() && n > 0 {
                notes.push(format!("{name}: average over {n} of {} concepts.", values.len()));
                avg_cell.push_str(&format!("[^{}]", notes.len()));
            }
            line.push(avg_cell);
            let _ = writeln!(out, "| {} |", line.join(" | "));
        }
        if !notes.is_empty() {
            out.push('\n');
            for (i, note) in notes.iter().enumerate() {
                let _ = writeln!(out, "[^{}]: {note}", i + 1);
            }
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["representation".to_string()];
        header.extend(self.columns.iter().map(|c| c.name().to_string()));
        header.extend(["average".to_string(), "n_present".to_string()]);
        w.write_record(&header)?;
        for (name, values) in &self.rows {
            let (avg, n) = Self::average(values);
            let mut line = vec![name.clone()];
            line.extend(values.iter().map(|&v| Self::cell(v)));
            line.push(Self::cell(avg));
            line.push(n.to_string());
            w.write_record(&line)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}
