use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scoring::{correlate_runs, ScoringOutput};
use crate::error::{Error, Result};
use crate::model::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidArgs(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    Aggregate,
    Correlation,
}

/// One flat report line. Correlation rows carry the scope in `group_key`
/// and the number of points in `count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run: String,
    pub table: Table,
    pub group_key: String,
    pub metric: Metric,
    pub k: usize,
    pub value: Option<f64>,
    pub count: usize,
}

/// Label used for rows computed across all runs.
pub const ACROSS_RUNS: &str = "*";

/// Flattens labelled scoring runs into sorted report rows. With more than
/// one run, aggregate metrics are also correlated with pass across runs.
pub fn build_report(runs: &[(String, ScoringOutput)]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for (label, out) in runs {
        rows.extend(out.aggregates.iter().map(|a| ReportRow {
            run: label.clone(),
            table: Table::Aggregate,
            group_key: a.group_key.clone(),
            metric: a.metric,
            k: a.k,
            value: Some(a.value),
            count: a.instance_count,
        }));
        rows.extend(out.correlations.iter().map(|c| ReportRow {
            run: label.clone(),
            table: Table::Correlation,
            group_key: c.scope.clone(),
            metric: c.metric,
            k: c.k,
            value: c.value,
            count: c.points,
        }));
    }
    let outputs: Vec<ScoringOutput> = runs.iter().map(|(_, o)| o.clone()).collect();
    rows.extend(correlate_runs(&outputs).into_iter().map(|c| ReportRow {
        run: ACROSS_RUNS.into(),
        table: Table::Correlation,
        group_key: c.scope,
        metric: c.metric,
        k: c.k,
        value: c.value,
        count: c.points,
    }));
    rows.sort_by(|a, b| {
        (a.run.as_str(), a.table, a.group_key.as_str(), a.metric.as_str(), a.k)
            .cmp(&(b.run.as_str(), b.table, b.group_key.as_str(), b.metric.as_str(), b.k))
    });
    rows
}

/// Renders rows deterministically. Floats use the shortest representation
/// that round-trips.
pub fn render_report(rows: &[ReportRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(rows).expect("rows serialize");
            text.push('\n');
            Ok(text)
        }
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(["run", "table", "group_key", "metric", "k", "value", "count"])
                .expect("in-memory write");
            for r in rows {
                let table = match r.table {
                    Table::Aggregate => "aggregate",
                    Table::Correlation => "correlation",
                };
                let value = r.value.map(|v| v.to_string()).unwrap_or_default();
                writer
                    .write_record([
                        r.run.as_str(),
                        table,
                        r.group_key.as_str(),
                        r.metric.as_str(),
                        &r.k.to_string(),
                        &value,
                        &r.count.to_string(),
                    ])
                    .expect("in-memory write");
            }
            let bytes = writer.into_inner().expect("in-memory flush");
            Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
        }
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_scoring_output(path: &Path) -> Result<ScoringOutput> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::SchemaViolation(vec![crate::error::Violation::new(path.display().to_string(), e.to_string())])
    })
}
