//! Evaluation harness: ingest, normalize, score and report.

pub mod ingest;
pub mod normalize;
pub mod report;
pub mod scoring;

pub use ingest::{ingest, join, read_jsonl, CaseCategory, EvalItem, EvaluationSet, ExecReport};
pub use normalize::{normalize_generation, Normalized};
pub use report::{build_report, render_report, ReportFormat, ReportRow, Table};
pub use scoring::{
    correlate_runs, run_scoring, AggregateRow, AtKValue, CorrelationRow, GroupKey, InstanceScores,
    ScoringConfig, ScoringOutput,
};
