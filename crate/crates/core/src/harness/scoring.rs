use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::{EvalItem, EvaluationSet};
use super::normalize::normalize_generation;
use crate::datagen::MigrationCategory;
use crate::error::{Error, Result, Violation};
use crate::metrics::{
    block_line_average, cdc_check_in_context, cdc_check_with, em_block, em_token, estimate_at_k,
    ism_line, pearson, pm_line, score_at_k, CdcOptions, LineMetric,
};
use crate::model::{Granularity, Metric, ScoreVector, Task, TaskInstance};
use crate::syntax::check_syntax;
use crate::text::dedent;

/// Instance attribute used to partition aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    DataSource,
    LifecycleTag,
    Year,
    Pattern,
    Direction,
    Granularity,
    Task,
}

impl GroupKey {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupKey::DataSource => "data_source",
            GroupKey::LifecycleTag => "lifecycle_tag",
            GroupKey::Year => "year",
            GroupKey::Pattern => "pattern",
            GroupKey::Direction => "direction",
            GroupKey::Granularity => "granularity",
            GroupKey::Task => "task",
        }
    }

    pub fn value_of(self, inst: &TaskInstance) -> String {
        let category = || {
            inst.target_version
                .as_ref()
                .and_then(|t| MigrationCategory::between(&inst.source_version, t))
        };
        match self {
            GroupKey::DataSource => snake_name(&inst.data_source),
            GroupKey::LifecycleTag => inst.lifecycle_tag.map_or("none".into(), |t| snake_name(&t)),
            GroupKey::Year => inst
                .release_date
                .map_or("unknown".into(), |d| d.year().to_string()),
            GroupKey::Pattern => category().map_or("none".into(), |c| c.pattern.as_str().into()),
            GroupKey::Direction => category().map_or("none".into(), |c| c.direction.as_str().into()),
            GroupKey::Granularity => inst.granularity.as_str().into(),
            GroupKey::Task => snake_name(&inst.task),
        }
    }
}

fn snake_name<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            GroupKey::DataSource,
            GroupKey::LifecycleTag,
            GroupKey::Year,
            GroupKey::Pattern,
            GroupKey::Direction,
            GroupKey::Granularity,
            GroupKey::Task,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::InvalidArgs(format!("unknown group key {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringConfig {
    pub metrics: Vec<Metric>,
    pub ks: Vec<usize>,
    pub group_by: Vec<GroupKey>,
    pub workers: usize,
    pub cdc: CdcOptions,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            metrics: vec![Metric::Em, Metric::Ism, Metric::Pm, Metric::Cdc],
            ks: vec![1],
            group_by: Vec::new(),
            workers: 1,
            cdc: CdcOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtKValue {
    pub metric: Metric,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScores {
    pub instance_id: String,
    pub granularity: Granularity,
    pub vectors: Vec<ScoreVector>,
    pub at_k: Vec<AtKValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl InstanceScores {
    pub fn value(&self, metric: Metric, k: usize) -> Option<f64> {
        self.at_k
            .iter()
            .find(|a| a.metric == metric && a.k == k)
            .map(|a| a.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub group_key: String,
    pub metric: Metric,
    pub k: usize,
    pub value: f64,
    pub instance_count: usize,
}

/// Pearson agreement of a metric with pass over a series of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub scope: String,
    pub metric: Metric,
    pub against: Metric,
    pub k: usize,
    /// `None` when either series is constant or has fewer than 2 points.
    pub value: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringOutput {
    pub instances: Vec<InstanceScores>,
    pub aggregates: Vec<AggregateRow>,
    pub correlations: Vec<CorrelationRow>,
}

/// How CDC sees an instance's reference.
enum CdcMode {
    /// The dedented reference parses on its own.
    Snippet(String),
    /// The reference only parses inside its masked context.
    InContext { masked: String, reference_program: String },
}

fn cdc_mode(inst: &TaskInstance) -> Result<CdcMode> {
    let snippet = dedent(&inst.reference);
    if check_syntax(&snippet) {
        return Ok(CdcMode::Snippet(snippet));
    }
    if let (Some(masked), Some(program)) = (&inst.masked_code, inst.restored_code()) {
        if check_syntax(&program) {
            return Ok(CdcMode::InContext {
                masked: masked.clone(),
                reference_program: program,
            });
        }
    }
    Err(Error::SchemaViolation(vec![Violation::new(
        format!("instance {}.reference", inst.id),
        "must be syntactically valid alone or inside its masked code",
    )]))
}

fn cdc_sample(inst: &TaskInstance, mode: &CdcMode, generated: &str, options: CdcOptions) -> Result<bool> {
    let verdict = match mode {
        CdcMode::Snippet(reference) => cdc_check_with(&dedent(generated), reference, &inst.core_token, options)?,
        CdcMode::InContext { masked, reference_program } => {
            let program = masked.replacen(inst.granularity.sentinel(), generated, 1);
            cdc_check_in_context(generated, &program, reference_program, &inst.core_token, options)?
        }
    };
    Ok(verdict.overall)
}

fn em_sample(inst: &TaskInstance, generated: &str) -> f64 {
    match (inst.task, inst.granularity) {
        (Task::Vscc, Granularity::Token) => em_token(generated, &inst.reference),
        _ => em_block(generated, &inst.core_token),
    }
}

fn line_metric_sample(inst: &TaskInstance, generated: &str, metric: LineMetric) -> f64 {
    match (inst.granularity, metric) {
        (Granularity::Token, LineMetric::Ism) => ism_line(generated, &inst.reference),
        (Granularity::Token, LineMetric::Pm) => pm_line(generated, &inst.reference),
        _ => block_line_average(generated, &inst.reference, metric),
    }
}

fn score_instance(item: &EvalItem, metrics: &[Metric], ks: &[usize], options: CdcOptions) -> Result<InstanceScores> {
    let inst = &item.instance;
    let mut warnings = Vec::new();
    let normalized: Vec<Option<String>> = item
        .samples
        .samples
        .iter()
        .enumerate()
        .map(|(i, raw)| match normalize_generation(raw, inst.granularity) {
            Ok(n) => {
                warnings.extend(n.warnings.into_iter().map(|w| format!("sample {i}: {w}")));
                Some(n.text)
            }
            Err(_) => {
                warnings.push(format!("sample {i}: empty after normalization"));
                None
            }
        })
        .collect();

    let needs_em = metrics.iter().any(|m| matches!(m, Metric::Em | Metric::Cdc));
    let em: Vec<f64> = if needs_em {
        normalized
            .iter()
            .map(|s| s.as_deref().map_or(0.0, |g| em_sample(inst, g)))
            .collect()
    } else {
        Vec::new()
    };

    let mut vectors = Vec::with_capacity(metrics.len());
    for &metric in metrics {
        let per_sample: Vec<f64> = match metric {
            Metric::Em => em.clone(),
            Metric::Ism | Metric::Pm => {
                let line = if metric == Metric::Ism { LineMetric::Ism } else { LineMetric::Pm };
                normalized
                    .iter()
                    .map(|s| s.as_deref().map_or(0.0, |g| line_metric_sample(inst, g, line)))
                    .collect()
            }
            Metric::Cdc => {
                let mode = cdc_mode(inst)?;
                // CDC additionally requires EM, which is a no-op above token
                // level and keeps token-level CDC from exceeding EM.
                normalized
                    .iter()
                    .zip(&em)
                    .map(|(s, &em)| match s {
                        Some(g) if em == 1.0 => cdc_sample(inst, &mode, g, options).map(f64::from),
                        _ => Ok(0.0),
                    })
                    .collect::<Result<_>>()?
            }
            Metric::Pass => {
                let slots = item.passed.as_ref().ok_or_else(|| {
                    Error::MissingExecReports(format!("no exec reports for instance {}", inst.id))
                })?;
                slots
                    .iter()
                    .enumerate()
                    .map(|(i, slot)| {
                        slot.map(|p| if p { 1.0 } else { 0.0 }).ok_or_else(|| {
                            Error::MissingExecReports(format!("instance {} sample {i}", inst.id))
                        })
                    })
                    .collect::<Result<_>>()?
            }
        };
        vectors.push(ScoreVector::new(inst.id.clone(), metric, per_sample));
    }

    let mut at_k = Vec::with_capacity(metrics.len() * ks.len());
    for v in &vectors {
        for &k in ks {
            let value = if v.metric.is_binary() {
                estimate_at_k(v.n(), v.correct_count, k)?
            } else {
                score_at_k(&v.per_sample, k)?
            };
            at_k.push(AtKValue { metric: v.metric, k, value });
        }
    }
    Ok(InstanceScores {
        instance_id: inst.id.clone(),
        granularity: inst.granularity,
        vectors,
        at_k,
        warnings,
    })
}

fn validate_config(set: &EvaluationSet, config: &ScoringConfig) -> Result<(Vec<Metric>, Vec<usize>)> {
    let metrics: Vec<Metric> = config.metrics.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let ks: Vec<usize> = config.ks.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if metrics.is_empty() {
        return Err(Error::InvalidArgs("no metrics selected".into()));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidArgs("k values must be >= 1".into()));
    }
    if metrics.contains(&Metric::Pass) && !set.has_exec_reports {
        return Err(Error::MissingExecReports("pass requested without an exec reports file".into()));
    }
    let max_k = *ks.last().expect("non-empty");
    if let Some(item) = set.items.iter().find(|i| i.samples.n() < max_k) {
        return Err(Error::KExceedsN {
            instance_id: item.instance.id.clone(),
            k: max_k,
            n: item.samples.n(),
        });
    }
    Ok((metrics, ks))
}

/// Scores every instance on a pool of `config.workers` threads, then
/// aggregates sequentially in input order, so results do not depend on
/// the worker count.
pub fn run_scoring(set: &EvaluationSet, config: &ScoringConfig) -> Result<ScoringOutput> {
    let (metrics, ks) = validate_config(set, config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgs(format!("cannot build worker pool: {e}")))?;
    let results: Vec<Result<InstanceScores>> = pool.install(|| {
        set.items
            .par_iter()
            .map(|item| score_instance(item, &metrics, &ks, config.cdc))
            .collect()
    });
    let instances = results.into_iter().collect::<Result<Vec<_>>>()?;

    let aggregates = aggregate(set, &instances, &metrics, &ks, &config.group_by);
    let correlations = instance_correlations(set, &instances, &metrics, &ks);
    Ok(ScoringOutput {
        instances,
        aggregates,
        correlations,
    })
}

fn aggregate(
    set: &EvaluationSet,
    scores: &[InstanceScores],
    metrics: &[Metric],
    ks: &[usize],
    group_by: &[GroupKey],
) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    groups.insert("all".into(), (0..scores.len()).collect());
    for &key in group_by {
        for (idx, item) in set.items.iter().enumerate() {
            groups
                .entry(format!("{key}={}", key.value_of(&item.instance)))
                .or_default()
                .push(idx);
        }
    }
    if scores.is_empty() {
        return Vec::new();
    }

    let mut rows = Vec::new();
    for (group_key, members) in &groups {
        for &metric in metrics {
            for &k in ks {
                let sum: f64 = members
                    .iter()
                    .map(|&i| scores[i].value(metric, k).unwrap_or(0.0))
                    .sum();
                rows.push(AggregateRow {
                    group_key: group_key.clone(),
                    metric,
                    k,
                    value: sum / members.len() as f64,
                    instance_count: members.len(),
                });
            }
        }
    }
    sort_rows(&mut rows);
    rows
}

pub(crate) fn sort_rows(rows: &mut [AggregateRow]) {
    rows.sort_by(|a, b| {
        (a.group_key.as_str(), a.metric.as_str(), a.k).cmp(&(b.group_key.as_str(), b.metric.as_str(), b.k))
    });
}

fn correlation(scope: String, metric: Metric, k: usize, xs: &[f64], ys: &[f64]) -> CorrelationRow {
    CorrelationRow {
        scope,
        metric,
        against: Metric::Pass,
        k,
        value: pearson(xs, ys).ok(),
        points: xs.len(),
    }
}

/// Per granularity, correlates each static metric's per-instance @k with
/// pass@k at the smallest requested k.
fn instance_correlations(
    set: &EvaluationSet,
    scores: &[InstanceScores],
    metrics: &[Metric],
    ks: &[usize],
) -> Vec<CorrelationRow> {
    if !metrics.contains(&Metric::Pass) {
        return Vec::new();
    }
    let k = ks[0];
    let mut rows = Vec::new();
    for granularity in Granularity::ALL {
        let members: Vec<&InstanceScores> = set
            .items
            .iter()
            .zip(scores)
            .filter(|(item, _)| item.instance.granularity == granularity)
            .map(|(_, s)| s)
            .collect();
        if members.is_empty() {
            continue;
        }
        let pass: Vec<f64> = members.iter().map(|s| s.value(Metric::Pass, k).unwrap_or(0.0)).collect();
        for &metric in metrics.iter().filter(|&&m| m != Metric::Pass) {
            let xs: Vec<f64> = members.iter().map(|s| s.value(metric, k).unwrap_or(0.0)).collect();
            rows.push(correlation(format!("granularity={granularity}"), metric, k, &xs, &pass));
        }
    }
    rows
}

/// Correlates aggregate metric values with pass across several scoring
/// runs (one point per run), for every (group, k) that all runs report.
pub fn correlate_runs(runs: &[ScoringOutput]) -> Vec<CorrelationRow> {
    if runs.len() < 2 {
        return Vec::new();
    }
    let lookup: Vec<BTreeMap<(&str, Metric, usize), f64>> = runs
        .iter()
        .map(|r| {
            r.aggregates
                .iter()
                .map(|a| ((a.group_key.as_str(), a.metric, a.k), a.value))
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for key in lookup[0].keys() {
        let (group, metric, k) = *key;
        if metric == Metric::Pass {
            continue;
        }
        let pass_key = (group, Metric::Pass, k);
        let points: Option<Vec<(f64, f64)>> = lookup
            .iter()
            .map(|l| Some((*l.get(key)?, *l.get(&pass_key)?)))
            .collect();
        if let Some(points) = points {
            let (xs, ys): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
            rows.push(correlation(group.to_string(), metric, k, &xs, &ys));
        }
    }
    rows
}
