use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::model::{validate_instance, SampleSet, TaskInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseCategory {
    ReturnType,
    NormalInput,
    BoundaryValues,
    Functionality,
}

/// Externally produced execution result for one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecReport {
    pub instance_id: String,
    pub sample_index: usize,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_results: Option<BTreeMap<CaseCategory, bool>>,
}

/// Decodes a line-delimited JSON file; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| {
            Error::SchemaViolation(vec![Violation::new(
                format!("{}:{}", path.display(), idx + 1),
                e.to_string(),
            )])
        })?;
        out.push(record);
    }
    Ok(out)
}

/// One validated instance joined with its samples and, optionally, the
/// pass verdict of every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub instance: TaskInstance,
    pub samples: SampleSet,
    pub passed: Option<Vec<Option<bool>>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationSet {
    pub items: Vec<EvalItem>,
    pub has_exec_reports: bool,
}

impl EvaluationSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Joins in-memory records on instance id. Instances keep their input
/// order.
pub fn join(
    instances: Vec<TaskInstance>,
    sample_sets: Vec<SampleSet>,
    exec_reports: Option<Vec<ExecReport>>,
) -> Result<EvaluationSet> {
    let mut violations = Vec::new();
    let mut validated = Vec::with_capacity(instances.len());
    let mut seen = BTreeSet::new();
    for inst in instances {
        if !seen.insert(inst.id.clone()) {
            violations.push(Violation::new(format!("instance {}", inst.id), "duplicate id"));
            continue;
        }
        let id = inst.id.clone();
        match validate_instance(inst) {
            Ok(inst) => validated.push(inst),
            Err(Error::SchemaViolation(vs) | Error::MaskSentinelMismatch(vs)) => {
                violations.extend(
                    vs.into_iter()
                        .map(|v| Violation::new(format!("instance {id}.{}", v.field), v.rule)),
                );
            }
            Err(other) => return Err(other),
        }
    }

    let mut samples_by_id: HashMap<String, SampleSet> = HashMap::new();
    let mut orphans = BTreeSet::new();
    for set in sample_sets {
        if !seen.contains(&set.instance_id) {
            orphans.insert(set.instance_id.clone());
            continue;
        }
        if set.samples.is_empty() {
            violations.push(Violation::new(format!("samples {}", set.instance_id), "n must be >= 1"));
        }
        if samples_by_id.contains_key(&set.instance_id) {
            violations.push(Violation::new(format!("samples {}", set.instance_id), "duplicate sample set"));
            continue;
        }
        samples_by_id.insert(set.instance_id.clone(), set);
    }
    for inst in &validated {
        if !samples_by_id.contains_key(&inst.id) {
            orphans.insert(inst.id.clone());
        }
    }

    let has_exec_reports = exec_reports.is_some();
    let mut passed_by_id: HashMap<String, Vec<Option<bool>>> = HashMap::new();
    if let Some(reports) = exec_reports {
        for report in reports {
            let Some(set) = samples_by_id.get(&report.instance_id) else {
                orphans.insert(report.instance_id.clone());
                continue;
            };
            let field = format!("exec {}[{}]", report.instance_id, report.sample_index);
            if report.sample_index >= set.n() {
                violations.push(Violation::new(field, format!("sample_index must be < n = {}", set.n())));
                continue;
            }
            if let Some(cases) = &report.case_results {
                if cases.values().all(|&ok| ok) != report.passed {
                    violations.push(Violation::new(
                        field.clone(),
                        "passed must equal the conjunction of case_results",
                    ));
                }
            }
            let slots = passed_by_id
                .entry(report.instance_id.clone())
                .or_insert_with(|| vec![None; set.n()]);
            if slots[report.sample_index].replace(report.passed).is_some() {
                violations.push(Violation::new(field, "duplicate exec report"));
            }
        }
    }

    if !orphans.is_empty() {
        return Err(Error::JoinFailure(orphans.into_iter().collect()));
    }
    if !violations.is_empty() {
        return Err(Error::SchemaViolation(violations));
    }

    let items = validated
        .into_iter()
        .map(|instance| {
            let samples = samples_by_id.remove(&instance.id).expect("joined above");
            let passed = has_exec_reports.then(|| {
                passed_by_id
                    .remove(&instance.id)
                    .unwrap_or_else(|| vec![None; samples.n()])
            });
            EvalItem {
                instance,
                samples,
                passed,
            }
        })
        .collect();
    Ok(EvaluationSet {
        items,
        has_exec_reports,
    })
}

pub fn ingest(
    instances_path: &Path,
    samples_path: &Path,
    exec_reports_path: Option<&Path>,
) -> Result<EvaluationSet> {
    let instances = read_jsonl(instances_path)?;
    let samples = read_jsonl(samples_path)?;
    let reports = exec_reports_path.map(read_jsonl).transpose()?;
    join(instances, samples, reports)
}
