//! Domain types, version algebra and instance validation.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result, Violation};
use crate::text::is_identifier;

/// A library version string, parsed leniently into numeric components and
/// a residual suffix.
///
/// Equality, ordering and hashing follow [`compare_versions`]: `2.0` and
/// `2.0.0` are the same version even though `raw` differs.
#[derive(Debug, Clone)]
pub struct VersionId {
    raw: String,
    components: Vec<u64>,
    suffix: String,
}

impl VersionId {
    pub fn parse(raw: &str) -> Result<Self> {
        parse_version(raw)
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn components(&self) -> &[u64] {
        &self.components
    }

    pub fn suffix(&self) -> &str {
        &self.suffix
    }

    /// Components and suffix re-rendered as `a.b.c[.suffix]`.
    pub fn canonical(&self) -> String {
        let mut out = self
            .components
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(".");
        if !self.suffix.is_empty() {
            out.push('.');
            out.push_str(&self.suffix);
        }
        out
    }

    pub fn pattern(&self) -> VersionPattern {
        classify_version_pattern(self)
    }

    fn significant_components(&self) -> &[u64] {
        let len = self
            .components
            .iter()
            .rposition(|&c| c != 0)
            .map_or(0, |p| p + 1);
        &self.components[..len]
    }
}

/// Splits `raw` on `.` and parses segments left to right as non-negative
/// integers; the first segment that is not all digits starts the suffix.
pub fn parse_version(raw: &str) -> Result<VersionId> {
    let mut components = Vec::new();
    let mut offset = 0;
    let mut suffix = String::new();
    for segment in raw.split('.') {
        let numeric = !segment.is_empty() && segment.bytes().all(|b| b.is_ascii_digit());
        match numeric.then(|| segment.parse::<u64>().ok()).flatten() {
            Some(value) => {
                components.push(value);
                offset += segment.len() + 1;
            }
            None => {
                suffix = raw[offset.min(raw.len())..].to_string();
                break;
            }
        }
    }
    if components.is_empty() {
        return Err(Error::NoNumericComponent(raw.to_string()));
    }
    Ok(VersionId {
        raw: raw.to_string(),
        components,
        suffix,
    })
}

/// Componentwise numeric order with zero padding; at equal components an
/// empty suffix (a release) sorts after any non-empty suffix.
pub fn compare_versions(a: &VersionId, b: &VersionId) -> Ordering {
    let len = a.components.len().max(b.components.len());
    for i in 0..len {
        let x = a.components.get(i).copied().unwrap_or(0);
        let y = b.components.get(i).copied().unwrap_or(0);
        match x.cmp(&y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    match (a.suffix.is_empty(), b.suffix.is_empty()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => a.suffix.cmp(&b.suffix),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VersionPattern {
    Major,
    Minor,
}

/// `major` when every component after the first is zero.
pub fn classify_version_pattern(v: &VersionId) -> VersionPattern {
    if v.components[1..].iter().all(|&c| c == 0) {
        VersionPattern::Major
    } else {
        VersionPattern::Minor
    }
}

impl PartialEq for VersionId {
    fn eq(&self, other: &Self) -> bool {
        compare_versions(self, other) == Ordering::Equal
    }
}

impl Eq for VersionId {}

impl PartialOrd for VersionId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VersionId {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_versions(self, other)
    }
}

impl Hash for VersionId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.significant_components().hash(state);
        self.suffix.hash(state);
    }
}

impl fmt::Display for VersionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FromStr for VersionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_version(s)
    }
}

impl Serialize for VersionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for VersionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        parse_version(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    LibrarySource,
    DownstreamApplication,
    StackOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleTag {
    Addition,
    Deprecation,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Vscc,
    Vacm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Token,
    Line,
    Block,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Granularity::Token, Granularity::Line, Granularity::Block];

    pub fn sentinel(self) -> &'static str {
        match self {
            Granularity::Token => "[token-mask]",
            Granularity::Line => "[line-mask]",
            Granularity::Block => "[block-mask]",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Token => "token",
            Granularity::Line => "line",
            Granularity::Block => "block",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(Granularity::Token),
            "line" => Ok(Granularity::Line),
            "block" => Ok(Granularity::Block),
            other => Err(Error::InvalidArgs(format!("unknown granularity {other:?}"))),
        }
    }
}

/// Library, version, description and code snippet, plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaInstance {
    pub library: String,
    pub version: VersionId,
    pub description: String,
    pub code: String,
    pub data_source: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifecycle_tag: Option<LifecycleTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release_date: Option<NaiveDate>,
}

impl MetaInstance {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        check_library(&self.library, &mut out);
        if self.code.is_empty() {
            out.push(Violation::new("code", "must be non-empty"));
        }
        out
    }
}

fn check_library(library: &str, out: &mut Vec<Violation>) {
    if library.is_empty() {
        out.push(Violation::new("library", "must be non-empty"));
    } else if library.chars().any(char::is_whitespace) {
        out.push(Violation::new("library", "must not contain whitespace"));
    }
}

/// A completion (vscc) or migration (vacm) evaluation item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub task: Task,
    pub granularity: Granularity,
    pub library: String,
    pub source_version: VersionId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_version: Option<VersionId>,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masked_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_code: Option<String>,
    pub reference: String,
    pub core_token: String,
    pub data_source: DataSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifecycle_tag: Option<LifecycleTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release_date: Option<NaiveDate>,
}

impl TaskInstance {
    /// The original code of a vscc instance: the mask sentinel replaced by
    /// the reference. `None` for vacm instances.
    pub fn restored_code(&self) -> Option<String> {
        self.masked_code
            .as_ref()
            .map(|m| m.replacen(self.granularity.sentinel(), &self.reference, 1))
    }

    /// Every violated invariant, in a stable order. Sentinel-related
    /// problems are flagged by the second tuple element.
    fn collect_violations(&self) -> (Vec<Violation>, bool) {
        let mut out = Vec::new();
        let mut sentinel_problem = false;
        if self.id.trim().is_empty() {
            out.push(Violation::new("id", "must be non-empty"));
        }
        check_library(&self.library, &mut out);
        if !is_identifier(&self.core_token) {
            out.push(Violation::new("core_token", "must be a single identifier"));
        }
        match self.task {
            Task::Vscc => match &self.masked_code {
                None => out.push(Violation::new("masked_code", "required for vscc")),
                Some(masked) => {
                    for g in Granularity::ALL {
                        let count = masked.matches(g.sentinel()).count();
                        let expected = usize::from(g == self.granularity);
                        if count != expected {
                            sentinel_problem = true;
                            out.push(Violation::new(
                                "masked_code",
                                format!(
                                    "expected {expected} occurrence(s) of {}, found {count}",
                                    g.sentinel()
                                ),
                            ));
                        }
                    }
                    if Granularity::ALL
                        .iter()
                        .any(|g| self.reference.contains(g.sentinel()))
                    {
                        sentinel_problem = true;
                        out.push(Violation::new("reference", "must not contain a mask sentinel"));
                    }
                }
            },
            Task::Vacm => {
                match &self.target_version {
                    None => out.push(Violation::new("target_version", "required for vacm")),
                    Some(target) if *target == self.source_version => out.push(Violation::new(
                        "target_version",
                        "must differ from source_version",
                    )),
                    Some(_) => {}
                }
                if self.granularity != Granularity::Block {
                    out.push(Violation::new("granularity", "vacm instances are block level"));
                }
                if self.source_code.is_none() {
                    out.push(Violation::new("source_code", "required for vacm"));
                }
            }
        }
        (out, sentinel_problem)
    }
}

/// Checks every instance invariant and returns the instance unchanged, or
/// a rejection listing all violations. Rejections involving mask sentinels
/// are reported as [`Error::MaskSentinelMismatch`].
pub fn validate_instance(record: TaskInstance) -> Result<TaskInstance> {
    let (violations, sentinel_problem) = record.collect_violations();
    if violations.is_empty() {
        Ok(record)
    } else if sentinel_problem {
        Err(Error::MaskSentinelMismatch(violations))
    } else {
        Err(Error::SchemaViolation(violations))
    }
}

/// Generated samples for one instance, in stable index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub instance_id: String,
    pub samples: Vec<String>,
}

impl SampleSet {
    pub fn n(&self) -> usize {
        self.samples.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Em,
    Ism,
    Pm,
    Cdc,
    Pass,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Em, Metric::Ism, Metric::Pm, Metric::Cdc, Metric::Pass];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Em => "em",
            Metric::Ism => "ism",
            Metric::Pm => "pm",
            Metric::Cdc => "cdc",
            Metric::Pass => "pass",
        }
    }

    /// Metrics whose per-sample values are always 0 or 1.
    pub fn is_binary(self) -> bool {
        matches!(self, Metric::Em | Metric::Cdc | Metric::Pass)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgs(format!("unknown metric {s:?}")))
    }
}

/// Per-sample outcomes of one metric on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub instance_id: String,
    pub metric: Metric,
    pub per_sample: Vec<f64>,
    pub correct_count: usize,
}

impl ScoreVector {
    pub fn new(instance_id: impl Into<String>, metric: Metric, per_sample: Vec<f64>) -> Self {
        let correct_count = per_sample.iter().filter(|&&s| s == 1.0).count();
        Self {
            instance_id: instance_id.into(),
            metric,
            per_sample,
            correct_count,
        }
    }

    pub fn n(&self) -> usize {
        self.per_sample.len()
    }
}
