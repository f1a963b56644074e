//! Benchmark instance construction: masking, migration pairing and corpus
//! filtering.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result, Violation};
use crate::model::{
    classify_version_pattern, validate_instance, Granularity, MetaInstance, Task, TaskInstance,
    VersionId, VersionPattern,
};
use crate::syntax::{check_syntax, identifier_spans};
use crate::text::is_identifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskTarget {
    /// The n-th (0-based) identifier occurrence of the core token.
    Token { occurrence: usize },
    /// A 0-based line; the span is the line's text after its indentation.
    Line { line: usize },
    /// Inclusive 0-based line range; the span starts after the first
    /// line's indentation and ends at the end of the last line.
    Block { start_line: usize, end_line: usize },
}

impl MaskTarget {
    pub fn granularity(&self) -> Granularity {
        match self {
            MaskTarget::Token { .. } => Granularity::Token,
            MaskTarget::Line { .. } => Granularity::Line,
            MaskTarget::Block { .. } => Granularity::Block,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub core_token: String,
    pub target: MaskTarget,
}

/// One line of a masking request file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRequest {
    pub id: String,
    pub meta: MetaInstance,
    #[serde(flatten)]
    pub spec: MaskSpec,
}

/// One line of a pairing request file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRequest {
    pub id: String,
    pub core_token: String,
    pub source: MetaInstance,
    pub target: MetaInstance,
}

/// Byte ranges of each line's content (without the line terminator).
fn line_spans(code: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in code.split_inclusive('\n') {
        let content = piece.trim_end_matches('\n').trim_end_matches('\r');
        out.push((start, start + content.len()));
        start += piece.len();
    }
    out
}

fn content_start(code: &str, (start, end): (usize, usize)) -> usize {
    let line = &code[start..end];
    start + (line.len() - line.trim_start().len())
}

fn resolve_span(code: &str, spec: &MaskSpec) -> Result<(usize, usize)> {
    match spec.target {
        MaskTarget::Token { occurrence } => identifier_spans(code)
            .into_iter()
            .filter(|s| s.text == spec.core_token)
            .nth(occurrence)
            .map(|s| (s.start, s.end))
            .ok_or_else(|| {
                Error::SpanUnresolvable(format!(
                    "occurrence {occurrence} of {:?} not found",
                    spec.core_token
                ))
            }),
        MaskTarget::Line { line } => {
            let lines = line_spans(code);
            let &(start, end) = lines
                .get(line)
                .ok_or_else(|| Error::SpanUnresolvable(format!("line {line} out of range")))?;
            if code[start..end].trim().is_empty() {
                return Err(Error::SpanUnresolvable(format!("line {line} is blank")));
            }
            Ok((content_start(code, (start, end)), end))
        }
        MaskTarget::Block { start_line, end_line } => {
            let lines = line_spans(code);
            if start_line > end_line || end_line >= lines.len() {
                return Err(Error::SpanUnresolvable(format!(
                    "block {start_line}..={end_line} out of range"
                )));
            }
            let first = lines[start_line];
            if code[first.0..first.1].trim().is_empty() {
                return Err(Error::SpanUnresolvable(format!("block starts on blank line {start_line}")));
            }
            Ok((content_start(code, first), lines[end_line].1))
        }
    }
}

/// Replaces the targeted span of `meta.code` with the granularity's
/// sentinel. The removed text becomes the reference, so substituting it
/// back for the sentinel restores the original code exactly.
pub fn mask_instance(id: &str, meta: &MetaInstance, spec: &MaskSpec) -> Result<TaskInstance> {
    let mut violations = meta.violations();
    if !is_identifier(&spec.core_token) {
        violations.push(Violation::new("core_token", "must be a single identifier"));
    }
    if !violations.is_empty() {
        return Err(Error::SchemaViolation(violations));
    }
    if let Some(g) = Granularity::ALL.iter().find(|g| meta.code.contains(g.sentinel())) {
        return Err(Error::SentinelCollision(g.sentinel().to_string()));
    }
    if !check_syntax(&meta.code) {
        return Err(Error::SchemaViolation(vec![Violation::new(
            "code",
            "must be syntactically valid",
        )]));
    }

    let granularity = spec.target.granularity();
    let (start, end) = resolve_span(&meta.code, spec)?;
    let masked_code = format!(
        "{}{}{}",
        &meta.code[..start],
        granularity.sentinel(),
        &meta.code[end..]
    );
    validate_instance(TaskInstance {
        id: id.to_string(),
        task: Task::Vscc,
        granularity,
        library: meta.library.clone(),
        source_version: meta.version.clone(),
        target_version: None,
        description: meta.description.clone(),
        masked_code: Some(masked_code),
        source_code: None,
        reference: meta.code[start..end].to_string(),
        core_token: spec.core_token.clone(),
        data_source: meta.data_source,
        lifecycle_tag: meta.lifecycle_tag,
        release_date: meta.release_date,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrationDirection {
    OldToNew,
    NewToOld,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrationPattern {
    MajorToMajor,
    MajorToMinor,
    MinorToMajor,
    MinorToMinor,
}

impl MigrationPattern {
    fn from_endpoints(source: VersionPattern, target: VersionPattern) -> Self {
        use VersionPattern::*;
        match (source, target) {
            (Major, Major) => MigrationPattern::MajorToMajor,
            (Major, Minor) => MigrationPattern::MajorToMinor,
            (Minor, Major) => MigrationPattern::MinorToMajor,
            (Minor, Minor) => MigrationPattern::MinorToMinor,
        }
    }

    /// The pattern of the reverse migration.
    pub fn transposed(self) -> Self {
        match self {
            MigrationPattern::MajorToMinor => MigrationPattern::MinorToMajor,
            MigrationPattern::MinorToMajor => MigrationPattern::MajorToMinor,
            same => same,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MigrationPattern::MajorToMajor => "major_to_major",
            MigrationPattern::MajorToMinor => "major_to_minor",
            MigrationPattern::MinorToMajor => "minor_to_major",
            MigrationPattern::MinorToMinor => "minor_to_minor",
        }
    }
}

impl MigrationDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            MigrationDirection::OldToNew => "old_to_new",
            MigrationDirection::NewToOld => "new_to_old",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MigrationCategory {
    pub direction: MigrationDirection,
    pub pattern: MigrationPattern,
}

impl MigrationCategory {
    /// `None` when the versions are equal.
    pub fn between(source: &VersionId, target: &VersionId) -> Option<Self> {
        let direction = match source.cmp(target) {
            std::cmp::Ordering::Less => MigrationDirection::OldToNew,
            std::cmp::Ordering::Greater => MigrationDirection::NewToOld,
            std::cmp::Ordering::Equal => return None,
        };
        Some(Self {
            direction,
            pattern: MigrationPattern::from_endpoints(
                classify_version_pattern(source),
                classify_version_pattern(target),
            ),
        })
    }
}

/// Builds a migration instance from two meta-instances of the same
/// library and description at different versions. Provenance (data source)
/// comes from the source side; lifecycle tag and release date from the
/// target side, whose API usage is what the instance tests.
pub fn build_migration_pair(
    id: &str,
    core_token: &str,
    source: &MetaInstance,
    target: &MetaInstance,
) -> Result<(TaskInstance, MigrationCategory)> {
    if source.library != target.library {
        return Err(Error::PairingViolation(format!(
            "libraries differ: {:?} vs {:?}",
            source.library, target.library
        )));
    }
    if source.description != target.description {
        return Err(Error::PairingViolation("descriptions differ".into()));
    }
    let category = MigrationCategory::between(&source.version, &target.version).ok_or_else(|| {
        Error::PairingViolation(format!(
            "versions must differ: {} vs {}",
            source.version, target.version
        ))
    })?;
    let instance = validate_instance(TaskInstance {
        id: id.to_string(),
        task: Task::Vacm,
        granularity: Granularity::Block,
        library: source.library.clone(),
        source_version: source.version.clone(),
        target_version: Some(target.version.clone()),
        description: source.description.clone(),
        masked_code: None,
        source_code: Some(source.code.clone()),
        reference: target.code.clone(),
        core_token: core_token.to_string(),
        data_source: source.data_source,
        lifecycle_tag: target.lifecycle_tag,
        release_date: target.release_date,
    })?;
    Ok((instance, category))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterRule {
    MeanLineLength,
    MaxLineLength,
    AlphabeticRatio,
    SyntaxError,
}

pub const MAX_MEAN_LINE_LENGTH: f64 = 100.0;
pub const MAX_LINE_LENGTH: usize = 1000;
pub const MIN_ALPHABETIC_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub lines: usize,
    pub mean_line_length: f64,
    pub max_line_length: usize,
    /// Letters over all non-newline characters; 1.0 for an empty file.
    pub alphabetic_ratio: f64,
}

impl CorpusStats {
    pub fn of(content: &str) -> Self {
        let (mut lines, mut total, mut max, mut letters) = (0usize, 0usize, 0usize, 0usize);
        for line in content.lines() {
            let len = line.chars().count();
            lines += 1;
            total += len;
            max = max.max(len);
            letters += line.chars().filter(|c| c.is_alphabetic()).count();
        }
        Self {
            lines,
            mean_line_length: if lines == 0 { 0.0 } else { total as f64 / lines as f64 },
            max_line_length: max,
            alphabetic_ratio: if total == 0 { 1.0 } else { letters as f64 / total as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reasons", rename_all = "snake_case")]
pub enum FilterVerdict {
    Keep,
    Reject(Vec<FilterRule>),
}

impl FilterVerdict {
    pub fn is_keep(&self) -> bool {
        matches!(self, FilterVerdict::Keep)
    }
}

/// Quality filter for downstream-application source files. All
/// thresholds are strict: a mean line length of exactly 100 is kept.
pub fn filter_corpus_file(content: &str) -> FilterVerdict {
    let stats = CorpusStats::of(content);
    let mut reasons = Vec::new();
    if stats.mean_line_length > MAX_MEAN_LINE_LENGTH {
        reasons.push(FilterRule::MeanLineLength);
    }
    if stats.max_line_length > MAX_LINE_LENGTH {
        reasons.push(FilterRule::MaxLineLength);
    }
    if stats.alphabetic_ratio < MIN_ALPHABETIC_RATIO {
        reasons.push(FilterRule::AlphabeticRatio);
    }
    if !check_syntax(content) {
        reasons.push(FilterRule::SyntaxError);
    }
    if reasons.is_empty() {
        FilterVerdict::Keep
    } else {
        FilterVerdict::Reject(reasons)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileVerdict {
    pub path: PathBuf,
    #[serde(flatten)]
    pub verdict: FilterVerdict,
}

/// Filters every `.py` file under `root`, in path order. Files that are
/// not valid UTF-8 are rejected as syntax errors.
pub fn filter_tree(root: &Path) -> Result<Vec<FileVerdict>> {
    let mut paths = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(e.path().unwrap_or(root).to_path_buf(), e.into()))?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "py") {
            paths.push(entry.into_path());
        }
    }
    paths
        .into_par_iter()
        .map(|path| {
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let verdict = match String::from_utf8(bytes) {
                Ok(text) => filter_corpus_file(&text),
                Err(_) => FilterVerdict::Reject(vec![FilterRule::SyntaxError]),
            };
            let relative = path.strip_prefix(root).unwrap_or(&path).to_path_buf();
            Ok(FileVerdict { path: relative, verdict })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DataSource;

    fn meta(code: &str, version: &str) -> MetaInstance {
        MetaInstance {
            library: "torch".into(),
            version: VersionId::parse(version).unwrap(),
            description: "do the thing".into(),
            code: code.into(),
            data_source: DataSource::LibrarySource,
            lifecycle_tag: None,
            release_date: None,
        }
    }

    fn spec(token: &str, target: MaskTarget) -> MaskSpec {
        MaskSpec {
            core_token: token.into(),
            target,
        }
    }

    #[test]
    fn token_mask() {
        let m = meta("df.to_numpy()", "1.0");
        let inst = mask_instance("a", &m, &spec("to_numpy", MaskTarget::Token { occurrence: 0 })).unwrap();
        assert_eq!(inst.masked_code.as_deref(), Some("df.[token-mask]()"));
        assert_eq!(inst.reference, "to_numpy");
        assert_eq!(inst.restored_code().unwrap(), m.code);
    }

    #[test]
    fn token_mask_skips_strings_and_picks_occurrence() {
        let m = meta("s = 'to_numpy'\na = df.to_numpy()\nb = x.to_numpy()\n", "1.0");
        let inst = mask_instance("a", &m, &spec("to_numpy", MaskTarget::Token { occurrence: 1 })).unwrap();
        assert_eq!(
            inst.masked_code.as_deref(),
            Some("s = 'to_numpy'\na = df.to_numpy()\nb = x.[token-mask]()\n")
        );
        let err = mask_instance("a", &m, &spec("to_numpy", MaskTarget::Token { occurrence: 2 }));
        assert!(matches!(err, Err(Error::SpanUnresolvable(_))));
    }

    #[test]
    fn line_mask() {
        let m = meta("import numpy as np\nx = np.arange(3)\nprint(x)\n", "1.0");
        let inst = mask_instance("a", &m, &spec("arange", MaskTarget::Line { line: 1 })).unwrap();
        assert_eq!(inst.masked_code.as_deref(), Some("import numpy as np\n[line-mask]\nprint(x)\n"));
        assert_eq!(inst.reference, "x = np.arange(3)");
        assert_eq!(inst.restored_code().unwrap(), m.code);
    }

    #[test]
    fn indented_line_and_block_masks_keep_indentation() {
        let code = "def f(p):\n    with open(p) as h:\n        data = h.read()\n    return data\n";
        let m = meta(code, "1.0");
        let line = mask_instance("a", &m, &spec("read", MaskTarget::Line { line: 2 })).unwrap();
        assert_eq!(line.reference, "data = h.read()");
        assert!(line.masked_code.as_deref().unwrap().contains("        [line-mask]\n"));

        let block = mask_instance(
            "b",
            &m,
            &spec("open", MaskTarget::Block { start_line: 1, end_line: 2 }),
        )
        .unwrap();
        assert_eq!(block.reference, "with open(p) as h:\n        data = h.read()");
        assert_eq!(block.masked_code.as_deref(), Some("def f(p):\n    [block-mask]\n    return data\n"));
        assert_eq!(block.restored_code().unwrap(), code);
    }

    #[test]
    fn mask_errors() {
        let m = meta("x = 1\n\ny = 2", "1.0");
        assert!(matches!(
            mask_instance("a", &m, &spec("x", MaskTarget::Line { line: 1 })),
            Err(Error::SpanUnresolvable(_))
        ));
        assert!(matches!(
            mask_instance("a", &m, &spec("x", MaskTarget::Block { start_line: 2, end_line: 1 })),
            Err(Error::SpanUnresolvable(_))
        ));
        assert!(matches!(
            mask_instance("a", &m, &spec("x", MaskTarget::Line { line: 9 })),
            Err(Error::SpanUnresolvable(_))
        ));
        let collision = meta("s = '[line-mask]'", "1.0");
        assert!(matches!(
            mask_instance("a", &collision, &spec("s", MaskTarget::Token { occurrence: 0 })),
            Err(Error::SentinelCollision(_))
        ));
        let invalid = meta("def f(:", "1.0");
        assert!(matches!(
            mask_instance("a", &invalid, &spec("f", MaskTarget::Token { occurrence: 0 })),
            Err(Error::SchemaViolation(_))
        ));
    }

    #[test]
    fn migration_examples() {
        let old = meta("torch.a()", "1.3.2");
        let new = meta("torch.b()", "2.0.0");
        let (inst, cat) = build_migration_pair("p", "b", &old, &new).unwrap();
        assert_eq!(cat.direction, MigrationDirection::OldToNew);
        assert_eq!(cat.pattern, MigrationPattern::MinorToMajor);
        assert_eq!(inst.source_code.as_deref(), Some("torch.a()"));
        assert_eq!(inst.reference, "torch.b()");

        let newer = meta("torch.c()", "2.1.3");
        let (_, cat) = build_migration_pair("q", "c", &new, &newer).unwrap();
        assert_eq!(cat.direction, MigrationDirection::OldToNew);
        assert_eq!(cat.pattern, MigrationPattern::MajorToMinor);

        let (_, back) = build_migration_pair("r", "b", &newer, &new).unwrap();
        assert_eq!(back.direction, MigrationDirection::NewToOld);
        assert_eq!(back.pattern, MigrationPattern::MinorToMajor);

        assert!(matches!(build_migration_pair("s", "a", &old, &old), Err(Error::PairingViolation(_))));
        let mut other = new.clone();
        other.library = "numpy".into();
        assert!(matches!(build_migration_pair("t", "a", &old, &other), Err(Error::PairingViolation(_))));
    }

    #[test]
    fn filter_examples() {
        let line = format!("x = '{}'", "a".repeat(94));
        assert_eq!(line.len(), 100);
        let file = format!("{line}\n{line}\n");
        assert_eq!(filter_corpus_file(&file), FilterVerdict::Keep);

        let long = format!("x = '{}'\n{}", "a".repeat(995), "y = 1\n".repeat(20));
        assert_eq!(filter_corpus_file(&long), FilterVerdict::Reject(vec![FilterRule::MaxLineLength]));

        // 4 letters out of 20 characters.
        let digits = "abcd=111111111111111\n";
        assert_eq!(CorpusStats::of(digits).alphabetic_ratio, 0.2);
        assert_eq!(filter_corpus_file(digits), FilterVerdict::Reject(vec![FilterRule::AlphabeticRatio]));

        assert_eq!(
            filter_corpus_file("def broken(:\n"),
            FilterVerdict::Reject(vec![FilterRule::SyntaxError])
        );
        assert_eq!(filter_corpus_file(""), FilterVerdict::Keep);
    }

    #[test]
    fn verdict_json() {
        let v = FilterVerdict::Reject(vec![FilterRule::MaxLineLength, FilterRule::SyntaxError]);
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"verdict":"reject","reasons":["max_line_length","syntax_error"]}"#
        );
        assert_eq!(serde_json::to_string(&FilterVerdict::Keep).unwrap(), r#"{"verdict":"keep"}"#);
    }
}
