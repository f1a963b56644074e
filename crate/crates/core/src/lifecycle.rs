//! API lifecycle analysis across an ordered sequence of library versions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LifecycleTag, VersionId};
use crate::syntax::extract_api_definitions;

/// The public API names of one library version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionSurface {
    pub version: VersionId,
    pub apis: BTreeSet<String>,
    pub parsed_files: usize,
    pub skipped_files: usize,
}

impl VersionSurface {
    pub fn new(version: VersionId, apis: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            version,
            apis: apis.into_iter().map(Into::into).collect(),
            parsed_files: 0,
            skipped_files: 0,
        }
    }
}

pub fn extract_surface(version: VersionId, tree_root: &Path) -> Result<VersionSurface> {
    let defs = extract_api_definitions(tree_root)?;
    Ok(VersionSurface {
        version,
        apis: defs.names,
        parsed_files: defs.parsed_files,
        skipped_files: defs.skipped_files,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceDiff {
    pub added: BTreeSet<String>,
    pub removed: BTreeSet<String>,
    pub retained: BTreeSet<String>,
}

pub fn diff_consecutive(prev: &VersionSurface, curr: &VersionSurface) -> Result<SurfaceDiff> {
    if prev.version >= curr.version {
        return Err(Error::VersionOrder {
            prev: prev.version.to_string(),
            curr: curr.version.to_string(),
        });
    }
    Ok(SurfaceDiff {
        added: curr.apis.difference(&prev.apis).cloned().collect(),
        removed: prev.apis.difference(&curr.apis).cloned().collect(),
        retained: prev.apis.intersection(&curr.apis).cloned().collect(),
    })
}

/// One maximal contiguous run of versions in which an API is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifecycleRecord {
    pub api: String,
    /// Index of the first version of the run.
    pub start_index: usize,
    /// Index of the first later version without the API; `None` when the
    /// API survives through the last observed version.
    pub end_index: Option<usize>,
    pub per_version_tag: BTreeMap<VersionId, LifecycleTag>,
}

/// Splits each API's presence into maximal runs and tags them.
///
/// A run's first version is `addition`, except at index 0 where earlier
/// presence cannot be ruled out (tagged `general`). A run's last version is
/// `deprecation` when a later observed version lacks the API; this wins
/// over `addition` for single-version runs. Everything else is `general`.
pub fn tag_lifecycle(surfaces: &[VersionSurface]) -> Result<Vec<LifecycleRecord>> {
    if surfaces.len() < 2 {
        return Err(Error::InvalidArgs(format!(
            "lifecycle tagging needs at least 2 versions, got {}",
            surfaces.len()
        )));
    }
    if let Some(pos) = surfaces.windows(2).position(|w| w[0].version >= w[1].version) {
        return Err(Error::UnsortedVersions(pos + 1));
    }

    let all_apis: BTreeSet<&String> = surfaces.iter().flat_map(|s| &s.apis).collect();
    let mut records = Vec::new();
    for api in all_apis {
        let present: Vec<bool> = surfaces.iter().map(|s| s.apis.contains(api)).collect();
        let mut i = 0;
        while i < present.len() {
            if !present[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < present.len() && present[i] {
                i += 1;
            }
            let end = (i < present.len()).then_some(i);
            let mut tags = BTreeMap::new();
            for (idx, surface) in surfaces.iter().enumerate().take(i).skip(start) {
                let tag = if end.is_some() && idx + 1 == i {
                    LifecycleTag::Deprecation
                } else if idx == start && start > 0 {
                    LifecycleTag::Addition
                } else {
                    LifecycleTag::General
                };
                tags.insert(surface.version.clone(), tag);
            }
            records.push(LifecycleRecord {
                api: api.clone(),
                start_index: start,
                end_index: end,
                per_version_tag: tags,
            });
        }
    }
    Ok(records)
}

/// Rebuilds the api × version presence matrix from lifecycle records.
pub fn presence_from_records(records: &[LifecycleRecord], versions: usize) -> BTreeMap<String, Vec<bool>> {
    let mut out: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    for r in records {
        let row = out.entry(r.api.clone()).or_insert_with(|| vec![false; versions]);
        for cell in &mut row[r.start_index..r.end_index.unwrap_or(versions)] {
            *cell = true;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleAnalysis {
    /// Versions kept for tagging, ascending.
    pub surfaces: Vec<VersionSurface>,
    /// Version directories dropped because no file in them parsed.
    pub dropped_versions: Vec<String>,
    pub records: Vec<LifecycleRecord>,
}

/// Reads `<root>/<version>/...` trees, extracts each surface in parallel,
/// drops versions with zero parseable files, and tags the lifecycle.
pub fn analyze_versions_root(root: &Path) -> Result<LifecycleAnalysis> {
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut versions: Vec<(VersionId, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        match VersionId::parse(&name) {
            Ok(v) => versions.push((v, path)),
            Err(_) => log::warn!("ignoring directory {name:?}: not a version"),
        }
    }
    versions.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let surfaces: Vec<VersionSurface> = versions
        .into_par_iter()
        .map(|(v, path)| extract_surface(v, &path))
        .collect::<Result<_>>()?;

    let (kept, dropped): (Vec<_>, Vec<_>) = surfaces.into_iter().partition(|s| s.parsed_files > 0);
    let dropped_versions: Vec<String> = dropped.iter().map(|s| s.version.to_string()).collect();
    for v in &dropped_versions {
        log::warn!("dropping version {v}: no parseable source files");
    }
    let records = tag_lifecycle(&kept)?;
    Ok(LifecycleAnalysis {
        surfaces: kept,
        dropped_versions,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use LifecycleTag::*;

    fn v(s: &str) -> VersionId {
        VersionId::parse(s).unwrap()
    }

    fn surfaces(spec: &[(&str, &[&str])]) -> Vec<VersionSurface> {
        spec.iter()
            .map(|(ver, apis)| VersionSurface::new(v(ver), apis.iter().copied()))
            .collect()
    }

    #[test]
    fn diff_examples() {
        let s = surfaces(&[("1.0", &["f"]), ("1.1", &["f", "g"])]);
        let d = diff_consecutive(&s[0], &s[1]).unwrap();
        assert_eq!(d.added, BTreeSet::from(["g".to_string()]));
        assert!(d.removed.is_empty());
        assert_eq!(d.retained, BTreeSet::from(["f".to_string()]));

        let s = surfaces(&[("1.0", &["f"]), ("1.1", &[])]);
        assert_eq!(diff_consecutive(&s[0], &s[1]).unwrap().removed, BTreeSet::from(["f".to_string()]));

        let s = surfaces(&[("1.0", &["f", "g"]), ("1.1", &["g", "h"])]);
        let d = diff_consecutive(&s[0], &s[1]).unwrap();
        assert_eq!(d.added, BTreeSet::from(["h".to_string()]));
        assert_eq!(d.removed, BTreeSet::from(["f".to_string()]));
        assert_eq!(d.retained, BTreeSet::from(["g".to_string()]));
    }

    #[test]
    fn diff_rejects_wrong_order() {
        let s = surfaces(&[("1.1", &["f"]), ("1.0", &["f"])]);
        assert!(matches!(diff_consecutive(&s[0], &s[1]), Err(Error::VersionOrder { .. })));
    }

    fn tags_of(records: &[LifecycleRecord], api: &str) -> Vec<(String, LifecycleTag)> {
        records
            .iter()
            .filter(|r| r.api == api)
            .flat_map(|r| r.per_version_tag.iter().map(|(v, t)| (v.to_string(), *t)))
            .collect()
    }

    #[test]
    fn tag_examples() {
        let s = surfaces(&[
            ("1", &["f"]),
            ("2", &["f", "g"]),
            ("3", &["f", "g"]),
            ("4", &["f", "h"]),
        ]);
        let records = tag_lifecycle(&s).unwrap();
        assert_eq!(tags_of(&records, "g"), vec![("2".into(), Addition), ("3".into(), Deprecation)]);
        assert_eq!(
            tags_of(&records, "f"),
            vec![("1".into(), General), ("2".into(), General), ("3".into(), General), ("4".into(), General)]
        );
        assert_eq!(tags_of(&records, "h"), vec![("4".into(), Addition)]);
        let h = records.iter().find(|r| r.api == "h").unwrap();
        assert_eq!((h.start_index, h.end_index), (3, None));
        let g = records.iter().find(|r| r.api == "g").unwrap();
        assert_eq!((g.start_index, g.end_index), (1, Some(3)));
    }

    #[test]
    fn reintroduced_api_yields_two_records() {
        let s = surfaces(&[("1", &["r"]), ("2", &[]), ("3", &["r"]), ("4", &["r"])]);
        let records = tag_lifecycle(&s).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(tags_of(&records, "r"), vec![
            ("1".into(), Deprecation),
            ("3".into(), Addition),
            ("4".into(), General),
        ]);
    }

    #[test]
    fn tag_rejects_unsorted_and_short_inputs() {
        let s = surfaces(&[("2", &["f"]), ("1", &["f"])]);
        assert!(matches!(tag_lifecycle(&s), Err(Error::UnsortedVersions(1))));
        let s = surfaces(&[("2.0", &["f"]), ("2", &["f"])]);
        assert!(matches!(tag_lifecycle(&s), Err(Error::UnsortedVersions(1))));
        assert!(matches!(tag_lifecycle(&s[..1]), Err(Error::InvalidArgs(_))));
    }

    fn write(root: &Path, rel: &str, body: &str) {
        let path = root.join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, body).unwrap();
    }

    #[test]
    fn surface_examples() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "pkg/a.py", "def f(): ...\n");
        let s = extract_surface(v("1.0"), dir.path()).unwrap();
        assert_eq!(s.apis, BTreeSet::from(["pkg.a.f".to_string()]));

        let empty = tempfile::tempdir().unwrap();
        assert!(extract_surface(v("1.0"), empty.path()).unwrap().apis.is_empty());

        let mixed = tempfile::tempdir().unwrap();
        write(mixed.path(), "pkg/a.py", "def g(): ...\n");
        write(mixed.path(), "pkg/bad.py", "def g(:\n");
        let s = extract_surface(v("1.0"), mixed.path()).unwrap();
        assert_eq!(s.apis, BTreeSet::from(["pkg.a.g".to_string()]));
        assert_eq!(s.skipped_files, 1);
    }

    #[test]
    fn versions_root_drops_unparseable_versions() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "1.0/pkg/a.py", "def f(): ...\n");
        write(dir.path(), "1.1/pkg/a.py", "def f(: broken\n");
        write(dir.path(), "1.2/pkg/a.py", "def f(): ...\ndef g(): ...\n");
        write(dir.path(), "notes/readme.py", "x = 1\n");
        let analysis = analyze_versions_root(dir.path()).unwrap();
        assert_eq!(analysis.dropped_versions, vec!["1.1".to_string()]);
        assert_eq!(analysis.surfaces.len(), 2);
        assert_eq!(tags_of(&analysis.records, "pkg.a.g"), vec![("1.2".into(), Addition)]);
    }

    #[test]
    fn records_serialize_with_version_keys() {
        let s = surfaces(&[("1", &["f"]), ("2", &[])]);
        let records = tag_lifecycle(&s).unwrap();
        let json = serde_json::to_string(&records[0]).unwrap();
        assert_eq!(
            json,
            r#"{"api":"f","start_index":0,"end_index":1,"per_version_tag":{"1":"deprecation"}}"#
        );
        let back: LifecycleRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, records[0]);
    }
}
