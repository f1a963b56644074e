//! Evaluation and benchmark construction for version-controllable code
//! generation.
//!
//! Scoring covers exact match, identifier-sequence and prefix match, the
//! Critical Diff Check rules and unbiased @k estimation. Construction
//! covers API lifecycle tagging across library versions, multi-granularity
//! masking, migration pairing and corpus filtering.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod lifecycle;
pub mod metrics;
pub mod model;
pub mod syntax;
pub mod text;

pub use error::{Error, Result, Violation};
pub use model::{
    classify_version_pattern, compare_versions, parse_version, validate_instance, DataSource,
    Granularity, LifecycleTag, MetaInstance, Metric, SampleSet, ScoreVector, Task, TaskInstance,
    VersionId, VersionPattern,
};
