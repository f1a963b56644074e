//! Scoring: the @k estimator, string-match metrics, Critical Diff Check
//! and Pearson agreement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Granularity;

mod at_k;
pub mod cdc;
mod correlation;
mod similarity;

pub use at_k::{estimate_at_k, score_at_k};
pub use cdc::{cdc_check, cdc_check_in_context, cdc_check_with, CdcOptions, CdcVerdict, RuleOutcome};
pub use correlation::pearson;
pub use similarity::{block_line_average, em_block, em_token, ism_line, pm_line, LineMetric};

/// Tolerance for comparing aggregated floating-point scores.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Sampling settings used when collecting generations for a granularity.
/// Migration uses the block-level settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingDefaults {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub n: usize,
}

impl SamplingDefaults {
    pub fn for_granularity(granularity: Granularity) -> Self {
        let (max_tokens, n) = match granularity {
            Granularity::Token => (64, 100),
            Granularity::Line => (128, 6),
            Granularity::Block => (512, 6),
        };
        Self {
            temperature: 0.8,
            top_p: 0.95,
            max_tokens,
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub k_values: Vec<usize>,
    pub tolerance: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            k_values: vec![1, 3, 10],
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl MetricConfig {
    /// Default sample count for a granularity.
    pub fn n_default(granularity: Granularity) -> usize {
        SamplingDefaults::for_granularity(granularity).n
    }

    /// The k values usable at `granularity` under its default n.
    pub fn k_values_for(&self, granularity: Granularity) -> Vec<usize> {
        let n = Self::n_default(granularity);
        self.k_values.iter().copied().filter(|&k| k <= n).collect()
    }

    /// Every k must be at least 1 and no larger than `n`.
    pub fn check_against(&self, n: usize) -> Result<()> {
        match self.k_values.iter().find(|&&k| k == 0 || k > n) {
            Some(k) => Err(Error::InvalidArgs(format!("k = {k} not in 1..={n}"))),
            None => Ok(()),
        }
    }
}
