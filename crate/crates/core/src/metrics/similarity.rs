//! String-matching metrics: exact match, identifier-sequence match and
//! prefix match.

use crate::syntax::{contains_core_token, identifiers};
use crate::text::{significant_lines, strip_fence_wrapper};

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// 1 iff the texts agree after trimming whitespace and fence wrappers.
/// Case-sensitive.
pub fn em_token(generated: &str, reference: &str) -> f64 {
    indicator(strip_fence_wrapper(generated) == strip_fence_wrapper(reference))
}

/// 1 iff the generated code uses `core_token` as a whole identifier.
pub fn em_block(generated: &str, core_token: &str) -> f64 {
    indicator(contains_core_token(generated, core_token))
}

fn common_prefix_len<T: PartialEq>(a: impl IntoIterator<Item = T>, b: impl IntoIterator<Item = T>) -> usize {
    a.into_iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn prefix_ratio(common: usize, generated_len: usize, reference_len: usize) -> f64 {
    if reference_len == 0 {
        return indicator(generated_len == 0);
    }
    common as f64 / reference_len as f64
}

/// Longest common prefix of the two identifier sequences, over the
/// reference sequence length.
pub fn ism_line(generated_line: &str, reference_line: &str) -> f64 {
    let generated = identifiers(generated_line);
    let reference = identifiers(reference_line);
    let common = common_prefix_len(generated.iter(), reference.iter());
    prefix_ratio(common, generated.len(), reference.len())
}

fn strip_line(line: &str) -> &str {
    line.trim_start().trim_end_matches(['\r', '\n'])
}

/// Longest common character prefix after removing leading indentation,
/// over the reference length.
pub fn pm_line(generated_line: &str, reference_line: &str) -> f64 {
    let generated = strip_line(generated_line);
    let reference = strip_line(reference_line);
    let common = common_prefix_len(generated.chars(), reference.chars());
    prefix_ratio(common, generated.chars().count(), reference.chars().count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineMetric {
    Ism,
    Pm,
}

impl LineMetric {
    pub fn score(self, generated_line: &str, reference_line: &str) -> f64 {
        match self {
            LineMetric::Ism => ism_line(generated_line, reference_line),
            LineMetric::Pm => pm_line(generated_line, reference_line),
        }
    }
}

/// Mean line score over the reference's significant (non-blank,
/// non-comment) lines, pairing lines by position. Missing generated lines
/// score 0 and surplus ones are ignored.
pub fn block_line_average(generated: &str, reference: &str, metric: LineMetric) -> f64 {
    let generated = significant_lines(generated);
    let reference = significant_lines(reference);
    if reference.is_empty() {
        return indicator(generated.is_empty());
    }
    let total: f64 = reference
        .iter()
        .enumerate()
        .map(|(i, r)| generated.get(i).map_or(0.0, |g| metric.score(g, r)))
        .sum();
    total / reference.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn em_token_examples() {
        assert_eq!(em_token("to_numpy", "to_numpy"), 1.0);
        assert_eq!(em_token("as_matrix", "to_numpy"), 0.0);
        assert_eq!(em_token("  to_numpy\n", "to_numpy"), 1.0);
        assert_eq!(em_token("```\nto_numpy\n```", "to_numpy"), 1.0);
        assert_eq!(em_token("To_numpy", "to_numpy"), 0.0);
    }

    #[test]
    fn em_block_examples() {
        assert_eq!(em_block("df.explode('A')", "explode"), 1.0);
        assert_eq!(em_block("exploded = f(x)", "explode"), 0.0);
        assert_eq!(em_block("", "explode"), 0.0);
    }

    #[test]
    fn ism_examples() {
        assert_eq!(ism_line("np.arange(3, dtype=int)", "np.arange(3, dtype=int)"), 1.0);
        assert_eq!(ism_line("df.explode('B')", "df.explode('A')"), 1.0);
        let s = ism_line("np.linspace(0, 1, dtype=x)", "np.arange(0, 1, dtype=x)");
        // R = [np, arange, dtype, x]; common prefix [np].
        assert!((s - 0.25).abs() < 1e-12);
        let s = ism_line("np.linspace(dtype)", "np.arange(dtype)");
        assert!((s - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(ism_line("", ""), 1.0);
        assert_eq!(ism_line("x", "1"), 0.0);
    }

    #[test]
    fn pm_examples() {
        assert_eq!(pm_line("df.explode('A')", "df.explode('A')"), 1.0);
        assert!((pm_line("df.explode('B')", "df.explode('A')") - 0.8).abs() < 1e-12);
        assert_eq!(pm_line("x = 1", "y = 1"), 0.0);
        assert_eq!(pm_line("    x = 1", "x = 1"), 1.0);
        assert_eq!(pm_line("", ""), 1.0);
        assert_eq!(pm_line("a", ""), 0.0);
    }

    #[test]
    fn block_average_examples() {
        let reference = "x = load(p)\ny = x.explode('A')\n";
        for metric in [LineMetric::Ism, LineMetric::Pm] {
            assert_eq!(block_line_average(reference, reference, metric), 1.0);
            assert_eq!(block_line_average("x = load(p)\n", reference, metric), 0.5);
            let extra = format!("{reference}print(y)\n");
            assert_eq!(block_line_average(&extra, reference, metric), 1.0);
            assert_eq!(block_line_average("", "# only a comment\n", metric), 1.0);
            assert_eq!(block_line_average("x", "\n\n", metric), 0.0);
        }
    }

    #[test]
    fn block_average_skips_comments_and_blanks() {
        let reference = "a = f()\n\n# note\nb = g()";
        let generated = "# header\na = f()\nb = g()";
        assert_eq!(block_line_average(generated, reference, LineMetric::Pm), 1.0);
    }
}
