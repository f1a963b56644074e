//! Small text helpers shared by the metrics, masking and harness code.

/// Letters, digits and underscore, not starting with a digit.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c == '_' || c.is_alphabetic() => {}
        _ => return false,
    }
    chars.all(is_identifier_continue)
}

pub(crate) fn is_identifier_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

pub(crate) fn is_identifier_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

/// Returns the body of a text wrapped in a single markdown fence
/// (```` ```lang\n...\n``` ````), or the text unchanged.
pub fn strip_fence_wrapper(text: &str) -> &str {
    let trimmed = text.trim();
    if trimmed.len() >= 6 && trimmed.starts_with("```") && trimmed.ends_with("```") {
        let inner = &trimmed[3..trimmed.len() - 3];
        // The first line of the fence may carry a language tag.
        return match inner.find('\n') {
            Some(pos) => inner[pos + 1..].trim(),
            None => inner.trim(),
        };
    }
    trimmed
}

/// Contents of the first fenced block, if any fence exists. An unterminated
/// fence runs to the end of the text.
pub fn first_fenced_block(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    let after = &text[open + 3..];
    let body_start = after.find('\n').map(|p| p + 1).unwrap_or(after.len());
    let body = &after[body_start..];
    let body = match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    };
    Some(body)
}

/// Blank lines and lines holding only a comment carry no code.
pub fn is_significant_line(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && !t.starts_with('#')
}

pub fn significant_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| is_significant_line(l)).collect()
}

/// Removes the longest common leading whitespace of all non-blank lines.
pub fn dedent(text: &str) -> String {
    let indent = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if line.trim().is_empty() {
            out.push_str(line.trim_start_matches([' ', '\t']));
        } else {
            out.push_str(&line[indent.min(line.len())..]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers() {
        assert!(is_identifier("to_numpy"));
        assert!(is_identifier("_x1"));
        assert!(!is_identifier("1x"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("json.dump"));
    }

    #[test]
    fn fence_wrapper() {
        assert_eq!(strip_fence_wrapper("```\nto_numpy\n```"), "to_numpy");
        assert_eq!(strip_fence_wrapper("```python\nx = 1\n```\n"), "x = 1");
        assert_eq!(strip_fence_wrapper("  to_numpy\n"), "to_numpy");
    }

    #[test]
    fn first_block() {
        let raw = "Here you go:\n```python\nx = 1\n```\nand more ```y```";
        assert_eq!(first_fenced_block(raw), Some("x = 1\n"));
        assert_eq!(first_fenced_block("no fence"), None);
        assert_eq!(first_fenced_block("```\nopen"), Some("open"));
    }

    #[test]
    fn dedent_common_indent() {
        assert_eq!(dedent("    a\n      b\n\n    c"), "a\n  b\n\nc");
        assert_eq!(dedent("a\n  b"), "a\n  b");
    }
}
