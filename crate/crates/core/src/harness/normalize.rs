use crate::error::{Error, Result};
use crate::model::Granularity;
use crate::syntax::lexical::raw_identifier_spans;
use crate::text::first_fenced_block;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub text: String,
    pub warnings: Vec<String>,
}

/// Reduces raw model output to code: the first fenced block when a fence
/// exists, otherwise the trimmed text. At token granularity only the first
/// identifier-like token is kept, with a warning if anything was dropped.
pub fn normalize_generation(raw: &str, granularity: Granularity) -> Result<Normalized> {
    let mut warnings = Vec::new();
    let body = match first_fenced_block(raw) {
        Some(block) => block.trim(),
        None => raw.trim(),
    };
    let text = if granularity == Granularity::Token {
        let first = raw_identifier_spans(body).into_iter().next().map(|s| s.text);
        match first {
            Some(token) if token != body => {
                warnings.push(format!("token output reduced from {body:?} to {token:?}"));
                token
            }
            Some(token) => token,
            None => "",
        }
    } else {
        body
    };
    if text.is_empty() {
        return Err(Error::EmptyAfterNormalization);
    }
    Ok(Normalized {
        text: text.to_string(),
        warnings,
    })
}
