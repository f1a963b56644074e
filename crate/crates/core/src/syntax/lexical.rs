//! Lexical identifier scanning that works on arbitrary, possibly broken,
//! source text.

use crate::text::{is_identifier_continue, is_identifier_start};

/// Python hard keywords. Soft keywords (`match`, `case`, `type`, `_`) are
/// ordinary identifiers outside their special positions.
const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// An identifier occurrence with its byte span in the scanned text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentSpan<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// String literal boundaries could not be recognized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Unterminated;

/// Identifier tokens in source order, skipping keywords, comments, string
/// literals and numeric literals. If string boundaries cannot be
/// recognized, falls back to [`raw_identifier_spans`].
pub fn identifier_spans(code: &str) -> Vec<IdentSpan<'_>> {
    scan(code).unwrap_or_else(|_| raw_identifier_spans(code))
}

pub fn identifiers(code: &str) -> Vec<&str> {
    identifier_spans(code).into_iter().map(|s| s.text).collect()
}

/// Identifier-pattern scan over raw text: every maximal run of identifier
/// characters that starts with a letter or underscore and is not a keyword.
pub fn raw_identifier_spans(code: &str) -> Vec<IdentSpan<'_>> {
    let mut out = Vec::new();
    let mut iter = code.char_indices().peekable();
    while let Some((start, c)) = iter.next() {
        if !is_identifier_continue(c) {
            continue;
        }
        let mut end = start + c.len_utf8();
        while let Some(&(i, d)) = iter.peek() {
            if !is_identifier_continue(d) {
                break;
            }
            end = i + d.len_utf8();
            iter.next();
        }
        let word = &code[start..end];
        if is_identifier_start(c) && !is_keyword(word) {
            out.push(IdentSpan { text: word, start, end });
        }
    }
    out
}

fn is_string_prefix(word: &str) -> bool {
    word.len() <= 2
        && word
            .chars()
            .all(|c| matches!(c.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f'))
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.text[self.pos..].chars().nth(offset)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    /// Called with the cursor on the opening quote.
    fn skip_string(&mut self) -> Result<(), Unterminated> {
        let quote = self.bump().ok_or(Unterminated)?;
        let triple = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        loop {
            match self.bump() {
                None => return Err(Unterminated),
                Some('\\') => {
                    self.bump();
                }
                Some('\n') if !triple => return Err(Unterminated),
                Some(c) if c == quote => {
                    if !triple {
                        return Ok(());
                    }
                    if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                        self.bump();
                        self.bump();
                        return Ok(());
                    }
                }
                Some(_) => {}
            }
        }
    }

    fn skip_number(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                let exponent = matches!(c, 'e' | 'E');
                self.bump();
                if exponent && matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn take_word(&mut self) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !is_identifier_continue(c) {
                break;
            }
            self.bump();
        }
        &self.text[start..self.pos]
    }
}

pub(crate) fn scan(code: &str) -> Result<Vec<IdentSpan<'_>>, Unterminated> {
    let mut out = Vec::new();
    let mut cur = Cursor { text: code, pos: 0 };
    while let Some(c) = cur.peek() {
        if c == '#' {
            cur.skip_comment();
        } else if c == '"' || c == '\'' {
            cur.skip_string()?;
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            cur.skip_number();
        } else if is_identifier_start(c) {
            let start = cur.pos;
            let word = cur.take_word();
            if is_string_prefix(word) && matches!(cur.peek(), Some('"' | '\'')) {
                cur.skip_string()?;
            } else if !is_keyword(word) {
                out.push(IdentSpan { text: word, start, end: cur.pos });
            }
        } else {
            cur.bump();
        }
    }
    Ok(out)
}

/// True when `text` starts with `(` whose matching `)` is the final
/// non-whitespace character. Strings and comments are skipped.
pub(crate) fn is_fully_parenthesized(text: &str) -> bool {
    let trimmed = text.trim_end();
    let mut cur = Cursor { text: trimmed, pos: 0 };
    if cur.peek() != Some('(') {
        return false;
    }
    let mut depth = 0usize;
    while let Some(c) = cur.peek() {
        match c {
            '#' => cur.skip_comment(),
            '"' | '\'' => {
                if cur.skip_string().is_err() {
                    return false;
                }
            }
            '(' | '[' | '{' => {
                depth += 1;
                cur.bump();
            }
            ')' | ']' | '}' => {
                cur.bump();
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return cur.pos == trimmed.len();
                }
            }
            _ if is_identifier_start(c) => {
                let word = cur.take_word();
                if is_string_prefix(word) && matches!(cur.peek(), Some('"' | '\'')) && cur.skip_string().is_err() {
                    return false;
                }
            }
            _ => {
                cur.bump();
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_strings_comments_numbers_keywords() {
        let code = "x = f'{y}' + b\"z\" # note w\nif a and 1e-5 and 0x1F: return df.explode('A')";
        assert_eq!(identifiers(code), vec!["x", "a", "df", "explode"]);
    }

    #[test]
    fn triple_quoted_strings() {
        let code = "s = '''a\nb ' c'''\nt = r\"\\\"q\"";
        assert_eq!(identifiers(code), vec!["s", "t"]);
    }

    #[test]
    fn unterminated_string_falls_back_to_raw_scan() {
        let code = "x = 'abc\ny = 2";
        assert_eq!(identifiers(code), vec!["x", "abc", "y"]);
    }

    #[test]
    fn word_boundaries() {
        assert_eq!(identifiers("exploded = transform(x)"), vec!["exploded", "transform", "x"]);
        assert_eq!(raw_identifier_spans("1abc def_ x").len(), 2);
    }

    #[test]
    fn spans_are_byte_offsets() {
        let spans = identifier_spans("é = ab");
        assert_eq!(spans[1].start, 5);
        assert_eq!(&"é = ab"[spans[1].start..spans[1].end], "ab");
    }

    #[test]
    fn parenthesized() {
        assert!(is_fully_parenthesized("(a for a in b)"));
        assert!(!is_fully_parenthesized("(a) for a in b"));
        assert!(!is_fully_parenthesized("(a) for a in (b)"));
        assert!(is_fully_parenthesized("(a for a in ')')"));
    }
}
