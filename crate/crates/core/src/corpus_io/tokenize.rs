//! Word-level tokenization and naive sentence splitting.
//!
//! Tokens are maximal runs of alphanumeric characters (plus combining marks),
//! NFKC-normalized and lower-cased. Everything else (whitespace, punctuation,
//! symbols) separates tokens and never appears in one.

use std::ops::Range;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// A normalized token together with the byte range it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: Range<usize>,
}

/// Splits raw text into normalized tokens.
///
/// Implementations must be deterministic and return spans that are
/// non-overlapping and strictly ascending.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<Token>;
}

/// The default tokenizer: NFKC + lower-case, split on whitespace and punctuation.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordTokenizer;

impl Tokenizer for WordTokenizer {
    fn tokenize(&self, text: &str) -> Vec<Token> {
        tokenize(text)
    }
}

#[inline]
fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

// NFKC can expand a word character into separators (U+FE72 becomes a space
// plus a combining mark), so those are dropped again after normalizing.
fn normalize(segment: &str) -> String {
    if segment.is_ascii() {
        segment.to_ascii_lowercase()
    } else {
        segment
            .nfkc()
            .collect::<String>()
            .to_lowercase()
            .chars()
            .filter(|&c| is_word_char(c))
            .collect()
    }
}

fn push_token(tokens: &mut Vec<Token>, text: &str, span: Range<usize>) {
    let text = normalize(&text[span.clone()]);
    if !text.is_empty() {
        tokens.push(Token { text, span });
    }
}

/// Tokenizes `text` with [`WordTokenizer`] rules.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match (is_word_char(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                push_token(&mut tokens, text, s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        push_token(&mut tokens, text, s..text.len());
    }
    tokens
}

/// Like [`tokenize`] but starts from raw bytes, rejecting invalid UTF-8.
pub fn tokenize_bytes(bytes: &[u8]) -> Result<Vec<Token>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    Ok(tokenize(text))
}

#[inline]
fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Places sentence boundaries over an already tokenized text.
///
/// A boundary follows token `i` when the raw text between it and the next
/// token contains `.`, `!` or `?` immediately followed by whitespace or by the
/// end of the text. The last token always closes a sentence. Abbreviations
/// are not special-cased.
pub fn split_sentences(text: &str, spans: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut sentences = Vec::new();
    let mut start = 0;
    for (i, span) in spans.iter().enumerate() {
        let gap_end = spans.get(i + 1).map_or(text.len(), |next| next.start);
        let last = i + 1 == spans.len();
        if last || gap_ends_sentence(&text[span.end..gap_end], gap_end == text.len()) {
            sentences.push(start..i + 1);
            start = i + 1;
        }
    }
    sentences
}

fn gap_ends_sentence(gap: &str, at_end_of_text: bool) -> bool {
    let mut chars = gap.chars().peekable();
    while let Some(c) = chars.next() {
        if is_terminator(c) {
            match chars.peek() {
                Some(next) if next.is_whitespace() => return true,
                None if at_end_of_text => return true,
                _ => {}
            }
        }
    }
    false
}
