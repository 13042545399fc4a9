//! Corpus and evaluation-set ingestion.

mod jsonl;
mod tokenize;

use std::ops::Range;

pub use jsonl::{
    read_corpus, read_eval, write_corpus, write_eval, AtomicFile, CorpusReader, CorpusWriter,
};
pub use tokenize::{split_sentences, tokenize, tokenize_bytes, Token, Tokenizer, WordTokenizer};

use serde::{Deserialize, Serialize};

/// A pre-training corpus document.
///
/// When a document was read from disk the original line is kept so that
/// writing it back reproduces the input byte for byte, unknown keys included.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub text: String,
    raw: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            raw: None,
        }
    }

    pub(crate) fn with_raw(id: String, text: String, raw: String) -> Self {
        Self {
            id,
            text,
            raw: Some(raw),
        }
    }

    /// The JSONL line this document serializes to (no trailing newline).
    pub fn to_line(&self) -> String {
        match &self.raw {
            Some(raw) => raw.clone(),
            None => serde_json::to_string(&DocumentRecord {
                id: &self.id,
                text: &self.text,
            })
            .expect("string fields always serialize"),
        }
    }

    pub fn tokenized(&self) -> TokenizedDocument {
        TokenizedDocument::new(&self.id, &self.text)
    }
}

impl PartialEq for Document {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.text == other.text
    }
}

impl Eq for Document {}

#[derive(Serialize)]
struct DocumentRecord<'a> {
    id: &'a str,
    text: &'a str,
}

/// A document after tokenization and sentence splitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDocument {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub spans: Vec<Range<usize>>,
    pub sentences: Vec<Range<usize>>,
}

impl TokenizedDocument {
    pub fn new(doc_id: &str, text: &str) -> Self {
        Self::with_tokenizer(&WordTokenizer, doc_id, text)
    }

    pub fn with_tokenizer(tokenizer: &dyn Tokenizer, doc_id: &str, text: &str) -> Self {
        let (tokens, spans): (Vec<_>, Vec<_>) = tokenizer
            .tokenize(text)
            .into_iter()
            .map(|t| (t.text, t.span))
            .unzip();
        let sentences = split_sentences(text, &spans);
        Self {
            doc_id: doc_id.to_owned(),
            tokens,
            spans,
            sentences,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sentence_tokens(&self) -> impl Iterator<Item = &[String]> {
        self.sentences.iter().map(|r| &self.tokens[r.clone()])
    }
}

/// One evaluation record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSample {
    pub id: String,
    pub dataset: String,
    #[serde(rename = "text")]
    pub input_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
}

impl EvalSample {
    pub fn new(id: impl Into<String>, dataset: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            dataset: dataset.into(),
            input_text: text.into(),
            prompt: None,
            answer: None,
            choices: None,
        }
    }

    pub fn input_tokens(&self) -> Vec<String> {
        token_strings(&self.input_text)
    }

    /// Token sequences of every field, each tokenized on its own: input text,
    /// prompt, answer, then each choice.
    pub fn field_tokens(&self) -> Vec<Vec<String>> {
        let mut out = vec![self.input_tokens()];
        out.extend(self.prompt.iter().map(|p| token_strings(p)));
        out.extend(self.answer.iter().map(|a| token_strings(a)));
        if let Some(choices) = &self.choices {
            out.extend(choices.iter().map(|c| token_strings(c)));
        }
        out
    }
}

/// Which evaluation fields feed an eval-side index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalFields {
    /// Input text only.
    #[default]
    Text,
    /// Input text, prompt, answer and choices, each windowed separately.
    All,
}

/// Token sequences to index for a set of samples.
pub fn eval_sequences(samples: &[EvalSample], fields: EvalFields) -> Vec<Vec<String>> {
    match fields {
        EvalFields::Text => samples.iter().map(EvalSample::input_tokens).collect(),
        EvalFields::All => samples.iter().flat_map(EvalSample::field_tokens).collect(),
    }
}

/// Normalized token strings of `text`, spans discarded.
pub fn token_strings(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentences_partition_tokens() {
        let doc = TokenizedDocument::new("d", "One two. Three! Four five six? seven");
        assert_eq!(doc.sentences, [0..2, 2..3, 3..6, 6..7]);
        let total: usize = doc.sentences.iter().map(|r| r.len()).sum();
        assert_eq!(total, doc.len());
    }

    #[test]
    fn empty_document_is_legal() {
        let doc = TokenizedDocument::new("e", "");
        assert!(doc.is_empty());
        assert!(doc.sentences.is_empty());
    }

    #[test]
    fn field_tokens_keep_fields_apart() {
        let mut s = EvalSample::new("1", "mmlu", "What is two plus two?");
        s.prompt = Some("Answer:".into());
        s.answer = Some("four".into());
        s.choices = Some(vec!["three".into(), "four".into()]);
        let fields = s.field_tokens();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[1], ["answer"]);
        assert_eq!(fields[4], ["four"]);
    }
}
