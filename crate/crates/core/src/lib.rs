//! Toolkit for finding, planting and removing evaluation-data contamination in
//! language-model pre-training corpora.
//!
//! The pieces, bottom up:
//!
//! - [`corpus_io`]: JSONL corpora and evaluation sets, tokenization, sentences.
//! - [`ngram`]: rolling n-gram fingerprints and membership indexes.
//! - [`defs`]: direct n-gram overlap, the PaLM fraction rule and the Llama 2
//!   token-marking rule, plus clean/dirty bucketing.
//! - [`injector`]: building contaminated corpora with a repetition factor.
//! - [`cleaner`]: dropping contaminated documents.
//! - [`reporter`]: aggregate statistics, sweeps and bucket exports.

pub mod cleaner;
pub mod corpus_io;
pub mod defs;
mod error;
pub mod injector;
pub mod ngram;
pub mod reporter;
pub mod scan;

pub use error::{Error, ErrorKind, Result};
