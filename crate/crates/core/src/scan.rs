//! Chunked, order-preserving parallel judging of document streams.

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::corpus_io::Document;
use crate::defs::{judge_document_unchecked, DefinitionParams, DocumentVerdict};
use crate::error::{Error, Result};
use crate::ngram::{IndexSource, NGramIndex};

const CHUNK: usize = 4096;

/// Judges corpus documents against a shared eval-side index.
///
/// Documents are read in fixed-size chunks; each chunk is tokenized and judged
/// (in parallel when `workers > 1`) and then handed to the sink in input
/// order, so results do not depend on the worker count.
pub struct Scanner<'a> {
    index: &'a NGramIndex,
    params: DefinitionParams,
    pool: Option<ThreadPool>,
}

impl<'a> Scanner<'a> {
    pub fn new(index: &'a NGramIndex, params: DefinitionParams, workers: usize) -> Result<Self> {
        params.check_index(index, IndexSource::EvalSide)?;
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::param(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self {
            index,
            params,
            pool,
        })
    }

    pub fn params(&self) -> &DefinitionParams {
        &self.params
    }

    pub fn judge(&self, doc: &Document) -> DocumentVerdict {
        judge_document_unchecked(&doc.tokenized(), self.index, &self.params)
    }

    fn judge_chunk(&self, chunk: &[Document]) -> Vec<DocumentVerdict> {
        match &self.pool {
            Some(pool) => pool.install(|| chunk.par_iter().map(|d| self.judge(d)).collect()),
            None => chunk.iter().map(|d| self.judge(d)).collect(),
        }
    }

    /// Streams `docs` through the definition, calling `sink` once per document in order.
    pub fn run<I, F>(&self, docs: I, mut sink: F) -> Result<()>
    where
        I: IntoIterator<Item = Result<Document>>,
        F: FnMut(Document, DocumentVerdict) -> Result<()>,
    {
        let mut docs = docs.into_iter();
        let mut chunk = Vec::with_capacity(CHUNK);
        loop {
            chunk.clear();
            for doc in docs.by_ref().take(CHUNK) {
                chunk.push(doc?);
            }
            if chunk.is_empty() {
                return Ok(());
            }
            let verdicts = self.judge_chunk(&chunk);
            for (doc, verdict) in chunk.drain(..).zip(verdicts) {
                sink(doc, verdict)?;
            }
        }
    }
}
