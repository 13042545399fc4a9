//! Whole-document removal of contaminated documents.

use serde::{Deserialize, Serialize};

use crate::corpus_io::Document;
use crate::defs::{ratio, DefinitionParams};
use crate::error::Result;
use crate::ngram::NGramIndex;
use crate::scan::Scanner;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalReport {
    #[serde(flatten, with = "crate::defs::params_record")]
    pub definition: DefinitionParams,
    pub docs_total: u64,
    pub docs_removed: u64,
    pub tokens_total: u64,
    pub tokens_removed: u64,
    pub doc_ratio: f64,
    pub token_ratio: f64,
}

impl RemovalReport {
    fn new(definition: DefinitionParams) -> Self {
        Self {
            definition,
            docs_total: 0,
            docs_removed: 0,
            tokens_total: 0,
            tokens_removed: 0,
            doc_ratio: 0.0,
            token_ratio: 0.0,
        }
    }

    fn finish(mut self) -> Self {
        self.doc_ratio = ratio(self.docs_removed as usize, self.docs_total as usize);
        self.token_ratio = ratio(self.tokens_removed as usize, self.tokens_total as usize);
        self
    }
}

/// Drops every document the definition judges contaminated.
///
/// Kept documents go to `keep` in input order; `removed` receives the ids of
/// dropped documents. Token counters use normalized tokens.
pub fn filter_corpus<I, K>(
    corpus: I,
    eval_index: &NGramIndex,
    params: DefinitionParams,
    workers: usize,
    mut keep: K,
    mut removed: impl FnMut(&str),
) -> Result<RemovalReport>
where
    I: IntoIterator<Item = Result<Document>>,
    K: FnMut(Document) -> Result<()>,
{
    let scanner = Scanner::new(eval_index, params, workers)?;
    let mut report = RemovalReport::new(params);
    scanner.run(corpus, |doc, verdict| {
        report.docs_total += 1;
        report.tokens_total += verdict.token_count as u64;
        if verdict.contaminated {
            report.docs_removed += 1;
            report.tokens_removed += verdict.token_count as u64;
            removed(&doc.id);
            Ok(())
        } else {
            keep(doc)
        }
    })?;
    Ok(report.finish())
}

/// In-memory convenience over [`filter_corpus`].
pub fn filter_documents(
    corpus: Vec<Document>,
    eval_index: &NGramIndex,
    params: DefinitionParams,
    workers: usize,
) -> Result<(Vec<Document>, RemovalReport)> {
    let mut kept = Vec::new();
    let report = filter_corpus(
        corpus.into_iter().map(Ok),
        eval_index,
        params,
        workers,
        |d| {
            kept.push(d);
            Ok(())
        },
        |_| {},
    )?;
    Ok((kept, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::token_strings;
    use crate::ngram::{build_index, IndexSource};

    fn eval_index(texts: &[&str], n: usize) -> NGramIndex {
        build_index(
            texts.iter().map(|t| token_strings(t)),
            n,
            42,
            IndexSource::EvalSide,
            false,
        )
        .unwrap()
    }

    fn planted_corpus() -> (Vec<Document>, &'static str) {
        let eval = "the quick brown fox jumps over the lazy sleeping dog";
        let docs = (0..100)
            .map(|i| {
                let text = if i % 20 == 3 {
                    format!("Filler number {i} here. {eval}. More filler.")
                } else {
                    format!("Unrelated document {i} about gardening and soil.")
                };
                Document::new(format!("d{i}"), text)
            })
            .collect();
        (docs, eval)
    }

    #[test]
    fn removes_planted_documents() {
        let (docs, eval) = planted_corpus();
        let idx = eval_index(&[eval], 8);
        let (kept, report) =
            filter_documents(docs, &idx, DefinitionParams::direct(8).unwrap(), 1).unwrap();
        assert_eq!(kept.len(), 95);
        assert_eq!(report.docs_removed, 5);
        assert_eq!(report.doc_ratio, 0.05);
        assert!(report.tokens_removed <= report.tokens_total);
    }

    #[test]
    fn disjoint_vocabulary_keeps_everything() {
        let (docs, _) = planted_corpus();
        let idx = eval_index(&["zebra quagga okapi tapir"], 2);
        let (kept, report) =
            filter_documents(docs.clone(), &idx, DefinitionParams::direct(2).unwrap(), 2).unwrap();
        assert_eq!(kept, docs);
        assert_eq!(report.doc_ratio, 0.0);
        assert_eq!(report.token_ratio, 0.0);
    }

    #[test]
    fn idempotent() {
        let (docs, eval) = planted_corpus();
        let idx = eval_index(&[eval], 4);
        let params = DefinitionParams::llama2(4, 0.1).unwrap();
        let (once, _) = filter_documents(docs, &idx, params, 1).unwrap();
        let (twice, report) = filter_documents(once.clone(), &idx, params, 1).unwrap();
        assert_eq!(once, twice);
        assert_eq!(report.docs_removed, 0);
    }

    #[test]
    fn empty_corpus_report() {
        let idx = eval_index(&["a b c"], 2);
        let (_, report) =
            filter_documents(vec![], &idx, DefinitionParams::direct(2).unwrap(), 1).unwrap();
        assert_eq!((report.doc_ratio, report.token_ratio), (0.0, 0.0));
    }

    #[test]
    fn mismatched_index_is_config_error() {
        let idx = eval_index(&["a b c"], 2);
        let err =
            filter_documents(vec![], &idx, DefinitionParams::direct(3).unwrap(), 1).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Config);
    }
}
