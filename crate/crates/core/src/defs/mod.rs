//! The three n-gram contamination definitions.
//!
//! Train-side checks judge a corpus document against an index built from the
//! evaluation data. Eval-side checks judge an evaluation sample against an
//! index built from the corpus. All routines are pure functions of their
//! inputs and may run concurrently against a shared index.
//!
//! A verdict with no evidence (no window hit, no marked token) is never
//! contaminated, whatever the threshold.

mod threshold;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use threshold::Threshold;

use crate::corpus_io::TokenizedDocument;
use crate::error::{Error, Result};
use crate::ngram::{IndexSource, NGramIndex};

pub const DEFAULT_PALM_N: usize = 8;
pub const DEFAULT_PALM_LAMBDA: f64 = 0.7;
/// "longer than 10 tokens", read as runs of at least 11.
pub const DEFAULT_LLAMA2_MIN_MATCH: usize = 11;
pub const DEFAULT_LAMBDA_CLEAN: f64 = 0.2;
pub const DEFAULT_LAMBDA_DIRTY: f64 = 0.8;

/// Unit over which the Llama 2 token percentage is taken on the train side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    Document,
    Sentence,
}

/// A contamination definition together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "definition", rename_all = "snake_case")]
pub enum DefinitionParams {
    #[serde(rename = "direct")]
    DirectOverlap {
        n: usize,
    },
    Palm {
        n: usize,
        lambda: Threshold,
    },
    Llama2 {
        min_match_len: usize,
        lambda: Threshold,
        #[serde(default)]
        granularity: Granularity,
    },
}

impl DefinitionParams {
    pub fn direct(n: usize) -> Result<Self> {
        Self::DirectOverlap { n }.validated()
    }

    pub fn palm(n: usize, lambda: f64) -> Result<Self> {
        Self::Palm {
            n,
            lambda: Threshold::new(lambda)?,
        }
        .validated()
    }

    pub fn llama2(min_match_len: usize, lambda: f64) -> Result<Self> {
        Self::Llama2 {
            min_match_len,
            lambda: Threshold::new(lambda)?,
            granularity: Granularity::Document,
        }
        .validated()
    }

    pub fn with_granularity(self, granularity: Granularity) -> Self {
        match self {
            Self::Llama2 {
                min_match_len,
                lambda,
                ..
            } => Self::Llama2 {
                min_match_len,
                lambda,
                granularity,
            },
            other => other,
        }
    }

    pub fn validated(self) -> Result<Self> {
        if self.gram_len() == 0 {
            return Err(Error::param("n-gram length must be at least 1"));
        }
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::DirectOverlap { .. } => "direct",
            Self::Palm { .. } => "palm",
            Self::Llama2 { .. } => "llama2",
        }
    }

    /// The index gram length this definition needs (`n`, or `L` for Llama 2).
    pub fn gram_len(&self) -> usize {
        match *self {
            Self::DirectOverlap { n } | Self::Palm { n, .. } => n,
            Self::Llama2 { min_match_len, .. } => min_match_len,
        }
    }

    pub fn lambda(&self) -> Option<Threshold> {
        match *self {
            Self::DirectOverlap { .. } => None,
            Self::Palm { lambda, .. } | Self::Llama2 { lambda, .. } => Some(lambda),
        }
    }

    /// Checks that `index` can serve this definition for the given direction.
    pub fn check_index(&self, index: &NGramIndex, side: IndexSource) -> Result<()> {
        if index.source() != side {
            return Err(Error::Config(format!(
                "index is {}, expected {}",
                side_name(index.source()),
                side_name(side)
            )));
        }
        if index.n() != self.gram_len() {
            return Err(Error::Config(format!(
                "index gram length {} does not match {} parameter {}",
                index.n(),
                self.name(),
                self.gram_len()
            )));
        }
        Ok(())
    }
}

/// Serde adapter writing params as `"definition": name, "params": {...}`;
/// use with `#[serde(flatten, with = "params_record")]`.
pub mod params_record {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    use super::DefinitionParams;

    #[derive(Serialize, Deserialize)]
    struct Record {
        definition: String,
        params: Value,
    }

    pub fn serialize<S: Serializer>(p: &DefinitionParams, s: S) -> Result<S::Ok, S::Error> {
        let mut params = serde_json::to_value(p).map_err(serde::ser::Error::custom)?;
        if let Value::Object(map) = &mut params {
            map.remove("definition");
        }
        Record {
            definition: p.name().to_owned(),
            params,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DefinitionParams, D::Error> {
        let Record { definition, params } = Record::deserialize(d)?;
        let mut params = params;
        match &mut params {
            Value::Object(map) => {
                map.insert("definition".into(), Value::String(definition));
            }
            _ => return Err(serde::de::Error::custom("params must be an object")),
        }
        serde_json::from_value(params).map_err(serde::de::Error::custom)
    }
}

fn side_name(side: IndexSource) -> &'static str {
    match side {
        IndexSource::EvalSide => "eval-side",
        IndexSource::CorpusSide => "corpus-side",
    }
}

impl fmt::Display for DefinitionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DirectOverlap { n } => write!(f, "direct(n={n})"),
            Self::Palm { n, lambda } => write!(f, "palm(n={n}, lambda={lambda})"),
            Self::Llama2 {
                min_match_len,
                lambda,
                granularity,
            } => write!(
                f,
                "llama2(L={min_match_len}, lambda={lambda}, {granularity:?})"
            ),
        }
    }
}

/// Judgment of one corpus document (or one sample judged like a document).
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentVerdict {
    pub doc_id: String,
    pub contaminated: bool,
    pub fraction: f64,
    pub contaminated_token_count: usize,
    pub token_count: usize,
    pub sentence_flags: Option<Vec<bool>>,
}

impl DocumentVerdict {
    fn clean(doc_id: &str, token_count: usize) -> Self {
        Self {
            doc_id: doc_id.to_owned(),
            contaminated: false,
            fraction: 0.0,
            contaminated_token_count: 0,
            token_count,
            sentence_flags: None,
        }
    }
}

/// Token-level marking of an evaluation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVerdict {
    pub sample_id: String,
    pub token_count: usize,
    pub marked_token_indices: Vec<usize>,
    pub contamination_percentage: f64,
}

impl SampleVerdict {
    pub fn marked_count(&self) -> usize {
        self.marked_token_indices.len()
    }

    /// Synthetic verdict with an exact percentage, for bucketing precomputed scores.
    pub fn from_counts(sample_id: impl Into<String>, marked: usize, token_count: usize) -> Self {
        assert!(marked <= token_count);
        Self {
            sample_id: sample_id.into(),
            token_count,
            marked_token_indices: (0..marked).collect(),
            contamination_percentage: ratio(marked, token_count),
        }
    }
}

/// PaLM eval-side result: window hit counts of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PalmSampleVerdict {
    pub sample_id: String,
    pub windows: usize,
    pub hits: usize,
    pub fraction: f64,
    pub contaminated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleanSide {
    Clean,
    NotClean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirtySide {
    NotDirty,
    Dirty,
}

/// Placement of a sample on the clean split and on the dirty split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketLabel {
    pub clean_side: CleanSide,
    pub dirty_side: DirtySide,
}

pub(crate) fn ratio(part: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

/// Direct n-gram overlap on the train side.
///
/// A sentence is flagged when any of its windows is in the eval index; the
/// document is contaminated when any sentence is flagged.
pub fn direct_overlap_verdict(doc: &TokenizedDocument, eval_index: &NGramIndex) -> DocumentVerdict {
    let flags: Vec<bool> = doc
        .sentence_tokens()
        .map(|s| eval_index.window_hits(s).contains(&true))
        .collect();
    let flagged_tokens = doc
        .sentences
        .iter()
        .zip(&flags)
        .filter(|(_, &f)| f)
        .map(|(r, _)| r.len())
        .sum();
    let contaminated = flags.contains(&true);
    DocumentVerdict {
        doc_id: doc.doc_id.clone(),
        contaminated,
        fraction: if contaminated { 1.0 } else { 0.0 },
        contaminated_token_count: flagged_tokens,
        token_count: doc.len(),
        sentence_flags: Some(flags),
    }
}

/// PaLM's rule on the train side: a sentence is contaminated when strictly
/// more than `lambda` of its windows are in the eval index.
pub fn palm_train_verdict(
    doc: &TokenizedDocument,
    eval_index: &NGramIndex,
    lambda: Threshold,
) -> DocumentVerdict {
    let mut max_fraction = 0.0f64;
    let mut flags = Vec::with_capacity(doc.sentences.len());
    let mut flagged_tokens = 0;
    for (range, sentence) in doc.sentences.iter().zip(doc.sentence_tokens()) {
        let hits = eval_index.window_hits(sentence);
        let windows = hits.len();
        let hit_count = hits.iter().filter(|&&h| h).count();
        let flagged = windows > 0 && lambda.lt_ratio(hit_count, windows);
        max_fraction = max_fraction.max(ratio(hit_count, windows));
        if flagged {
            flagged_tokens += range.len();
        }
        flags.push(flagged);
    }
    DocumentVerdict {
        doc_id: doc.doc_id.clone(),
        contaminated: flags.contains(&true),
        fraction: max_fraction,
        contaminated_token_count: flagged_tokens,
        token_count: doc.len(),
        sentence_flags: Some(flags),
    }
}

/// PaLM's rule on the eval side: at least `lambda` of the sample's windows
/// were seen in the corpus. Samples shorter than `n` are clean.
pub fn palm_eval_verdict(
    sample_id: &str,
    tokens: &[String],
    corpus_index: &NGramIndex,
    lambda: Threshold,
) -> PalmSampleVerdict {
    let hits = corpus_index.window_hits(tokens);
    let windows = hits.len();
    let hit_count = hits.iter().filter(|&&h| h).count();
    PalmSampleVerdict {
        sample_id: sample_id.to_owned(),
        windows,
        hits: hit_count,
        fraction: ratio(hit_count, windows),
        contaminated: hit_count > 0 && lambda.le_ratio(hit_count, windows),
    }
}

fn marked_positions(tokens: &[String], index: &NGramIndex) -> Vec<usize> {
    let l = index.n();
    let mut marked = vec![false; tokens.len()];
    // Every shared run of length >= L is covered exactly by its L-windows.
    let mut covered_to = 0;
    for (start, hit) in index.window_hits(tokens).into_iter().enumerate() {
        if hit {
            for m in &mut marked[start.max(covered_to)..start + l] {
                *m = true;
            }
            covered_to = start + l;
        }
    }
    marked
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect()
}

/// Llama 2 token marking: a token is contaminated when it lies inside a run
/// of at least `min_match_len` tokens shared with the other side.
pub fn llama2_mark_tokens(
    sample_id: &str,
    tokens: &[String],
    other_index: &NGramIndex,
    min_match_len: usize,
) -> Result<SampleVerdict> {
    if other_index.n() != min_match_len {
        return Err(Error::param(format!(
            "index gram length {} differs from minimum match length {min_match_len}",
            other_index.n()
        )));
    }
    let marked = marked_positions(tokens, other_index);
    Ok(SampleVerdict {
        sample_id: sample_id.to_owned(),
        token_count: tokens.len(),
        contamination_percentage: ratio(marked.len(), tokens.len()),
        marked_token_indices: marked,
    })
}

/// Llama 2 on the train side: the document's contaminated-token percentage
/// is compared against `lambda` (at-least semantics).
pub fn llama2_train_verdict(
    doc: &TokenizedDocument,
    eval_index: &NGramIndex,
    lambda: Threshold,
    granularity: Granularity,
) -> DocumentVerdict {
    match granularity {
        Granularity::Document => {
            let marked = marked_positions(&doc.tokens, eval_index).len();
            let contaminated = marked > 0 && lambda.le_ratio(marked, doc.len());
            DocumentVerdict {
                doc_id: doc.doc_id.clone(),
                contaminated,
                fraction: ratio(marked, doc.len()),
                contaminated_token_count: if contaminated { marked } else { 0 },
                token_count: doc.len(),
                sentence_flags: None,
            }
        }
        Granularity::Sentence => {
            let mut max_fraction = 0.0f64;
            let mut flags = Vec::with_capacity(doc.sentences.len());
            let mut count = 0;
            for sentence in doc.sentence_tokens() {
                let marked = marked_positions(sentence, eval_index).len();
                let flagged = marked > 0 && lambda.le_ratio(marked, sentence.len());
                max_fraction = max_fraction.max(ratio(marked, sentence.len()));
                if flagged {
                    count += marked;
                }
                flags.push(flagged);
            }
            DocumentVerdict {
                doc_id: doc.doc_id.clone(),
                contaminated: flags.contains(&true),
                fraction: max_fraction,
                contaminated_token_count: count,
                token_count: doc.len(),
                sentence_flags: Some(flags),
            }
        }
    }
}

/// Judges a corpus document against an eval-side index under `params`.
pub fn judge_document(
    doc: &TokenizedDocument,
    eval_index: &NGramIndex,
    params: &DefinitionParams,
) -> Result<DocumentVerdict> {
    params.check_index(eval_index, IndexSource::EvalSide)?;
    Ok(judge_document_unchecked(doc, eval_index, params))
}

pub(crate) fn judge_document_unchecked(
    doc: &TokenizedDocument,
    eval_index: &NGramIndex,
    params: &DefinitionParams,
) -> DocumentVerdict {
    if doc.is_empty() {
        return DocumentVerdict::clean(&doc.doc_id, 0);
    }
    match *params {
        DefinitionParams::DirectOverlap { .. } => direct_overlap_verdict(doc, eval_index),
        DefinitionParams::Palm { lambda, .. } => palm_train_verdict(doc, eval_index, lambda),
        DefinitionParams::Llama2 {
            lambda,
            granularity,
            ..
        } => llama2_train_verdict(doc, eval_index, lambda, granularity),
    }
}

/// Judges an evaluation sample's input tokens against a corpus-side index.
///
/// `fraction` is 0/1 for direct overlap, the window hit fraction for PaLM and
/// the marked-token percentage for Llama 2. `contaminated_token_count` is the
/// number of tokens covered by hitting windows when the sample is contaminated.
pub fn judge_sample(
    sample_id: &str,
    tokens: &[String],
    corpus_index: &NGramIndex,
    params: &DefinitionParams,
) -> Result<DocumentVerdict> {
    params.check_index(corpus_index, IndexSource::CorpusSide)?;
    let covered = marked_positions(tokens, corpus_index).len();
    let (contaminated, fraction) = match *params {
        DefinitionParams::DirectOverlap { .. } => {
            let hit = covered > 0;
            (hit, if hit { 1.0 } else { 0.0 })
        }
        DefinitionParams::Palm { lambda, .. } => {
            let v = palm_eval_verdict(sample_id, tokens, corpus_index, lambda);
            (v.contaminated, v.fraction)
        }
        DefinitionParams::Llama2 { lambda, .. } => (
            covered > 0 && lambda.le_ratio(covered, tokens.len()),
            ratio(covered, tokens.len()),
        ),
    };
    Ok(DocumentVerdict {
        doc_id: sample_id.to_owned(),
        contaminated,
        fraction,
        contaminated_token_count: if contaminated { covered } else { 0 },
        token_count: tokens.len(),
        sentence_flags: None,
    })
}

/// Places a sample on both splits: Clean below `lambda_clean`, Dirty at or
/// above `lambda_dirty`.
pub fn bucket_assign(
    verdict: &SampleVerdict,
    lambda_clean: Threshold,
    lambda_dirty: Threshold,
) -> Result<BucketLabel> {
    if lambda_clean > lambda_dirty {
        return Err(Error::param(format!(
            "lambda_clean {lambda_clean} exceeds lambda_dirty {lambda_dirty}"
        )));
    }
    let marked = verdict.marked_count();
    let total = verdict.token_count;
    // an empty sample has percentage 0
    let (marked, total) = if total == 0 { (0, 1) } else { (marked, total) };
    let clean_side = if lambda_clean.le_ratio(marked, total) {
        CleanSide::NotClean
    } else {
        CleanSide::Clean
    };
    let dirty_side = if lambda_dirty.le_ratio(marked, total) {
        DirtySide::Dirty
    } else {
        DirtySide::NotDirty
    };
    Ok(BucketLabel {
        clean_side,
        dirty_side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::build_index;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    fn seq(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn doc(id: &str, text: &str) -> TokenizedDocument {
        TokenizedDocument::new(id, text)
    }

    fn eval_idx(texts: &[Vec<String>], n: usize) -> NGramIndex {
        build_index(texts, n, 42, IndexSource::EvalSide, true).unwrap()
    }

    fn corpus_idx(texts: &[Vec<String>], n: usize) -> NGramIndex {
        build_index(texts, n, 42, IndexSource::CorpusSide, true).unwrap()
    }

    fn t(v: f64) -> Threshold {
        Threshold::new(v).unwrap()
    }

    #[test]
    fn direct_overlap_verbatim_sentence_hits() {
        let eval = toks("w0 w1 w2 w3 w4 w5 w6 w7 w8");
        let idx = eval_idx(&[eval], 8);
        let d = doc("d", "Intro words here. w0 w1 w2 w3 w4 w5 w6 w7 w8. Outro.");
        let v = direct_overlap_verdict(&d, &idx);
        assert!(v.contaminated);
        assert_eq!(v.sentence_flags, Some(vec![false, true, false]));
        assert_eq!(v.contaminated_token_count, 9);
        assert_eq!(v.fraction, 1.0);
    }

    #[test]
    fn direct_overlap_seven_token_run_is_clean_at_eight() {
        let idx = eval_idx(&[seq("w", 12)], 8);
        let d = doc("d", "x w3 w4 w5 w6 w7 w8 w9 y z q");
        // brute force: no length-8 window of the doc is an eval window
        let dt = &d.tokens;
        let eval = seq("w", 12);
        let any = (0..=dt.len() - 8).any(|i| (0..=4).any(|j| dt[i..i + 8] == eval[j..j + 8]));
        assert!(!any);
        assert!(!direct_overlap_verdict(&d, &idx).contaminated);
    }

    #[test]
    fn empty_doc_is_clean() {
        let idx = eval_idx(&[seq("w", 10)], 8);
        let params = DefinitionParams::direct(8).unwrap();
        let v = judge_document(&doc("e", ""), &idx, &params).unwrap();
        assert!(!v.contaminated);
        assert_eq!(v.contaminated_token_count, 0);
    }

    #[test]
    fn palm_train_two_of_three_windows_is_clean_at_point_seven() {
        // eval holds windows 0 and 1 of the sentence but not window 2
        let sentence = seq("s", 10);
        let eval = sentence[..9].to_vec();
        let idx = eval_idx(&[eval], 8);
        let d = TokenizedDocument::new("d", &sentence.join(" "));
        let v = palm_train_verdict(&d, &idx, t(0.7));
        assert!((v.fraction - 2.0 / 3.0).abs() < 1e-12);
        assert!(!v.contaminated);
        assert!(palm_train_verdict(&d, &idx, t(0.6)).contaminated);
    }

    #[test]
    fn palm_train_identical_sentence() {
        let s = seq("s", 9);
        let idx = eval_idx(std::slice::from_ref(&s), 8);
        let d = TokenizedDocument::new("d", &s.join(" "));
        let v = palm_train_verdict(&d, &idx, t(0.99));
        assert_eq!(v.fraction, 1.0);
        assert!(v.contaminated);
        // strictly more than lambda: nothing exceeds 1
        assert!(!palm_train_verdict(&d, &idx, Threshold::ONE).contaminated);
    }

    #[test]
    fn palm_train_short_sentences_are_clean() {
        let idx = eval_idx(&[seq("s", 9)], 8);
        let d = doc("d", "s0 s1 s2. s3 s4 s5 s6.");
        let v = palm_train_verdict(&d, &idx, t(0.0));
        assert!(!v.contaminated);
        assert_eq!(v.fraction, 0.0);
    }

    #[test]
    fn palm_eval_cases() {
        let sample = seq("s", 10);
        let full = corpus_idx(std::slice::from_ref(&sample), 8);
        assert!(palm_eval_verdict("a", &sample, &full, t(0.7)).contaminated);

        let partial = corpus_idx(&[sample[..9].to_vec()], 8);
        let v = palm_eval_verdict("a", &sample, &partial, t(0.7));
        assert_eq!((v.hits, v.windows), (2, 3));
        assert!(!v.contaminated);

        let short = seq("s", 7);
        let v = palm_eval_verdict("b", &short, &full, t(0.0));
        assert!(!v.contaminated);
        assert_eq!(v.fraction, 0.0);
    }

    #[test]
    fn llama2_fifteen_token_example() {
        let sample = seq("s", 15);
        let mut corpus_doc = vec!["c0".to_owned()];
        corpus_doc.extend_from_slice(&sample[2..14]);
        corpus_doc.push("c1".into());
        let idx = corpus_idx(&[corpus_doc], 11);
        let v = llama2_mark_tokens("x", &sample, &idx, 11).unwrap();
        assert_eq!(v.marked_token_indices, (2..14).collect::<Vec<_>>());
        assert_eq!(v.contamination_percentage, 0.8);
    }

    #[test]
    fn llama2_no_shared_window() {
        let idx = corpus_idx(&[seq("c", 20)], 11);
        let v = llama2_mark_tokens("x", &seq("s", 15), &idx, 11).unwrap();
        assert_eq!(v.contamination_percentage, 0.0);
    }

    #[test]
    fn llama2_whole_sample_duplicated() {
        let s = seq("s", 12);
        let idx = corpus_idx(std::slice::from_ref(&s), 11);
        assert_eq!(
            llama2_mark_tokens("x", &s, &idx, 11)
                .unwrap()
                .contamination_percentage,
            1.0
        );
    }

    #[test]
    fn llama2_length_mismatch_is_param_error() {
        let idx = corpus_idx(&[seq("c", 20)], 10);
        assert!(matches!(
            llama2_mark_tokens("x", &seq("s", 15), &idx, 11),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn llama2_train_cases() {
        let sample = seq("e", 11);
        let idx = eval_idx(std::slice::from_ref(&sample), 11);
        let verbatim = TokenizedDocument::new("v", &sample.join(" "));
        let v = llama2_train_verdict(&verbatim, &idx, Threshold::ONE, Granularity::Document);
        assert!(v.contaminated);
        assert_eq!(v.fraction, 1.0);

        let unrelated = TokenizedDocument::new("u", &seq("z", 40).join(" "));
        let v = llama2_train_verdict(&unrelated, &idx, t(0.01), Granularity::Document);
        assert!(!v.contaminated);

        // 100 tokens, one shared 11-run
        let mut tokens = seq("f", 89);
        tokens.splice(40..40, sample.iter().cloned());
        let d = TokenizedDocument::new("m", &tokens.join(" "));
        assert_eq!(d.len(), 100);
        let v = llama2_train_verdict(&d, &idx, t(0.6), Granularity::Document);
        assert!((v.fraction - 0.11).abs() < 1e-12);
        assert!(!v.contaminated);
        assert!(llama2_train_verdict(&d, &idx, t(0.11), Granularity::Document).contaminated);
    }

    #[test]
    fn llama2_sentence_granularity() {
        let sample = seq("e", 11);
        let idx = eval_idx(std::slice::from_ref(&sample), 11);
        let text = format!("{}. {}.", sample.join(" "), seq("f", 30).join(" "));
        let d = TokenizedDocument::new("d", &text);
        let doc_level = llama2_train_verdict(&d, &idx, t(0.5), Granularity::Document);
        let sent_level = llama2_train_verdict(&d, &idx, t(0.5), Granularity::Sentence);
        assert!(!doc_level.contaminated);
        assert!(sent_level.contaminated);
        assert_eq!(sent_level.sentence_flags, Some(vec![true, false]));
    }

    #[test]
    fn buckets() {
        let (c, d) = (t(0.2), t(0.8));
        let label = |m, n| bucket_assign(&SampleVerdict::from_counts("s", m, n), c, d).unwrap();
        assert_eq!(
            label(0, 10),
            BucketLabel {
                clean_side: CleanSide::Clean,
                dirty_side: DirtySide::NotDirty
            }
        );
        assert_eq!(
            label(10, 10),
            BucketLabel {
                clean_side: CleanSide::NotClean,
                dirty_side: DirtySide::Dirty
            }
        );
        assert_eq!(
            label(5, 10),
            BucketLabel {
                clean_side: CleanSide::NotClean,
                dirty_side: DirtySide::NotDirty
            }
        );
        // boundaries: exactly lambda_clean is not clean, exactly lambda_dirty is dirty
        assert_eq!(label(2, 10).clean_side, CleanSide::NotClean);
        assert_eq!(label(8, 10).dirty_side, DirtySide::Dirty);
        assert_eq!(label(0, 0).clean_side, CleanSide::Clean);
    }

    #[test]
    fn inverted_bucket_thresholds_fail() {
        let v = SampleVerdict::from_counts("s", 1, 2);
        assert!(matches!(
            bucket_assign(&v, t(0.9), t(0.1)),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn index_mismatch_is_config_error() {
        let idx = eval_idx(&[seq("w", 10)], 8);
        let d = doc("d", "w0 w1");
        let err = judge_document(&d, &idx, &DefinitionParams::direct(7).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err =
            judge_sample("s", &d.tokens, &idx, &DefinitionParams::direct(8).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn params_serialize_with_definition_tag() {
        let p = DefinitionParams::palm(8, 0.7).unwrap();
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"definition":"palm","n":8,"lambda":0.7}"#
        );
        let d = DefinitionParams::direct(13).unwrap();
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"definition":"direct","n":13}"#
        );
    }
}
