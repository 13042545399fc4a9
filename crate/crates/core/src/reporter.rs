//! Corpus-level statistics, parameter sweeps and bucketed evaluation splits.

use std::fmt::Write as _;
use std::io::Write;
use std::ops::AddAssign;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::corpus_io::{AtomicFile, EvalSample, TokenizedDocument};
use crate::defs::{
    bucket_assign, judge_document_unchecked, llama2_mark_tokens, params_record, ratio, BucketLabel,
    CleanSide, DefinitionParams, DirtySide, DocumentVerdict, Granularity, SampleVerdict, Threshold,
};
use crate::error::{Error, Result};
use crate::ngram::{build_index, IndexSource, NGramIndex};

/// Additive scan counters. Merging is commutative and associative, so partial
/// counts from shards can be combined in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanCounts {
    pub docs_scanned: u64,
    pub docs_contaminated: u64,
    pub tokens_total: u64,
    pub tokens_contaminated: u64,
}

impl ScanCounts {
    pub fn add(&mut self, verdict: &DocumentVerdict) {
        self.docs_scanned += 1;
        self.tokens_total += verdict.token_count as u64;
        if verdict.contaminated {
            self.docs_contaminated += 1;
            self.tokens_contaminated += verdict.contaminated_token_count as u64;
        }
    }
}

impl AddAssign for ScanCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.docs_scanned += rhs.docs_scanned;
        self.docs_contaminated += rhs.docs_contaminated;
        self.tokens_total += rhs.tokens_total;
        self.tokens_contaminated += rhs.tokens_contaminated;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    #[serde(flatten, with = "params_record")]
    pub definition: DefinitionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(flatten)]
    pub counts: ScanCounts,
    pub doc_ratio: f64,
    pub token_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<String>,
}

impl ScanReport {
    pub fn from_counts(definition: DefinitionParams, counts: ScanCounts) -> Self {
        Self {
            definition,
            dataset: None,
            doc_ratio: ratio(
                counts.docs_contaminated as usize,
                counts.docs_scanned as usize,
            ),
            token_ratio: ratio(
                counts.tokens_contaminated as usize,
                counts.tokens_total as usize,
            ),
            counts,
            verdicts: None,
        }
    }
}

/// Folds a verdict stream into a report.
pub fn aggregate<'a, I>(definition: DefinitionParams, verdicts: I) -> ScanReport
where
    I: IntoIterator<Item = &'a DocumentVerdict>,
{
    let mut counts = ScanCounts::default();
    for v in verdicts {
        counts.add(v);
    }
    ScanReport::from_counts(definition, counts)
}

/// One verdict as a JSONL record.
pub fn verdict_record(
    verdict: &DocumentVerdict,
    params: &DefinitionParams,
    bucket: Option<BucketLabel>,
) -> String {
    #[derive(Serialize)]
    struct Record<'a> {
        id: &'a str,
        #[serde(flatten, with = "params_record")]
        params: DefinitionParams,
        contaminated: bool,
        fraction: f64,
        contaminated_tokens: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        bucket: Option<BucketLabel>,
    }
    serde_json::to_string(&Record {
        id: &verdict.doc_id,
        params: *params,
        contaminated: verdict.contaminated,
        fraction: verdict.fraction,
        contaminated_tokens: verdict.contaminated_token_count,
        bucket,
    })
    .expect("verdict serializes")
}

/// The definition families a sweep can cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Direct,
    Palm,
    Llama2,
}

impl Family {
    fn params(self, gram: usize, lambda: Threshold) -> DefinitionParams {
        match self {
            Family::Direct => DefinitionParams::DirectOverlap { n: gram },
            Family::Palm => DefinitionParams::Palm { n: gram, lambda },
            Family::Llama2 => DefinitionParams::Llama2 {
                min_match_len: gram,
                lambda,
                granularity: Granularity::Document,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub definition: &'static str,
    pub n: usize,
    pub lambda: Option<f64>,
    pub doc_ratio: f64,
    pub token_ratio: f64,
}

pub const SWEEP_CSV_HEADER: &str = "definition,n,lambda,doc_ratio,token_ratio";

/// Rescans `corpus` once per parameter combination. Direct overlap ignores
/// `lambdas` and yields one row per gram length.
pub fn sweep(
    corpus: &[TokenizedDocument],
    eval_sequences: &[Vec<String>],
    family: Family,
    gram_values: &[usize],
    lambdas: &[Threshold],
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if gram_values.is_empty() || (family != Family::Direct && lambdas.is_empty()) {
        return Err(Error::param("sweep value lists must be non-empty"));
    }
    let lambdas: Vec<Threshold> = match family {
        Family::Direct => vec![Threshold::ZERO],
        _ => lambdas.to_vec(),
    };
    let mut rows = Vec::with_capacity(gram_values.len() * lambdas.len());
    for &gram in gram_values {
        let index = build_index(eval_sequences, gram, seed, IndexSource::EvalSide, false)?;
        for &lambda in &lambdas {
            let params = family.params(gram, lambda).validated()?;
            let report = scan_in_memory(corpus, &index, &params);
            rows.push(SweepRow {
                definition: params.name(),
                n: gram,
                lambda: params.lambda().map(Threshold::value),
                doc_ratio: report.doc_ratio,
                token_ratio: report.token_ratio,
            });
        }
    }
    Ok(rows)
}

/// Judges pre-tokenized documents; the index must already match `params`.
pub fn scan_in_memory(
    corpus: &[TokenizedDocument],
    index: &NGramIndex,
    params: &DefinitionParams,
) -> ScanReport {
    let mut counts = ScanCounts::default();
    for doc in corpus {
        counts.add(&judge_document_unchecked(doc, index, params));
    }
    ScanReport::from_counts(*params, counts)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let lambda = r.lambda.map(|l| l.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            r.definition, r.n, lambda, r.doc_ratio, r.token_ratio
        )
        .expect("writing to a String");
    }
    out
}

/// Per-file sample counts of a bucket export.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub clean: usize,
    pub not_clean: usize,
    pub not_dirty: usize,
    pub dirty: usize,
}

pub const BUCKET_FILES: [&str; 4] = ["clean", "not_clean", "not_dirty", "dirty"];

/// Marks every sample against a corpus-side index and places it on both splits.
pub fn bucket_samples(
    samples: &[EvalSample],
    corpus_index: &NGramIndex,
    lambda_clean: Threshold,
    lambda_dirty: Threshold,
) -> Result<Vec<(SampleVerdict, BucketLabel)>> {
    if corpus_index.source() != IndexSource::CorpusSide {
        return Err(Error::Config("bucketing needs a corpus-side index".into()));
    }
    samples
        .iter()
        .map(|s| {
            let v = llama2_mark_tokens(&s.id, &s.input_tokens(), corpus_index, corpus_index.n())?;
            let label = bucket_assign(&v, lambda_clean, lambda_dirty)?;
            Ok((v, label))
        })
        .collect()
}

fn bucket_line(sample: &EvalSample, verdict: &SampleVerdict, bucket: &str) -> Result<String> {
    let mut obj: Map<String, Value> = match serde_json::to_value(sample) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("samples serialize to objects"),
    };
    obj.insert(
        "contamination_percentage".into(),
        Value::from(verdict.contamination_percentage),
    );
    obj.insert("bucket".into(), Value::from(bucket));
    Ok(serde_json::to_string(&obj).map_err(std::io::Error::from)?)
}

/// Writes `clean.jsonl`, `not_clean.jsonl`, `not_dirty.jsonl` and
/// `dirty.jsonl` under `out_dir`. Every sample lands in exactly one file per
/// split. Files appear only if all four were written.
pub fn export_buckets(
    samples: &[EvalSample],
    labelled: &[(SampleVerdict, BucketLabel)],
    out_dir: &Path,
) -> Result<BucketCounts> {
    if samples.len() != labelled.len() {
        return Err(Error::param("one verdict per sample required"));
    }
    let mut files = BUCKET_FILES
        .iter()
        .map(|name| AtomicFile::create(out_dir.join(format!("{name}.jsonl"))))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = BucketCounts::default();
    for (sample, (verdict, label)) in samples.iter().zip(labelled) {
        let clean = match label.clean_side {
            CleanSide::Clean => {
                counts.clean += 1;
                0
            }
            CleanSide::NotClean => {
                counts.not_clean += 1;
                1
            }
        };
        let dirty = match label.dirty_side {
            DirtySide::NotDirty => {
                counts.not_dirty += 1;
                2
            }
            DirtySide::Dirty => {
                counts.dirty += 1;
                3
            }
        };
        for slot in [clean, dirty] {
            let line = bucket_line(sample, verdict, BUCKET_FILES[slot])?;
            writeln!(files[slot], "{line}")?;
        }
    }
    for f in files {
        f.commit()?;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(id: &str, contaminated: bool, tokens: usize, hit: usize) -> DocumentVerdict {
        DocumentVerdict {
            doc_id: id.into(),
            contaminated,
            fraction: if contaminated { 1.0 } else { 0.0 },
            contaminated_token_count: hit,
            token_count: tokens,
            sentence_flags: None,
        }
    }

    fn direct() -> DefinitionParams {
        DefinitionParams::direct(8).unwrap()
    }

    #[test]
    fn aggregate_ratios() {
        let vs: Vec<_> = (0..10)
            .map(|i| verdict(&i.to_string(), i < 3, 100, 40))
            .collect();
        let r = aggregate(direct(), &vs);
        assert_eq!(r.doc_ratio, 0.3);
        assert_eq!(r.counts.tokens_contaminated, 120);
        assert_eq!(r.token_ratio, 0.12);
    }

    #[test]
    fn aggregate_empty() {
        let r = aggregate(direct(), &[]);
        assert_eq!(r.counts, ScanCounts::default());
        assert_eq!((r.doc_ratio, r.token_ratio), (0.0, 0.0));
    }

    #[test]
    fn aggregate_is_order_independent() {
        let mut vs: Vec<_> = (0..7).map(|i| verdict("x", i % 2 == 0, i * 3, i)).collect();
        let a = aggregate(direct(), &vs);
        vs.reverse();
        assert_eq!(a, aggregate(direct(), &vs));
    }

    #[test]
    fn report_json_shape() {
        let r = aggregate(DefinitionParams::palm(8, 0.7).unwrap(), &[]);
        let v: Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["definition"], "palm");
        assert_eq!(v["params"]["lambda"], 0.7);
        assert_eq!(v["docs_scanned"], 0);
        let back: ScanReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn verdict_json_shape() {
        let line = verdict_record(&verdict("d1", true, 10, 4), &direct(), None);
        assert_eq!(
            line,
            r#"{"id":"d1","definition":"direct","params":{"n":8},"contaminated":true,"fraction":1.0,"contaminated_tokens":4}"#
        );
    }

    #[test]
    fn csv_format() {
        let rows = [
            SweepRow {
                definition: "direct",
                n: 3,
                lambda: None,
                doc_ratio: 0.3,
                token_ratio: 1.0 / 3.0,
            },
            SweepRow {
                definition: "llama2",
                n: 11,
                lambda: Some(0.6),
                doc_ratio: 0.0,
                token_ratio: 0.0,
            },
        ];
        assert_eq!(
            sweep_csv(&rows),
            "definition,n,lambda,doc_ratio,token_ratio\n\
             direct,3,,0.300000,0.333333\n\
             llama2,11,0.6,0.000000,0.000000\n"
        );
    }

    #[test]
    fn sweep_needs_values() {
        assert!(sweep(&[], &[], Family::Direct, &[], &[], 0).is_err());
        assert!(sweep(&[], &[], Family::Palm, &[8], &[], 0).is_err());
        assert_eq!(
            sweep(&[], &[], Family::Direct, &[8], &[], 0).unwrap().len(),
            1
        );
    }

    #[test]
    fn bucket_files() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<_> = (0..3)
            .map(|i| EvalSample::new(i.to_string(), "d", "text"))
            .collect();
        let (c, d) = (Threshold::new(0.2).unwrap(), Threshold::new(0.8).unwrap());
        let labelled: Vec<_> = [(0, 10), (5, 10), (9, 10)]
            .iter()
            .zip(&samples)
            .map(|(&(m, t), s)| {
                let v = SampleVerdict::from_counts(&s.id, m, t);
                let l = bucket_assign(&v, c, d).unwrap();
                (v, l)
            })
            .collect();
        let counts = export_buckets(&samples, &labelled, dir.path()).unwrap();
        assert_eq!(
            counts,
            BucketCounts {
                clean: 1,
                not_clean: 2,
                not_dirty: 2,
                dirty: 1
            }
        );
        let dirty = std::fs::read_to_string(dir.path().join("dirty.jsonl")).unwrap();
        assert_eq!(dirty.lines().count(), 1);
        let rec: Value = serde_json::from_str(dirty.lines().next().unwrap()).unwrap();
        assert_eq!(rec["id"], "2");
        assert_eq!(rec["bucket"], "dirty");
        assert_eq!(rec["text"], "text");
    }
}
