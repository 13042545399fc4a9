//! Building contaminated corpora from evaluation samples.
//!
//! Every sample becomes its own synthetic document, repeated `factor` times.
//! Placement and template choices are derived from a seed, so an identical
//! `(corpus, samples, spec)` always produces an identical output.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{Document, EvalSample};
use crate::error::{Error, Result};

/// Placeholder replaced by the sample's input text inside a prompt template.
pub const TEXT_PLACEHOLDER: &str = "{text}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionMode {
    /// Input text only (plus answer choices when the sample has them).
    Text,
    /// Input text, prompt and ground-truth answer.
    #[serde(rename = "gt")]
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Append,
    #[default]
    Shuffle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Joiner {
    #[default]
    Space,
    Newline,
}

impl Joiner {
    fn as_str(self) -> &'static str {
        match self {
            Joiner::Space => " ",
            Joiner::Newline => "\n",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSpec {
    pub mode: InjectionMode,
    pub factor: usize,
    pub seed: u64,
    pub prompt_templates: Option<Vec<String>>,
    pub placement: Placement,
    pub joiner: Joiner,
}

impl InjectionSpec {
    pub fn new(mode: InjectionMode, factor: usize, seed: u64) -> Self {
        Self {
            mode,
            factor,
            seed,
            prompt_templates: None,
            placement: Placement::default(),
            joiner: Joiner::default(),
        }
    }

    fn templates(&self) -> &[String] {
        self.prompt_templates.as_deref().unwrap_or(&[])
    }

    /// Fails fast when ground-truth mode meets a sample without an answer.
    pub fn validate(&self, samples: &[EvalSample]) -> Result<()> {
        if self.prompt_templates.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::param("template list is empty"));
        }
        if self.mode == InjectionMode::GroundTruth {
            if let Some(s) = samples.iter().find(|s| s.answer.is_none()) {
                return Err(missing_answer(s));
            }
        }
        Ok(())
    }
}

fn missing_answer(sample: &EvalSample) -> Error {
    Error::Format {
        id: sample.id.clone(),
        message: "ground-truth injection needs an answer".into(),
    }
}

/// Renders one sample as synthetic document text.
///
/// Text mode: the input text, then each answer choice on its own line.
/// Ground-truth mode: input text, choices, prompt and answer joined by
/// `joiner`. A template containing `{text}` replaces both the input text and
/// the prompt; a template without it is used as the prompt. Without a
/// template the sample's own prompt is used, if any.
pub fn format_sample(
    sample: &EvalSample,
    mode: InjectionMode,
    template: Option<&str>,
    joiner: Joiner,
) -> Result<String> {
    let choices = sample.choices.as_deref().unwrap_or(&[]);
    match mode {
        InjectionMode::Text => {
            let mut out = sample.input_text.clone();
            for c in choices {
                out.push('\n');
                out.push_str(c);
            }
            Ok(out)
        }
        InjectionMode::GroundTruth => {
            let answer = sample
                .answer
                .as_deref()
                .ok_or_else(|| missing_answer(sample))?;
            let mut parts: Vec<String> = Vec::new();
            match template {
                Some(t) if t.contains(TEXT_PLACEHOLDER) => {
                    parts.push(t.replace(TEXT_PLACEHOLDER, &sample.input_text));
                    parts.extend(choices.iter().cloned());
                }
                _ => {
                    parts.push(sample.input_text.clone());
                    parts.extend(choices.iter().cloned());
                    if let Some(p) = template.or(sample.prompt.as_deref()) {
                        parts.push(p.to_owned());
                    }
                }
            }
            parts.push(answer.to_owned());
            Ok(parts.join(joiner.as_str()))
        }
    }
}

/// One line of the injection manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub injected_id: String,
    pub dataset: String,
    pub sample_id: String,
    pub rep: usize,
    pub mode: InjectionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_index: Option<usize>,
}

pub fn injected_id(sample: &EvalSample, rep: usize) -> String {
    format!("contam/{}/{}/{rep}", sample.dataset, sample.id)
}

/// A fully resolved injection: which synthetic documents go where.
#[derive(Debug, Clone)]
pub struct InjectionPlan {
    corpus_len: usize,
    // synthetic documents in output order
    injected: Vec<Document>,
    // sorted output slots of the synthetic documents
    slots: Vec<usize>,
    manifest: Vec<ManifestEntry>,
}

impl InjectionPlan {
    /// Plans the injection of `samples` into a corpus of `corpus_len` documents.
    pub fn new(corpus_len: usize, samples: &[EvalSample], spec: &InjectionSpec) -> Result<Self> {
        spec.validate(samples)?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let templates = spec.templates();
        let mut injected = Vec::with_capacity(samples.len() * spec.factor);
        let mut manifest = Vec::with_capacity(samples.len() * spec.factor);
        let mut ids = HashSet::new();
        for sample in samples {
            for rep in 0..spec.factor {
                let template_index = (spec.mode == InjectionMode::GroundTruth
                    && !templates.is_empty())
                .then(|| rng.random_range(0..templates.len()));
                let text = format_sample(
                    sample,
                    spec.mode,
                    template_index.map(|i| templates[i].as_str()),
                    spec.joiner,
                )?;
                let id = injected_id(sample, rep);
                if !ids.insert(id.clone()) {
                    return Err(Error::IdCollision(id));
                }
                manifest.push(ManifestEntry {
                    injected_id: id.clone(),
                    dataset: sample.dataset.clone(),
                    sample_id: sample.id.clone(),
                    rep,
                    mode: spec.mode,
                    template_index,
                });
                injected.push(Document::new(id, text));
            }
        }
        let total = corpus_len + injected.len();
        let slots = match spec.placement {
            Placement::Append => (corpus_len..total).collect(),
            Placement::Shuffle => {
                let mut order: Vec<usize> = (0..injected.len()).collect();
                order.shuffle(&mut rng);
                let mut shuffled: Vec<Option<Document>> = injected.into_iter().map(Some).collect();
                injected = order
                    .into_iter()
                    .map(|i| shuffled[i].take().expect("permutation"))
                    .collect();
                let mut slots = index::sample(&mut rng, total, shuffled.len()).into_vec();
                slots.sort_unstable();
                slots
            }
        };
        Ok(Self {
            corpus_len,
            injected,
            slots,
            manifest,
        })
    }

    pub fn manifest(&self) -> &[ManifestEntry] {
        &self.manifest
    }

    pub fn injected_count(&self) -> usize {
        self.injected.len()
    }

    pub fn output_len(&self) -> usize {
        self.corpus_len + self.injected.len()
    }

    /// Interleaves the plan into `corpus`, which must yield exactly the
    /// planned number of documents. Fails on an id collision between a
    /// corpus document and a synthetic one.
    pub fn apply<'a, I>(&'a self, corpus: I) -> impl Iterator<Item = Result<Document>> + 'a
    where
        I: IntoIterator<Item = Result<Document>>,
        I::IntoIter: 'a,
    {
        let ids: HashSet<&str> = self
            .manifest
            .iter()
            .map(|m| m.injected_id.as_str())
            .collect();
        Interleave {
            plan: self,
            corpus: corpus.into_iter(),
            ids,
            slot: 0,
            next_injected: 0,
            seen_corpus: 0,
            failed: false,
        }
    }
}

struct Interleave<'a, I> {
    plan: &'a InjectionPlan,
    corpus: I,
    ids: HashSet<&'a str>,
    slot: usize,
    next_injected: usize,
    seen_corpus: usize,
    failed: bool,
}

impl<I: Iterator<Item = Result<Document>>> Iterator for Interleave<'_, I> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let plan = self.plan;
        let out = if plan.slots.get(self.next_injected) == Some(&self.slot) {
            self.next_injected += 1;
            Some(Ok(plan.injected[self.next_injected - 1].clone()))
        } else {
            match self.corpus.next() {
                Some(Ok(doc)) => {
                    self.seen_corpus += 1;
                    if self.seen_corpus > plan.corpus_len {
                        Some(Err(Error::param("corpus longer than planned")))
                    } else if self.ids.contains(doc.id.as_str()) {
                        Some(Err(Error::IdCollision(doc.id)))
                    } else {
                        Some(Ok(doc))
                    }
                }
                Some(Err(e)) => Some(Err(e)),
                None if self.slot < plan.output_len() => {
                    Some(Err(Error::param("corpus shorter than planned")))
                }
                None => None,
            }
        };
        self.slot += 1;
        if matches!(out, Some(Err(_))) {
            self.failed = true;
        }
        out
    }
}

/// Injects `samples` into an in-memory corpus.
pub fn inject(
    corpus: Vec<Document>,
    samples: &[EvalSample],
    spec: &InjectionSpec,
) -> Result<(Vec<Document>, Vec<ManifestEntry>)> {
    let plan = InjectionPlan::new(corpus.len(), samples, spec)?;
    let docs = plan
        .apply(corpus.into_iter().map(Ok))
        .collect::<Result<Vec<_>>>()?;
    Ok((docs, plan.manifest))
}
