//! Python bindings: `import contamkit_py`.
//!
//! Documents and corpora cross the boundary as `(id, text)` tuples, eval
//! samples as dicts with the JSONL keys, and reports as plain dicts.

use std::path::PathBuf;

use contamkit::cleaner;
use contamkit::corpus_io::{self, Document, EvalSample, TokenizedDocument};
use contamkit::defs::{
    self, CleanSide, DefinitionParams, DirtySide, Granularity, SampleVerdict, Threshold,
};
use contamkit::injector::{self, InjectionMode, InjectionSpec, Joiner, Placement};
use contamkit::ngram::{self, IndexSource};
use contamkit::{Error, ErrorKind};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn to_py(e: Error) -> PyErr {
    match e.kind() {
        ErrorKind::Io => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_side(side: &str) -> PyResult<IndexSource> {
    match side {
        "eval" | "eval_side" => Ok(IndexSource::EvalSide),
        "corpus" | "corpus_side" => Ok(IndexSource::CorpusSide),
        other => Err(PyValueError::new_err(format!(
            "unknown index side {other:?}"
        ))),
    }
}

fn side_name(side: IndexSource) -> &'static str {
    match side {
        IndexSource::EvalSide => "eval",
        IndexSource::CorpusSide => "corpus",
    }
}

/// Lower-cased, NFKC-normalized word tokens of `text`.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    corpus_io::token_strings(text)
}

/// `(token, start, end)` triples with byte offsets into the UTF-8 text.
#[pyfunction]
fn tokenize_spans(text: &str) -> Vec<(String, usize, usize)> {
    corpus_io::tokenize(text)
        .into_iter()
        .map(|t| (t.text, t.span.start, t.span.end))
        .collect()
}

/// Sentences of `text` as lists of tokens.
#[pyfunction]
fn sentences(text: &str) -> Vec<Vec<String>> {
    TokenizedDocument::new("", text)
        .sentence_tokens()
        .map(<[String]>::to_vec)
        .collect()
}

#[pyclass(name = "NGramIndex", module = "contamkit_py", frozen)]
struct PyIndex {
    inner: ngram::NGramIndex,
}

#[pymethods]
impl PyIndex {
    /// Builds an index over token sequences; windows never cross sequences.
    #[staticmethod]
    #[pyo3(signature = (sequences, n, seed = 42, side = "eval", verify = false))]
    fn build(
        py: Python<'_>,
        sequences: Vec<Vec<String>>,
        n: usize,
        seed: u64,
        side: &str,
        verify: bool,
    ) -> PyResult<Self> {
        let side = parse_side(side)?;
        let inner = py
            .detach(|| ngram::build_index(&sequences, n, seed, side, verify))
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Eval-side index over the input text of eval samples.
    #[staticmethod]
    #[pyo3(signature = (samples, n, seed = 42, all_fields = false, verify = false))]
    fn from_samples(
        samples: Vec<Bound<'_, PyDict>>,
        n: usize,
        seed: u64,
        all_fields: bool,
        verify: bool,
    ) -> PyResult<Self> {
        let samples = samples
            .iter()
            .map(sample_from_dict)
            .collect::<PyResult<Vec<_>>>()?;
        let fields = if all_fields {
            corpus_io::EvalFields::All
        } else {
            corpus_io::EvalFields::Text
        };
        let seqs = corpus_io::eval_sequences(&samples, fields);
        let inner =
            ngram::build_index(&seqs, n, seed, IndexSource::EvalSide, verify).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: ngram::NGramIndex::load(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    fn contains(&self, window: Vec<String>) -> PyResult<bool> {
        self.inner.contains(&window).map_err(to_py)
    }

    fn window_hits(&self, tokens: Vec<String>) -> Vec<bool> {
        self.inner.window_hits(&tokens)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn side(&self) -> &'static str {
        side_name(self.inner.source())
    }

    #[getter]
    fn has_verify_store(&self) -> bool {
        self.inner.has_verify_store()
    }

    fn __len__(&self) -> usize {
        self.inner.entry_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "NGramIndex(n={}, side={}, entries={})",
            self.inner.n(),
            side_name(self.inner.source()),
            self.inner.entry_count()
        )
    }
}

#[pyclass(
    name = "Definition",
    module = "contamkit_py",
    frozen,
    skip_from_py_object
)]
#[derive(Clone, Copy)]
struct PyDefinition {
    inner: DefinitionParams,
}

#[pymethods]
impl PyDefinition {
    #[staticmethod]
    #[pyo3(signature = (n = defs::DEFAULT_PALM_N))]
    fn direct(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: DefinitionParams::direct(n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n = defs::DEFAULT_PALM_N, lambda_ = defs::DEFAULT_PALM_LAMBDA))]
    fn palm(n: usize, lambda_: f64) -> PyResult<Self> {
        Ok(Self {
            inner: DefinitionParams::palm(n, lambda_).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (min_match_len = defs::DEFAULT_LLAMA2_MIN_MATCH, lambda_ = 0.8, granularity = "document"))]
    fn llama2(min_match_len: usize, lambda_: f64, granularity: &str) -> PyResult<Self> {
        let granularity = match granularity {
            "document" => Granularity::Document,
            "sentence" => Granularity::Sentence,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown granularity {other:?}"
                )))
            }
        };
        let inner = DefinitionParams::llama2(min_match_len, lambda_)
            .map_err(to_py)?
            .with_granularity(granularity);
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn gram_len(&self) -> usize {
        self.inner.gram_len()
    }

    #[getter]
    fn lambda_(&self) -> Option<f64> {
        self.inner.lambda().map(Threshold::value)
    }

    fn __repr__(&self) -> String {
        format!("Definition({})", self.inner)
    }
}

fn verdict_dict<'py>(py: Python<'py>, v: &defs::DocumentVerdict) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", &v.doc_id)?;
    d.set_item("contaminated", v.contaminated)?;
    d.set_item("fraction", v.fraction)?;
    d.set_item("contaminated_tokens", v.contaminated_token_count)?;
    d.set_item("tokens", v.token_count)?;
    d.set_item("sentence_flags", v.sentence_flags.clone())?;
    Ok(d)
}

/// Judges one corpus document against an eval-side index.
#[pyfunction]
fn judge_document<'py>(
    py: Python<'py>,
    doc_id: &str,
    text: &str,
    index: &PyIndex,
    definition: &PyDefinition,
) -> PyResult<Bound<'py, PyDict>> {
    let doc = TokenizedDocument::new(doc_id, text);
    let v = defs::judge_document(&doc, &index.inner, &definition.inner).map_err(to_py)?;
    verdict_dict(py, &v)
}

/// Judges one eval sample's text against a corpus-side index.
#[pyfunction]
fn judge_sample<'py>(
    py: Python<'py>,
    sample_id: &str,
    text: &str,
    index: &PyIndex,
    definition: &PyDefinition,
) -> PyResult<Bound<'py, PyDict>> {
    let tokens = corpus_io::token_strings(text);
    let v =
        defs::judge_sample(sample_id, &tokens, &index.inner, &definition.inner).map_err(to_py)?;
    verdict_dict(py, &v)
}

/// Indices of tokens inside a run of at least `min_match_len` shared tokens,
/// and their share of the sample.
#[pyfunction]
fn llama2_mark_tokens(
    tokens: Vec<String>,
    index: &PyIndex,
    min_match_len: usize,
) -> PyResult<(Vec<usize>, f64)> {
    let v = defs::llama2_mark_tokens("", &tokens, &index.inner, min_match_len).map_err(to_py)?;
    Ok((v.marked_token_indices, v.contamination_percentage))
}

/// `(clean_side, dirty_side)` for a sample with `marked` of `total` tokens marked.
#[pyfunction]
#[pyo3(signature = (marked, total, lambda_clean = defs::DEFAULT_LAMBDA_CLEAN, lambda_dirty = defs::DEFAULT_LAMBDA_DIRTY))]
fn bucket_assign(
    marked: usize,
    total: usize,
    lambda_clean: f64,
    lambda_dirty: f64,
) -> PyResult<(&'static str, &'static str)> {
    if marked > total {
        return Err(PyValueError::new_err("marked exceeds total"));
    }
    let lc = Threshold::new(lambda_clean).map_err(to_py)?;
    let ld = Threshold::new(lambda_dirty).map_err(to_py)?;
    let label = defs::bucket_assign(&SampleVerdict::from_counts("", marked, total), lc, ld)
        .map_err(to_py)?;
    let clean = match label.clean_side {
        CleanSide::Clean => "clean",
        CleanSide::NotClean => "not_clean",
    };
    let dirty = match label.dirty_side {
        DirtySide::NotDirty => "not_dirty",
        DirtySide::Dirty => "dirty",
    };
    Ok((clean, dirty))
}

fn opt_str(d: &Bound<'_, PyDict>, key: &str) -> PyResult<Option<String>> {
    match d.get_item(key)? {
        Some(v) if !v.is_none() => Ok(Some(v.extract()?)),
        _ => Ok(None),
    }
}

fn sample_from_dict(d: &Bound<'_, PyDict>) -> PyResult<EvalSample> {
    let req = |key: &str| -> PyResult<String> {
        opt_str(d, key)?.ok_or_else(|| PyValueError::new_err(format!("sample is missing {key:?}")))
    };
    let mut s = EvalSample::new(req("id")?, req("dataset")?, req("text")?);
    s.prompt = opt_str(d, "prompt")?;
    s.answer = opt_str(d, "answer")?;
    s.choices = match d.get_item("choices")? {
        Some(v) if !v.is_none() => Some(v.extract()?),
        _ => None,
    };
    Ok(s)
}

fn parse_mode(mode: &str) -> PyResult<InjectionMode> {
    match mode {
        "text" => Ok(InjectionMode::Text),
        "gt" => Ok(InjectionMode::GroundTruth),
        other => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

fn parse_joiner(joiner: &str) -> PyResult<Joiner> {
    match joiner {
        "space" => Ok(Joiner::Space),
        "newline" => Ok(Joiner::Newline),
        other => Err(PyValueError::new_err(format!("unknown joiner {other:?}"))),
    }
}

/// The text a sample contributes when injected.
#[pyfunction]
#[pyo3(signature = (sample, mode = "text", template = None, joiner = "space"))]
fn format_sample(
    sample: &Bound<'_, PyDict>,
    mode: &str,
    template: Option<&str>,
    joiner: &str,
) -> PyResult<String> {
    let s = sample_from_dict(sample)?;
    injector::format_sample(&s, parse_mode(mode)?, template, parse_joiner(joiner)?).map_err(to_py)
}

type Pairs = Vec<(String, String)>;

fn documents(corpus: Pairs) -> Vec<Document> {
    corpus
        .into_iter()
        .map(|(id, text)| Document::new(id, text))
        .collect()
}

fn pairs(docs: Vec<Document>) -> Pairs {
    docs.into_iter().map(|d| (d.id, d.text)).collect()
}

/// Inserts `factor` copies of every sample; returns the new corpus and the manifest.
#[pyfunction]
#[pyo3(signature = (corpus, samples, mode = "text", factor = 1, seed = 42, templates = None, placement = "shuffle", joiner = "space"))]
#[allow(clippy::too_many_arguments)]
fn inject<'py>(
    py: Python<'py>,
    corpus: Pairs,
    samples: Vec<Bound<'py, PyDict>>,
    mode: &str,
    factor: usize,
    seed: u64,
    templates: Option<Vec<String>>,
    placement: &str,
    joiner: &str,
) -> PyResult<(Pairs, Bound<'py, PyAny>)> {
    let samples = samples
        .iter()
        .map(sample_from_dict)
        .collect::<PyResult<Vec<_>>>()?;
    let mut spec = InjectionSpec::new(parse_mode(mode)?, factor, seed);
    spec.prompt_templates = templates;
    spec.joiner = parse_joiner(joiner)?;
    spec.placement = match placement {
        "shuffle" => Placement::Shuffle,
        "append" => Placement::Append,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown placement {other:?}"
            )))
        }
    };
    let (docs, manifest) = injector::inject(documents(corpus), &samples, &spec).map_err(to_py)?;
    Ok((pairs(docs), json_to_py(py, &manifest)?))
}

/// Drops contaminated documents; returns the kept documents and the removal report.
#[pyfunction]
#[pyo3(signature = (corpus, index, definition, workers = 1))]
fn filter_corpus<'py>(
    py: Python<'py>,
    corpus: Pairs,
    index: &PyIndex,
    definition: &PyDefinition,
    workers: usize,
) -> PyResult<(Pairs, Bound<'py, PyAny>)> {
    let docs = documents(corpus);
    let (kept, report) = py
        .detach(|| cleaner::filter_documents(docs, &index.inner, definition.inner, workers))
        .map_err(to_py)?;
    Ok((pairs(kept), json_to_py(py, &report)?))
}

/// Streams a JSONL corpus file through the filter into `out`.
#[pyfunction]
#[pyo3(signature = (corpus_path, index, definition, out, workers = 1))]
fn filter_file<'py>(
    py: Python<'py>,
    corpus_path: PathBuf,
    index: &PyIndex,
    definition: &PyDefinition,
    out: PathBuf,
    workers: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let report = py
        .detach(|| -> contamkit::Result<_> {
            let mut writer = corpus_io::CorpusWriter::new(corpus_io::AtomicFile::create(&out)?);
            let report = cleaner::filter_corpus(
                corpus_io::read_corpus(&corpus_path)?,
                &index.inner,
                definition.inner,
                workers,
                |d| writer.write(&d),
                |_| {},
            )?;
            writer.into_inner().commit()?;
            Ok(report)
        })
        .map_err(to_py)?;
    json_to_py(py, &report)
}

/// Reads an eval JSONL file into a list of sample dicts.
#[pyfunction]
fn read_eval<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyList>> {
    let samples = corpus_io::read_eval(path).map_err(to_py)?;
    let out = PyList::empty(py);
    for s in &samples {
        out.append(json_to_py(py, s)?)?;
    }
    Ok(out)
}

#[pymodule]
fn contamkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyIndex>()?;
    m.add_class::<PyDefinition>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize_spans, m)?)?;
    m.add_function(wrap_pyfunction!(sentences, m)?)?;
    m.add_function(wrap_pyfunction!(judge_document, m)?)?;
    m.add_function(wrap_pyfunction!(judge_sample, m)?)?;
    m.add_function(wrap_pyfunction!(llama2_mark_tokens, m)?)?;
    m.add_function(wrap_pyfunction!(bucket_assign, m)?)?;
    m.add_function(wrap_pyfunction!(format_sample, m)?)?;
    m.add_function(wrap_pyfunction!(inject, m)?)?;
    m.add_function(wrap_pyfunction!(filter_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(filter_file, m)?)?;
    m.add_function(wrap_pyfunction!(read_eval, m)?)?;
    Ok(())
}
