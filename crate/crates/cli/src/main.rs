//! `contamkit`: index, scan, filter, inject, bucket and sweep from the shell.
//!
//! Every flag can also be set through a `CONTAMKIT_`-prefixed environment
//! variable (`--lambda-clean` is `CONTAMKIT_LAMBDA_CLEAN`). Failures print one
//! line, `contamkit: error code=<N> kind=<kind>: <message>`, and exit with:
//! 2 usage, 3 I/O, 4 data format, 5 configuration mismatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use contamkit::cleaner::filter_corpus;
use contamkit::corpus_io::{
    eval_sequences, read_corpus, read_eval, AtomicFile, CorpusWriter, EvalFields, TokenizedDocument,
};
use contamkit::defs::{
    judge_sample, DefinitionParams, Granularity, Threshold, DEFAULT_LAMBDA_CLEAN,
    DEFAULT_LAMBDA_DIRTY, DEFAULT_LLAMA2_MIN_MATCH, DEFAULT_PALM_LAMBDA, DEFAULT_PALM_N,
};
use contamkit::injector::{InjectionMode, InjectionPlan, InjectionSpec, Joiner, Placement};
use contamkit::ngram::{IndexBuilder, IndexSource, NGramIndex};
use contamkit::reporter::{
    bucket_samples, export_buckets, sweep, sweep_csv, verdict_record, Family, ScanCounts,
    ScanReport,
};
use contamkit::scan::Scanner;
use contamkit::{Error, ErrorKind};

/// Default lambda for the Llama 2 definition when none is given.
const DEFAULT_LLAMA2_LAMBDA: f64 = DEFAULT_LAMBDA_DIRTY;

#[derive(Parser)]
#[command(
    name = "contamkit",
    version,
    about = "Evaluation-data contamination toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an n-gram index over an eval set or a corpus.
    Index(IndexArgs),
    /// Judge corpus documents (or eval samples) and report contamination.
    Scan(ScanArgs),
    /// Drop contaminated documents from a corpus.
    Filter(FilterArgs),
    /// Insert evaluation samples into a corpus.
    Inject(InjectArgs),
    /// Split an eval set into clean / not clean / not dirty / dirty.
    Bucket(BucketArgs),
    /// Rescan a corpus over a grid of parameters and write CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DefinitionArg {
    Direct,
    Palm,
    Llama2,
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    Document,
    Sentence,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldsArg {
    Text,
    All,
}

impl From<FieldsArg> for EvalFields {
    fn from(f: FieldsArg) -> Self {
        match f {
            FieldsArg::Text => EvalFields::Text,
            FieldsArg::All => EvalFields::All,
        }
    }
}

#[derive(Args)]
struct DefinitionFlags {
    #[arg(long, value_enum, env = "CONTAMKIT_DEFINITION")]
    definition: DefinitionArg,
    /// Gram length for direct and palm.
    #[arg(long, default_value_t = DEFAULT_PALM_N, env = "CONTAMKIT_N")]
    n: usize,
    /// Minimum shared run length for llama2.
    #[arg(long, default_value_t = DEFAULT_LLAMA2_MIN_MATCH, env = "CONTAMKIT_MIN_MATCH_LEN")]
    min_match_len: usize,
    /// Threshold; defaults to 0.7 for palm and 0.8 for llama2.
    #[arg(long, env = "CONTAMKIT_LAMBDA")]
    lambda: Option<f64>,
    /// Unit of the llama2 token percentage on corpus documents.
    #[arg(
        long,
        value_enum,
        default_value = "document",
        env = "CONTAMKIT_GRANULARITY"
    )]
    granularity: GranularityArg,
}

impl DefinitionFlags {
    fn params(&self) -> Result<DefinitionParams, Failure> {
        let params = match self.definition {
            DefinitionArg::Direct => {
                if self.lambda.is_some() {
                    return Err(Failure::config(
                        "--lambda does not apply to --definition direct",
                    ));
                }
                DefinitionParams::direct(self.n)
            }
            DefinitionArg::Palm => {
                DefinitionParams::palm(self.n, self.lambda.unwrap_or(DEFAULT_PALM_LAMBDA))
            }
            DefinitionArg::Llama2 => DefinitionParams::llama2(
                self.min_match_len,
                self.lambda.unwrap_or(DEFAULT_LLAMA2_LAMBDA),
            )
            .map(|p| {
                p.with_granularity(match self.granularity {
                    GranularityArg::Document => Granularity::Document,
                    GranularityArg::Sentence => Granularity::Sentence,
                })
            }),
        };
        params.map_err(Failure::from)
    }
}

#[derive(Args)]
struct IndexArgs {
    /// Index an evaluation set (eval-side index).
    #[arg(
        long,
        env = "CONTAMKIT_EVAL",
        conflicts_with = "corpus",
        required_unless_present = "corpus"
    )]
    eval: Option<PathBuf>,
    /// Index a corpus (corpus-side index).
    #[arg(long, env = "CONTAMKIT_CORPUS")]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PALM_N, env = "CONTAMKIT_N")]
    n: usize,
    #[arg(long, env = "CONTAMKIT_OUT")]
    out: PathBuf,
    /// Keep exact windows so membership checks are collision-free.
    #[arg(long, env = "CONTAMKIT_VERIFY_INDEX")]
    verify_index: bool,
    #[arg(long, default_value_t = 42, env = "CONTAMKIT_SEED")]
    seed: u64,
    /// Eval fields to index; `all` windows prompt, answer and choices separately.
    #[arg(long, value_enum, default_value = "text", env = "CONTAMKIT_FIELDS")]
    fields: FieldsArg,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(
        long,
        env = "CONTAMKIT_CORPUS",
        conflicts_with = "eval",
        required_unless_present = "eval"
    )]
    corpus: Option<PathBuf>,
    /// Judge eval samples against a corpus-side index instead.
    #[arg(long, env = "CONTAMKIT_EVAL")]
    eval: Option<PathBuf>,
    #[arg(long, env = "CONTAMKIT_INDEX")]
    index: PathBuf,
    #[command(flatten)]
    def: DefinitionFlags,
    #[arg(long, env = "CONTAMKIT_REPORT")]
    report: Option<PathBuf>,
    #[arg(long, env = "CONTAMKIT_VERDICTS")]
    verdicts: Option<PathBuf>,
    #[arg(long, default_value_t = 1, env = "CONTAMKIT_WORKERS")]
    workers: usize,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long, env = "CONTAMKIT_CORPUS")]
    corpus: PathBuf,
    #[arg(long, env = "CONTAMKIT_INDEX")]
    index: PathBuf,
    #[command(flatten)]
    def: DefinitionFlags,
    #[arg(long, env = "CONTAMKIT_OUT")]
    out: PathBuf,
    #[arg(long, env = "CONTAMKIT_REPORT")]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 1, env = "CONTAMKIT_WORKERS")]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Text,
    Gt,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    Shuffle,
    Append,
}

#[derive(Clone, Copy, ValueEnum)]
enum JoinerArg {
    Space,
    Newline,
}

#[derive(Args)]
struct InjectArgs {
    #[arg(long, env = "CONTAMKIT_CORPUS")]
    corpus: PathBuf,
    #[arg(long, env = "CONTAMKIT_EVAL")]
    eval: PathBuf,
    #[arg(long, value_enum, default_value = "text", env = "CONTAMKIT_MODE")]
    mode: ModeArg,
    /// Copies of every sample to insert.
    #[arg(long, default_value_t = 1, env = "CONTAMKIT_FACTOR")]
    factor: usize,
    #[arg(long, default_value_t = 42, env = "CONTAMKIT_SEED")]
    seed: u64,
    /// File with one prompt template per line; `{text}` marks the input text.
    #[arg(long, env = "CONTAMKIT_TEMPLATES")]
    templates: Option<PathBuf>,
    #[arg(
        long,
        value_enum,
        default_value = "shuffle",
        env = "CONTAMKIT_PLACEMENT"
    )]
    placement: PlacementArg,
    #[arg(long, value_enum, default_value = "space", env = "CONTAMKIT_JOINER")]
    joiner: JoinerArg,
    #[arg(long, env = "CONTAMKIT_OUT")]
    out: PathBuf,
    /// JSONL record of every injected copy.
    #[arg(long, env = "CONTAMKIT_MANIFEST")]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct BucketArgs {
    #[arg(long, env = "CONTAMKIT_EVAL")]
    eval: PathBuf,
    /// Corpus-side index; its gram length is the minimum match length.
    #[arg(long, env = "CONTAMKIT_INDEX")]
    index: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_CLEAN, env = "CONTAMKIT_LAMBDA_CLEAN")]
    lambda_clean: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA_DIRTY, env = "CONTAMKIT_LAMBDA_DIRTY")]
    lambda_dirty: f64,
    #[arg(long, env = "CONTAMKIT_OUT_DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, env = "CONTAMKIT_CORPUS")]
    corpus: PathBuf,
    #[arg(long, env = "CONTAMKIT_EVAL")]
    eval: PathBuf,
    #[arg(long, value_enum, env = "CONTAMKIT_DEFINITION")]
    definition: DefinitionArg,
    /// Gram lengths (n, or L for llama2): `3..13`, `8,11` or a mix.
    #[arg(long, env = "CONTAMKIT_N_LIST")]
    n_list: String,
    /// Thresholds, comma separated. Ignored values are rejected for direct.
    #[arg(long, env = "CONTAMKIT_LAMBDA_LIST")]
    lambda_list: Option<String>,
    /// Write the table here instead of stdout.
    #[arg(long, env = "CONTAMKIT_CSV")]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text", env = "CONTAMKIT_FIELDS")]
    fields: FieldsArg,
    #[arg(long, default_value_t = 42, env = "CONTAMKIT_SEED")]
    seed: u64,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 5,
            kind: "config",
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match e.kind() {
            ErrorKind::Io => (3, "io"),
            ErrorKind::Data => (4, "data"),
            ErrorKind::Param | ErrorKind::Config => (5, "config"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Stream(e).into()
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid usage");
            return report_failure(Failure::usage(first.trim_start_matches("error: ")));
        }
    };
    let result = match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Inject(a) => cmd_inject(a),
        Command::Bucket(a) => cmd_bucket(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(f),
    }
}

fn report_failure(f: Failure) -> ExitCode {
    let message = f.message.replace('\n', " ");
    eprintln!(
        "contamkit: error code={} kind={}: {message}",
        f.code, f.kind
    );
    ExitCode::from(f.code)
}

fn check_workers(workers: usize) -> CmdResult {
    if workers == 0 {
        return Err(Failure::config("--workers must be at least 1"));
    }
    Ok(())
}

fn write_json(value: &impl serde::Serialize, path: Option<&Path>) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
    match path {
        Some(path) => {
            let mut f = AtomicFile::create(path)?;
            writeln!(f, "{text}")?;
            f.commit()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_index(a: IndexArgs) -> CmdResult {
    if a.n == 0 {
        return Err(Failure::config("--n must be at least 1"));
    }
    let index = if let Some(eval) = &a.eval {
        let samples = read_eval(eval)?;
        let mut b = IndexBuilder::new(a.n, a.seed, IndexSource::EvalSide, a.verify_index)?;
        for seq in eval_sequences(&samples, a.fields.into()) {
            b.add(&seq);
        }
        b.finish()
    } else {
        let corpus = a.corpus.as_ref().expect("clap enforces one source");
        let mut b = IndexBuilder::new(a.n, a.seed, IndexSource::CorpusSide, a.verify_index)?;
        for doc in read_corpus(corpus)? {
            b.add(&doc?.tokenized().tokens);
        }
        b.finish()
    };
    index.save(&a.out)?;
    write_json(
        &serde_json::json!({
            "out": a.out,
            "n": index.n(),
            "seed": index.seed(),
            "source": index.source(),
            "entry_count": index.entry_count(),
            "verify": index.has_verify_store(),
        }),
        None,
    )
}

fn cmd_scan(a: ScanArgs) -> CmdResult {
    let params = a.def.params()?;
    check_workers(a.workers)?;
    let index = NGramIndex::load(&a.index)?;
    let mut verdicts = a.verdicts.as_ref().map(AtomicFile::create).transpose()?;
    let mut counts = ScanCounts::default();
    if let Some(eval) = &a.eval {
        params.check_index(&index, IndexSource::CorpusSide)?;
        for sample in read_eval(eval)? {
            let v = judge_sample(&sample.id, &sample.input_tokens(), &index, &params)?;
            counts.add(&v);
            if let Some(out) = verdicts.as_mut() {
                writeln!(out, "{}", verdict_record(&v, &params, None))?;
            }
        }
    } else {
        let corpus = a.corpus.as_ref().expect("clap enforces one source");
        let scanner = Scanner::new(&index, params, a.workers)?;
        scanner.run(read_corpus(corpus)?, |_, v| {
            counts.add(&v);
            if let Some(out) = verdicts.as_mut() {
                writeln!(out, "{}", verdict_record(&v, &params, None))?;
            }
            Ok(())
        })?;
    }
    let mut report = ScanReport::from_counts(params, counts);
    report.dataset = a
        .index
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned());
    report.verdicts = a.verdicts.as_ref().map(|p| p.display().to_string());
    if let Some(out) = verdicts {
        out.commit()?;
    }
    write_json(&report, a.report.as_deref())
}

fn cmd_filter(a: FilterArgs) -> CmdResult {
    let params = a.def.params()?;
    check_workers(a.workers)?;
    let index = NGramIndex::load(&a.index)?;
    params.check_index(&index, IndexSource::EvalSide)?;
    let mut writer = CorpusWriter::new(AtomicFile::create(&a.out)?);
    let report = filter_corpus(
        read_corpus(&a.corpus)?,
        &index,
        params,
        a.workers,
        |doc| writer.write(&doc),
        |_| {},
    )?;
    let report_file = match &a.report {
        Some(path) => {
            let mut f = AtomicFile::create(path)?;
            writeln!(
                f,
                "{}",
                serde_json::to_string_pretty(&report).map_err(std::io::Error::from)?
            )?;
            Some(f)
        }
        None => None,
    };
    writer.into_inner().commit()?;
    match report_file {
        Some(f) => f.commit()?,
        None => write_json(&report, None)?,
    }
    Ok(())
}

fn read_templates(path: &Path) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_owned)
        .collect())
}

fn cmd_inject(a: InjectArgs) -> CmdResult {
    let mut spec = InjectionSpec::new(
        match a.mode {
            ModeArg::Text => InjectionMode::Text,
            ModeArg::Gt => InjectionMode::GroundTruth,
        },
        a.factor,
        a.seed,
    );
    spec.placement = match a.placement {
        PlacementArg::Shuffle => Placement::Shuffle,
        PlacementArg::Append => Placement::Append,
    };
    spec.joiner = match a.joiner {
        JoinerArg::Space => Joiner::Space,
        JoinerArg::Newline => Joiner::Newline,
    };
    if let Some(path) = &a.templates {
        spec.prompt_templates = Some(read_templates(path)?);
    }
    let samples = read_eval(&a.eval)?;
    let mut corpus_len = 0;
    for doc in read_corpus(&a.corpus)? {
        doc?;
        corpus_len += 1;
    }
    let plan = InjectionPlan::new(corpus_len, &samples, &spec)?;
    let mut writer = CorpusWriter::new(AtomicFile::create(&a.out)?);
    for doc in plan.apply(read_corpus(&a.corpus)?) {
        writer.write(&doc?)?;
    }
    let manifest = match &a.manifest {
        Some(path) => {
            let mut f = AtomicFile::create(path)?;
            for entry in plan.manifest() {
                writeln!(
                    f,
                    "{}",
                    serde_json::to_string(entry).map_err(std::io::Error::from)?
                )?;
            }
            Some(f)
        }
        None => None,
    };
    writer.into_inner().commit()?;
    if let Some(f) = manifest {
        f.commit()?;
    }
    write_json(
        &serde_json::json!({
            "corpus_docs": corpus_len,
            "injected_docs": plan.injected_count(),
            "output_docs": plan.output_len(),
        }),
        None,
    )
}

fn cmd_bucket(a: BucketArgs) -> CmdResult {
    let lambda_clean = Threshold::new(a.lambda_clean)?;
    let lambda_dirty = Threshold::new(a.lambda_dirty)?;
    if lambda_clean > lambda_dirty {
        return Err(Failure::config(
            "--lambda-clean must not exceed --lambda-dirty",
        ));
    }
    let index = NGramIndex::load(&a.index)?;
    let samples = read_eval(&a.eval)?;
    let labelled = bucket_samples(&samples, &index, lambda_clean, lambda_dirty)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;
    let params = DefinitionParams::Llama2 {
        min_match_len: index.n(),
        lambda: lambda_dirty,
        granularity: Granularity::Document,
    };
    let mut verdicts = AtomicFile::create(a.out_dir.join("verdicts.jsonl"))?;
    for (v, label) in &labelled {
        let doc_verdict = contamkit::defs::DocumentVerdict {
            doc_id: v.sample_id.clone(),
            contaminated: label.dirty_side == contamkit::defs::DirtySide::Dirty,
            fraction: v.contamination_percentage,
            contaminated_token_count: v.marked_count(),
            token_count: v.token_count,
            sentence_flags: None,
        };
        writeln!(
            verdicts,
            "{}",
            verdict_record(&doc_verdict, &params, Some(*label))
        )?;
    }
    let counts = export_buckets(&samples, &labelled, &a.out_dir)?;
    verdicts.commit()?;
    let summary = serde_json::json!({
        "samples": samples.len(),
        "min_match_len": index.n(),
        "lambda_clean": lambda_clean.value(),
        "lambda_dirty": lambda_dirty.value(),
        "counts": counts,
        "note": "bucket sizes are very sensitive to the chosen thresholds",
    });
    write_json(&summary, Some(&a.out_dir.join("summary.json")))?;
    write_json(&summary, None)
}

fn parse_usize_list(spec: &str) -> Result<Vec<usize>, Failure> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Failure::usage(format!("bad list element {part:?}"));
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: usize = lo.trim().parse().map_err(|_| bad())?;
            let hi: usize = hi
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| bad())?;
            if lo > hi {
                return Err(bad());
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(Failure::usage("empty --n-list"));
    }
    Ok(out)
}

fn parse_lambda_list(spec: &str) -> Result<Vec<Threshold>, Failure> {
    let list = spec
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let v: f64 = p
                .parse()
                .map_err(|_| Failure::usage(format!("bad lambda {p:?}")))?;
            Threshold::new(v).map_err(Failure::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return Err(Failure::usage("empty --lambda-list"));
    }
    Ok(list)
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let grams = parse_usize_list(&a.n_list)?;
    if grams.contains(&0) {
        return Err(Failure::config("gram lengths must be at least 1"));
    }
    let (family, default_lambda) = match a.definition {
        DefinitionArg::Direct => (Family::Direct, None),
        DefinitionArg::Palm => (Family::Palm, Some(DEFAULT_PALM_LAMBDA)),
        DefinitionArg::Llama2 => (Family::Llama2, Some(DEFAULT_LLAMA2_LAMBDA)),
    };
    let lambdas = match (&a.lambda_list, default_lambda) {
        (Some(_), None) => {
            return Err(Failure::config(
                "--lambda-list does not apply to --definition direct",
            ))
        }
        (Some(list), Some(_)) => parse_lambda_list(list)?,
        (None, Some(d)) => vec![Threshold::new(d)?],
        (None, None) => Vec::new(),
    };
    let samples = read_eval(&a.eval)?;
    let sequences = eval_sequences(&samples, a.fields.into());
    let corpus = read_corpus(&a.corpus)?
        .map(|d| d.map(|d| TokenizedDocument::new(&d.id, &d.text)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = sweep(&corpus, &sequences, family, &grams, &lambdas, a.seed)?;
    let csv = sweep_csv(&rows);
    match &a.csv {
        Some(path) => {
            let mut out = AtomicFile::create(path)?;
            out.write_all(csv.as_bytes())?;
            out.commit()?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}
