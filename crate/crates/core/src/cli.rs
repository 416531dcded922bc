//! Command-line front end. Every sub-command resolves a [`PipelineConfig`]
//! (config file, then flags) and validates it before touching the file system.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{PipelineConfig, WORKERS_ENV};
use crate::error::{Error, Result};
use crate::filter::{balanced_sample, LabeledPair};
use crate::harness::{
    aggregate_runs, emit_grid_manifest, manifest_json, read_run_records, render_filter_table, render_groups_table,
    render_hp_table, render_score_table, HpGrid, StdKind,
};
use crate::metrics::{self, AlueTask, MetricKind};
use crate::stages::{self, log_stage};
use crate::tokenizer::BbpeVocab;

#[derive(Debug, Parser)]
#[command(name = "arcorpus", version, about = "Arabic pre-training corpus preparation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize and filter raw documents.
    Clean(PipelineArgs),
    /// Learn a byte-level BPE vocabulary from cleaned documents.
    TrainTokenizer {
        /// Cleaned JSON-lines corpus.
        #[arg(long)]
        clean: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Encode text (from --text or stdin lines) into token ids.
    Encode {
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        text: Option<String>,
        /// Print token strings instead of ids.
        #[arg(long)]
        tokens: bool,
    },
    /// Decode whitespace-separated token ids (from --ids or stdin lines).
    Decode {
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        ids: Option<String>,
    },
    /// Build masked-LM / next-sentence instances and write shards.
    GenInstances {
        #[arg(long)]
        clean: PathBuf,
        /// Directory holding merges.txt and vocab.json.
        #[arg(long)]
        vocab: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Score a predictions file, or average ALUE task scores.
    EvalMetrics(EvalArgs),
    /// Aggregate per-seed run records into mean±std tables.
    Aggregate {
        #[arg(long)]
        records: PathBuf,
        /// Use the n-1 denominator.
        #[arg(long)]
        sample_std: bool,
        /// Write tables here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Emit the fine-tuning hyper-parameter grid as a JSON job manifest.
    Grid {
        /// Comma-separated; defaults to the eight ALUE tasks.
        #[arg(long, value_delimiter = ',')]
        tasks: Option<Vec<String>>,
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a label-balanced, Latin-free sample of sentence pairs.
    SamplePairs {
        /// JSON lines of {"first", "second", "label"}.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        positives: usize,
        #[arg(long)]
        negatives: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run clean, train-tokenizer and gen-instances in order.
    Prepare(PipelineArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Flat key = value config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input file, optionally prefixed with a source tag: CC=path.jsonl.
    #[arg(long = "input")]
    pub inputs: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_nonarabic_run: Option<usize>,
    #[arg(long)]
    pub min_words_sentence: Option<usize>,
    #[arg(long)]
    pub min_words_doc: Option<usize>,
    #[arg(long)]
    pub arabic_ratio: Option<f64>,
    #[arg(long)]
    pub max_punct_run: Option<usize>,
    #[arg(long)]
    pub doc_discard_ratio: Option<f64>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub mask_prob: Option<f64>,
    #[arg(long)]
    pub dup_factor: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    /// Shard format: jsonl or bin.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub instances_per_shard: Option<u64>,
}

impl PipelineArgs {
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if !self.inputs.is_empty() {
            cfg.inputs.clear();
            for i in &self.inputs {
                cfg.set("input", i)?;
            }
        }
        let overrides: [(&str, Option<String>); 15] = [
            ("output_dir", self.out.as_ref().map(|p| p.display().to_string())),
            ("max_nonarabic_run", self.max_nonarabic_run.map(|v| v.to_string())),
            ("min_words_sentence", self.min_words_sentence.map(|v| v.to_string())),
            ("min_words_doc", self.min_words_doc.map(|v| v.to_string())),
            ("arabic_ratio", self.arabic_ratio.map(|v| v.to_string())),
            ("max_punct_run", self.max_punct_run.map(|v| v.to_string())),
            ("doc_discard_ratio", self.doc_discard_ratio.map(|v| v.to_string())),
            ("vocab_size", self.vocab_size.map(|v| v.to_string())),
            ("mask_prob", self.mask_prob.map(|v| v.to_string())),
            ("dup_factor", self.dup_factor.map(|v| v.to_string())),
            ("max_len", self.max_len.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
            ("shard_format", self.format.clone()),
            ("instances_per_shard", self.instances_per_shard.map(|v| v.to_string())),
        ];
        for (k, v) in overrides {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// accuracy, f1-macro, jaccard, jaccard-micro, pearson or conll-f1.
    #[arg(long)]
    pub metric: Option<String>,
    /// ALUE task name; selects its metric.
    #[arg(long)]
    pub task: Option<String>,
    /// JSON lines of {"id", "pred", "gold"}.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Declared label set for f1-macro (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// JSON object of ALUE task scores to average.
    #[arg(long, conflicts_with = "predictions")]
    pub alue: Option<PathBuf>,
}

#[derive(Deserialize)]
struct Prediction {
    #[serde(default)]
    #[allow(dead_code)]
    id: Value,
    pred: Value,
    gold: Value,
}

fn as_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn as_list(v: &Value, loc: &str) -> Result<Vec<String>> {
    match v {
        Value::Array(xs) => Ok(xs.iter().map(as_label).collect()),
        _ => Err(Error::parse(loc, "expected an array")),
    }
}

fn as_number(v: &Value, loc: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::parse(loc, "number out of range")),
        Value::String(s) => s.trim().parse().map_err(|_| Error::parse(loc, "expected a number")),
        _ => Err(Error::parse(loc, "expected a number")),
    }
}

fn read_predictions(path: &Path) -> Result<Vec<(String, Prediction)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let loc = format!("{}:{}", path.display(), i + 1);
            let p = serde_json::from_str(l).map_err(|e| Error::parse(&loc, e))?;
            Ok((loc, p))
        })
        .collect()
}

pub fn evaluate(args: &EvalArgs) -> Result<Value> {
    if let Some(path) = &args.alue {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scores: BTreeMap<String, f64> =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        let avg = metrics::alue_average(scores)?;
        return Ok(json!({ "metric": "alue-average", "score": avg }));
    }
    let metric = match (&args.metric, &args.task) {
        (Some(m), _) => m.parse::<MetricKind>()?,
        (None, Some(t)) => t.parse::<AlueTask>()?.metric(),
        (None, None) => return Err(Error::Config("one of --metric, --task or --alue is required".into())),
    };
    let path = args
        .predictions
        .as_ref()
        .ok_or_else(|| Error::Config("--predictions is required".into()))?;
    let rows = read_predictions(path)?;
    let n = rows.len();
    let score = match metric {
        MetricKind::Accuracy => {
            let (p, g): (Vec<String>, Vec<String>) = rows.iter().map(|(_, r)| (as_label(&r.pred), as_label(&r.gold))).unzip();
            json!(metrics::accuracy(&p, &g)?)
        }
        MetricKind::F1Macro => {
            let (p, g): (Vec<String>, Vec<String>) = rows.iter().map(|(_, r)| (as_label(&r.pred), as_label(&r.gold))).unzip();
            let labels = match &args.labels {
                Some(l) => l.clone(),
                None => {
                    log::warn!("no --labels given; using the labels present in the file");
                    let mut l: Vec<String> = p.iter().chain(&g).cloned().collect();
                    l.sort();
                    l.dedup();
                    l
                }
            };
            json!(metrics::f1_macro(&p, &g, &labels)?)
        }
        MetricKind::Jaccard | MetricKind::JaccardMicro => {
            let mut ps = Vec::with_capacity(n);
            let mut gs = Vec::with_capacity(n);
            for (loc, r) in &rows {
                ps.push(as_list(&r.pred, loc)?.into_iter().collect::<HashSet<_>>());
                gs.push(as_list(&r.gold, loc)?.into_iter().collect::<HashSet<_>>());
            }
            if metric == MetricKind::Jaccard {
                json!(metrics::jaccard_multilabel(&ps, &gs)?)
            } else {
                json!(metrics::jaccard_micro(&ps, &gs)?)
            }
        }
        MetricKind::Pearson => {
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for (loc, r) in &rows {
                xs.push(as_number(&r.pred, loc)?);
                ys.push(as_number(&r.gold, loc)?);
            }
            json!(metrics::pearson(&xs, &ys)?)
        }
        MetricKind::ConllF1 => {
            let mut ps = Vec::with_capacity(n);
            let mut gs = Vec::with_capacity(n);
            for (loc, r) in &rows {
                ps.push(as_list(&r.pred, loc)?);
                gs.push(as_list(&r.gold, loc)?);
            }
            let prf = metrics::conll_mention_f1(&ps, &gs)?;
            return Ok(json!({ "metric": metric.to_string(), "score": prf.f1, "detail": prf, "n": n }));
        }
    };
    Ok(json!({ "metric": metric.to_string(), "score": score, "n": n }))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(p, text).map_err(|e| Error::io(p, e))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn input_lines(inline: Option<&String>) -> Result<Vec<String>> {
    match inline {
        Some(t) => Ok(vec![t.clone()]),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| Error::io("<stdin>", e))?;
            Ok(s.lines().map(String::from).collect())
        }
    }
}

fn timed<T>(stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    log_stage(stage, "start", json!({}));
    let t = std::time::Instant::now();
    let out = f();
    let ms = t.elapsed().as_millis() as u64;
    match &out {
        Ok(_) => log_stage(stage, "end", json!({ "duration_ms": ms })),
        Err(e) => log_stage(stage, "failed", json!({ "duration_ms": ms, "error": e.to_string() })),
    }
    out
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Clean(args) => {
            let cfg = args.resolve()?;
            let stats = timed("clean", || stages::clean_stage(&cfg, &cfg.output_dir))?;
            write_output(None, &render_filter_table(&stats))
        }
        Command::TrainTokenizer { clean, pipeline } => {
            let cfg = pipeline.resolve()?;
            let vocab = timed("train-tokenizer", || {
                stages::train_tokenizer_stage(&clean, cfg.vocab_size, cfg.workers, &cfg.output_dir)
            })?;
            log_stage("train-tokenizer", "counters", json!({ "vocab_size": vocab.len(), "merges": vocab.merges().len() }));
            Ok(())
        }
        Command::Encode { vocab, text, tokens } => {
            let v = BbpeVocab::load(&vocab)?;
            let mut out = String::new();
            for line in input_lines(text.as_ref())? {
                let ids = v.encode_ids(&line);
                let cells: Vec<String> = if tokens {
                    ids.iter().map(|&i| v.token_string(i).unwrap_or_default()).collect()
                } else {
                    ids.iter().map(u32::to_string).collect()
                };
                out += &cells.join(" ");
                out.push('\n');
            }
            write_output(None, &out)
        }
        Command::Decode { vocab, ids } => {
            let v = BbpeVocab::load(&vocab)?;
            let mut out = String::new();
            for line in input_lines(ids.as_ref())? {
                let parsed: Vec<u32> = line
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::parse("<input>", format!("bad token id {t:?}"))))
                    .collect::<Result<_>>()?;
                out += &v.decode(&parsed)?;
                out.push('\n');
            }
            write_output(None, &out)
        }
        Command::GenInstances { clean, vocab, pipeline } => {
            let cfg = pipeline.resolve()?;
            let m = timed("gen-instances", || stages::gen_instances_stage(&clean, &vocab, &cfg, &cfg.output_dir))?;
            log_stage(
                "gen-instances",
                "counters",
                json!({ "pairs": m.total_pairs, "instances": m.total_instances, "shards": m.shards.len() }),
            );
            Ok(())
        }
        Command::EvalMetrics(args) => write_output(None, &(evaluate(&args)?.to_string() + "\n")),
        Command::Aggregate { records, sample_std, out, json } => {
            let recs = read_run_records(&records)?;
            let kind = if sample_std { StdKind::Sample } else { StdKind::Population };
            let report = aggregate_runs(&recs, kind)?;
            if let Some(p) = json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
                write_output(Some(&p), &text)?;
            }
            let text = format!(
                "{}\n{}\n{}",
                render_score_table(&report),
                render_hp_table(&report),
                render_groups_table(&report)
            );
            write_output(out.as_deref(), &text)
        }
        Command::Grid { tasks, model, out } => {
            let tasks = tasks.unwrap_or_else(|| AlueTask::ALL.iter().map(|t| t.name().to_owned()).collect());
            let jobs = emit_grid_manifest(&HpGrid::default(), &tasks, &model)?;
            write_output(out.as_deref(), &manifest_json(&jobs))
        }
        Command::SamplePairs { input, positives, negatives, seed, out } => {
            let file = std::fs::File::open(&input).map_err(|e| Error::io(&input, e))?;
            let mut pairs = Vec::new();
            for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(&input, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let p: LabeledPair = serde_json::from_str(&line)
                    .map_err(|e| Error::parse(format!("{}:{}", input.display(), i + 1), e))?;
                pairs.push(p);
            }
            let sample = balanced_sample(pairs, positives, negatives, seed)?;
            let mut text = String::new();
            for p in &sample {
                text += &serde_json::to_string(p).expect("pair serializes");
                text.push('\n');
            }
            write_output(out.as_deref(), &text)
        }
        Command::Prepare(args) => {
            let cfg = args.resolve()?;
            let m = stages::prepare(&cfg)?;
            if let Some(stats) = &m.filter_stats {
                write_output(None, &render_filter_table(stats))?;
            }
            Ok(())
        }
    }
}

/// JSON-line logging on stderr. Stage events are already JSON and pass
/// through unchanged.
pub fn init_logging() {
    let env = env_logger::Env::default().default_filter_or("info");
    let _ = env_logger::Builder::from_env(env)
        .format(|buf, record| {
            if record.target() == "arcorpus::stage" {
                writeln!(buf, "{}", record.args())
            } else {
                let line = json!({
                    "level": record.level().to_string().to_lowercase(),
                    "target": record.target(),
                    "msg": record.args().to_string(),
                });
                writeln!(buf, "{line}")
            }
        })
        .try_init();
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) | Error::VocabTooSmall { .. } => "config",
        Error::Io { .. } | Error::DocIo { .. } => "io",
        Error::Parse { .. } => "parse",
        Error::Stage { .. } => "stage",
        _ => "data",
    }
}

/// Exit status: 0 on success, 2 for configuration errors, 1 otherwise.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut obj = json!({ "error": e.to_string(), "kind": error_kind(&e) });
            if let Error::Stage { stage, .. } = &e {
                obj["stage"] = json!(stage);
            }
            eprintln!("{obj}");
            ExitCode::from(if error_kind(&e) == "config" { 2 } else { 1 })
        }
    }
}
