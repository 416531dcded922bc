//! Pipeline stages over files: clean, train-tokenizer, gen-instances, and the
//! end-to-end `prepare` run.
//!
//! Layout under the output directory:
//!
//! ```text
//! clean/clean.jsonl, clean/filter_stats.json
//! tokenizer/merges.txt, tokenizer/vocab.json
//! instances/instances-NNNNN.{jsonl,bin}, instances/manifest.json
//! manifest.json
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::filter::{run_corpus_clean, CleanDocument, CorpusReader, FilterStats};
use crate::pretrain::{tokenize_corpus, write_shards, InstanceGenerator, ShardManifest};
use crate::tokenizer::{train_bbpe, BbpeVocab};

pub const CLEAN_DIR: &str = "clean";
pub const CLEAN_FILE: &str = "clean.jsonl";
pub const FILTER_STATS_FILE: &str = "filter_stats.json";
pub const TOKENIZER_DIR: &str = "tokenizer";
pub const INSTANCES_DIR: &str = "instances";
pub const RUN_MANIFEST_FILE: &str = "manifest.json";

/// Emits one JSON line per stage transition on the `arcorpus::stage` target.
pub fn log_stage(stage: &str, event: &str, extra: serde_json::Value) {
    let mut obj = json!({ "stage": stage, "event": event });
    if let (Some(o), serde_json::Value::Object(e)) = (obj.as_object_mut(), extra) {
        o.extend(e);
    }
    log::info!(target: "arcorpus::stage", "{obj}");
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes") + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Filters every configured input into `out_dir/clean.jsonl` and writes the
/// stats next to it.
pub fn clean_stage(cfg: &PipelineConfig, out_dir: &Path) -> Result<FilterStats> {
    if cfg.inputs.is_empty() {
        return Err(Error::Config("no input files".into()));
    }
    create_dir(out_dir)?;
    let path = out_dir.join(CLEAN_FILE);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    let reader = CorpusReader::new(cfg.inputs.iter().map(|i| i.reader_entry()).collect());
    let stats = run_corpus_clean(reader, &cfg.filter, cfg.workers, |doc| {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n")
    })?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&out_dir.join(FILTER_STATS_FILE), &stats)?;
    Ok(stats)
}

pub fn read_clean_documents(path: &Path) -> Result<Vec<CleanDocument>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut doc: CleanDocument =
            serde_json::from_str(&line).map_err(|e| Error::parse(format!("{}:{}", path.display(), i + 1), e))?;
        doc.word_count = doc.sentences.iter().map(|s| s.split_whitespace().count()).sum();
        out.push(doc);
    }
    Ok(out)
}

pub fn train_tokenizer_stage(clean: &Path, vocab_size: usize, workers: usize, out_dir: &Path) -> Result<BbpeVocab> {
    let docs = read_clean_documents(clean)?;
    let vocab = with_pool(workers, || train_bbpe(&docs, vocab_size))??;
    create_dir(out_dir)?;
    vocab.save(out_dir)?;
    Ok(vocab)
}

pub fn gen_instances_stage(clean: &Path, vocab_dir: &Path, cfg: &PipelineConfig, out_dir: &Path) -> Result<ShardManifest> {
    cfg.masking.validate()?;
    let docs = read_clean_documents(clean)?;
    let vocab = BbpeVocab::load(vocab_dir)?;
    create_dir(out_dir)?;
    with_pool(cfg.workers, || {
        let (tokenized, truncated) = tokenize_corpus(&docs, &vocab, cfg.max_len);
        let generator =
            InstanceGenerator::new(&tokenized, vocab.len() as u32, cfg.masking, cfg.max_len, cfg.seed);
        write_shards(
            &generator,
            tokenized.len(),
            truncated,
            out_dir,
            cfg.shard_format,
            cfg.max_len,
            cfg.instances_per_shard,
        )
    })?
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub duration_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub config: String,
    pub stages: Vec<StageRecord>,
    pub filter_stats: Option<FilterStats>,
    pub vocab_size: Option<usize>,
    pub instances: Option<ShardManifest>,
}

impl RunManifest {
    pub fn completed_stages(&self) -> usize {
        self.stages.iter().filter(|s| s.status == StageStatus::Completed).count()
    }
}

struct Runner {
    manifest: RunManifest,
    path: PathBuf,
}

impl Runner {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        log_stage(stage, "start", json!({}));
        let t = Instant::now();
        let out = f();
        let duration_ms = t.elapsed().as_millis() as u64;
        let (status, error) = match &out {
            Ok(_) => (StageStatus::Completed, None),
            Err(e) => (StageStatus::Failed, Some(e.to_string())),
        };
        self.manifest.stages.push(StageRecord { name: stage.into(), status, duration_ms, error: error.clone() });
        match error {
            None => log_stage(stage, "end", json!({ "duration_ms": duration_ms })),
            Some(e) => log_stage(stage, "failed", json!({ "duration_ms": duration_ms, "error": e })),
        }
        write_json(&self.path, &self.manifest)?;
        out.map_err(|e| Error::Stage { stage, source: Box::new(e) })
    }
}

/// clean → train-tokenizer → gen-instances. The run manifest is rewritten
/// after each stage, so a failure leaves earlier outputs and records which
/// stage failed.
pub fn prepare(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    if cfg.inputs.is_empty() {
        return Err(Error::Config("no input files".into()));
    }
    let out = &cfg.output_dir;
    create_dir(out)?;
    let mut runner = Runner {
        manifest: RunManifest {
            config_hash: cfg.hash(),
            config: cfg.serialize(),
            stages: Vec::new(),
            filter_stats: None,
            vocab_size: None,
            instances: None,
        },
        path: out.join(RUN_MANIFEST_FILE),
    };
    let clean_dir = out.join(CLEAN_DIR);
    let clean_file = clean_dir.join(CLEAN_FILE);
    let tok_dir = out.join(TOKENIZER_DIR);

    let stats = runner.run("clean", || clean_stage(cfg, &clean_dir))?;
    log_stage(
        "clean",
        "counters",
        json!({
            "input_docs": stats.input_docs,
            "output_docs": stats.output_docs,
            "retention_pct": stats.retention_pct,
        }),
    );
    runner.manifest.filter_stats = Some(stats);

    let vocab = runner.run("train-tokenizer", || {
        train_tokenizer_stage(&clean_file, cfg.vocab_size, cfg.workers, &tok_dir)
    })?;
    runner.manifest.vocab_size = Some(vocab.len());

    let shards = runner.run("gen-instances", || {
        gen_instances_stage(&clean_file, &tok_dir, cfg, &out.join(INSTANCES_DIR))
    })?;
    log_stage(
        "gen-instances",
        "counters",
        json!({ "pairs": shards.total_pairs, "instances": shards.total_instances }),
    );
    runner.manifest.instances = Some(shards);
    write_json(&runner.path, &runner.manifest)?;
    Ok(runner.manifest)
}
