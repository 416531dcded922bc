//! Flat `key = value` pipeline configuration.
//!
//! ```text
//! # comments start with '#'
//! input = CC=corpus/cc.jsonl      # repeatable; optional SOURCE= prefix
//! output_dir = out
//! arabic_ratio = 0.70
//! seed = 0
//! ```
//!
//! Keys accept `-` or `_`. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::filter::{FilterConfig, InputFormat};
use crate::pretrain::{MaskingPolicy, ShardFormat, DEFAULT_MAX_LEN, SPECIAL_OVERHEAD};
use crate::tokenizer::{DEFAULT_VOCAB_SIZE, FIRST_MERGE_ID};

pub const WORKERS_ENV: &str = "ARCORPUS_WORKERS";

#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    pub path: PathBuf,
    pub source: String,
}

impl InputSpec {
    /// `SOURCE=path` or a bare path, whose file stem becomes the source tag.
    pub fn parse(s: &str) -> Self {
        match s.split_once('=') {
            Some((src, path)) if !src.is_empty() && !src.contains('/') => Self {
                path: PathBuf::from(path.trim()),
                source: src.trim().to_owned(),
            },
            _ => {
                let path = PathBuf::from(s.trim());
                let source = path
                    .file_stem()
                    .and_then(|x| x.to_str())
                    .unwrap_or("input")
                    .to_owned();
                Self { path, source }
            }
        }
    }

    pub fn reader_entry(&self) -> (PathBuf, InputFormat, String) {
        (self.path.clone(), InputFormat::detect(&self.path), self.source.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub inputs: Vec<InputSpec>,
    pub output_dir: PathBuf,
    pub filter: FilterConfig,
    pub vocab_size: usize,
    pub masking: MaskingPolicy,
    pub max_len: usize,
    pub seed: u64,
    pub workers: usize,
    pub shard_format: ShardFormat,
    pub instances_per_shard: u64,
}

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            output_dir: PathBuf::from("out"),
            filter: FilterConfig::default(),
            vocab_size: DEFAULT_VOCAB_SIZE,
            masking: MaskingPolicy::default(),
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
            workers: default_workers(),
            shard_format: ShardFormat::Jsonl,
            instances_per_shard: 100_000,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

pub fn parse_shard_format(value: &str) -> Result<ShardFormat> {
    match value.to_ascii_lowercase().as_str() {
        "jsonl" | "json" => Ok(ShardFormat::Jsonl),
        "bin" | "binary" => Ok(ShardFormat::Bin),
        _ => Err(Error::Config(format!("shard_format: expected jsonl or bin, got {value:?}"))),
    }
}

impl PipelineConfig {
    /// Applies one setting. Used by the file parser and by flag overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "input" => self.inputs.push(InputSpec::parse(value)),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "max_nonarabic_run" => self.filter.max_nonarabic_run = parse_num(k, value)?,
            "min_words_sentence" => self.filter.min_words_sentence = parse_num(k, value)?,
            "min_words_doc" => self.filter.min_words_doc = parse_num(k, value)?,
            "arabic_ratio" => self.filter.arabic_ratio = parse_num(k, value)?,
            "max_punct_run" => self.filter.max_punct_run = parse_num(k, value)?,
            "doc_discard_ratio" => self.filter.doc_discard_ratio = parse_num(k, value)?,
            "count_duplicates_in_discard" => self.filter.count_duplicates_in_discard = parse_bool(k, value)?,
            "vocab_size" => self.vocab_size = parse_num(k, value)?,
            "mask_prob" => self.masking.mask_prob = parse_num(k, value)?,
            "replace_mask" => self.masking.replace_mask = parse_num(k, value)?,
            "replace_random" => self.masking.replace_random = parse_num(k, value)?,
            "keep_original" => self.masking.keep_original = parse_num(k, value)?,
            "dup_factor" => self.masking.dup_factor = parse_num(k, value)?,
            "max_len" => self.max_len = parse_num(k, value)?,
            "seed" => self.seed = parse_num(k, value)?,
            "workers" => self.workers = parse_num(k, value)?,
            "shard_format" => self.shard_format = parse_shard_format(value)?,
            "instances_per_shard" => self.instances_per_shard = parse_num(k, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, e)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Canonical text form; `parse(serialize())` reproduces the config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for input in &self.inputs {
            let _ = writeln!(s, "input = {}={}", input.source, input.path.display());
        }
        let f = &self.filter;
        let m = &self.masking;
        let fields: [(&str, String); 19] = [
            ("output_dir", self.output_dir.display().to_string()),
            ("max_nonarabic_run", f.max_nonarabic_run.to_string()),
            ("min_words_sentence", f.min_words_sentence.to_string()),
            ("min_words_doc", f.min_words_doc.to_string()),
            ("arabic_ratio", f.arabic_ratio.to_string()),
            ("max_punct_run", f.max_punct_run.to_string()),
            ("doc_discard_ratio", f.doc_discard_ratio.to_string()),
            ("count_duplicates_in_discard", f.count_duplicates_in_discard.to_string()),
            ("vocab_size", self.vocab_size.to_string()),
            ("mask_prob", m.mask_prob.to_string()),
            ("replace_mask", m.replace_mask.to_string()),
            ("replace_random", m.replace_random.to_string()),
            ("keep_original", m.keep_original.to_string()),
            ("dup_factor", m.dup_factor.to_string()),
            ("max_len", self.max_len.to_string()),
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            ("shard_format", self.shard_format.extension().to_string()),
            ("instances_per_shard", self.instances_per_shard.to_string()),
        ];
        for (k, v) in fields {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// SHA-256 of the canonical form minus `workers` and `output_dir`, which
    /// never change what gets written.
    pub fn hash(&self) -> String {
        let text: String = self
            .serialize()
            .lines()
            .filter(|l| !l.starts_with("workers ") && !l.starts_with("output_dir "))
            .map(|l| format!("{l}\n"))
            .collect();
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.masking.validate()?;
        if self.vocab_size <= FIRST_MERGE_ID as usize {
            return Err(Error::VocabTooSmall { target: self.vocab_size, minimum: FIRST_MERGE_ID as usize });
        }
        if self.vocab_size > u32::MAX as usize {
            return Err(Error::Config("vocab_size does not fit in u32".into()));
        }
        if self.max_len <= SPECIAL_OVERHEAD + 1 || self.max_len > u16::MAX as usize {
            return Err(Error::Config(format!(
                "max_len must be in {}..={}, got {}",
                SPECIAL_OVERHEAD + 2,
                u16::MAX,
                self.max_len
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.instances_per_shard == 0 {
            return Err(Error::Config("instances_per_shard must be at least 1".into()));
        }
        Ok(())
    }
}
