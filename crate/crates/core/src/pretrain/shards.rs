//! Instance shards.
//!
//! JSON-lines: one [`TrainingInstance`] object per line.
//!
//! Binary: a 16-byte header (`WWMI`, version, max_len, reserved; u32 LE) then
//! fixed-width records of `8 + 9 * max_len` bytes:
//!
//! ```text
//! u16 len | u8 is_next | u8 dup_index | u32 pair_index
//! u32 token_ids[max_len]     (PAD-filled)
//! u32 labels[max_len]        (0 where not masked)
//! u8  segment_ids[max_len]
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::generate::{GenerationStats, InstanceGenerator};
use super::{MaskingPolicy, TrainingInstance};
use crate::error::{Error, Result};
use crate::tokenizer::PAD_ID;

pub const BINARY_MAGIC: [u8; 4] = *b"WWMI";
pub const BINARY_VERSION: u32 = 1;
const PAIR_BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShardFormat {
    Jsonl,
    Bin,
}

impl ShardFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ShardFormat::Jsonl => "jsonl",
            ShardFormat::Bin => "bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardInfo {
    pub file: String,
    pub instances: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardManifest {
    pub format: ShardFormat,
    pub shards: Vec<ShardInfo>,
    pub total_instances: u64,
    pub total_pairs: u64,
    pub max_len: usize,
    pub seed: u64,
    pub vocab_size: u32,
    pub policy: MaskingPolicy,
    pub stats: GenerationStats,
}

fn record_len(max_len: usize) -> usize {
    8 + 9 * max_len
}

fn encode_binary(inst: &TrainingInstance, max_len: usize, buf: &mut Vec<u8>) -> Result<()> {
    let n = inst.token_ids.len();
    if n > max_len || n > u16::MAX as usize {
        return Err(Error::Config(format!("instance of {n} tokens exceeds max_len {max_len}")));
    }
    buf.clear();
    buf.extend_from_slice(&(n as u16).to_le_bytes());
    buf.push(inst.is_next as u8);
    buf.push(inst.dup_index as u8);
    buf.extend_from_slice(&(inst.pair_index as u32).to_le_bytes());
    for i in 0..max_len {
        let id = inst.token_ids.get(i).copied().unwrap_or(PAD_ID);
        buf.extend_from_slice(&id.to_le_bytes());
    }
    let mut labels = vec![0u32; max_len];
    for (&p, &l) in inst.masked_positions.iter().zip(&inst.masked_labels) {
        labels[p as usize] = l;
    }
    for l in labels {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    for i in 0..max_len {
        buf.push(inst.segment_ids.get(i).copied().unwrap_or(0));
    }
    Ok(())
}

struct ShardWriter {
    dir: PathBuf,
    format: ShardFormat,
    max_len: usize,
    per_shard: u64,
    current: Option<(BufWriter<File>, PathBuf)>,
    shards: Vec<ShardInfo>,
    buf: Vec<u8>,
}

impl ShardWriter {
    fn open(&mut self) -> Result<()> {
        let name = format!("instances-{:05}.{}", self.shards.len(), self.format.extension());
        let path = self.dir.join(&name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        if self.format == ShardFormat::Bin {
            let mut header = Vec::with_capacity(16);
            header.extend_from_slice(&BINARY_MAGIC);
            header.extend_from_slice(&BINARY_VERSION.to_le_bytes());
            header.extend_from_slice(&(self.max_len as u32).to_le_bytes());
            header.extend_from_slice(&0u32.to_le_bytes());
            w.write_all(&header).map_err(|e| Error::io(&path, e))?;
        }
        self.shards.push(ShardInfo { file: name, instances: 0 });
        self.current = Some((w, path));
        Ok(())
    }

    fn write(&mut self, inst: &TrainingInstance) -> Result<()> {
        if self.current.is_none() {
            self.open()?;
        }
        match self.format {
            ShardFormat::Jsonl => {
                self.buf.clear();
                serde_json::to_writer(&mut self.buf, inst).expect("instance serializes");
                self.buf.push(b'\n');
            }
            ShardFormat::Bin => encode_binary(inst, self.max_len, &mut self.buf)?,
        }
        let (w, path) = self.current.as_mut().expect("opened");
        w.write_all(&self.buf).map_err(|e| Error::io(path.as_path(), e))?;
        let info = self.shards.last_mut().expect("opened");
        info.instances += 1;
        if info.instances >= self.per_shard {
            self.close()?;
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        if let Some((mut w, path)) = self.current.take() {
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Generates and writes every instance, then `manifest.json`.
pub fn write_shards(
    generator: &InstanceGenerator,
    documents: usize,
    truncated_sentences: u64,
    dir: &Path,
    format: ShardFormat,
    max_len: usize,
    instances_per_shard: u64,
) -> Result<ShardManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut writer = ShardWriter {
        dir: dir.to_path_buf(),
        format,
        max_len,
        per_shard: instances_per_shard.max(1),
        current: None,
        shards: Vec::new(),
        buf: Vec::new(),
    };
    let mut stats = generator.base_stats(documents);
    stats.truncated_sentences = truncated_sentences;
    let n = generator.pairs.len();
    let mut start = 0;
    while start < n {
        let end = (start + PAIR_BATCH).min(n);
        let (instances, part) = generator.batch(start..end);
        InstanceGenerator::accumulate(&mut stats, &part);
        for inst in &instances {
            writer.write(inst)?;
        }
        start = end;
    }
    writer.close()?;
    let manifest = ShardManifest {
        format,
        total_instances: stats.instances,
        total_pairs: stats.pairs,
        shards: writer.shards,
        max_len,
        seed: generator.seed,
        vocab_size: generator.vocab_size,
        policy: generator.policy,
        stats,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_jsonl_shard(path: &Path) -> Result<Vec<TrainingInstance>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::parse(format!("{}:{}", path.display(), i + 1), e))
        })
        .collect()
}

pub fn read_binary_shard(path: &Path) -> Result<Vec<TrainingInstance>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::parse(path.display().to_string(), m);
    if bytes.len() < 16 || bytes[..4] != BINARY_MAGIC {
        return Err(bad("missing WWMI header"));
    }
    let u32_at = |b: &[u8], o: usize| u32::from_le_bytes(b[o..o + 4].try_into().expect("4 bytes"));
    if u32_at(&bytes, 4) != BINARY_VERSION {
        return Err(bad("unsupported version"));
    }
    let max_len = u32_at(&bytes, 8) as usize;
    let rec = record_len(max_len);
    let body = &bytes[16..];
    if body.len() % rec != 0 {
        return Err(bad("truncated record"));
    }
    let mut out = Vec::with_capacity(body.len() / rec);
    for r in body.chunks_exact(rec) {
        let n = u16::from_le_bytes([r[0], r[1]]) as usize;
        if n > max_len {
            return Err(bad("record length exceeds max_len"));
        }
        let ids_at = 8;
        let labels_at = ids_at + 4 * max_len;
        let seg_at = labels_at + 4 * max_len;
        let token_ids = (0..n).map(|i| u32_at(r, ids_at + 4 * i)).collect();
        let mut masked_positions = Vec::new();
        let mut masked_labels = Vec::new();
        for i in 0..n {
            let l = u32_at(r, labels_at + 4 * i);
            if l != 0 {
                masked_positions.push(i as u32);
                masked_labels.push(l);
            }
        }
        out.push(TrainingInstance {
            pair_index: u32_at(r, 4) as u64,
            dup_index: r[3] as u32,
            is_next: r[2] != 0,
            token_ids,
            segment_ids: r[seg_at..seg_at + n].to_vec(),
            masked_positions,
            masked_labels,
        });
    }
    Ok(out)
}
