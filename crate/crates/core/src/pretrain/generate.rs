use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::masking::mask_spans;
use super::pairs::{build_segment_pairs, SegmentPair, TokenizedDocument};
use super::{keyed_rng, MaskingPolicy, TrainingInstance, DOMAIN_MASK, SPECIAL_OVERHEAD};
use crate::error::{Error, Result};
use crate::filter::CleanDocument;
use crate::tokenizer::{BbpeVocab, TokenizedWord, CLS_ID, SEP_ID};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub documents: u64,
    pub pairs: u64,
    pub next_pairs: u64,
    pub instances: u64,
    pub truncated_sentences: u64,
    pub masked_words: u64,
    pub maskable_words: u64,
    pub masked_tokens: u64,
    pub maskable_tokens: u64,
    /// Fraction of maskable tokens that were selected, after whole-word
    /// selection at the word level.
    pub token_level_mask_rate: f64,
    pub single_document_corpus: bool,
}

impl GenerationStats {
    fn merge(&mut self, o: &GenerationStats) {
        self.instances += o.instances;
        self.masked_words += o.masked_words;
        self.maskable_words += o.maskable_words;
        self.masked_tokens += o.masked_tokens;
        self.maskable_tokens += o.maskable_tokens;
    }

    fn finish(&mut self) {
        self.token_level_mask_rate = if self.maskable_tokens == 0 {
            0.0
        } else {
            self.masked_tokens as f64 / self.maskable_tokens as f64
        };
    }
}

fn truncate_words(words: &mut Vec<TokenizedWord>, max_tokens: usize) -> bool {
    let mut total = 0;
    for (i, w) in words.iter_mut().enumerate() {
        if total + w.token_ids.len() > max_tokens {
            w.token_ids.truncate(max_tokens - total);
            let keep = if w.token_ids.is_empty() { i } else { i + 1 };
            words.truncate(keep);
            return true;
        }
        total += w.token_ids.len();
    }
    false
}

/// Encodes every sentence. Sentences longer than `max_len - 3` tokens are
/// truncated and counted; documents without sentences are dropped.
pub fn tokenize_corpus(docs: &[CleanDocument], vocab: &BbpeVocab, max_len: usize) -> (Vec<TokenizedDocument>, u64) {
    let max_tokens = max_len.saturating_sub(SPECIAL_OVERHEAD).max(2);
    let encoded: Vec<(Vec<Vec<TokenizedWord>>, u64)> = docs
        .par_iter()
        .map(|d| {
            let mut truncated = 0;
            let sentences = d
                .sentences
                .iter()
                .map(|s| {
                    let mut words = vocab.encode(s);
                    truncated += truncate_words(&mut words, max_tokens) as u64;
                    words
                })
                .filter(|w| !w.is_empty())
                .collect();
            (sentences, truncated)
        })
        .collect();
    let mut truncated = 0;
    let mut out = Vec::with_capacity(encoded.len());
    for (sentences, t) in encoded {
        truncated += t;
        if !sentences.is_empty() {
            out.push(TokenizedDocument {
                doc_index: out.len(),
                sentences,
            });
        }
    }
    (out, truncated)
}

/// Turns segment pairs into masked instances; each pair yields `dup_factor`
/// instances with independent maskings.
pub struct InstanceGenerator {
    pub pairs: Vec<SegmentPair>,
    pub vocab_size: u32,
    pub policy: MaskingPolicy,
    pub seed: u64,
}

impl InstanceGenerator {
    pub fn new(docs: &[TokenizedDocument], vocab_size: u32, policy: MaskingPolicy, max_len: usize, seed: u64) -> Self {
        Self {
            pairs: build_segment_pairs(docs, max_len, seed),
            vocab_size,
            policy,
            seed,
        }
    }

    pub fn instances_for(&self, pair_index: usize) -> (Vec<TrainingInstance>, GenerationStats) {
        let pair = &self.pairs[pair_index];
        let mut base = Vec::with_capacity(pair.a.len() + pair.b.len() + SPECIAL_OVERHEAD);
        base.push(CLS_ID);
        base.extend_from_slice(&pair.a.ids);
        base.push(SEP_ID);
        base.extend_from_slice(&pair.b.ids);
        base.push(SEP_ID);
        let first_sep = pair.a.len() + 1;
        let segment_ids: Vec<u8> = (0..base.len()).map(|i| (i > first_sep) as u8).collect();
        let mut spans = pair.a.word_spans(1);
        spans.extend(pair.b.word_spans(first_sep + 1));
        let maskable_tokens = (pair.a.len() + pair.b.len()) as u64;

        let mut stats = GenerationStats::default();
        let instances = (0..self.policy.dup_factor)
            .map(|dup| {
                let mut ids = base.clone();
                let mut rng = keyed_rng(self.seed, DOMAIN_MASK, pair_index as u64, dup as u64);
                let m = mask_spans(&mut ids, &spans, &self.policy, self.vocab_size, &mut rng);
                stats.instances += 1;
                stats.masked_words += m.masked_words as u64;
                stats.maskable_words += spans.len() as u64;
                stats.masked_tokens += m.positions.len() as u64;
                stats.maskable_tokens += maskable_tokens;
                TrainingInstance {
                    pair_index: pair_index as u64,
                    dup_index: dup as u32,
                    is_next: pair.is_next,
                    token_ids: ids,
                    segment_ids: segment_ids.clone(),
                    masked_positions: m.positions,
                    masked_labels: m.labels,
                }
            })
            .collect();
        (instances, stats)
    }

    /// Instances for pairs in `range`, generated in parallel, in pair order.
    pub fn batch(&self, range: std::ops::Range<usize>) -> (Vec<TrainingInstance>, GenerationStats) {
        let parts: Vec<_> = range.into_par_iter().map(|i| self.instances_for(i)).collect();
        let mut stats = GenerationStats::default();
        let mut out = Vec::with_capacity(parts.len() * self.policy.dup_factor);
        for (inst, s) in parts {
            stats.merge(&s);
            out.extend(inst);
        }
        (out, stats)
    }

    pub fn base_stats(&self, documents: usize) -> GenerationStats {
        GenerationStats {
            documents: documents as u64,
            pairs: self.pairs.len() as u64,
            next_pairs: self.pairs.iter().filter(|p| p.is_next).count() as u64,
            single_document_corpus: documents == 1,
            ..GenerationStats::default()
        }
    }

    pub(crate) fn accumulate(total: &mut GenerationStats, part: &GenerationStats) {
        total.merge(part);
        total.finish();
    }
}

/// All instances for a tokenized corpus, in (pair, dup) order.
pub fn generate_instances(
    docs: &[TokenizedDocument],
    vocab_size: u32,
    policy: &MaskingPolicy,
    max_len: usize,
    seed: u64,
) -> Result<(Vec<TrainingInstance>, GenerationStats)> {
    policy.validate()?;
    if max_len <= SPECIAL_OVERHEAD + 1 {
        return Err(Error::Config(format!("max-len must exceed {}", SPECIAL_OVERHEAD + 1)));
    }
    let generator = InstanceGenerator::new(docs, vocab_size, *policy, max_len, seed);
    let mut stats = generator.base_stats(docs.len());
    let (instances, part) = generator.batch(0..generator.pairs.len());
    InstanceGenerator::accumulate(&mut stats, &part);
    Ok((instances, stats))
}
