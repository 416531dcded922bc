//! Masked-LM / next-sentence pre-training instance generation.
//!
//! Every random decision draws from a ChaCha stream keyed by
//! `(seed, domain, a, b)`: pair building by document index, masking by
//! `(pair_index, dup_index)`. Output therefore does not depend on how work is
//! split across threads.

mod generate;
mod masking;
mod pairs;
mod shards;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{generate_instances, tokenize_corpus, GenerationStats, InstanceGenerator};
pub use masking::{whole_word_mask, MaskCategory, MaskedSequence};
pub use pairs::{build_segment_pairs, Segment, SegmentPair, TokenizedDocument};
pub use shards::{
    read_binary_shard, read_jsonl_shard, write_shards, ShardFormat, ShardInfo, ShardManifest, BINARY_MAGIC,
    BINARY_VERSION,
};

pub const DEFAULT_MAX_LEN: usize = 128;
/// Tokens reserved for `[CLS] A [SEP] B [SEP]`.
pub const SPECIAL_OVERHEAD: usize = 3;
pub const MIN_TARGET_LEN: usize = 32;
/// Masked tokens never exceed this fraction of a sequence, except that one
/// word is always masked.
pub const MAX_MASKED_TOKEN_FRACTION: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingPolicy {
    pub mask_prob: f64,
    pub replace_mask: f64,
    pub replace_random: f64,
    pub keep_original: f64,
    pub dup_factor: usize,
}

impl Default for MaskingPolicy {
    fn default() -> Self {
        Self {
            mask_prob: 0.15,
            replace_mask: 0.80,
            replace_random: 0.10,
            keep_original: 0.10,
            dup_factor: 3,
        }
    }
}

impl MaskingPolicy {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.mask_prob, self.replace_mask, self.replace_random, self.keep_original];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("masking probabilities must lie in [0, 1]".into()));
        }
        let sum = self.replace_mask + self.replace_random + self.keep_original;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "mask/random/keep proportions must sum to 1, got {sum}"
            )));
        }
        if self.dup_factor == 0 || self.dup_factor > u8::MAX as usize {
            return Err(Error::Config("dup-factor must be in 1..=255".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub pair_index: u64,
    pub dup_index: u32,
    pub is_next: bool,
    pub token_ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub masked_positions: Vec<u32>,
    pub masked_labels: Vec<u32>,
}

impl TrainingInstance {
    /// Token ids with every masked position restored to its label.
    pub fn unmasked(&self) -> Vec<u32> {
        let mut ids = self.token_ids.clone();
        for (&p, &l) in self.masked_positions.iter().zip(&self.masked_labels) {
            ids[p as usize] = l;
        }
        ids
    }
}

const DOMAIN_PAIRS: u64 = 1;
const DOMAIN_MASK: u64 = 2;

pub(crate) fn keyed_rng(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (i, v) in [seed, domain, a, b].into_iter().enumerate() {
        key[i * 8..(i + 1) * 8].copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_policy_is_valid() {
        assert!(MaskingPolicy::default().validate().is_ok());
        let bad = MaskingPolicy {
            replace_mask: 0.7,
            ..MaskingPolicy::default()
        };
        assert!(bad.validate().is_err());
        let zero = MaskingPolicy {
            dup_factor: 0,
            ..MaskingPolicy::default()
        };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn keyed_streams_differ() {
        use rand::RngCore;
        let a = keyed_rng(1, DOMAIN_MASK, 0, 0).next_u64();
        let b = keyed_rng(1, DOMAIN_MASK, 0, 1).next_u64();
        let c = keyed_rng(1, DOMAIN_MASK, 0, 0).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
