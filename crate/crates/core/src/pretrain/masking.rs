use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{MaskingPolicy, MAX_MASKED_TOKEN_FRACTION};
use crate::tokenizer::{TokenizedWord, MASK_ID, NUM_SPECIAL};

// Guards ceil/floor against representation error (0.15 * 100 > 15).
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskCategory {
    Mask,
    Random,
    Keep,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskedSequence {
    pub token_ids: Vec<u32>,
    /// Ascending.
    pub positions: Vec<u32>,
    pub labels: Vec<u32>,
    /// One entry per chosen word, in selection order.
    pub categories: Vec<MaskCategory>,
    pub masked_words: usize,
}

/// Number of words to mask and the token budget for a sequence.
fn budget(policy: &MaskingPolicy, words: usize, tokens: usize) -> (usize, usize) {
    let target = ((policy.mask_prob * words as f64) - EPS).ceil().max(0.0) as usize;
    let target = if words > 0 { target.max(1) } else { 0 };
    let cap = ((MAX_MASKED_TOKEN_FRACTION * tokens as f64) + EPS).floor() as usize;
    (target, cap.max(1))
}

/// Masks whole words of `ids` in place. `spans` are the maskable word spans
/// (positions into `ids`); tokens outside every span are never touched.
pub(crate) fn mask_spans<R: Rng>(
    ids: &mut [u32],
    spans: &[Range<usize>],
    policy: &MaskingPolicy,
    vocab_size: u32,
    rng: &mut R,
) -> MaskedSequence {
    let tokens: usize = spans.iter().map(|s| s.len()).sum();
    let (target, cap) = budget(policy, spans.len(), tokens);
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.shuffle(rng);

    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    let mut masked_tokens = 0;
    for w in order {
        if chosen.len() >= target {
            break;
        }
        let len = spans[w].len();
        if !chosen.is_empty() && masked_tokens + len > cap {
            continue;
        }
        chosen.push(w);
        masked_tokens += len;
    }

    let mut out = MaskedSequence {
        masked_words: chosen.len(),
        ..MaskedSequence::default()
    };
    let mut marks: Vec<(u32, u32)> = Vec::with_capacity(masked_tokens);
    let keep_from = policy.replace_mask + policy.replace_random;
    for &w in &chosen {
        let u: f64 = rng.gen();
        let category = if u < policy.replace_mask {
            MaskCategory::Mask
        } else if u < keep_from {
            MaskCategory::Random
        } else {
            MaskCategory::Keep
        };
        out.categories.push(category);
        for p in spans[w].clone() {
            marks.push((p as u32, ids[p]));
            match category {
                MaskCategory::Mask => ids[p] = MASK_ID,
                MaskCategory::Random => ids[p] = rng.gen_range(NUM_SPECIAL..vocab_size),
                MaskCategory::Keep => {}
            }
        }
    }
    marks.sort_unstable();
    out.positions = marks.iter().map(|m| m.0).collect();
    out.labels = marks.iter().map(|m| m.1).collect();
    out
}

/// Whole-word masking over a word sequence. Chooses ⌈mask_prob × words⌉ words
/// (at least one, within a 20% token budget) and applies one
/// mask/random/keep draw to all subtokens of each chosen word.
pub fn whole_word_mask<R: Rng>(
    words: &[TokenizedWord],
    policy: &MaskingPolicy,
    vocab_size: u32,
    rng: &mut R,
) -> MaskedSequence {
    let mut ids = Vec::new();
    let mut spans = Vec::with_capacity(words.len());
    for w in words {
        let start = ids.len();
        ids.extend_from_slice(&w.token_ids);
        spans.push(start..ids.len());
    }
    let mut out = mask_spans(&mut ids, &spans, policy, vocab_size, rng);
    out.token_ids = ids;
    out
}
