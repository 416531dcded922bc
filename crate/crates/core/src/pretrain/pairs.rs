use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;

use super::{keyed_rng, DOMAIN_PAIRS, MIN_TARGET_LEN, SPECIAL_OVERHEAD};
use crate::tokenizer::TokenizedWord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDocument {
    pub doc_index: usize,
    /// Sentences, each a list of words.
    pub sentences: Vec<Vec<TokenizedWord>>,
}

impl TokenizedDocument {
    fn sentence_len(&self, i: usize) -> usize {
        self.sentences[i].iter().map(|w| w.token_ids.len()).sum()
    }
}

/// Token ids with a flag marking the first token of every word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Segment {
    pub ids: Vec<u32>,
    pub word_starts: Vec<bool>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn push_words(&mut self, words: &[TokenizedWord]) {
        for w in words {
            for (i, &id) in w.token_ids.iter().enumerate() {
                self.ids.push(id);
                self.word_starts.push(i == 0);
            }
        }
    }

    fn pop(&mut self) {
        self.ids.pop();
        self.word_starts.pop();
    }

    /// Word spans shifted by `offset`.
    pub fn word_spans(&self, offset: usize) -> Vec<Range<usize>> {
        let mut spans = Vec::new();
        let mut start = None;
        for (i, &s) in self.word_starts.iter().enumerate() {
            if s || start.is_none() {
                if let Some(st) = start {
                    spans.push(st + offset..i + offset);
                }
                start = Some(i);
            }
        }
        if let Some(st) = start {
            spans.push(st + offset..self.len() + offset);
        }
        spans
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPair {
    pub doc_a: usize,
    pub doc_b: usize,
    pub a: Segment,
    pub b: Segment,
    pub is_next: bool,
}

/// Drops tokens from the end of the longer segment until the pair fits.
fn truncate_pair(a: &mut Segment, b: &mut Segment, max_tokens: usize) -> bool {
    let mut truncated = false;
    while a.len() + b.len() > max_tokens {
        if a.len() > b.len() {
            a.pop();
        } else {
            b.pop();
        }
        truncated = true;
    }
    truncated
}

fn concat(doc: &TokenizedDocument, range: Range<usize>) -> Segment {
    let mut seg = Segment::default();
    for i in range {
        seg.push_words(&doc.sentences[i]);
    }
    seg
}

fn pairs_for_document(docs: &[TokenizedDocument], d: usize, max_len: usize, seed: u64) -> Vec<SegmentPair> {
    let doc = &docs[d];
    let n = doc.sentences.len();
    let max_tokens = max_len.saturating_sub(SPECIAL_OVERHEAD).max(2);
    let min_target = MIN_TARGET_LEN.min(max_tokens);
    let mut rng = keyed_rng(seed, DOMAIN_PAIRS, doc.doc_index as u64, 0);
    let mut out = Vec::new();

    let mut target = rng.gen_range(min_target..=max_tokens);
    let mut chunk_start = 0;
    let mut chunk_len = 0;
    let mut i = 0;
    while i < n {
        chunk_len += doc.sentence_len(i);
        if i + 1 < n && chunk_len < target {
            i += 1;
            continue;
        }
        let chunk_end = i + 1;
        let chunk = chunk_start..chunk_end;
        let is_next = docs.len() < 2 || rng.gen_bool(0.5);
        let mut next_i = chunk_end;

        let pair = if is_next {
            if chunk.len() >= 2 {
                let a_end = rng.gen_range(chunk.start + 1..chunk.end);
                Some((concat(doc, chunk.start..a_end), concat(doc, a_end..chunk.end), d))
            } else if chunk_end < n {
                // one long sentence: continue with the sentences after it
                let a = concat(doc, chunk.clone());
                let target_b = target.saturating_sub(a.len()).max(1);
                let mut b = Segment::default();
                while next_i < n && b.len() < target_b {
                    b.push_words(&doc.sentences[next_i]);
                    next_i += 1;
                }
                Some((a, b, d))
            } else {
                // last sentence on its own: split between words
                let words = &doc.sentences[chunk.start];
                (words.len() >= 2).then(|| {
                    let k = rng.gen_range(1..words.len());
                    let mut a = Segment::default();
                    a.push_words(&words[..k]);
                    let mut b = Segment::default();
                    b.push_words(&words[k..]);
                    (a, b, d)
                })
            }
        } else {
            let a_end = if chunk.len() >= 2 {
                rng.gen_range(chunk.start + 1..chunk.end)
            } else {
                chunk.end
            };
            let a = concat(doc, chunk.start..a_end);
            let target_b = target.saturating_sub(a.len()).max(1);
            let mut other = rng.gen_range(0..docs.len() - 1);
            if other >= d {
                other += 1;
            }
            let od = &docs[other];
            let start = rng.gen_range(0..od.sentences.len());
            let mut b = Segment::default();
            for s in start..od.sentences.len() {
                b.push_words(&od.sentences[s]);
                if b.len() >= target_b {
                    break;
                }
            }
            // unused sentences of this chunk go back to the pool
            next_i = a_end;
            Some((a, b, other))
        };

        if let Some((mut a, mut b, doc_b)) = pair {
            if !a.is_empty() && !b.is_empty() {
                truncate_pair(&mut a, &mut b, max_tokens);
                out.push(SegmentPair {
                    doc_a: d,
                    doc_b,
                    a,
                    b,
                    is_next,
                });
            }
        }

        chunk_start = next_i;
        chunk_len = 0;
        i = next_i;
        target = rng.gen_range(min_target..=max_tokens);
    }
    out
}

/// Builds segment pairs for every document, in document order. With a single
/// document every pair is a true continuation and a warning is logged.
pub fn build_segment_pairs(docs: &[TokenizedDocument], max_len: usize, seed: u64) -> Vec<SegmentPair> {
    if docs.len() == 1 {
        log::warn!("single-document corpus: every pair is a true continuation");
    }
    docs.par_iter()
        .enumerate()
        .map(|(d, _)| pairs_for_document(docs, d, max_len, seed))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
