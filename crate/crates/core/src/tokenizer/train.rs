//! Merge learning.
//!
//! Pair counts are kept in a hash map alongside, per pair, the set of unique
//! words containing it. A max-heap orders candidates by (count desc, merged
//! bytes asc, left bytes asc) and is invalidated lazily: a popped entry whose
//! count is stale is pushed back with the current count. Counts of pairs that
//! existed before a merge can only fall, so fresh entries are only needed for
//! pairs involving the new token.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use super::{byte_id, BbpeVocab, FIRST_MERGE_ID, NUM_SPECIAL, SPECIAL_TOKENS, WORD_MARKER};
use crate::error::{Error, Result};
use crate::filter::CleanDocument;

const MIN_PAIR_COUNT: u64 = 2;

type Pair = (u32, u32);

#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: u64,
    merged: Box<[u8]>,
    left_len: usize,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.merged.cmp(&self.merged))
            .then_with(|| other.merged[..other.left_len].cmp(&self.merged[..self.left_len]))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Word units of one text: the first word as-is, later words prefixed with
/// the boundary marker.
pub fn word_units(text: &str) -> impl Iterator<Item = Vec<u8>> + '_ {
    text.split_whitespace().enumerate().map(|(i, w)| {
        let mut v = Vec::with_capacity(w.len() + 1);
        if i > 0 {
            v.push(WORD_MARKER);
        }
        v.extend_from_slice(w.as_bytes());
        v
    })
}

#[derive(Debug, Clone)]
pub struct BbpeTrainer {
    target_size: usize,
    word_counts: FxHashMap<Vec<u8>, u64>,
}

impl BbpeTrainer {
    pub fn new(target_size: usize) -> Result<Self> {
        let minimum = 256 + NUM_SPECIAL as usize;
        if target_size <= minimum {
            return Err(Error::VocabTooSmall { target: target_size, minimum });
        }
        Ok(Self {
            target_size,
            word_counts: FxHashMap::default(),
        })
    }

    pub fn feed(&mut self, text: &str) {
        for w in word_units(text) {
            *self.word_counts.entry(w).or_insert(0) += 1;
        }
    }

    /// Counts words of many texts in parallel.
    pub fn feed_all<S: AsRef<str> + Sync>(&mut self, texts: &[S]) {
        let counts = texts
            .par_iter()
            .fold(FxHashMap::<Vec<u8>, u64>::default, |mut m, t| {
                for w in word_units(t.as_ref()) {
                    *m.entry(w).or_insert(0) += 1;
                }
                m
            })
            .reduce(FxHashMap::default, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
                a
            });
        for (k, v) in counts {
            *self.word_counts.entry(k).or_insert(0) += v;
        }
    }

    pub fn train(self) -> Result<BbpeVocab> {
        if self.word_counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut words: Vec<(Vec<u8>, u64)> = self.word_counts.into_iter().collect();
        words.sort_unstable();
        let merges = learn_merges(&words, self.target_size);
        BbpeVocab::from_merges(merges, self.target_size)
    }
}

fn count_pairs(ids: &[u32], freq: u64, counts: &mut FxHashMap<Pair, u64>) {
    for w in ids.windows(2) {
        *counts.entry((w[0], w[1])).or_insert(0) += freq;
    }
}

/// Replaces every left-to-right, non-overlapping occurrence of `pair`.
fn merge_in_place(ids: &mut Vec<u32>, pair: Pair, new_id: u32) -> bool {
    let mut changed = false;
    let mut r = 0;
    let mut w = 0;
    while r < ids.len() {
        if r + 1 < ids.len() && ids[r] == pair.0 && ids[r + 1] == pair.1 {
            ids[w] = new_id;
            r += 2;
            changed = true;
        } else {
            ids[w] = ids[r];
            r += 1;
        }
        w += 1;
    }
    ids.truncate(w);
    changed
}

fn learn_merges(words: &[(Vec<u8>, u64)], target_size: usize) -> Vec<Pair> {
    let mut tokens: Vec<Vec<u8>> = SPECIAL_TOKENS.iter().map(|s| s.as_bytes().to_vec()).collect();
    tokens.extend((0..=255u8).map(|b| vec![b]));
    let mut existing: FxHashSet<Vec<u8>> = tokens.iter().cloned().collect();

    let mut segs: Vec<Vec<u32>> = words
        .iter()
        .map(|(w, _)| w.iter().map(|&b| byte_id(b)).collect())
        .collect();
    let freqs: Vec<u64> = words.iter().map(|(_, f)| *f).collect();

    let mut counts: FxHashMap<Pair, u64> = FxHashMap::default();
    let mut wheres: FxHashMap<Pair, FxHashSet<u32>> = FxHashMap::default();
    for (i, seg) in segs.iter().enumerate() {
        count_pairs(seg, freqs[i], &mut counts);
        for w in seg.windows(2) {
            wheres.entry((w[0], w[1])).or_default().insert(i as u32);
        }
    }

    let candidate = |tokens: &[Vec<u8>], pair: Pair, count: u64| {
        let left = &tokens[pair.0 as usize];
        let mut merged = Vec::with_capacity(left.len() + tokens[pair.1 as usize].len());
        merged.extend_from_slice(left);
        merged.extend_from_slice(&tokens[pair.1 as usize]);
        Candidate {
            count,
            merged: merged.into_boxed_slice(),
            left_len: left.len(),
            pair,
        }
    };

    let mut heap: BinaryHeap<Candidate> = counts
        .iter()
        .filter(|(_, &c)| c >= MIN_PAIR_COUNT)
        .map(|(&p, &c)| candidate(&tokens, p, c))
        .collect();

    let mut merges = Vec::new();
    let mut touched: FxHashMap<Pair, u64> = FxHashMap::default();
    while tokens.len() < target_size {
        let Some(top) = heap.pop() else { break };
        let current = counts.get(&top.pair).copied().unwrap_or(0);
        if current != top.count {
            if current >= MIN_PAIR_COUNT {
                heap.push(Candidate { count: current, ..top });
            }
            continue;
        }
        if existing.contains(&*top.merged) {
            // Same bytes as an existing token: never merged.
            continue;
        }

        let pair = top.pair;
        let new_id = FIRST_MERGE_ID + merges.len() as u32;
        debug_assert_eq!(new_id as usize, tokens.len());
        merges.push(pair);
        existing.insert(top.merged.to_vec());
        tokens.push(top.merged.into_vec());

        let mut affected: Vec<u32> = wheres.remove(&pair).unwrap_or_default().into_iter().collect();
        affected.sort_unstable();
        touched.clear();
        for wi in affected {
            let seg = &mut segs[wi as usize];
            let freq = freqs[wi as usize];
            let before = seg.clone();
            if !merge_in_place(seg, pair, new_id) {
                continue;
            }
            for w in before.windows(2) {
                let p = (w[0], w[1]);
                if let Some(c) = counts.get_mut(&p) {
                    *c -= freq;
                    if *c == 0 {
                        counts.remove(&p);
                    }
                }
            }
            for w in seg.windows(2) {
                let p = (w[0], w[1]);
                *counts.entry(p).or_insert(0) += freq;
                if p.0 == new_id || p.1 == new_id {
                    touched.insert(p, 0);
                    wheres.entry(p).or_default().insert(wi);
                }
            }
        }
        counts.remove(&pair);
        let mut fresh: Vec<Pair> = touched.keys().copied().collect();
        fresh.sort_unstable();
        for p in fresh {
            let c = counts.get(&p).copied().unwrap_or(0);
            if c >= MIN_PAIR_COUNT {
                heap.push(candidate(&tokens, p, c));
            }
        }
    }
    merges
}

/// Trains on raw texts; each text is one word sequence.
pub fn train_from_texts<'a, I>(texts: I, target_size: usize) -> Result<BbpeVocab>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut trainer = BbpeTrainer::new(target_size)?;
    for t in texts {
        trainer.feed(t);
    }
    trainer.train()
}

/// Trains on the sentences of cleaned documents.
pub fn train_bbpe(corpus: &[CleanDocument], target_size: usize) -> Result<BbpeVocab> {
    let sentences: Vec<&str> = corpus
        .iter()
        .flat_map(|d| d.sentences.iter().map(String::as_str))
        .collect();
    let mut trainer = BbpeTrainer::new(target_size)?;
    trainer.feed_all(&sentences);
    trainer.train()
}
