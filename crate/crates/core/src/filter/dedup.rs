use rustc_hash::FxHashMap;
use xxhash_rust::xxh3::xxh3_128;

use super::Sentence;

const EDGE_WORDS: usize = 3;
const MIN_QUALIFYING: usize = 2;

/// Sentence fingerprint built from its first and last three qualifying words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DedupKey {
    pub key: String,
}

impl DedupKey {
    /// 128-bit fingerprint used by the index.
    pub fn fingerprint(&self) -> u128 {
        xxh3_128(self.key.as_bytes())
    }
}

#[inline]
fn qualifies(word: &str) -> bool {
    let mut n = 0;
    for c in word.chars() {
        if c.is_numeric() {
            return false;
        }
        n += 1;
    }
    n > 3
}

/// Words with more than three characters and no digits qualify. Sentences with
/// fewer than two qualifying words get no key and are exempt from dedup.
pub fn dedup_key(s: &Sentence) -> Option<DedupKey> {
    let q: Vec<&str> = s
        .words
        .iter()
        .map(String::as_str)
        .filter(|w| qualifies(w))
        .collect();
    if q.len() < MIN_QUALIFYING {
        return None;
    }
    let key = if q.len() <= 2 * EDGE_WORDS {
        q.join(" ")
    } else {
        q[..EDGE_WORDS]
            .iter()
            .chain(&q[q.len() - EDGE_WORDS..])
            .copied()
            .collect::<Vec<_>>()
            .join(" ")
    };
    Some(DedupKey { key })
}

/// Same value as `dedup_key(s).map(|k| k.fingerprint())` without the
/// intermediate word list.
pub fn dedup_fingerprint(s: &Sentence) -> Option<u128> {
    let mut q = [0usize; 2 * EDGE_WORDS];
    let mut n = 0usize;
    for (i, w) in s.words.iter().enumerate() {
        if !qualifies(w) {
            continue;
        }
        if n < 2 * EDGE_WORDS {
            q[n] = i;
        } else {
            // Keep the first three and a rolling window of the last three.
            q.copy_within(EDGE_WORDS + 1.., EDGE_WORDS);
            q[2 * EDGE_WORDS - 1] = i;
        }
        n += 1;
    }
    if n < MIN_QUALIFYING {
        return None;
    }
    let picked = &q[..n.min(2 * EDGE_WORDS)];
    let mut buf = Vec::with_capacity(picked.iter().map(|&i| s.words[i].len() + 1).sum());
    for (j, &i) in picked.iter().enumerate() {
        if j > 0 {
            buf.push(b' ');
        }
        buf.extend_from_slice(s.words[i].as_bytes());
    }
    Some(xxh3_128(&buf))
}

/// Position of a sentence in the global stream: documents by ingest order,
/// then sentences in document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub ingest_order: u64,
    pub sentence: u32,
}

/// Maps a key fingerprint to its earliest occurrence.
#[derive(Debug, Default, Clone)]
pub struct DedupIndex {
    first: FxHashMap<u128, Occurrence>,
}

impl DedupIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    /// Records `occ` if it precedes the stored occurrence. Returns true when
    /// `occ` is (now) the first occurrence of `key`.
    pub fn insert_min(&mut self, key: u128, occ: Occurrence) -> bool {
        match self.first.get_mut(&key) {
            Some(prev) if *prev <= occ => *prev == occ,
            Some(prev) => {
                *prev = occ;
                true
            }
            None => {
                self.first.insert(key, occ);
                true
            }
        }
    }

    pub fn first_occurrence(&self, key: u128) -> Option<Occurrence> {
        self.first.get(&key).copied()
    }

    pub fn is_first(&self, key: u128, occ: Occurrence) -> bool {
        self.first.get(&key) == Some(&occ)
    }

    /// Folds `other` into `self`, keeping the minimum occurrence per key.
    pub fn merge_min(&mut self, other: DedupIndex) {
        if self.first.len() < other.first.len() {
            let mine = std::mem::replace(&mut self.first, other.first);
            for (k, occ) in mine {
                self.insert_min(k, occ);
            }
        } else {
            for (k, occ) in other.first {
                self.insert_min(k, occ);
            }
        }
    }
}
