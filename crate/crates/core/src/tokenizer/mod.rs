//! Byte-level BPE.
//!
//! Text is split on whitespace into words. Every word after the first in a
//! text carries a leading space byte, which acts as the word-boundary marker:
//! merges never cross words, and decoding simply concatenates bytes.
//!
//! Id layout: special tokens `0..5`, the 256 byte tokens `5..261`, then one id
//! per learned merge in learned order.

mod io;
mod train;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

pub use io::{byte_to_char, bytes_to_token_string, token_string_to_bytes, MERGES_FILE, VOCAB_FILE};
pub use train::{train_bbpe, train_from_texts, word_units, BbpeTrainer};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;
pub const MASK_ID: u32 = 4;

pub const SPECIAL_TOKENS: [&str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];
pub const NUM_SPECIAL: u32 = SPECIAL_TOKENS.len() as u32;
pub const BYTE_OFFSET: u32 = NUM_SPECIAL;
pub const FIRST_MERGE_ID: u32 = BYTE_OFFSET + 256;
pub const DEFAULT_VOCAB_SIZE: usize = 64_000;

/// Byte prefixed to non-initial words.
pub const WORD_MARKER: u8 = b' ';

#[inline]
pub fn byte_id(b: u8) -> u32 {
    BYTE_OFFSET + b as u32
}

#[inline]
pub fn is_special(id: u32) -> bool {
    id < NUM_SPECIAL
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedWord {
    pub word_index: usize,
    pub token_ids: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Decoded {
    pub text: String,
    /// Invalid UTF-8 sequences replaced with U+FFFD.
    pub invalid_sequences: usize,
}

#[derive(Debug, Clone)]
pub struct BbpeVocab {
    merges: Vec<(u32, u32)>,
    /// id -> bytes; special tokens hold their literal names.
    tokens: Vec<Vec<u8>>,
    ranks: FxHashMap<(u32, u32), u32>,
    target_size: usize,
}

impl PartialEq for BbpeVocab {
    fn eq(&self, other: &Self) -> bool {
        self.merges == other.merges
    }
}

impl BbpeVocab {
    /// Rebuilds a vocabulary from an ordered merge list. Fails if a merge
    /// refers to an id not yet defined or duplicates an existing token.
    pub fn from_merges(merges: Vec<(u32, u32)>, target_size: usize) -> Result<Self> {
        let mut tokens: Vec<Vec<u8>> = SPECIAL_TOKENS.iter().map(|s| s.as_bytes().to_vec()).collect();
        tokens.extend((0..=255u8).map(|b| vec![b]));
        let mut seen: FxHashMap<Vec<u8>, u32> = FxHashMap::default();
        for (id, t) in tokens.iter().enumerate() {
            seen.insert(t.clone(), id as u32);
        }
        let mut ranks = FxHashMap::default();
        for (rank, &(l, r)) in merges.iter().enumerate() {
            let n = tokens.len() as u32;
            if l >= n || r >= n || is_special(l) || is_special(r) {
                return Err(Error::MalformedVocab(format!(
                    "merge {rank} references undefined token ({l}, {r})"
                )));
            }
            let mut bytes = tokens[l as usize].clone();
            bytes.extend_from_slice(&tokens[r as usize]);
            if seen.insert(bytes.clone(), n).is_some() {
                return Err(Error::MalformedVocab(format!("merge {rank} duplicates an existing token")));
            }
            ranks.insert((l, r), rank as u32);
            tokens.push(bytes);
        }
        Ok(Self {
            merges,
            tokens,
            ranks,
            target_size,
        })
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        self.tokens.get(id as usize).map(Vec::as_slice)
    }

    /// Printable form used in the serialized vocabulary.
    pub fn token_string(&self, id: u32) -> Option<String> {
        if is_special(id) {
            return Some(SPECIAL_TOKENS[id as usize].to_owned());
        }
        self.token_bytes(id).map(bytes_to_token_string)
    }

    /// Same vocabulary restricted to its first `n` merges.
    pub fn truncated(&self, n: usize) -> Self {
        Self::from_merges(self.merges[..n.min(self.merges.len())].to_vec(), self.target_size)
            .expect("prefix of a valid merge list is valid")
    }

    /// Applies merges, lowest rank first, to a byte sequence.
    pub fn encode_word_bytes(&self, bytes: &[u8]) -> Vec<u32> {
        let mut ids: Vec<u32> = bytes.iter().map(|&b| byte_id(b)).collect();
        while ids.len() > 1 {
            let best = ids
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0], w[1])).copied())
                .min();
            let Some(rank) = best else { break };
            let (l, r) = self.merges[rank as usize];
            let new_id = FIRST_MERGE_ID + rank;
            let mut out = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == l && ids[i + 1] == r {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(ids[i]);
                    i += 1;
                }
            }
            ids = out;
        }
        ids
    }

    fn encode_units<'a>(&self, words: impl Iterator<Item = &'a [u8]>) -> Vec<TokenizedWord> {
        let mut buf = Vec::new();
        words
            .enumerate()
            .map(|(i, w)| {
                buf.clear();
                if i > 0 {
                    buf.push(WORD_MARKER);
                }
                buf.extend_from_slice(w);
                TokenizedWord {
                    word_index: i,
                    token_ids: self.encode_word_bytes(&buf),
                }
            })
            .collect()
    }

    pub fn encode(&self, text: &str) -> Vec<TokenizedWord> {
        self.encode_units(text.split_whitespace().map(str::as_bytes))
    }

    /// Encodes arbitrary bytes, splitting on ASCII whitespace.
    pub fn encode_bytes(&self, bytes: &[u8]) -> Vec<TokenizedWord> {
        self.encode_units(
            bytes
                .split(|b| b.is_ascii_whitespace())
                .filter(|w| !w.is_empty()),
        )
    }

    pub fn encode_ids(&self, text: &str) -> Vec<u32> {
        self.encode(text).into_iter().flat_map(|w| w.token_ids).collect()
    }

    pub fn decode_bytes(&self, ids: &[u32]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(ids.len() * 3);
        for &id in ids {
            let bytes = self.token_bytes(id).ok_or(Error::UnknownTokenId(id))?;
            out.extend_from_slice(bytes);
        }
        Ok(out)
    }

    pub fn decode_with_stats(&self, ids: &[u32]) -> Result<Decoded> {
        let bytes = self.decode_bytes(ids)?;
        let mut text = String::with_capacity(bytes.len());
        let mut invalid_sequences = 0;
        for chunk in bytes.utf8_chunks() {
            text.push_str(chunk.valid());
            if !chunk.invalid().is_empty() {
                text.push(char::REPLACEMENT_CHARACTER);
                invalid_sequences += 1;
            }
        }
        Ok(Decoded {
            text,
            invalid_sequences,
        })
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        Ok(self.decode_with_stats(ids)?.text)
    }
}
