//! On-disk vocabulary: `merges.txt` (one merge per line, the two token strings
//! separated by a space, in learned order) and `vocab.json` (token string to
//! id, one entry per line in id order).
//!
//! Token strings use the usual printable byte alphabet: printable Latin-1
//! bytes map to themselves, every other byte to `U+0100 + n`. The space byte
//! therefore appears as `Ġ` and never collides with the separator.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use rustc_hash::FxHashMap;

use super::{BbpeVocab, NUM_SPECIAL, SPECIAL_TOKENS};
use crate::error::{Error, Result};

pub const MERGES_FILE: &str = "merges.txt";
pub const VOCAB_FILE: &str = "vocab.json";

fn tables() -> &'static ([char; 256], FxHashMap<char, u8>) {
    static TABLES: OnceLock<([char; 256], FxHashMap<char, u8>)> = OnceLock::new();
    TABLES.get_or_init(|| {
        let printable = |b: u8| matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
        let mut fwd = ['\0'; 256];
        let mut n = 0u32;
        for b in 0..=255u8 {
            fwd[b as usize] = if printable(b) {
                char::from(b)
            } else {
                n += 1;
                char::from_u32(255 + n).expect("valid scalar")
            };
        }
        let back = fwd.iter().enumerate().map(|(b, &c)| (c, b as u8)).collect();
        (fwd, back)
    })
}

pub fn byte_to_char(b: u8) -> char {
    tables().0[b as usize]
}

pub fn bytes_to_token_string(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| byte_to_char(b)).collect()
}

pub fn token_string_to_bytes(s: &str) -> Option<Vec<u8>> {
    let back = &tables().1;
    s.chars().map(|c| back.get(&c).copied()).collect()
}

impl BbpeVocab {
    pub fn merges_text(&self) -> String {
        let mut out = String::new();
        for &(l, r) in self.merges() {
            let l = self.token_string(l).expect("defined");
            let r = self.token_string(r).expect("defined");
            writeln!(out, "{l} {r}").expect("string write");
        }
        out
    }

    pub fn vocab_json(&self) -> String {
        let mut out = String::from("{\n");
        for id in 0..self.len() as u32 {
            let tok = self.token_string(id).expect("defined");
            let key = serde_json::to_string(&tok).expect("string serializes");
            let sep = if id as usize + 1 == self.len() { "" } else { "," };
            writeln!(out, "  {key}: {id}{sep}").expect("string write");
        }
        out.push_str("}\n");
        out
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let merges = dir.join(MERGES_FILE);
        std::fs::write(&merges, self.merges_text()).map_err(|e| Error::io(&merges, e))?;
        let vocab = dir.join(VOCAB_FILE);
        std::fs::write(&vocab, self.vocab_json()).map_err(|e| Error::io(&vocab, e))?;
        Ok(())
    }

    /// Parses both files and checks they agree.
    pub fn from_texts(merges_text: &str, vocab_json: &str) -> Result<Self> {
        let map: FxHashMap<String, u32> = serde_json::from_str(vocab_json)
            .map_err(|e| Error::MalformedVocab(format!("{VOCAB_FILE}: {e}")))?;
        for (id, name) in SPECIAL_TOKENS.iter().enumerate() {
            if map.get(*name) != Some(&(id as u32)) {
                return Err(Error::MalformedVocab(format!("special token {name} must have id {id}")));
            }
        }
        let lookup = |s: &str, line: usize| -> Result<u32> {
            let id = *map
                .get(s)
                .ok_or_else(|| Error::MalformedVocab(format!("{MERGES_FILE}:{line}: unknown token {s:?}")))?;
            if id < NUM_SPECIAL {
                return Err(Error::MalformedVocab(format!("{MERGES_FILE}:{line}: special token in merge")));
            }
            Ok(id)
        };
        let mut merges = Vec::new();
        for (i, line) in merges_text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (l, r) = line
                .split_once(' ')
                .ok_or_else(|| Error::MalformedVocab(format!("{MERGES_FILE}:{}: expected two tokens", i + 1)))?;
            merges.push((lookup(l, i + 1)?, lookup(r, i + 1)?));
        }
        let vocab = BbpeVocab::from_merges(merges, map.len())?;
        if vocab.len() != map.len() {
            return Err(Error::MalformedVocab(format!(
                "{VOCAB_FILE} has {} entries but merges define {}",
                map.len(),
                vocab.len()
            )));
        }
        for id in 0..vocab.len() as u32 {
            let tok = vocab.token_string(id).expect("defined");
            if map.get(&tok) != Some(&id) {
                return Err(Error::MalformedVocab(format!("token {tok:?} should have id {id}")));
            }
        }
        Ok(vocab)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let merges = dir.join(MERGES_FILE);
        let vocab = dir.join(VOCAB_FILE);
        let m = std::fs::read_to_string(&merges).map_err(|e| Error::io(&merges, e))?;
        let v = std::fs::read_to_string(&vocab).map_err(|e| Error::io(&vocab, e))?;
        Self::from_texts(&m, &v)
    }
}
