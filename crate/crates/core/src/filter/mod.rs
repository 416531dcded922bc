//! Sentence- and document-level corpus filtering.
//!
//! Rules, in application order:
//!
//! | # | level    | rejects when                                              |
//! |---|----------|-----------------------------------------------------------|
//! | 1 | sentence | residual markup or JavaScript                             |
//! | 2 | sentence | Arabic-letter ratio below threshold (default 0.70)        |
//! | 3 | sentence | fewer words than minimum (default 8)                      |
//! | 4 | sentence | punctuation run longer than limit, unless all dots (3)    |
//! | 6 | sentence | (rewrite) drop long runs of words with no Arabic letters  |
//! | 7 | sentence | dedup key already seen earlier in ingest order            |
//! | 8 | document | more than 30% of its sentences were rejected              |
//! | 5 | document | fewer surviving words than minimum (default 64)           |
//!
//! Rule 6 only shortens sentences; rules 2-4 are re-checked afterwards.

mod dedup;
mod pipeline;
mod sample;
mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::{self, classify, CharClass};

pub use dedup::{dedup_fingerprint, dedup_key, DedupIndex, DedupKey, Occurrence};
pub use pipeline::{
    filter_document, read_documents, run_corpus_clean, CorpusReader, DocOutcome, InputFormat,
};
pub use sample::{balanced_sample, LabeledPair};
pub use stats::{FilterStats, RuleCounts, SourceStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Markup = 1,
    ArabicRatio = 2,
    MinSentenceWords = 3,
    PunctuationRun = 4,
    MinDocumentWords = 5,
    NonArabicSpan = 6,
    Duplicate = 7,
    DiscardRatio = 8,
}

impl Rule {
    pub fn id(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub max_nonarabic_run: usize,
    pub min_words_sentence: usize,
    pub min_words_doc: usize,
    pub arabic_ratio: f64,
    pub max_punct_run: usize,
    pub doc_discard_ratio: f64,
    /// Whether duplicate rejections count toward the document discard ratio.
    pub count_duplicates_in_discard: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_nonarabic_run: 5,
            min_words_sentence: 8,
            min_words_doc: 64,
            arabic_ratio: 0.70,
            max_punct_run: 3,
            doc_discard_ratio: 0.30,
            count_duplicates_in_discard: true,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.arabic_ratio) {
            return Err(Error::Config(format!(
                "arabic-ratio must be in [0, 1], got {}",
                self.arabic_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.doc_discard_ratio) {
            return Err(Error::Config(format!(
                "doc-discard-ratio must be in [0, 1], got {}",
                self.doc_discard_ratio
            )));
        }
        if self.max_nonarabic_run == 0 {
            return Err(Error::Config("max-nonarabic-run must be at least 1".into()));
        }
        if self.max_punct_run == 0 {
            return Err(Error::Config("max-punct-run must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub source: String,
    pub text: String,
    pub ingest_order: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub text: String,
    pub words: Vec<String>,
    pub arabic_ratio: f64,
}

impl Sentence {
    pub fn new(text: &str) -> Self {
        let text = text.trim();
        let words: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
        Self {
            arabic_ratio: normalize::arabic_ratio(text),
            text: text.to_owned(),
            words,
        }
    }

    fn from_words(words: Vec<String>) -> Self {
        let text = words.join(" ");
        Self {
            arabic_ratio: normalize::arabic_ratio(&text),
            text,
            words,
        }
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanDocument {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub source: String,
    pub sentences: Vec<String>,
    #[serde(skip)]
    pub word_count: usize,
}

impl CleanDocument {
    pub fn text(&self) -> String {
        self.sentences.join("\n")
    }
}

#[inline]
fn is_sentence_final(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '؟' | '؛')
}

/// Splits on newlines and on runs of sentence-final punctuation that are
/// followed by whitespace or end of text. The terminal punctuation stays
/// attached to its sentence.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        let mut start = 0;
        let mut iter = line.char_indices().peekable();
        while let Some((i, c)) = iter.next() {
            if !is_sentence_final(c) {
                continue;
            }
            let mut end = i + c.len_utf8();
            while let Some(&(j, d)) = iter.peek() {
                if is_sentence_final(d) {
                    end = j + d.len_utf8();
                    iter.next();
                } else {
                    break;
                }
            }
            let at_boundary = match iter.peek() {
                None => true,
                Some(&(_, d)) => d.is_whitespace(),
            };
            if at_boundary {
                push_sentence(&mut out, &line[start..end]);
                start = end;
            }
        }
        push_sentence(&mut out, &line[start..]);
    }
    out
}

fn push_sentence(out: &mut Vec<Sentence>, piece: &str) {
    if !piece.trim().is_empty() {
        out.push(Sentence::new(piece));
    }
}

fn contains_ignore_ascii_case(haystack: &str, needle: &str) -> bool {
    let n = needle.len();
    haystack
        .as_bytes()
        .windows(n)
        .any(|w| w.eq_ignore_ascii_case(needle.as_bytes()))
}

/// Heuristic detection of HTML or JavaScript remnants.
pub fn has_code(text: &str) -> bool {
    let (mut lt, mut open, mut close, mut j) = (false, 0usize, 0usize, false);
    for b in text.bytes() {
        match b {
            b'<' => lt = true,
            b'{' => open += 1,
            b'}' => close += 1,
            b'j' | b'J' => j = true,
            _ => {}
        }
    }
    open.min(close) >= 2
        || (lt && (text.contains("</") || contains_ignore_ascii_case(text, "<script")))
        || (j && contains_ignore_ascii_case(text, "javascript"))
        || text.contains("function")
        || text.contains("var ")
}

/// Length of the longest punctuation run that is not made only of dots.
pub fn longest_non_dot_punct_run(text: &str) -> usize {
    let mut longest = 0;
    let mut len = 0;
    let mut all_dots = true;
    for c in text.chars() {
        if classify(c) == CharClass::Punctuation {
            len += 1;
            all_dots &= c == '.';
        } else {
            if !all_dots {
                longest = longest.max(len);
            }
            len = 0;
            all_dots = true;
        }
    }
    if !all_dots {
        longest = longest.max(len);
    }
    longest
}

fn check_content(s: &Sentence, cfg: &FilterConfig) -> Result<(), Rule> {
    if s.arabic_ratio < cfg.arabic_ratio {
        return Err(Rule::ArabicRatio);
    }
    if s.word_count() < cfg.min_words_sentence {
        return Err(Rule::MinSentenceWords);
    }
    if longest_non_dot_punct_run(&s.text) > cfg.max_punct_run {
        return Err(Rule::PunctuationRun);
    }
    Ok(())
}

/// Rules 1-4, reporting the first violated rule.
pub fn sentence_passes(s: &Sentence, cfg: &FilterConfig) -> Result<(), Rule> {
    if has_code(&s.text) {
        return Err(Rule::Markup);
    }
    check_content(s, cfg)
}

/// Removes maximal runs of more than `max_run` consecutive words that contain
/// no Arabic letter. Returns the rewritten sentence and the number of words
/// removed.
pub fn strip_non_arabic_spans(s: &Sentence, max_run: usize) -> (Sentence, usize) {
    let flags: Vec<bool> = s.words.iter().map(|w| normalize::has_arabic_letter(w)).collect();
    let mut keep = vec![true; s.words.len()];
    let mut removed = 0;
    let mut i = 0;
    while i < flags.len() {
        if flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < flags.len() && !flags[i] {
            i += 1;
        }
        if i - start > max_run {
            keep[start..i].iter_mut().for_each(|k| *k = false);
            removed += i - start;
        }
    }
    if removed == 0 {
        return (s.clone(), 0);
    }
    let words = s
        .words
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(w, _)| w.clone())
        .collect();
    (Sentence::from_words(words), removed)
}

fn has_long_non_arabic_run(words: &[String], max_run: usize) -> bool {
    let mut run = 0;
    for w in words {
        if normalize::has_arabic_letter(w) {
            run = 0;
        } else {
            run += 1;
            if run > max_run {
                return true;
            }
        }
    }
    false
}

/// Outcome of rules 1-4 and 6 for one sentence.
#[derive(Debug, Clone)]
pub(crate) enum Screened {
    Rejected(Rule),
    Kept {
        sentence: Sentence,
        words_stripped: usize,
    },
}

pub(crate) fn screen_sentence(s: Sentence, cfg: &FilterConfig) -> Screened {
    if let Err(rule) = sentence_passes(&s, cfg) {
        return Screened::Rejected(rule);
    }
    if !has_long_non_arabic_run(&s.words, cfg.max_nonarabic_run) {
        return Screened::Kept { sentence: s, words_stripped: 0 };
    }
    let (stripped, removed) = strip_non_arabic_spans(&s, cfg.max_nonarabic_run);
    if removed > 0 {
        if let Err(rule) = check_content(&stripped, cfg) {
            return Screened::Rejected(rule);
        }
    }
    Screened::Kept {
        sentence: if removed > 0 { stripped } else { s },
        words_stripped: removed,
    }
}
