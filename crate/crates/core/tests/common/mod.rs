//! Reference implementations and corpus builders shared by the integration
//! tests. The oracles favour obviousness over speed.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use arcorpus::filter::{
    longest_non_dot_punct_run, sentence_passes, split_sentences, strip_non_arabic_spans, CleanDocument, FilterConfig, RawDocument, Rule,
};
use arcorpus::normalize::normalize_text;
use arcorpus::tokenizer::SPECIAL_TOKENS;
use rand::Rng;

// ---------------------------------------------------------------------------
// Corpus builders

const LETTERS: &[char] = &[
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق', 'ك',
    'ل', 'م', 'ن', 'ه', 'و', 'ي',
];

/// A distinct Arabic word for every `n`, at least four letters long.
pub fn unique_word(mut n: usize) -> String {
    let mut w = String::from("و");
    loop {
        w.push(LETTERS[n % LETTERS.len()]);
        n /= LETTERS.len();
        if n == 0 {
            break;
        }
    }
    while w.chars().count() < 4 {
        w.push('ل');
    }
    w
}

/// Hands out words that never repeat within one generator.
#[derive(Default)]
pub struct Words {
    next: usize,
}

impl Words {
    pub fn take(&mut self) -> String {
        self.next += 1;
        unique_word(self.next)
    }

    /// `n` unique words joined by spaces.
    pub fn sentence(&mut self, n: usize) -> String {
        (0..n).map(|_| self.take()).collect::<Vec<_>>().join(" ")
    }
}

pub fn random_word<R: Rng>(rng: &mut R, min: usize, max: usize) -> String {
    let len = rng.gen_range(min..=max);
    (0..len).map(|_| LETTERS[rng.gen_range(0..LETTERS.len())]).collect()
}

pub fn raw(order: u64, text: String) -> RawDocument {
    RawDocument {
        doc_id: format!("doc{order}"),
        source: "CC".into(),
        text,
        ingest_order: order,
    }
}

// ---------------------------------------------------------------------------
// Filter oracle: sequential, with dedup by linear scan over every earlier key.

fn oracle_key(words: &[String]) -> Option<String> {
    let q: Vec<&String> = words
        .iter()
        .filter(|w| w.chars().count() > 3 && !w.chars().any(char::is_numeric))
        .collect();
    if q.len() < 2 {
        return None;
    }
    let picked: Vec<&String> = if q.len() < 6 {
        q
    } else {
        q[..3].iter().chain(&q[q.len() - 3..]).copied().collect()
    };
    Some(picked.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "))
}

/// Per-document result of the oracle: kept document or the rule that
/// discarded it, plus the sentence rules hit.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub clean: Option<CleanDocument>,
    pub doc_rule: Option<Rule>,
    pub sentence_rules: Vec<Rule>,
}

pub fn oracle_filter(docs: &[RawDocument], cfg: &FilterConfig) -> Vec<OracleOutcome> {
    let mut order: Vec<&RawDocument> = docs.iter().collect();
    order.sort_by_key(|d| d.ingest_order);
    let mut seen: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for doc in order {
        let sentences = split_sentences(&normalize_text(&doc.text));
        let total = sentences.len();
        let mut sentence_rules = Vec::new();
        let mut kept: Vec<(String, usize)> = Vec::new();
        for s in sentences {
            if let Err(rule) = sentence_passes(&s, cfg) {
                sentence_rules.push(rule);
                continue;
            }
            let (s2, removed) = strip_non_arabic_spans(&s, cfg.max_nonarabic_run);
            let s = if removed > 0 {
                // Re-check the content rules on the shortened sentence.
                let ratio_ok = s2.arabic_ratio >= cfg.arabic_ratio;
                let words_ok = s2.words.len() >= cfg.min_words_sentence;
                if !ratio_ok {
                    sentence_rules.push(Rule::ArabicRatio);
                    continue;
                }
                if !words_ok {
                    sentence_rules.push(Rule::MinSentenceWords);
                    continue;
                }
                if longest_non_dot_punct_run(&s2.text) > cfg.max_punct_run {
                    sentence_rules.push(Rule::PunctuationRun);
                    continue;
                }
                s2
            } else {
                s
            };
            if let Some(key) = oracle_key(&s.words) {
                if seen.iter().any(|k| *k == key) {
                    sentence_rules.push(Rule::Duplicate);
                    continue;
                }
                seen.push(key);
            }
            kept.push((s.text.clone(), s.words.len()));
        }
        let discarded = sentence_rules
            .iter()
            .filter(|r| **r != Rule::Duplicate || cfg.count_duplicates_in_discard)
            .count();
        let words: usize = kept.iter().map(|k| k.1).sum();
        let doc_rule = if total > 0 && discarded as f64 / total as f64 > cfg.doc_discard_ratio {
            Some(Rule::DiscardRatio)
        } else if words < cfg.min_words_doc {
            Some(Rule::MinDocumentWords)
        } else {
            None
        };
        out.push(OracleOutcome {
            clean: doc_rule.is_none().then(|| CleanDocument {
                doc_id: doc.doc_id.clone(),
                source: doc.source.clone(),
                sentences: kept.into_iter().map(|k| k.0).collect(),
                word_count: words,
            }),
            doc_rule,
            sentence_rules,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Brute-force BPE: recount every pair from scratch each round.

fn special_and_byte_tokens() -> HashSet<Vec<u8>> {
    let mut s: HashSet<Vec<u8>> = SPECIAL_TOKENS.iter().map(|t| t.as_bytes().to_vec()).collect();
    s.extend((0..=255u8).map(|b| vec![b]));
    s
}

/// Merges as (left bytes, right bytes), in learned order.
pub fn brute_force_bpe(texts: &[String], target_size: usize) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut bag: BTreeMap<Vec<Vec<u8>>, u64> = BTreeMap::new();
    for t in texts {
        for (i, w) in t.split_whitespace().enumerate() {
            let mut bytes = Vec::new();
            if i > 0 {
                bytes.push(b' ');
            }
            bytes.extend_from_slice(w.as_bytes());
            let symbols: Vec<Vec<u8>> = bytes.iter().map(|&b| vec![b]).collect();
            *bag.entry(symbols).or_insert(0) += 1;
        }
    }
    let mut words: Vec<(Vec<Vec<u8>>, u64)> = bag.into_iter().collect();
    let mut existing = special_and_byte_tokens();
    let mut vocab_len = existing.len();
    let mut merges = Vec::new();
    while vocab_len < target_size {
        let mut counts: BTreeMap<(Vec<u8>, Vec<u8>), u64> = BTreeMap::new();
        for (symbols, freq) in &words {
            for w in symbols.windows(2) {
                *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += freq;
            }
        }
        let best = counts
            .into_iter()
            .filter(|((l, r), c)| *c >= 2 && !existing.contains(&[l.as_slice(), r.as_slice()].concat()))
            .min_by(|((l1, r1), c1), ((l2, r2), c2)| {
                c2.cmp(c1)
                    .then_with(|| [l1.as_slice(), r1].concat().cmp(&[l2.as_slice(), r2].concat()))
                    .then_with(|| l1.cmp(l2))
            });
        let Some(((l, r), _)) = best else { break };
        for (symbols, _) in words.iter_mut() {
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == l && symbols[i + 1] == r {
                    out.push([l.as_slice(), r.as_slice()].concat());
                    i += 2;
                } else {
                    out.push(symbols[i].clone());
                    i += 1;
                }
            }
            *symbols = out;
        }
        existing.insert([l.as_slice(), r.as_slice()].concat());
        vocab_len += 1;
        merges.push((l, r));
    }
    merges
}

// ---------------------------------------------------------------------------
// CoNLL span-set oracle: a span (i, j, T) is a chunk when it starts a T chunk
// at i, continues with I-T through j, and nothing continues it at j + 1.

fn tag_parts(tag: &str) -> (char, &str) {
    if tag == "O" {
        ('O', "")
    } else {
        let (p, t) = tag.split_at(1);
        (p.chars().next().unwrap(), &t[1..])
    }
}

fn starts_chunk(tags: &[String], i: usize, ty: &str) -> bool {
    match tag_parts(&tags[i]) {
        ('B', t) => t == ty,
        ('I', t) => {
            t == ty && (i == 0 || {
                let (pp, pt) = tag_parts(&tags[i - 1]);
                pp == 'O' || pt != ty
            })
        }
        _ => false,
    }
}

fn continues(tags: &[String], i: usize, ty: &str) -> bool {
    matches!(tag_parts(&tags[i]), ('I', t) if t == ty)
}

pub fn oracle_spans(tags: &[String]) -> HashSet<(usize, usize, String)> {
    let types: HashSet<&str> = tags.iter().filter(|t| *t != "O").map(|t| tag_parts(t).1).collect();
    let mut spans = HashSet::new();
    for ty in types {
        for i in 0..tags.len() {
            if !starts_chunk(tags, i, ty) {
                continue;
            }
            for j in i..tags.len() {
                if j > i && !continues(tags, j, ty) {
                    break;
                }
                let closed = j + 1 == tags.len() || !continues(tags, j + 1, ty);
                if closed {
                    spans.insert((i, j, ty.to_string()));
                }
            }
        }
    }
    spans
}

/// (correct, predicted, gold) chunk counts pooled over all sequences.
pub fn oracle_conll(pred: &[Vec<String>], gold: &[Vec<String>]) -> (u64, u64, u64) {
    let (mut correct, mut predicted, mut expected) = (0u64, 0u64, 0u64);
    for (p, g) in pred.iter().zip(gold) {
        let ps = oracle_spans(p);
        let gs = oracle_spans(g);
        correct += ps.intersection(&gs).count() as u64;
        predicted += ps.len() as u64;
        expected += gs.len() as u64;
    }
    (correct, predicted, expected)
}

pub fn random_tags<R: Rng>(rng: &mut R, len: usize) -> Vec<String> {
    const TAGS: [&str; 7] = ["O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG"];
    (0..len).map(|_| TAGS[rng.gen_range(0..TAGS.len())].to_string()).collect()
}
