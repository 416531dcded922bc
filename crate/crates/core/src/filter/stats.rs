use serde::{Deserialize, Serialize};

use super::Rule;

/// Per-rule counters. Rules 1-4 and 7 count rejected sentences, 5 and 8
/// rejected documents, and 6 the sentences it shortened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCounts {
    pub rule1_markup: u64,
    pub rule2_arabic_ratio: u64,
    pub rule3_min_sentence_words: u64,
    pub rule4_punctuation_run: u64,
    pub rule5_min_document_words: u64,
    pub rule6_spans_stripped: u64,
    pub rule7_duplicate: u64,
    pub rule8_discard_ratio: u64,
}

impl RuleCounts {
    pub fn bump(&mut self, rule: Rule) {
        *self.slot(rule) += 1;
    }

    pub fn get(&self, rule: Rule) -> u64 {
        match rule {
            Rule::Markup => self.rule1_markup,
            Rule::ArabicRatio => self.rule2_arabic_ratio,
            Rule::MinSentenceWords => self.rule3_min_sentence_words,
            Rule::PunctuationRun => self.rule4_punctuation_run,
            Rule::MinDocumentWords => self.rule5_min_document_words,
            Rule::NonArabicSpan => self.rule6_spans_stripped,
            Rule::Duplicate => self.rule7_duplicate,
            Rule::DiscardRatio => self.rule8_discard_ratio,
        }
    }

    fn slot(&mut self, rule: Rule) -> &mut u64 {
        match rule {
            Rule::Markup => &mut self.rule1_markup,
            Rule::ArabicRatio => &mut self.rule2_arabic_ratio,
            Rule::MinSentenceWords => &mut self.rule3_min_sentence_words,
            Rule::PunctuationRun => &mut self.rule4_punctuation_run,
            Rule::MinDocumentWords => &mut self.rule5_min_document_words,
            Rule::NonArabicSpan => &mut self.rule6_spans_stripped,
            Rule::Duplicate => &mut self.rule7_duplicate,
            Rule::DiscardRatio => &mut self.rule8_discard_ratio,
        }
    }

    pub fn sentence_rejections(&self) -> u64 {
        self.rule1_markup
            + self.rule2_arabic_ratio
            + self.rule3_min_sentence_words
            + self.rule4_punctuation_run
            + self.rule7_duplicate
    }

    pub fn document_rejections(&self) -> u64 {
        self.rule5_min_document_words + self.rule8_discard_ratio
    }

    pub fn add(&mut self, other: &RuleCounts) {
        self.rule1_markup += other.rule1_markup;
        self.rule2_arabic_ratio += other.rule2_arabic_ratio;
        self.rule3_min_sentence_words += other.rule3_min_sentence_words;
        self.rule4_punctuation_run += other.rule4_punctuation_run;
        self.rule5_min_document_words += other.rule5_min_document_words;
        self.rule6_spans_stripped += other.rule6_spans_stripped;
        self.rule7_duplicate += other.rule7_duplicate;
        self.rule8_discard_ratio += other.rule8_discard_ratio;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    pub source: String,
    pub input_docs: u64,
    pub output_docs: u64,
    pub input_bytes: u64,
    pub output_bytes: u64,
}

impl SourceStats {
    pub fn retention_pct(&self) -> f64 {
        pct(self.output_bytes, self.input_bytes)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub rules: RuleCounts,
    pub sentences_examined: u64,
    /// Sentences that passed every sentence-level rule, including those in
    /// documents later discarded by rules 5 or 8.
    pub sentences_surviving: u64,
    pub words_stripped: u64,
    pub input_docs: u64,
    pub output_docs: u64,
    pub malformed_records: u64,
    pub input_bytes: u64,
    pub output_bytes: u64,
    pub retention_pct: f64,
    /// In first-seen order.
    pub per_source: Vec<SourceStats>,
}

fn pct(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl FilterStats {
    pub fn discarded_docs(&self) -> u64 {
        self.input_docs - self.output_docs
    }

    pub(crate) fn source_mut(&mut self, source: &str) -> &mut SourceStats {
        let pos = match self.per_source.iter().position(|s| s.source == source) {
            Some(p) => p,
            None => {
                self.per_source.push(SourceStats {
                    source: source.to_owned(),
                    ..SourceStats::default()
                });
                self.per_source.len() - 1
            }
        };
        &mut self.per_source[pos]
    }

    pub(crate) fn finish(&mut self) {
        self.retention_pct = pct(self.output_bytes, self.input_bytes);
    }

    /// Checks the accounting identities; used by tests and the CLI.
    pub fn is_consistent(&self) -> bool {
        self.output_bytes <= self.input_bytes
            && self.input_docs == self.output_docs + self.rules.document_rejections()
            && self.sentences_examined == self.sentences_surviving + self.rules.sentence_rejections()
            && self.per_source.iter().map(|s| s.input_docs).sum::<u64>() == self.input_docs
            && self.per_source.iter().map(|s| s.output_bytes).sum::<u64>() == self.output_bytes
    }
}
