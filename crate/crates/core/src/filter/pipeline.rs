use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::dedup::{dedup_fingerprint, DedupIndex, Occurrence};
use super::stats::{FilterStats, RuleCounts};
use super::{screen_sentence, split_sentences, CleanDocument, FilterConfig, RawDocument, Rule, Screened};
use crate::error::{Error, Result};
use crate::normalize::normalize_text;

/// Documents processed per parallel batch.
const CHUNK_DOCS: usize = 2048;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocOutcome {
    pub clean: Option<CleanDocument>,
    pub rules: RuleCounts,
    pub sentences_examined: u64,
    pub sentences_surviving: u64,
    pub words_stripped: u64,
    pub input_bytes: u64,
    pub output_bytes: u64,
    /// Rule 5 or 8 when the whole document was dropped.
    pub rejected_by: Option<Rule>,
}

struct Kept {
    text: String,
    words: usize,
    key: Option<u128>,
    index: u32,
}

/// A document after the dedup-independent stages (normalize, split, 1-4, 6).
struct Prepared {
    doc_id: String,
    source: String,
    ingest_order: u64,
    input_bytes: u64,
    examined: u64,
    kept: Vec<Kept>,
    rules: RuleCounts,
    words_stripped: u64,
}

fn prepare(doc: RawDocument, cfg: &FilterConfig) -> Prepared {
    let normalized = normalize_text(&doc.text);
    let sentences = split_sentences(&normalized);
    let mut rules = RuleCounts::default();
    let mut kept = Vec::with_capacity(sentences.len());
    let mut words_stripped = 0u64;
    let examined = sentences.len() as u64;
    for (i, s) in sentences.into_iter().enumerate() {
        match screen_sentence(s, cfg) {
            Screened::Rejected(rule) => rules.bump(rule),
            Screened::Kept {
                sentence,
                words_stripped: removed,
            } => {
                if removed > 0 {
                    rules.bump(Rule::NonArabicSpan);
                    words_stripped += removed as u64;
                }
                let key = dedup_fingerprint(&sentence);
                kept.push(Kept {
                    words: sentence.word_count(),
                    text: sentence.text,
                    key,
                    index: i as u32,
                });
            }
        }
    }
    Prepared {
        input_bytes: doc.text.len() as u64,
        doc_id: doc.doc_id,
        source: doc.source,
        ingest_order: doc.ingest_order,
        examined,
        kept,
        rules,
        words_stripped,
    }
}

impl Prepared {
    fn occurrence(&self, k: &Kept) -> Occurrence {
        Occurrence {
            ingest_order: self.ingest_order,
            sentence: k.index,
        }
    }

    /// Applies rule 7 via `is_first`, then rules 8 and 5.
    fn finalize(self, cfg: &FilterConfig, mut is_first: impl FnMut(u128, Occurrence) -> bool) -> DocOutcome {
        let mut rules = self.rules;
        let mut surviving = Vec::with_capacity(self.kept.len());
        let mut words = 0usize;
        for k in self.kept {
            if let Some(key) = k.key {
                let occ = Occurrence { ingest_order: self.ingest_order, sentence: k.index };
                if !is_first(key, occ) {
                    rules.bump(Rule::Duplicate);
                    continue;
                }
            }
            words += k.words;
            surviving.push(k.text);
        }

        let mut discarded = rules.rule1_markup
            + rules.rule2_arabic_ratio
            + rules.rule3_min_sentence_words
            + rules.rule4_punctuation_run;
        if cfg.count_duplicates_in_discard {
            discarded += rules.rule7_duplicate;
        }
        let rejected_by = if self.examined > 0
            && discarded as f64 / self.examined as f64 > cfg.doc_discard_ratio
        {
            Some(Rule::DiscardRatio)
        } else if words < cfg.min_words_doc {
            Some(Rule::MinDocumentWords)
        } else {
            None
        };
        if let Some(rule) = rejected_by {
            rules.bump(rule);
        }

        let sentences_surviving = surviving.len() as u64;
        let clean = rejected_by.is_none().then(|| CleanDocument {
            doc_id: self.doc_id,
            source: self.source,
            sentences: surviving,
            word_count: words,
        });
        let output_bytes = clean.as_ref().map_or(0, |c| {
            let n = c.sentences.len();
            (c.sentences.iter().map(String::len).sum::<usize>() + n.saturating_sub(1)) as u64
        });
        DocOutcome {
            clean,
            rules,
            sentences_examined: self.examined,
            sentences_surviving,
            words_stripped: self.words_stripped,
            input_bytes: self.input_bytes,
            output_bytes,
            rejected_by,
        }
    }
}

/// Filters one document against an index holding every earlier sentence key.
/// Surviving keys of this document are added to the index.
pub fn filter_document(doc: RawDocument, dedup: &mut DedupIndex, cfg: &FilterConfig) -> DocOutcome {
    prepare(doc, cfg).finalize(cfg, |key, occ| dedup.insert_min(key, occ))
}

fn record(stats: &mut FilterStats, source: &str, out: &DocOutcome) {
    stats.rules.add(&out.rules);
    stats.sentences_examined += out.sentences_examined;
    stats.sentences_surviving += out.sentences_surviving;
    stats.words_stripped += out.words_stripped;
    stats.input_docs += 1;
    stats.input_bytes += out.input_bytes;
    stats.output_bytes += out.output_bytes;
    let kept = out.clean.is_some() as u64;
    stats.output_docs += kept;
    let src = stats.source_mut(source);
    src.input_docs += 1;
    src.output_docs += kept;
    src.input_bytes += out.input_bytes;
    src.output_bytes += out.output_bytes;
}

/// Streams documents through the filter with `workers` threads.
///
/// Each batch is prepared in parallel; dedup runs in two passes (per-key
/// minimum occurrence across the batch, then keep-only-the-minimum), so the
/// output is identical for any worker count. Parse errors from `docs` are
/// counted as malformed records and skipped; any other error aborts.
pub fn run_corpus_clean<I, F>(docs: I, cfg: &FilterConfig, workers: usize, mut sink: F) -> Result<FilterStats>
where
    I: IntoIterator<Item = Result<RawDocument>>,
    F: FnMut(&CleanDocument) -> std::io::Result<()>,
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut stats = FilterStats::default();
    let mut global = DedupIndex::new();
    let mut batch = Vec::with_capacity(CHUNK_DOCS);
    let mut iter = docs.into_iter();
    loop {
        batch.clear();
        for item in iter.by_ref() {
            match item {
                Ok(doc) => batch.push(doc),
                Err(Error::Parse { location, message }) => {
                    log::warn!("skipping malformed record at {location}: {message}");
                    stats.malformed_records += 1;
                    continue;
                }
                Err(e) => return Err(e),
            }
            if batch.len() == CHUNK_DOCS {
                break;
            }
        }
        if batch.is_empty() {
            break;
        }
        let docs = std::mem::take(&mut batch);
        let in_order = docs.windows(2).all(|w| w[0].ingest_order < w[1].ingest_order);
        let outcomes = if workers <= 1 && in_order {
            // One pass gives the same first-occurrence answers when the batch
            // arrives in ingest order.
            docs.into_iter()
                .map(|d| {
                    let source = d.source.clone();
                    (source, prepare(d, cfg).finalize(cfg, |key, occ| global.insert_min(key, occ)))
                })
                .collect()
        } else {
            pool.install(|| {
                let prepared: Vec<Prepared> = docs.into_par_iter().map(|d| prepare(d, cfg)).collect();
                let local = prepared
                    .par_iter()
                    .fold(DedupIndex::new, |mut idx, p| {
                        for k in &p.kept {
                            if let Some(key) = k.key {
                                idx.insert_min(key, p.occurrence(k));
                            }
                        }
                        idx
                    })
                    .reduce(DedupIndex::new, |mut a, b| {
                        a.merge_min(b);
                        a
                    });
                global.merge_min(local);
                let global = &global;
                prepared
                    .into_par_iter()
                    .map(|p| {
                        let source = p.source.clone();
                        (source, p.finalize(cfg, |key, occ| global.is_first(key, occ)))
                    })
                    .collect::<Vec<_>>()
            })
        };
        for (source, out) in &outcomes {
            record(&mut stats, source, out);
            if let Some(clean) = &out.clean {
                sink(clean).map_err(|e| Error::DocIo {
                    doc_id: clean.doc_id.clone(),
                    source: e,
                })?;
            }
        }
    }
    stats.finish();
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One JSON object per line: `{"id", "source", "text"}`.
    Jsonl,
    /// Documents separated by blank lines.
    PlainText,
}

impl InputFormat {
    pub fn detect(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => InputFormat::Jsonl,
            _ => InputFormat::PlainText,
        }
    }
}

#[derive(Deserialize)]
struct InputRecord {
    id: Option<String>,
    source: Option<String>,
    text: String,
}

/// Reads documents from files in order, assigning increasing ingest orders.
pub struct CorpusReader {
    inputs: std::vec::IntoIter<(PathBuf, InputFormat, String)>,
    current: Option<(PathBuf, InputFormat, String, std::io::Lines<BufReader<File>>, u64)>,
    next_order: u64,
    pending: Vec<String>,
}

impl CorpusReader {
    /// `inputs` holds (path, format, default source tag).
    pub fn new(inputs: Vec<(PathBuf, InputFormat, String)>) -> Self {
        Self {
            inputs: inputs.into_iter(),
            current: None,
            next_order: 0,
            pending: Vec::new(),
        }
    }

    fn make_doc(&mut self, doc_id: String, source: String, text: String) -> RawDocument {
        let ingest_order = self.next_order;
        self.next_order += 1;
        RawDocument {
            doc_id,
            source,
            text,
            ingest_order,
        }
    }

    fn plain_doc(&mut self) -> Option<RawDocument> {
        if self.pending.is_empty() {
            return None;
        }
        let text = std::mem::take(&mut self.pending).join("\n");
        let (path, source) = {
            let cur = self.current.as_ref().expect("reading a file");
            (cur.0.clone(), cur.2.clone())
        };
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("doc");
        let id = format!("{stem}-{}", self.next_order);
        Some(self.make_doc(id, source, text))
    }
}

impl Iterator for CorpusReader {
    type Item = Result<RawDocument>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.current.is_none() {
                let (path, format, source) = self.inputs.next()?;
                let file = match File::open(&path) {
                    Ok(f) => f,
                    Err(e) => return Some(Err(Error::io(path, e))),
                };
                self.current = Some((path, format, source, BufReader::new(file).lines(), 0));
            }
            let cur = self.current.as_mut().expect("just opened");
            let line = cur.3.next();
            cur.4 += 1;
            let line_no = cur.4;
            let format = cur.1;
            match line {
                None => {
                    let doc = if format == InputFormat::PlainText { self.plain_doc() } else { None };
                    self.current = None;
                    if let Some(doc) = doc {
                        return Some(Ok(doc));
                    }
                }
                Some(Err(e)) => {
                    let path = cur.0.clone();
                    self.current = None;
                    if e.kind() == std::io::ErrorKind::InvalidData {
                        return Some(Err(Error::parse(
                            format!("{}:{line_no}", path.display()),
                            "invalid UTF-8",
                        )));
                    }
                    return Some(Err(Error::io(path, e)));
                }
                Some(Ok(line)) => match format {
                    InputFormat::PlainText => {
                        if line.trim().is_empty() {
                            if let Some(doc) = self.plain_doc() {
                                return Some(Ok(doc));
                            }
                        } else {
                            self.pending.push(line);
                        }
                    }
                    InputFormat::Jsonl => {
                        if line.trim().is_empty() {
                            continue;
                        }
                        let location = format!("{}:{line_no}", cur.0.display());
                        let default_source = cur.2.clone();
                        return Some(match serde_json::from_str::<InputRecord>(&line) {
                            Ok(rec) => {
                                let id = rec.id.unwrap_or_else(|| format!("doc-{}", self.next_order));
                                let source = rec.source.unwrap_or(default_source);
                                Ok(self.make_doc(id, source, rec.text))
                            }
                            Err(e) => Err(Error::parse(location, e)),
                        });
                    }
                },
            }
        }
    }
}

/// Convenience: collects every readable document, surfacing the first error.
pub fn read_documents(inputs: Vec<(PathBuf, InputFormat, String)>) -> Result<Vec<RawDocument>> {
    CorpusReader::new(inputs).collect()
}
