//! Evaluation metrics for the ALUE tasks and CoNLL-style NER.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

pub fn accuracy<T: PartialEq>(preds: &[T], golds: &[T]) -> Result<f64> {
    check_lengths(preds.len(), golds.len())?;
    if preds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Unweighted mean of per-label F1 over the whole declared label set; labels
/// without support or predictions score 0.
pub fn f1_macro<T: Eq + Hash + fmt::Debug>(preds: &[T], golds: &[T], label_set: &[T]) -> Result<f64> {
    check_lengths(preds.len(), golds.len())?;
    if label_set.is_empty() {
        return Err(Error::EmptyLabelSet);
    }
    let known: HashSet<&T> = label_set.iter().collect();
    for x in preds.iter().chain(golds) {
        if !known.contains(x) {
            return Err(Error::UnknownLabel(format!("{x:?}")));
        }
    }
    let total: f64 = label_set
        .iter()
        .map(|label| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (p, g) in preds.iter().zip(golds) {
                match (p == label, g == label) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
            f1(tp, fp, fn_)
        })
        .sum();
    Ok(total / label_set.len() as f64)
}

/// Sample-averaged Jaccard index; two empty sets score 1.
pub fn jaccard_multilabel<T: Eq + Hash>(pred_sets: &[HashSet<T>], gold_sets: &[HashSet<T>]) -> Result<f64> {
    check_lengths(pred_sets.len(), gold_sets.len())?;
    if pred_sets.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = pred_sets
        .iter()
        .zip(gold_sets)
        .map(|(p, g)| {
            let union = p.union(g).count();
            if union == 0 {
                1.0
            } else {
                p.intersection(g).count() as f64 / union as f64
            }
        })
        .sum();
    Ok(sum / pred_sets.len() as f64)
}

/// Corpus-level (micro) Jaccard: total intersections over total unions.
pub fn jaccard_micro<T: Eq + Hash>(pred_sets: &[HashSet<T>], gold_sets: &[HashSet<T>]) -> Result<f64> {
    check_lengths(pred_sets.len(), gold_sets.len())?;
    if pred_sets.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (p, g) in pred_sets.iter().zip(gold_sets) {
        inter += p.intersection(g).count();
        union += p.union(g).count();
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_lengths(xs.len(), ys.len())?;
    if xs.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Inclusive token span with its entity type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
}

enum Tag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

fn parse_tag(tag: &str) -> Result<Tag<'_>> {
    if tag == "O" {
        return Ok(Tag::Outside);
    }
    match tag.split_once('-') {
        Some(("B", t)) if !t.is_empty() => Ok(Tag::Begin(t)),
        Some(("I", t)) if !t.is_empty() => Ok(Tag::Inside(t)),
        _ => Err(Error::UnknownTag(tag.to_owned())),
    }
}

/// Chunks a BIO sequence the way conlleval does: an `I-T` that does not
/// continue a `T` chunk opens a new one.
pub fn decode_bio<S: AsRef<str>>(tags: &[S]) -> Result<Vec<EntitySpan>> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        let tag = parse_tag(tag.as_ref())?;
        let (starts, ty) = match tag {
            Tag::Outside => (true, None),
            Tag::Begin(t) => (true, Some(t)),
            Tag::Inside(t) => (open.map_or(true, |(_, o)| o != t), Some(t)),
        };
        if starts {
            if let Some((s, t)) = open.take() {
                spans.push(EntitySpan { start: s, end: i - 1, entity_type: t.to_owned() });
            }
            open = ty.map(|t| (i, t));
        }
    }
    if let Some((s, t)) = open {
        spans.push(EntitySpan { start: s, end: tags.len() - 1, entity_type: t.to_owned() });
    }
    Ok(spans)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub correct: u64,
    pub predicted: u64,
    pub gold: u64,
}

impl Prf {
    pub fn from_counts(correct: u64, predicted: u64, gold: u64) -> Self {
        let precision = if predicted == 0 { 0.0 } else { correct as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { correct as f64 / gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1, correct, predicted, gold }
    }
}

/// Micro-averaged mention-level precision, recall and F1. A predicted span is
/// correct only when start, end and type all match a gold span.
pub fn conll_mention_f1<S: AsRef<str>>(pred: &[Vec<S>], gold: &[Vec<S>]) -> Result<Prf> {
    check_lengths(pred.len(), gold.len())?;
    let (mut correct, mut predicted, mut golds) = (0u64, 0u64, 0u64);
    for (index, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(Error::SequenceLengthMismatch { index, pred: p.len(), gold: g.len() });
        }
        let ps: BTreeSet<EntitySpan> = decode_bio(p)?.into_iter().collect();
        let gs: BTreeSet<EntitySpan> = decode_bio(g)?.into_iter().collect();
        correct += ps.intersection(&gs).count() as u64;
        predicted += ps.len() as u64;
        golds += gs.len() as u64;
    }
    Ok(Prf::from_counts(correct, predicted, golds))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AlueTask {
    Mq2q,
    Mdd,
    Svreg,
    Sec,
    Fid,
    Oold,
    Xnli,
    Ohsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Accuracy,
    F1Macro,
    Jaccard,
    JaccardMicro,
    Pearson,
    ConllF1,
}

impl AlueTask {
    pub const ALL: [AlueTask; 8] = [
        AlueTask::Mq2q,
        AlueTask::Mdd,
        AlueTask::Svreg,
        AlueTask::Sec,
        AlueTask::Fid,
        AlueTask::Oold,
        AlueTask::Xnli,
        AlueTask::Ohsd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlueTask::Mq2q => "MQ2Q",
            AlueTask::Mdd => "MDD",
            AlueTask::Svreg => "SVREG",
            AlueTask::Sec => "SEC",
            AlueTask::Fid => "FID",
            AlueTask::Oold => "OOLD",
            AlueTask::Xnli => "XNLI",
            AlueTask::Ohsd => "OHSD",
        }
    }

    pub fn metric(self) -> MetricKind {
        match self {
            AlueTask::Xnli => MetricKind::Accuracy,
            AlueTask::Svreg => MetricKind::Pearson,
            AlueTask::Sec => MetricKind::Jaccard,
            _ => MetricKind::F1Macro,
        }
    }
}

impl fmt::Display for AlueTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlueTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        AlueTask::ALL
            .into_iter()
            .find(|t| t.name() == up)
            .ok_or_else(|| Error::Config(format!("unknown ALUE task {s:?}")))
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::F1Macro => "f1-macro",
            MetricKind::Jaccard => "jaccard",
            MetricKind::JaccardMicro => "jaccard-micro",
            MetricKind::Pearson => "pearson",
            MetricKind::ConllF1 => "conll-f1",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "accuracy" | "acc" => MetricKind::Accuracy,
            "f1-macro" | "f1" | "macro-f1" => MetricKind::F1Macro,
            "jaccard" => MetricKind::Jaccard,
            "jaccard-micro" => MetricKind::JaccardMicro,
            "pearson" => MetricKind::Pearson,
            "conll-f1" | "conll" | "ner" => MetricKind::ConllF1,
            other => return Err(Error::Config(format!("unknown metric {other:?}"))),
        })
    }
}

/// Unweighted mean over exactly the eight ALUE tasks.
pub fn alue_average<I, K>(task_scores: I) -> Result<f64>
where
    I: IntoIterator<Item = (K, f64)>,
    K: AsRef<str>,
{
    let mut seen = Vec::new();
    let mut extra = Vec::new();
    let mut sum = 0.0;
    for (k, v) in task_scores {
        match k.as_ref().parse::<AlueTask>() {
            Ok(t) if !seen.contains(&t) => {
                seen.push(t);
                sum += v;
            }
            _ => extra.push(k.as_ref().to_owned()),
        }
    }
    let missing: Vec<String> = AlueTask::ALL
        .iter()
        .filter(|t| !seen.contains(t))
        .map(|t| t.name().to_owned())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::AlueTaskMismatch { missing, extra });
    }
    Ok(sum / AlueTask::ALL.len() as f64)
}
