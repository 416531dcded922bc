//! Fine-tuning bookkeeping: the hyper-parameter grid as a job manifest,
//! per-seed score aggregation, best-config selection and text reports.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterStats;
use crate::metrics::AlueTask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpConfig {
    pub lr: f64,
    pub batch: u32,
    pub dropout: f64,
}

impl HpConfig {
    fn order(&self, other: &Self) -> Ordering {
        self.lr
            .total_cmp(&other.lr)
            .then(self.batch.cmp(&other.batch))
            .then(self.dropout.total_cmp(&other.dropout))
    }

    fn key(&self) -> (u64, u32, u64) {
        (self.lr.to_bits(), self.batch, self.dropout.to_bits())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpGrid {
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<u32>,
    pub dropouts: Vec<f64>,
    pub epochs: u32,
    pub n_seeds: u32,
}

impl Default for HpGrid {
    fn default() -> Self {
        Self {
            learning_rates: vec![7e-6, 2e-5, 5e-5],
            batch_sizes: vec![8, 16, 32, 64, 128],
            dropouts: vec![0.1, 0.2, 0.3, 0.4],
            epochs: 30,
            n_seeds: 5,
        }
    }
}

impl HpGrid {
    /// Cartesian product, learning rate outermost.
    pub fn configs(&self) -> Vec<HpConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &lr in &self.learning_rates {
            for &batch in &self.batch_sizes {
                for &dropout in &self.dropouts {
                    out.push(HpConfig { lr, batch, dropout });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.learning_rates.len() * self.batch_sizes.len() * self.dropouts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub task: String,
    pub model: String,
    pub lr: f64,
    pub batch: u32,
    pub dropout: f64,
    pub epochs: u32,
    pub seed: u64,
}

/// One job per (task, config, seed), in task then grid then seed order.
pub fn emit_grid_manifest<S: AsRef<str>>(grid: &HpGrid, tasks: &[S], model: &str) -> Result<Vec<Job>> {
    if tasks.is_empty() {
        return Err(Error::EmptyTaskList);
    }
    let configs = grid.configs();
    let mut jobs = Vec::with_capacity(tasks.len() * configs.len() * grid.n_seeds as usize);
    for task in tasks {
        for c in &configs {
            for seed in 0..grid.n_seeds as u64 {
                jobs.push(Job {
                    task: task.as_ref().to_owned(),
                    model: model.to_owned(),
                    lr: c.lr,
                    batch: c.batch,
                    dropout: c.dropout,
                    epochs: grid.epochs,
                    seed,
                });
            }
        }
    }
    Ok(jobs)
}

pub fn manifest_json(jobs: &[Job]) -> String {
    serde_json::to_string_pretty(jobs).expect("jobs serialize") + "\n"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: String,
    pub model: String,
    pub lr: f64,
    pub batch: u32,
    pub dropout: f64,
    pub seed: u64,
    pub dev_score: f64,
}

impl RunRecord {
    pub fn config(&self) -> HpConfig {
        HpConfig { lr: self.lr, batch: self.batch, dropout: self.dropout }
    }
}

pub fn read_run_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(format!("{}:{}", path.display(), i + 1), e)))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdKind {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n - 1; a single run has std 0.
    Sample,
}

pub fn mean_std(xs: &[f64], kind: StdKind) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let den = match kind {
        StdKind::Population => n,
        StdKind::Sample => n - 1.0,
    };
    let std = if den > 0.0 { (ss / den).sqrt() } else { 0.0 };
    (mean, std)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub task: String,
    pub model: String,
    pub config: HpConfig,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub std_kind: StdKind,
    /// Sorted by task, model, config.
    pub groups: Vec<ConfigSummary>,
    /// Best config per (task, model), same order.
    pub best: Vec<ConfigSummary>,
}

type GroupKey = (String, String, (u64, u32, u64));

/// Mean and std per (task, model, config); the best config per (task, model)
/// has the highest mean, then the lower std, then the earlier grid position.
pub fn aggregate_runs(records: &[RunRecord], std_kind: StdKind) -> Result<AggregateReport> {
    let mut groups: BTreeMap<GroupKey, (HpConfig, Vec<(u64, f64)>)> = BTreeMap::new();
    for r in records {
        let key = (r.task.clone(), r.model.clone(), r.config().key());
        let entry = groups.entry(key).or_insert_with(|| (r.config(), Vec::new()));
        if entry.1.iter().any(|&(s, _)| s == r.seed) {
            return Err(Error::DuplicateRun {
                task: r.task.clone(),
                model: r.model.clone(),
                config: format!("lr={} batch={} dropout={}", r.lr, r.batch, r.dropout),
                seed: r.seed,
            });
        }
        entry.1.push((r.seed, r.dev_score));
    }

    let mut summaries: Vec<ConfigSummary> = groups
        .into_iter()
        .map(|((task, model, _), (config, mut runs))| {
            // summation order must not depend on input order
            runs.sort_by_key(|&(s, _)| s);
            let scores: Vec<f64> = runs.iter().map(|r| r.1).collect();
            let (mean, std) = mean_std(&scores, std_kind);
            ConfigSummary { task, model, config, mean, std, n: scores.len() }
        })
        .collect();
    summaries.sort_by(|a, b| {
        a.task
            .cmp(&b.task)
            .then_with(|| a.model.cmp(&b.model))
            .then_with(|| a.config.order(&b.config))
    });

    let mut best: Vec<ConfigSummary> = Vec::new();
    for s in &summaries {
        match best.last_mut() {
            Some(b) if b.task == s.task && b.model == s.model => {
                let better = s.mean > b.mean || (s.mean == b.mean && s.std < b.std);
                if better {
                    *b = s.clone();
                }
            }
            _ => best.push(s.clone()),
        }
    }
    Ok(AggregateReport { std_kind, groups: summaries, best })
}

/// Fixed-width table: first column left-aligned, the rest right-aligned.
fn render_grid(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, &w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - cell.chars().count();
            if i == 0 {
                s.push_str(cell);
                s.extend(std::iter::repeat(' ').take(pad));
            } else {
                s.extend(std::iter::repeat(' ').take(pad));
                s.push_str(cell);
            }
        }
        s.trim_end().to_owned() + "\n"
    };
    let mut out = line(header);
    let total = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

/// Binary-prefixed size with at most one decimal: `220B`, `1.5KB`, `115GB`.
pub fn human_bytes(n: u64) -> String {
    const UNITS: [&str; 6] = ["B", "KB", "MB", "GB", "TB", "PB"];
    let mut v = n as f64;
    let mut u = 0;
    while v >= 1024.0 && u + 1 < UNITS.len() {
        v /= 1024.0;
        u += 1;
    }
    if u == 0 || v >= 100.0 || (v - v.round()).abs() < 0.05 {
        format!("{:.0}{}", v, UNITS[u])
    } else {
        format!("{:.1}{}", v, UNITS[u])
    }
}

fn clean_cell(out_bytes: u64, in_bytes: u64) -> String {
    let pct = if in_bytes == 0 { 0.0 } else { 100.0 * out_bytes as f64 / in_bytes as f64 };
    format!("{} ({:.0}%)", human_bytes(out_bytes), pct)
}

/// Corpus size table: one row per source plus a Total row.
pub fn render_filter_table(stats: &FilterStats) -> String {
    let header = ["Source", "Original", "Clean"].map(String::from).to_vec();
    let mut rows: Vec<Vec<String>> = stats
        .per_source
        .iter()
        .map(|s| vec![s.source.clone(), human_bytes(s.input_bytes), clean_cell(s.output_bytes, s.input_bytes)])
        .collect();
    if !stats.per_source.is_empty() || stats.input_bytes > 0 {
        rows.push(vec![
            "Total".into(),
            human_bytes(stats.input_bytes),
            clean_cell(stats.output_bytes, stats.input_bytes),
        ]);
    }
    render_grid(&header, &rows)
}

/// ALUE tasks first in their canonical order, then anything else by name.
fn task_rank(task: &str) -> (usize, String) {
    let pos = task
        .parse::<AlueTask>()
        .ok()
        .and_then(|t| AlueTask::ALL.iter().position(|&a| a == t))
        .unwrap_or(AlueTask::ALL.len());
    (pos, task.to_owned())
}

fn sorted_best(report: &AggregateReport) -> Vec<&ConfigSummary> {
    let mut best: Vec<&ConfigSummary> = report.best.iter().collect();
    best.sort_by(|a, b| task_rank(&a.task).cmp(&task_rank(&b.task)).then_with(|| a.model.cmp(&b.model)));
    best
}

/// Best hyper-parameters with one column per task (per task and model when
/// the report holds several models).
pub fn render_hp_table(report: &AggregateReport) -> String {
    let best = sorted_best(report);
    let many_models = best.windows(2).any(|w| w[0].model != w[1].model);
    let mut header = vec!["Hyperparameter".to_owned()];
    header.extend(best.iter().map(|b| {
        if many_models {
            format!("{}/{}", b.task, b.model)
        } else {
            b.task.clone()
        }
    }));
    if best.is_empty() {
        return render_grid(&header, &[]);
    }
    let row = |name: &str, f: &dyn Fn(&HpConfig) -> String| {
        let mut r = vec![name.to_owned()];
        r.extend(best.iter().map(|b| f(&b.config)));
        r
    };
    let rows = vec![
        row("Batch Size", &|c| c.batch.to_string()),
        row("Hidden Dropout", &|c| format!("{}", c.dropout)),
        row("Learning Rate", &|c| format!("{:e}", c.lr)),
    ];
    render_grid(&header, &rows)
}

/// Best-config dev scores as `mean±std`, one row per model, with the
/// unweighted average over the tasks shown.
pub fn render_score_table(report: &AggregateReport) -> String {
    let best = sorted_best(report);
    let mut tasks: Vec<&str> = Vec::new();
    for b in &best {
        if !tasks.contains(&b.task.as_str()) {
            tasks.push(&b.task);
        }
    }
    let mut header = vec!["Model".to_owned()];
    header.extend(tasks.iter().map(|t| t.to_string()));
    header.push("Avg.".into());
    let mut models: Vec<&str> = best.iter().map(|b| b.model.as_str()).collect();
    models.sort_unstable();
    models.dedup();
    let rows: Vec<Vec<String>> = models
        .iter()
        .map(|m| {
            let mut row = vec![m.to_string()];
            let mut sum = 0.0;
            let mut count = 0;
            for t in &tasks {
                match best.iter().find(|b| b.model == *m && b.task == *t) {
                    Some(b) => {
                        row.push(format!("{:.1}±{:.1}", b.mean, b.std));
                        sum += b.mean;
                        count += 1;
                    }
                    None => row.push("-".into()),
                }
            }
            row.push(if count == tasks.len() && count > 0 {
                format!("{:.1}", sum / count as f64)
            } else {
                "-".into()
            });
            row
        })
        .collect();
    render_grid(&header, &rows)
}

/// Every (task, model, config) group with its mean, std and run count.
pub fn render_groups_table(report: &AggregateReport) -> String {
    let header = ["Task", "Model", "LR", "Batch", "Dropout", "Mean", "Std", "N"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = report
        .groups
        .iter()
        .map(|g| {
            let mut r = vec![g.task.clone(), g.model.clone()];
            r.push(format!("{:e}", g.config.lr));
            r.push(g.config.batch.to_string());
            r.push(format!("{}", g.config.dropout));
            r.push(format!("{:.4}", g.mean));
            r.push(format!("{:.4}", g.std));
            r.push(g.n.to_string());
            r
        })
        .collect();
    render_grid(&header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::SourceStats;
    use proptest::prelude::*;

    fn rec(task: &str, model: &str, lr: f64, batch: u32, seed: u64, score: f64) -> RunRecord {
        RunRecord { task: task.into(), model: model.into(), lr, batch, dropout: 0.1, seed, dev_score: score }
    }

    #[test]
    fn grid_sizes() {
        let g = HpGrid::default();
        assert_eq!(g.len(), 60);
        assert_eq!(emit_grid_manifest(&g, &["MQ2Q"], "m").unwrap().len(), 300);
        let tasks: Vec<&str> = AlueTask::ALL.iter().map(|t| t.name()).collect();
        assert_eq!(emit_grid_manifest(&g, &tasks, "m").unwrap().len(), 2400);
        assert!(matches!(emit_grid_manifest::<&str>(&g, &[], "m"), Err(Error::EmptyTaskList)));
    }

    #[test]
    fn manifest_is_deterministic() {
        let g = HpGrid::default();
        let a = manifest_json(&emit_grid_manifest(&g, &["A", "B"], "m").unwrap());
        let b = manifest_json(&emit_grid_manifest(&g, &["A", "B"], "m").unwrap());
        assert_eq!(a, b);
        let jobs: Vec<Job> = serde_json::from_str(&a).unwrap();
        assert_eq!(jobs.len(), 600);
        assert_eq!(jobs[0].epochs, 30);
    }

    #[test]
    fn mean_and_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0], StdKind::Population);
        assert!((m - 2.0).abs() < 1e-12);
        assert!((s - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[1.0, 2.0, 3.0], StdKind::Sample).1, 1.0);
        assert_eq!(mean_std(&[4.5], StdKind::Sample), (4.5, 0.0));
    }

    #[test]
    fn best_config_selection() {
        let mut rs = Vec::new();
        for (seed, s) in [76.0, 76.4, 76.2].into_iter().enumerate() {
            rs.push(rec("T", "m", 2e-5, 32, seed as u64, s));
        }
        for (seed, s) in [74.0, 74.2, 74.1].into_iter().enumerate() {
            rs.push(rec("T", "m", 7e-6, 32, seed as u64, s));
        }
        let rep = aggregate_runs(&rs, StdKind::Population).unwrap();
        assert_eq!(rep.groups.len(), 2);
        assert_eq!(rep.best.len(), 1);
        assert_eq!(rep.best[0].config.lr, 2e-5);
        assert!((rep.best[0].mean - 76.2).abs() < 1e-9);
    }

    #[test]
    fn ties_prefer_lower_std_then_grid_order() {
        let rs = vec![
            rec("T", "m", 5e-5, 8, 0, 1.0),
            rec("T", "m", 5e-5, 8, 1, 3.0),
            rec("T", "m", 2e-5, 8, 0, 2.0),
            rec("T", "m", 2e-5, 8, 1, 2.0),
            rec("T", "m", 7e-6, 16, 0, 2.0),
            rec("T", "m", 7e-6, 16, 1, 2.0),
        ];
        let rep = aggregate_runs(&rs, StdKind::Population).unwrap();
        assert_eq!(rep.best[0].config.lr, 7e-6);
    }

    #[test]
    fn duplicate_runs_are_rejected() {
        let rs = vec![rec("T", "m", 2e-5, 8, 0, 1.0), rec("T", "m", 2e-5, 8, 0, 2.0)];
        assert!(matches!(aggregate_runs(&rs, StdKind::Population), Err(Error::DuplicateRun { .. })));
    }

    #[test]
    fn filter_table_shows_retention() {
        let stats = FilterStats {
            input_bytes: 1000,
            output_bytes: 220,
            per_source: vec![SourceStats {
                source: "CC".into(),
                input_docs: 1,
                output_docs: 1,
                input_bytes: 1000,
                output_bytes: 220,
            }],
            ..FilterStats::default()
        };
        let t = render_filter_table(&stats);
        assert!(t.contains("220B (22%)"), "{t}");
        assert!(t.lines().last().unwrap().starts_with("Total"));
        assert_eq!(human_bytes(115 * 1024 * 1024 * 1024), "115GB");
    }

    #[test]
    fn empty_reports_render_header_only() {
        let rep = AggregateReport::default();
        assert_eq!(render_hp_table(&rep).lines().count(), 2);
        assert_eq!(render_filter_table(&FilterStats::default()).lines().count(), 2);
        assert_eq!(render_score_table(&rep).lines().count(), 2);
    }

    #[test]
    fn hp_table_has_a_column_per_task() {
        let rs: Vec<RunRecord> = AlueTask::ALL
            .iter()
            .rev()
            .map(|t| rec(t.name(), "m", 2e-5, 64, 0, 50.0))
            .collect();
        let rep = aggregate_runs(&rs, StdKind::Population).unwrap();
        let t = render_hp_table(&rep);
        let header: Vec<&str> = t.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(header.len(), 9);
        assert_eq!(&header[1..], &["MQ2Q", "MDD", "SVREG", "SEC", "FID", "OOLD", "XNLI", "OHSD"]);
        assert_eq!(t.lines().count(), 5);
    }

    proptest! {
        #[test]
        fn aggregation_ignores_order_and_affine_rescaling(
            scores in prop::collection::vec(0.0f64..100.0, 12),
            seed in any::<u64>(),
            a in 0.5f64..4.0,
            b in -10.0f64..10.0,
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let lrs = [7e-6, 2e-5, 5e-5, 1e-4];
            let rs: Vec<RunRecord> = scores
                .iter()
                .enumerate()
                .map(|(i, &s)| rec("T", "m", lrs[i / 3], 8, (i % 3) as u64, s))
                .collect();
            let base = aggregate_runs(&rs, StdKind::Population).unwrap();
            let mut shuffled = rs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(&aggregate_runs(&shuffled, StdKind::Population).unwrap(), &base);
            let scaled: Vec<RunRecord> = rs.iter().map(|r| RunRecord { dev_score: a * r.dev_score + b, ..r.clone() }).collect();
            let rescaled = aggregate_runs(&scaled, StdKind::Population).unwrap();
            prop_assert_eq!(rescaled.best[0].config, base.best[0].config);
            prop_assert!(base.groups.iter().all(|g| g.std >= 0.0 && g.n == 3));
        }
    }
}
