//! Seed collapsing, dataset-weighted aggregation and strategy ranking.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::decoding::DecodingConfig;
use crate::metrics::qtext;

use super::{ResultRow, RowStatus, SweepError};

/// One (backend, dataset, strategy) cell with replicate seeds collapsed.
/// Standard deviations are population values (0 for a single seed).
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub backend: String,
    pub dataset: String,
    pub strategy: DecodingConfig,
    pub n_seeds: usize,
    pub n_generations: usize,
    pub div: f64,
    pub coherence_raw: f64,
    pub coh: f64,
    pub mauve: f64,
    pub qtext: f64,
    pub div_std: f64,
    pub coherence_raw_std: f64,
    pub coh_std: f64,
    pub mauve_std: f64,
}

/// Weighted average over datasets, per backend (`backend = Some`) or over
/// every backend (`backend = None`). QText is recomputed from the averaged
/// components.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub strategy: DecodingConfig,
    pub backend: Option<String>,
    pub div: f64,
    pub coherence_raw: f64,
    pub coh: f64,
    pub mauve: f64,
    pub qtext: f64,
    pub n_cells: usize,
    pub n_generations: usize,
}

impl AggregateRow {
    pub fn metric(&self, m: RankMetric) -> f64 {
        match m {
            RankMetric::Div => self.div,
            RankMetric::Coh => self.coh,
            RankMetric::Mauve => self.mauve,
            RankMetric::Qtext => self.qtext,
        }
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.strategy
            .canonical_cmp(&other.strategy)
            .then_with(|| self.backend.cmp(&other.backend))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub cells: Vec<CellSummary>,
    pub by_backend: Vec<AggregateRow>,
    pub overall: Vec<AggregateRow>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if !mean.is_finite() {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn collapse(group: &[&ResultRow]) -> CellSummary {
    let pick = |f: fn(&ResultRow) -> f64| mean_std(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
    let (div, div_std) = pick(|r| r.div);
    let (coherence_raw, coherence_raw_std) = pick(|r| r.coherence_raw);
    let (coh, coh_std) = pick(|r| r.coh);
    let (mauve, mauve_std) = pick(|r| r.mauve);
    let k = &group[0].key;
    CellSummary {
        backend: k.backend.clone(),
        dataset: k.dataset.clone(),
        strategy: k.config.clone(),
        n_seeds: group.len(),
        n_generations: group.iter().map(|r| r.n_generations).sum(),
        div,
        coherence_raw,
        coh,
        mauve,
        qtext: qtext(div, mauve, coh).unwrap_or(f64::NAN),
        div_std,
        coherence_raw_std,
        coh_std,
        mauve_std,
    }
}

fn weighted(
    strategy: &DecodingConfig,
    backend: Option<String>,
    cells: &[(&CellSummary, f64)],
) -> Result<AggregateRow, SweepError> {
    let total: f64 = cells.iter().map(|(_, w)| w).sum();
    let avg = |f: fn(&CellSummary) -> f64| cells.iter().map(|(c, w)| w * f(c)).sum::<f64>() / total;
    let (div, coh, mauve) = (avg(|c| c.div), avg(|c| c.coh), avg(|c| c.mauve));
    Ok(AggregateRow {
        strategy: strategy.clone(),
        backend,
        div,
        coherence_raw: avg(|c| c.coherence_raw),
        coh,
        mauve,
        qtext: qtext(
            div.clamp(0.0, 1.0),
            mauve.clamp(0.0, 1.0),
            coh.clamp(0.0, 1.0),
        )?,
        n_cells: cells.len(),
        n_generations: cells.iter().map(|(c, _)| c.n_generations).sum(),
    })
}

type WeightedCells<'a> = (DecodingConfig, Vec<(&'a CellSummary, f64)>);

/// Collapses seeds per cell, then averages cells with dataset weights per
/// (strategy, backend) and per strategy. Rows must be finalized and none
/// may have failed.
pub fn aggregate_weighted(
    rows: &[ResultRow],
    weights: &BTreeMap<String, f64>,
) -> Result<Aggregates, SweepError> {
    if let Some(r) = rows.iter().find(|r| r.status == RowStatus::Failed) {
        return Err(SweepError::Config(format!(
            "cannot aggregate failed experiment `{}`",
            r.key
        )));
    }
    if let Some(r) = rows.iter().find(|r| r.coh.is_nan() || r.qtext.is_nan()) {
        return Err(SweepError::Config(format!(
            "experiment `{}` is not finalized",
            r.key
        )));
    }
    for r in rows {
        match weights.get(&r.key.dataset) {
            None => {
                return Err(SweepError::Config(format!(
                    "no weight for dataset `{}`",
                    r.key.dataset
                )))
            }
            Some(w) if !(*w > 0.0 && w.is_finite()) => {
                return Err(SweepError::Config(format!(
                    "weight for dataset `{}` must be > 0",
                    r.key.dataset
                )))
            }
            _ => {}
        }
    }
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.key.canonical_cmp(&b.key));
    let mut cells: Vec<CellSummary> = Vec::new();
    for group in sorted.chunk_by(|a, b| {
        a.key.backend == b.key.backend
            && a.key.dataset == b.key.dataset
            && a.key.config == b.key.config
    }) {
        cells.push(collapse(group));
    }

    let mut by_backend: BTreeMap<(String, String), WeightedCells> = BTreeMap::new();
    let mut overall: BTreeMap<String, WeightedCells> = BTreeMap::new();
    for c in &cells {
        let w = weights[&c.dataset];
        let key = c.strategy.key();
        by_backend
            .entry((key.clone(), c.backend.clone()))
            .or_insert_with(|| (c.strategy.clone(), Vec::new()))
            .1
            .push((c, w));
        overall
            .entry(key)
            .or_insert_with(|| (c.strategy.clone(), Vec::new()))
            .1
            .push((c, w));
    }
    let mut by_backend_rows = by_backend
        .into_iter()
        .map(|((_, b), (s, cs))| weighted(&s, Some(b), &cs))
        .collect::<Result<Vec<_>, _>>()?;
    let mut overall_rows = overall
        .into_values()
        .map(|(s, cs)| weighted(&s, None, &cs))
        .collect::<Result<Vec<_>, _>>()?;
    by_backend_rows.sort_by(|a, b| a.canonical_cmp(b));
    overall_rows.sort_by(|a, b| a.canonical_cmp(b));
    Ok(Aggregates {
        cells,
        by_backend: by_backend_rows,
        overall: overall_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMetric {
    Div,
    Coh,
    Mauve,
    Qtext,
}

impl FromStr for RankMetric {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "div" => Ok(RankMetric::Div),
            "coh" => Ok(RankMetric::Coh),
            "mauve" => Ok(RankMetric::Mauve),
            "qtext" => Ok(RankMetric::Qtext),
            other => Err(SweepError::Config(format!(
                "unknown ranking metric `{other}` (div, coh, mauve, qtext)"
            ))),
        }
    }
}

impl fmt::Display for RankMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankMetric::Div => "div",
            RankMetric::Coh => "coh",
            RankMetric::Mauve => "mauve",
            RankMetric::Qtext => "qtext",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Best first.
    pub top: Vec<AggregateRow>,
    /// Worst first.
    pub bottom: Vec<AggregateRow>,
    /// Set when `n` exceeded the number of rows and all rows were returned.
    pub truncated: bool,
}

/// Sorts by `metric` descending (ties in canonical order) and returns the
/// first `n` and the last `n` reversed.
pub fn rank_strategies(
    rows: &[AggregateRow],
    metric: RankMetric,
    n: usize,
) -> Result<Ranking, SweepError> {
    if n == 0 {
        return Err(SweepError::Config("ranking size n must be >= 1".into()));
    }
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| {
        b.metric(metric)
            .total_cmp(&a.metric(metric))
            .then_with(|| a.canonical_cmp(b))
    });
    let truncated = n > sorted.len();
    let m = n.min(sorted.len());
    let top = sorted[..m].to_vec();
    let bottom = sorted[sorted.len() - m..].iter().rev().cloned().collect();
    Ok(Ranking {
        top,
        bottom,
        truncated,
    })
}
