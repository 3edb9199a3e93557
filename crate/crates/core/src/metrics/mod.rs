//! Automatic text-quality metrics.
//!
//! All scores live on `[0, 1]` except raw coherence (mean log-probability in
//! nats). Report emitters scale by 100 for display.

mod mauve;

use std::collections::HashSet;
use std::hash::Hash;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{sequence_logprob, BackendError, LanguageModel, TokenId};

pub use mauve::{
    mauve_from_embeddings, mauve_lite, HashedTextEmbedder, LabeledText, MauveOptions, TextEmbedder,
    DEFAULT_MAUVE_BINS, DEFAULT_MAUVE_SCALING, DEFAULT_MAUVE_SEED, FRONTIER_POINTS,
};

/// Shortest continuation for which diversity is defined.
pub const MIN_DIVERSITY_LEN: usize = 5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid metric input: {0}")]
    Input(String),
    #[error("value {value} outside normalization pool range [{min}, {max}]")]
    Range { value: f64, min: f64, max: f64 },
    #[error("normalization pool `{0}` has no finite values")]
    EmptyPool(String),
    #[error("embedding failed for text `{id}`: {message}")]
    Embedding { id: String, message: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityScore {
    pub value: f64,
    /// Set when the continuation is too short; `value` is then 0.
    pub degenerate: bool,
}

/// `Π_{n=2..4} unique(n-grams) / total(n-grams)` over the tokens as given.
pub fn diversity<T: Hash + Eq>(tokens: &[T]) -> DiversityScore {
    if tokens.len() < MIN_DIVERSITY_LEN {
        return DiversityScore {
            value: 0.0,
            degenerate: true,
        };
    }
    let mut value = 1.0;
    for n in 2..=4 {
        let windows = tokens.windows(n);
        let total = windows.len();
        let unique: HashSet<&[T]> = windows.collect();
        value *= unique.len() as f64 / total as f64;
    }
    DiversityScore {
        value,
        degenerate: false,
    }
}

/// Mean per-token log-likelihood of `continuation` given `prefix` under the
/// evaluator. `-inf` when some step has zero probability.
pub fn coherence_raw(
    evaluator: &dyn LanguageModel,
    prefix: &[TokenId],
    continuation: &[TokenId],
) -> Result<f64, BackendError> {
    Ok(sequence_logprob(evaluator, prefix, continuation)? / continuation.len() as f64)
}

/// Min/max bounds for smoothed min-max normalization of coherence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationPool {
    pub scope_id: String,
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl NormalizationPool {
    /// Builds a pool from the finite members of `values`.
    pub fn new(
        scope_id: impl Into<String>,
        values: impl IntoIterator<Item = f64>,
    ) -> Result<Self, MetricsError> {
        let scope_id = scope_id.into();
        let values: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
        if values.is_empty() {
            return Err(MetricsError::EmptyPool(scope_id));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            scope_id,
            values,
            min,
            max,
        })
    }

    pub fn normalize(&self, value: f64) -> Result<f64, MetricsError> {
        normalize_coherence(value, self)
    }
}

/// `(value − min + 1) / (max − min + 1)`.
pub fn normalize_coherence(value: f64, pool: &NormalizationPool) -> Result<f64, MetricsError> {
    if !(value >= pool.min && value <= pool.max) {
        return Err(MetricsError::Range {
            value,
            min: pool.min,
            max: pool.max,
        });
    }
    Ok((value - pool.min + 1.0) / (pool.max - pool.min + 1.0))
}

/// Harmonic mean of the three unit-scale components; 0 if any is 0.
pub fn qtext(div: f64, mauve: f64, coh: f64) -> Result<f64, MetricsError> {
    let mut parts = [div, mauve, coh];
    for (name, v) in ["div", "mauve", "coh"].iter().zip(parts) {
        if !(0.0..=1.0).contains(&v) {
            return Err(MetricsError::Input(format!(
                "{name} = {v} is outside [0, 1]"
            )));
        }
    }
    if parts.contains(&0.0) {
        return Ok(0.0);
    }
    // fixed summation order keeps the result symmetric in its arguments
    parts.sort_by(f64::total_cmp);
    let h = 3.0 / (1.0 / parts[0] + 1.0 / parts[1] + 1.0 / parts[2]);
    Ok(h.clamp(parts[0], parts[2]))
}

/// Metric summary of one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub experiment_key: String,
    pub div: f64,
    pub coherence_raw: f64,
    pub coh: f64,
    pub mauve: f64,
    pub qtext: f64,
    pub n_generations: usize,
}

pub const REPORT_HEADER: [&str; 7] = [
    "experiment_key",
    "div",
    "coherence_raw",
    "coh",
    "mauve",
    "qtext",
    "n_generations",
];

pub fn write_reports<W: Write>(out: W, reports: &[MetricReport]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    if reports.is_empty() {
        w.write_record(REPORT_HEADER)?;
    }
    for r in reports {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_reports<R: Read>(input: R) -> Result<Vec<MetricReport>, MetricsError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != REPORT_HEADER {
        return Err(MetricsError::Input(format!("unexpected header {header:?}")));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
