//! Experiment grids, parallel execution, aggregation and ranking.
//!
//! A sweep expands a grid of (backend, dataset, strategy, seed) cells into
//! [`ExperimentKey`]s in canonical order, runs each key as an independent
//! job, appends every finished job to `store.jsonl`, and once all keys are
//! present normalizes coherence over the whole run and writes
//! `results.csv`, `generations.jsonl` and `manifest.json`.

mod aggregate;
mod config;
mod grid;
mod run;

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backend::BackendError;
use crate::corpus::CorpusError;
use crate::decoding::{DecodeError, DecodingConfig};
use crate::metrics::{MetricReport, MetricsError};
use crate::stable_hash;
use crate::util::lossless_f64;

pub use aggregate::{
    aggregate_weighted, rank_strategies, AggregateRow, Aggregates, CellSummary, RankMetric, Ranking,
};
pub use config::{DatasetSpec, SweepConfig, SweepSection};
pub use grid::{expand_grid, StrategyGrid, SweepGrid};
pub use run::{
    finalize_rows, generate, prompt_seed, run_experiment, run_sweep, score_continuations,
    scored_row, ExperimentOutcome, RunOptions, Scores, SweepOutcome, SweepPlan, GENERATIONS_FILE,
    MANIFEST_FILE, RESULTS_FILE, STORE_FILE,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error("{0}")]
    Capability(String),
    #[error(transparent)]
    Backend(BackendError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Decode(DecodeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("result store: {0}")]
    Store(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<BackendError> for SweepError {
    fn from(e: BackendError) -> Self {
        match e {
            e if e.is_capability() => SweepError::Capability(e.to_string()),
            BackendError::Config(msg) => SweepError::Config(msg),
            e => SweepError::Backend(e),
        }
    }
}

impl From<DecodeError> for SweepError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Config(msg) => SweepError::Config(msg),
            DecodeError::Capability(msg) => SweepError::Capability(msg),
            DecodeError::Backend(b) => b.into(),
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> SweepError {
    let path = path.into();
    move |source| SweepError::Io { path, source }
}

/// Dataset ids share the backend-name alphabet so keys stay parseable.
pub(crate) fn validate_id(what: &str, id: &str) -> Result<(), SweepError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(SweepError::Config(format!(
            "invalid {what} `{id}`: use ASCII letters, digits, `-`, `_`, `.`"
        )))
    }
}

/// One cell of a sweep: `backend|dataset|strategy|seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentKey {
    pub backend: String,
    pub dataset: String,
    pub config: DecodingConfig,
    /// Replicate seed from the grid; 0 for deterministic strategies.
    pub seed: u64,
}

impl ExperimentKey {
    /// Canonical order: backend, dataset, strategy family, hyperparameters
    /// ascending, seed.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.backend
            .cmp(&other.backend)
            .then_with(|| self.dataset.cmp(&other.dataset))
            .then_with(|| self.config.canonical_cmp(&other.config))
            .then_with(|| self.seed.cmp(&other.seed))
    }

    /// Seed that drives every stochastic draw of this experiment.
    pub fn derived_seed(&self, run_seed: u64) -> u64 {
        stable_hash(self.to_string().as_bytes()) ^ run_seed
    }
}

impl fmt::Display for ExperimentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}|{}|{}|{}",
            self.backend, self.dataset, self.config, self.seed
        )
    }
}

impl FromStr for ExperimentKey {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('|').collect();
        let [backend, dataset, config, seed] = parts[..] else {
            return Err(SweepError::Config(format!(
                "malformed experiment key `{s}`"
            )));
        };
        validate_id("backend name", backend)?;
        validate_id("dataset id", dataset)?;
        let seed = seed
            .parse()
            .map_err(|_| SweepError::Config(format!("bad seed in experiment key `{s}`")))?;
        Ok(Self {
            backend: backend.into(),
            dataset: dataset.into(),
            config: config.parse()?,
            seed,
        })
    }
}

impl Serialize for ExperimentKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExperimentKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    /// Some continuation was too short for diversity or had `-inf` coherence.
    Degenerate,
    Failed,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Ok => "ok",
            RowStatus::Degenerate => "degenerate",
            RowStatus::Failed => "failed",
        })
    }
}

/// Metrics of one experiment. `coh` and `qtext` are NaN until the run's
/// normalization pool is finalized; every metric is NaN on failed rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub key: ExperimentKey,
    #[serde(with = "lossless_f64")]
    pub div: f64,
    #[serde(with = "lossless_f64")]
    pub coherence_raw: f64,
    #[serde(with = "lossless_f64")]
    pub coh: f64,
    #[serde(with = "lossless_f64")]
    pub mauve: f64,
    #[serde(with = "lossless_f64")]
    pub qtext: f64,
    pub n_generations: usize,
    pub status: RowStatus,
    pub wall_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ResultRow {
    pub fn report(&self) -> MetricReport {
        MetricReport {
            experiment_key: self.key.to_string(),
            div: self.div,
            coherence_raw: self.coherence_raw,
            coh: self.coh,
            mauve: self.mauve,
            qtext: self.qtext,
            n_generations: self.n_generations,
        }
    }
}

pub const RESULTS_HEADER: [&str; 13] = [
    "experiment_key",
    "div",
    "coherence_raw",
    "coh",
    "mauve",
    "qtext",
    "n_generations",
    "backend",
    "dataset",
    "strategy",
    "seed",
    "status",
    "wall_ms",
];

#[derive(Serialize, Deserialize)]
struct CsvRow {
    experiment_key: String,
    div: f64,
    coherence_raw: f64,
    coh: f64,
    mauve: f64,
    qtext: f64,
    n_generations: usize,
    backend: String,
    dataset: String,
    strategy: String,
    seed: u64,
    status: RowStatus,
    wall_ms: u64,
}

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(RESULTS_HEADER)?;
    }
    for r in rows {
        w.serialize(CsvRow {
            experiment_key: r.key.to_string(),
            div: r.div,
            coherence_raw: r.coherence_raw,
            coh: r.coh,
            mauve: r.mauve,
            qtext: r.qtext,
            n_generations: r.n_generations,
            backend: r.key.backend.clone(),
            dataset: r.key.dataset.clone(),
            strategy: r.key.config.key(),
            seed: r.key.seed,
            status: r.status,
            wall_ms: r.wall_ms,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>, SweepError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != RESULTS_HEADER {
        return Err(SweepError::Config(format!(
            "unexpected results header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let c: CsvRow = rec?;
        let key: ExperimentKey = c.experiment_key.parse()?;
        if key.backend != c.backend
            || key.dataset != c.dataset
            || key.config.key() != c.strategy
            || key.seed != c.seed
        {
            return Err(SweepError::Config(format!(
                "key columns disagree with `{}`",
                c.experiment_key
            )));
        }
        rows.push(ResultRow {
            key,
            div: c.div,
            coherence_raw: c.coherence_raw,
            coh: c.coh,
            mauve: c.mauve,
            qtext: c.qtext,
            n_generations: c.n_generations,
            status: c.status,
            wall_ms: c.wall_ms,
            reason: None,
        });
    }
    Ok(rows)
}

/// SHA-256 of `results.csv` with the `wall_ms` column blanked.
pub fn results_digest(csv_text: &str) -> Result<String, SweepError> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers()?.clone();
    let wall = header.iter().position(|h| h == "wall_ms");
    let mut hasher = Sha256::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for rec in r.records() {
        let rec = rec?;
        let fields: Vec<&str> = rec
            .iter()
            .enumerate()
            .map(|(i, f)| if Some(i) == wall { "" } else { f })
            .collect();
        w.write_record(&fields)?;
    }
    hasher.update(
        w.into_inner()
            .map_err(|e| SweepError::Store(e.to_string()))?,
    );
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
