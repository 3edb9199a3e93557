//! Experiment execution, the resumable result store and run artifacts.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{BackendRegistry, LanguageModel};
use crate::corpus::{Dataset, PromptRecord};
use crate::decoding::{decode, DecodingConfig, GenerationRecord};
use crate::metrics::{
    coherence_raw, diversity, mauve_lite, qtext, HashedTextEmbedder, LabeledText, MauveOptions,
    NormalizationPool,
};
use crate::stable_hash;

use super::{
    expand_grid, io_err, sha256_hex, write_results, ExperimentKey, ResultRow, RowStatus,
    SweepConfig, SweepError, SweepGrid, TOOL_VERSION,
};

pub const STORE_FILE: &str = "store.jsonl";
pub const RESULTS_FILE: &str = "results.csv";
pub const GENERATIONS_FILE: &str = "generations.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to run the keys of one sweep.
pub struct SweepPlan {
    pub keys: Vec<ExperimentKey>,
    pub registry: BackendRegistry,
    pub datasets: BTreeMap<String, Dataset>,
    /// Aggregation weight per dataset.
    pub weights: BTreeMap<String, f64>,
    pub evaluator: String,
    pub run_seed: u64,
    pub max_new_tokens: usize,
    pub mauve: MauveOptions,
    /// Digest of the inputs that determine every result row.
    pub plan_digest: String,
    /// Digest of the config document, when the plan came from one.
    pub config_digest: Option<String>,
}

impl SweepPlan {
    /// Expands `grid` and checks that every name it mentions resolves.
    /// Datasets without an entry in `weights` are weighted by record count.
    pub fn new(
        grid: &SweepGrid,
        registry: BackendRegistry,
        datasets: Vec<Dataset>,
        evaluator: &str,
        run_seed: u64,
        mauve: MauveOptions,
        weights: &BTreeMap<String, f64>,
    ) -> Result<Self, SweepError> {
        let keys = expand_grid(grid)?;
        let datasets: BTreeMap<String, Dataset> =
            datasets.into_iter().map(|d| (d.id.clone(), d)).collect();
        let missing_backend = |name: &str| SweepError::Config(format!("unknown backend `{name}`"));
        if registry.get(evaluator).is_none() {
            return Err(missing_backend(evaluator));
        }
        for key in &keys {
            registry
                .get(&key.backend)
                .ok_or_else(|| missing_backend(&key.backend))?;
            if !datasets.contains_key(&key.dataset) {
                return Err(SweepError::Config(format!(
                    "unknown dataset `{}`",
                    key.dataset
                )));
            }
            if let DecodingConfig::ContrastiveDecoding { amateur, .. } = &key.config {
                registry
                    .get(amateur)
                    .ok_or_else(|| missing_backend(amateur))?;
            }
        }
        let weights: BTreeMap<String, f64> = datasets
            .iter()
            .map(|(id, d)| {
                (
                    id.clone(),
                    weights.get(id).copied().unwrap_or(d.len() as f64),
                )
            })
            .collect();

        let description = serde_json::json!({
            "keys": keys.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
            "run_seed": run_seed,
            "max_new_tokens": grid.max_new_tokens,
            "evaluator": evaluator,
            "mauve": [mauve.num_bins as f64, mauve.scaling, mauve.seed as f64],
            "datasets": datasets.values().map(|d| serde_json::to_value(&d.records).unwrap_or_default()).collect::<Vec<_>>(),
            "backends": registry.names().map(|n| format!("{:?}", registry.get(n).map(|b| b.descriptor()))).collect::<Vec<_>>(),
        });
        let plan_digest = sha256_hex(description.to_string().as_bytes());
        Ok(Self {
            keys,
            registry,
            datasets,
            weights,
            evaluator: evaluator.to_owned(),
            run_seed,
            max_new_tokens: grid.max_new_tokens,
            mauve,
            plan_digest,
            config_digest: None,
        })
    }

    /// Builds backends and loads datasets named by a config document.
    pub fn from_config(
        cfg: &SweepConfig,
        config_text: &str,
        base_dir: &Path,
        run_seed: Option<u64>,
    ) -> Result<Self, SweepError> {
        let grid = cfg.grid()?;
        let registry = BackendRegistry::from_specs(&cfg.backends, base_dir)?;
        let mut datasets = Vec::new();
        let mut weights = BTreeMap::new();
        for id in &grid.datasets {
            datasets.push(cfg.load_dataset(id, base_dir)?);
            if let Some(w) = cfg.dataset(id).and_then(|d| d.weight) {
                weights.insert(id.clone(), w);
            }
        }
        let evaluator = cfg
            .evaluator_name()
            .ok_or_else(|| SweepError::Config("no evaluator backend".into()))?;
        let mauve = MauveOptions {
            num_bins: cfg.mauve_bins,
            scaling: cfg.mauve_scaling,
            ..Default::default()
        };
        let mut plan = Self::new(
            &grid,
            registry,
            datasets,
            &evaluator,
            run_seed.unwrap_or(cfg.run_seed),
            mauve,
            &weights,
        )?;
        plan.config_digest = Some(sha256_hex(config_text.as_bytes()));
        Ok(plan)
    }
}

/// A finished experiment before run-level normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub row: ResultRow,
    pub generations: Vec<GenerationRecord>,
}

/// Metrics of one set of continuations, before run-level normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub div: f64,
    pub coherence_raw: f64,
    pub mauve: f64,
    /// Some continuation was too short for DIV or had `-inf` coherence.
    pub degenerate: bool,
}

/// Scores continuations against their prompt records: mean DIV, mean raw
/// coherence under `evaluator`, and MAUVE of the whole set against the golds.
/// `continuations[i]` continues `records[i]`.
pub fn score_continuations(
    records: &[&PromptRecord],
    continuations: &[Vec<String>],
    evaluator: &dyn LanguageModel,
    mauve: &MauveOptions,
) -> Result<Scores, SweepError> {
    if records.is_empty() || records.len() != continuations.len() {
        return Err(SweepError::Config(format!(
            "{} continuations for {} prompts",
            continuations.len(),
            records.len()
        )));
    }
    let n = records.len() as f64;
    let (mut div_sum, mut coh_sum, mut degenerate) = (0.0, 0.0, false);
    for (rec, pieces) in records.iter().zip(continuations) {
        let d = diversity(pieces);
        div_sum += d.value;
        let c = if pieces.is_empty() {
            f64::NEG_INFINITY
        } else {
            let prompt = evaluator.vocab().encode(&rec.prompt)?;
            let cont = evaluator.vocab().encode(pieces)?;
            coherence_raw(evaluator, &prompt, &cont)?
        };
        coh_sum += c;
        degenerate |= d.degenerate || !c.is_finite();
    }
    let gen_texts: Vec<LabeledText> = records
        .iter()
        .zip(continuations)
        .map(|(r, c)| LabeledText {
            id: &r.prompt_id,
            tokens: c,
        })
        .collect();
    let ref_texts: Vec<LabeledText> = records
        .iter()
        .map(|r| LabeledText {
            id: &r.prompt_id,
            tokens: &r.gold,
        })
        .collect();
    let mauve = mauve_lite(
        &gen_texts,
        &ref_texts,
        &HashedTextEmbedder::default(),
        mauve,
    )?;
    Ok(Scores {
        div: div_sum / n,
        coherence_raw: coh_sum / n,
        mauve,
        degenerate,
    })
}

fn backend(plan: &SweepPlan, name: &str) -> Result<Arc<dyn LanguageModel>, SweepError> {
    plan.registry
        .get(name)
        .ok_or_else(|| SweepError::Config(format!("unknown backend `{name}`")))
}

/// Seed handed to the decoder for one prompt of an experiment.
pub fn prompt_seed(key: &ExperimentKey, run_seed: u64, prompt_id: &str) -> u64 {
    if key.config.is_stochastic() {
        stable_hash(format!("{}:{prompt_id}", key.derived_seed(run_seed)).as_bytes())
    } else {
        0
    }
}

/// Decodes every prompt of the key's dataset.
pub fn generate(
    key: &ExperimentKey,
    plan: &SweepPlan,
) -> Result<Vec<GenerationRecord>, SweepError> {
    let model = backend(plan, &key.backend)?;
    let amateur = match &key.config {
        DecodingConfig::ContrastiveDecoding { amateur, .. } => Some(backend(plan, amateur)?),
        _ => None,
    };
    let dataset = plan
        .datasets
        .get(&key.dataset)
        .ok_or_else(|| SweepError::Config(format!("unknown dataset `{}`", key.dataset)))?;
    let mut generations = Vec::with_capacity(dataset.len());
    for rec in &dataset.records {
        let prompt = model.vocab().encode(&rec.prompt)?;
        let seed = prompt_seed(key, plan.run_seed, &rec.prompt_id);
        let out = decode(
            model.as_ref(),
            amateur.as_deref(),
            &prompt,
            &key.config,
            seed,
            plan.max_new_tokens,
        )?;
        let pieces = model.vocab().decode(&out.tokens)?;
        generations.push(GenerationRecord {
            backend_name: key.backend.clone(),
            dataset_id: key.dataset.clone(),
            prompt_id: rec.prompt_id.clone(),
            config: key.config.clone(),
            seed,
            prompt,
            continuation: out.tokens,
            step_logprobs: out.step_logprobs,
            alpha_trace: out.alpha_trace,
            text: Some(dataset.scheme.join(&pieces)),
        });
    }
    Ok(generations)
}

fn measure(
    key: &ExperimentKey,
    plan: &SweepPlan,
) -> Result<(Scores, Vec<GenerationRecord>), SweepError> {
    let generations = generate(key, plan)?;
    let model = backend(plan, &key.backend)?;
    let evaluator = backend(plan, &plan.evaluator)?;
    let records: Vec<&PromptRecord> = plan.datasets[&key.dataset].records.iter().collect();
    let continuations = generations
        .iter()
        .map(|g| model.vocab().decode(&g.continuation))
        .collect::<Result<Vec<_>, _>>()?;
    let scores = score_continuations(&records, &continuations, evaluator.as_ref(), &plan.mauve)?;
    Ok((scores, generations))
}

/// Builds an unfinalized row: COH and QText stay NaN until [`finalize_rows`].
pub fn scored_row(
    key: &ExperimentKey,
    scores: &Scores,
    n_generations: usize,
    wall_ms: u64,
) -> ResultRow {
    ResultRow {
        key: key.clone(),
        div: scores.div,
        coherence_raw: scores.coherence_raw,
        coh: f64::NAN,
        mauve: scores.mauve,
        qtext: f64::NAN,
        n_generations,
        status: if scores.degenerate {
            RowStatus::Degenerate
        } else {
            RowStatus::Ok
        },
        wall_ms,
        reason: None,
    }
}

/// Decodes every prompt of the key's dataset and measures DIV, raw
/// coherence and MAUVE. Errors become a failed row with the reason kept.
/// COH and QText stay NaN until [`finalize_rows`].
pub fn run_experiment(key: &ExperimentKey, plan: &SweepPlan) -> ExperimentOutcome {
    let start = Instant::now();
    let result = measure(key, plan);
    let wall_ms = start.elapsed().as_millis() as u64;
    match result {
        Ok((scores, generations)) => ExperimentOutcome {
            row: scored_row(key, &scores, generations.len(), wall_ms),
            generations,
        },
        Err(e) => {
            log::warn!("experiment {key} failed: {e}");
            ExperimentOutcome {
                row: ResultRow {
                    key: key.clone(),
                    div: f64::NAN,
                    coherence_raw: f64::NAN,
                    coh: f64::NAN,
                    mauve: f64::NAN,
                    qtext: f64::NAN,
                    n_generations: 0,
                    status: RowStatus::Failed,
                    wall_ms,
                    reason: Some(e.to_string()),
                },
                generations: Vec::new(),
            }
        }
    }
}

/// Fills COH and QText from one pool over every finite raw coherence.
/// Rows with `-inf` coherence get COH = QText = 0 and are marked
/// degenerate; failed rows stay NaN. Returns `None` when nothing is finite.
pub fn finalize_rows(
    rows: &mut [ResultRow],
    scope_id: &str,
) -> Result<Option<NormalizationPool>, SweepError> {
    let finite: Vec<f64> = rows
        .iter()
        .filter(|r| r.status != RowStatus::Failed)
        .map(|r| r.coherence_raw)
        .filter(|c| c.is_finite())
        .collect();
    let pool = if finite.is_empty() {
        None
    } else {
        Some(NormalizationPool::new(scope_id, finite)?)
    };
    for row in rows.iter_mut() {
        if row.status == RowStatus::Failed {
            row.coh = f64::NAN;
            row.qtext = f64::NAN;
        } else if let (true, Some(pool)) = (row.coherence_raw.is_finite(), &pool) {
            row.coh = pool.normalize(row.coherence_raw)?;
            row.qtext = qtext(row.div, row.mauve, row.coh)?;
        } else {
            row.coh = 0.0;
            row.qtext = 0.0;
            row.status = RowStatus::Degenerate;
        }
    }
    Ok(pool)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    /// Stop after this many new experiments; the store keeps them for a
    /// later resume.
    pub max_jobs: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            max_jobs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub total: usize,
    pub completed: usize,
    /// Experiments executed by this call.
    pub ran: usize,
    /// Finalized rows in canonical order, once every key is complete.
    pub rows: Option<Vec<ResultRow>>,
    pub pool: Option<NormalizationPool>,
}

impl SweepOutcome {
    pub fn is_complete(&self) -> bool {
        self.completed == self.total
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum StoreLine {
    Header {
        plan_digest: String,
        run_seed: u64,
        n_experiments: usize,
    },
    Experiment(ExperimentOutcome),
}

/// Reads completed experiments, dropping a torn final line, and returns the
/// store opened for appending.
fn open_store(
    path: &Path,
    plan: &SweepPlan,
) -> Result<(BTreeMap<String, ExperimentOutcome>, File), SweepError> {
    let header = || StoreLine::Header {
        plan_digest: plan.plan_digest.clone(),
        run_seed: plan.run_seed,
        n_experiments: plan.keys.len(),
    };
    let mut done = BTreeMap::new();
    if !path.exists() {
        let mut f = File::create(path).map_err(io_err(path))?;
        let line =
            serde_json::to_string(&header()).map_err(|e| SweepError::Store(e.to_string()))?;
        writeln!(f, "{line}").map_err(io_err(path))?;
        return Ok((done, f));
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    if complete < text.len() {
        log::warn!(
            "{}: dropping a partially written final record",
            path.display()
        );
    }
    let known: BTreeMap<String, &ExperimentKey> =
        plan.keys.iter().map(|k| (k.to_string(), k)).collect();
    for (i, line) in text[..complete].lines().enumerate() {
        let parsed: StoreLine = serde_json::from_str(line)
            .map_err(|e| SweepError::Store(format!("{} line {}: {e}", path.display(), i + 1)))?;
        match (i, parsed) {
            (0, StoreLine::Header { plan_digest, .. }) => {
                if plan_digest != plan.plan_digest {
                    return Err(SweepError::Store(format!(
                        "{} was written by a different sweep plan; use a fresh output directory",
                        path.display()
                    )));
                }
            }
            (0, _) => {
                return Err(SweepError::Store(format!(
                    "{} has no header",
                    path.display()
                )))
            }
            (_, StoreLine::Experiment(o)) => {
                let key = o.row.key.to_string();
                if !known.contains_key(&key) {
                    return Err(SweepError::Store(format!(
                        "{} holds unknown experiment `{key}`",
                        path.display()
                    )));
                }
                done.insert(key, o);
            }
            (_, StoreLine::Header { .. }) => {
                return Err(SweepError::Store(format!(
                    "{} line {}: unexpected header",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if complete == 0 {
        // empty or torn header: start over
        let mut f = File::create(path).map_err(io_err(path))?;
        let line =
            serde_json::to_string(&header()).map_err(|e| SweepError::Store(e.to_string()))?;
        writeln!(f, "{line}").map_err(io_err(path))?;
        return Ok((done, f));
    }
    let f = OpenOptions::new()
        .write(true)
        .open(path)
        .map_err(io_err(path))?;
    f.set_len(complete as u64).map_err(io_err(path))?;
    let f = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    Ok((done, f))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SweepError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Runs every pending key of `plan` on a pool of `opts.workers` threads,
/// appending each finished experiment to `out_dir/store.jsonl`. Once the
/// store holds every key, writes `results.csv`, `generations.jsonl` and
/// `manifest.json`.
pub fn run_sweep(
    plan: &SweepPlan,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<SweepOutcome, SweepError> {
    if opts.workers == 0 {
        return Err(SweepError::Config("workers must be >= 1".into()));
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let store_path = out_dir.join(STORE_FILE);
    let (mut done, store) = open_store(&store_path, plan)?;
    let pending: Vec<&ExperimentKey> = plan
        .keys
        .iter()
        .filter(|k| !done.contains_key(&k.to_string()))
        .take(opts.max_jobs.unwrap_or(usize::MAX))
        .collect();
    log::info!(
        "{} of {} experiments pending; running {}",
        plan.keys.len() - done.len(),
        plan.keys.len(),
        pending.len()
    );

    let store = Mutex::new(store);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| SweepError::Store(e.to_string()))?;
    let fresh: Vec<ExperimentOutcome> = pool.install(|| {
        pending
            .par_iter()
            .map(|key| {
                let outcome = run_experiment(key, plan);
                let line = serde_json::to_string(&StoreLine::Experiment(outcome.clone()))
                    .map_err(|e| SweepError::Store(e.to_string()))?;
                let mut f = store.lock().expect("store lock poisoned");
                writeln!(f, "{line}")
                    .and_then(|_| f.flush())
                    .map_err(io_err(&store_path))?;
                log::info!(
                    "finished {key} ({} ms, {})",
                    outcome.row.wall_ms,
                    outcome.row.status
                );
                Ok(outcome)
            })
            .collect::<Result<_, SweepError>>()
    })?;
    let ran = fresh.len();
    for o in fresh {
        done.insert(o.row.key.to_string(), o);
    }
    let mut outcome = SweepOutcome {
        total: plan.keys.len(),
        completed: done.len(),
        ran,
        rows: None,
        pool: None,
    };
    if !outcome.is_complete() {
        return Ok(outcome);
    }

    let ordered: Vec<ExperimentOutcome> = plan
        .keys
        .iter()
        .map(|k| done.remove(&k.to_string()).expect("complete"))
        .collect();
    let mut rows: Vec<ResultRow> = ordered.iter().map(|o| o.row.clone()).collect();
    let scope_id = format!("run:{}", &plan.plan_digest[..16]);
    let pool = finalize_rows(&mut rows, &scope_id)?;

    let mut csv_bytes = Vec::new();
    write_results(&mut csv_bytes, &rows)?;
    let mut gen_bytes = Vec::new();
    for g in ordered.iter().flat_map(|o| &o.generations) {
        serde_json::to_writer(&mut gen_bytes, g).map_err(|e| SweepError::Store(e.to_string()))?;
        gen_bytes.push(b'\n');
    }
    let failures: Vec<serde_json::Value> = rows
        .iter()
        .zip(&ordered)
        .filter(|(r, _)| r.status == RowStatus::Failed)
        .map(|(r, o)| serde_json::json!({ "key": r.key.to_string(), "reason": o.row.reason }))
        .collect();
    let manifest = serde_json::json!({
        "tool_version": TOOL_VERSION,
        "run_seed": plan.run_seed,
        "config_digest": plan.config_digest,
        "plan_digest": plan.plan_digest,
        "n_experiments": rows.len(),
        "max_new_tokens": plan.max_new_tokens,
        "evaluator": plan.evaluator,
        "dataset_weights": plan.weights,
        "coherence_pool": pool.as_ref().map(|p| serde_json::json!({
            "scope_id": p.scope_id, "min": p.min, "max": p.max, "size": p.values.len(),
        })),
        "failures": failures,
    });
    write_atomic(&out_dir.join(RESULTS_FILE), &csv_bytes)?;
    write_atomic(&out_dir.join(GENERATIONS_FILE), &gen_bytes)?;
    let manifest_text =
        serde_json::to_string_pretty(&manifest).map_err(|e| SweepError::Store(e.to_string()))?;
    write_atomic(&out_dir.join(MANIFEST_FILE), manifest_text.as_bytes())?;
    outcome.rows = Some(rows);
    outcome.pool = pool;
    Ok(outcome)
}
