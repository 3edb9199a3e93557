//! `dsweep`: generate, evaluate, sweep and report over toy language models.

mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use dsweep_core::backend::{
    train_ngram_backend, validate_backend_name, BackendRegistry, LanguageModel, DEFAULT_REPR_DIM,
};
use dsweep_core::corpus::{split_documents, CorpusError, Dataset, PromptRecord, TokenizerScheme};
use dsweep_core::decoding::{
    DecodeError, DecodingConfig, GenerationRecord, HyperParams, StrategyKind, DEFAULT_ACS_K,
};
use dsweep_core::metrics::MauveOptions;
use dsweep_core::sweep::{
    aggregate_weighted, finalize_rows, generate, rank_strategies, read_results, run_sweep,
    score_continuations, scored_row, sha256_hex, write_results, ExperimentKey, RankMetric,
    ResultRow, RowStatus, RunOptions, StrategyGrid, SweepConfig, SweepError, SweepGrid, SweepPlan,
    GENERATIONS_FILE, MANIFEST_FILE, RESULTS_FILE,
};

use report::{Format, GroupBy};

#[derive(Debug, Parser)]
#[command(
    name = "dsweep",
    version,
    about = "Decoding strategy sweeps over toy language models"
)]
struct Cli {
    /// Run configuration (TOML) declaring backends, datasets and the sweep grid.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for `sweep`.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Overrides the configured run seed.
    #[arg(long, global = true)]
    run_seed: Option<u64>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decode every prompt of one dataset with one strategy and write
    /// `<out>/generations.jsonl`.
    Generate(GenerateArgs),
    /// Score a generations file and write `<out>/results.csv`.
    Evaluate(EvaluateArgs),
    /// Run (or resume) the configured grid and write results, generations
    /// and a manifest to `<out>`.
    Sweep(SweepArgs),
    /// Render weighted averages and a top/bottom ranking from a results file.
    Report(ReportArgs),
    /// Backend utilities.
    Backends {
        #[command(subcommand)]
        command: BackendsCommand,
    },
}

#[derive(Debug, Args)]
struct Hyper {
    /// Beam width.
    #[arg(long)]
    w: Option<usize>,
    /// Candidate count (top-k, contrastive search, FSD, contrastive decoding).
    #[arg(long)]
    k: Option<usize>,
    /// Nucleus mass.
    #[arg(long)]
    p: Option<f64>,
    /// Temperature.
    #[arg(long)]
    t: Option<f64>,
    /// Degeneration penalty weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Typical mass.
    #[arg(long)]
    tau: Option<f64>,
    /// FSD contrast weight.
    #[arg(long)]
    beta: Option<f64>,
    /// Amateur backend for contrastive decoding.
    #[arg(long)]
    amateur: Option<String>,
}

impl Hyper {
    fn params(&self) -> HyperParams {
        HyperParams {
            w: self.w,
            k: self.k,
            p: self.p,
            t: self.t,
            alpha: self.alpha,
            tau: self.tau,
            beta: self.beta,
            amateur: self.amateur.clone(),
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Backend name declared in the config.
    #[arg(long)]
    backend: String,
    /// Dataset id declared in the config.
    #[arg(long)]
    dataset: String,
    /// greedy, beam, temp, topk, topp, typical, cs, acs, fsd or cd.
    #[arg(long)]
    strategy: String,
    #[command(flatten)]
    hyper: Hyper,
    /// Experiment seed; ignored by deterministic strategies.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to the configured `max_new_tokens`.
    #[arg(long)]
    max_new_tokens: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Generations file to score.
    #[arg(long)]
    generations: PathBuf,
    /// Coherence evaluator backend; defaults to the configured evaluator.
    #[arg(long)]
    evaluator: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Stop after this many new experiments; rerun to resume.
    #[arg(long)]
    max_jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Results file; defaults to `<out>/results.csv`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GroupBy::Strategy)]
    group_by: GroupBy,
    /// Ranking metric: div, coh, mauve or qtext.
    #[arg(long, default_value = "qtext")]
    metric: String,
    /// Rows in each of the top and bottom tables.
    #[arg(short, long, default_value_t = 5)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
    /// Writes the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum BackendsCommand {
    /// Train an n-gram backend and save it as `<out>/<name>.json`.
    Train(TrainArgs),
    /// List the backends declared by the config.
    List,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Plain text, one document per blank-line separated block.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 0.1)]
    smoothing: f64,
    #[arg(long, default_value = "whitespace")]
    scheme: String,
    #[arg(long, default_value_t = DEFAULT_REPR_DIM)]
    repr_dim: usize,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Capability(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Capability(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Capability(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Config(_) | SweepError::Corpus(_) => CliError::Usage(e.to_string()),
            SweepError::Capability(_) => CliError::Capability(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| runtime(format!("{}: {e}", path.display()))
}

struct Context {
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    workers: usize,
    run_seed: Option<u64>,
}

impl Context {
    fn load_config(&self) -> Result<(SweepConfig, String, PathBuf), CliError> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| usage("this command needs --config"))?;
        if !path.is_file() {
            return Err(usage(format!(
                "config file {} does not exist",
                path.display()
            )));
        }
        let (cfg, text) = SweepConfig::load(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, text, base))
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| usage("this command needs --out"))
    }
}

/// Writes through a temporary sibling so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

fn jsonl(records: &[GenerationRecord]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(runtime)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn registry(cfg: &SweepConfig, base: &Path) -> Result<BackendRegistry, CliError> {
    BackendRegistry::from_specs(&cfg.backends, base).map_err(|e| SweepError::from(e).into())
}

fn cmd_generate(ctx: &Context, args: &GenerateArgs) -> Result<(), CliError> {
    let kind: StrategyKind = args
        .strategy
        .parse()
        .map_err(|e: DecodeError| usage(e.to_string()))?;
    let config = DecodingConfig::from_params(kind, &args.hyper.params())
        .map_err(|e| usage(e.to_string()))?;
    let out = ctx.out_dir()?.join(GENERATIONS_FILE);
    let (cfg, _, base) = ctx.load_config()?;
    if !cfg.backends.iter().any(|b| b.name == args.backend) {
        return Err(usage(format!("unknown backend `{}`", args.backend)));
    }
    let dataset = cfg.load_dataset(&args.dataset, &base)?;
    let registry = registry(&cfg, &base)?;
    let evaluator = cfg.evaluator_name().unwrap_or_else(|| args.backend.clone());
    let grid = SweepGrid {
        backends: vec![args.backend.clone()],
        datasets: vec![args.dataset.clone()],
        strategies: vec![strategy_grid(&config)],
        seeds: vec![args.seed],
        max_new_tokens: args.max_new_tokens.unwrap_or(cfg.max_new_tokens),
    };
    let run_seed = ctx.run_seed.unwrap_or(cfg.run_seed);
    let plan = SweepPlan::new(
        &grid,
        registry,
        vec![dataset],
        &evaluator,
        run_seed,
        mauve_options(&cfg),
        &BTreeMap::new(),
    )?;
    let key = plan.keys[0].clone();
    let records = generate(&key, &plan)?;
    write_atomic(&out, &jsonl(&records)?)?;
    println!(
        "wrote {} generations for {key} to {}",
        records.len(),
        out.display()
    );
    Ok(())
}

fn strategy_grid(config: &DecodingConfig) -> StrategyGrid {
    let mut sg = StrategyGrid::new(config.kind());
    match config {
        DecodingConfig::Greedy => {}
        DecodingConfig::AdaptiveContrastiveSearch { k } => {
            if *k != DEFAULT_ACS_K {
                sg.k = vec![*k];
            }
        }
        DecodingConfig::Beam { w } => sg.w = vec![*w],
        DecodingConfig::Temperature { t } => sg.t = vec![*t],
        DecodingConfig::TopK { k } => sg.k = vec![*k],
        DecodingConfig::TopP { p } => sg.p = vec![*p],
        DecodingConfig::Typical { tau } => sg.tau = vec![*tau],
        DecodingConfig::ContrastiveSearch { alpha, k } => {
            sg.alpha = vec![*alpha];
            sg.k = vec![*k];
        }
        DecodingConfig::Fsd { k, beta } => {
            sg.k = vec![*k];
            sg.beta = vec![*beta];
        }
        DecodingConfig::ContrastiveDecoding { k, amateur } => {
            sg.k = vec![*k];
            sg.amateur = vec![amateur.clone()];
        }
    }
    sg
}

fn mauve_options(cfg: &SweepConfig) -> MauveOptions {
    MauveOptions {
        num_bins: cfg.mauve_bins,
        scaling: cfg.mauve_scaling,
        ..Default::default()
    }
}

fn read_generations(path: &Path) -> Result<Vec<GenerationRecord>, CliError> {
    if !path.is_file() {
        return Err(usage(format!(
            "generations file {} does not exist",
            path.display()
        )));
    }
    let text = fs::read_to_string(path).map_err(io(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: GenerationRecord = serde_json::from_str(line)
            .map_err(|e| usage(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(usage(format!("{} holds no generations", path.display())));
    }
    Ok(out)
}

type Cell = (String, String, String);

fn cmd_evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<(), CliError> {
    let out = ctx.out_dir()?.join(RESULTS_FILE);
    let records = read_generations(&args.generations)?;
    let (cfg, _, base) = ctx.load_config()?;
    let evaluator_name = args
        .evaluator
        .clone()
        .or_else(|| cfg.evaluator_name())
        .ok_or_else(|| usage("no evaluator backend configured"))?;
    let registry = registry(&cfg, &base)?;
    let evaluator = registry
        .get(&evaluator_name)
        .ok_or_else(|| usage(format!("unknown backend `{evaluator_name}`")))?;

    let mut cells: BTreeMap<Cell, (DecodingConfig, Vec<&GenerationRecord>)> = BTreeMap::new();
    for r in &records {
        cells
            .entry((r.backend_name.clone(), r.dataset_id.clone(), r.config.key()))
            .or_insert_with(|| (r.config.clone(), Vec::new()))
            .1
            .push(r);
    }
    let mut datasets: BTreeMap<String, Dataset> = BTreeMap::new();
    let mut rows = Vec::new();
    for ((backend, dataset_id, _), (config, gens)) in &cells {
        let model: Arc<dyn LanguageModel> = registry
            .get(backend)
            .ok_or_else(|| usage(format!("unknown backend `{backend}`")))?;
        if !datasets.contains_key(dataset_id) {
            datasets.insert(dataset_id.clone(), cfg.load_dataset(dataset_id, &base)?);
        }
        let by_id: BTreeMap<&str, &PromptRecord> = datasets[dataset_id]
            .records
            .iter()
            .map(|r| (r.prompt_id.as_str(), r))
            .collect();
        let key = ExperimentKey {
            backend: backend.clone(),
            dataset: dataset_id.clone(),
            config: config.clone(),
            seed: 0,
        };
        let mut prompts = Vec::with_capacity(gens.len());
        let mut continuations = Vec::with_capacity(gens.len());
        for g in gens {
            let rec = by_id.get(g.prompt_id.as_str()).ok_or_else(|| {
                usage(format!(
                    "{key}: prompt `{}` is not in dataset `{dataset_id}`",
                    g.prompt_id
                ))
            })?;
            if prompts
                .iter()
                .any(|p: &&PromptRecord| p.prompt_id == g.prompt_id)
            {
                return Err(usage(format!(
                    "{key}: prompt `{}` appears more than once; evaluate one seed replicate per file",
                    g.prompt_id
                )));
            }
            prompts.push(*rec);
            continuations.push(
                model
                    .vocab()
                    .decode(&g.continuation)
                    .map_err(|e| usage(e.to_string()))?,
            );
        }
        let scores = score_continuations(
            &prompts,
            &continuations,
            evaluator.as_ref(),
            &mauve_options(&cfg),
        )?;
        rows.push(scored_row(&key, &scores, gens.len(), 0));
    }
    let input_digest = sha256_hex(&fs::read(&args.generations).map_err(io(&args.generations))?);
    finalize_rows(&mut rows, &format!("eval:{}", &input_digest[..16]))?;
    let mut csv_bytes = Vec::new();
    write_results(&mut csv_bytes, &rows)?;
    write_atomic(&out, &csv_bytes)?;
    println!(
        "scored {} experiments from {} generations into {}",
        rows.len(),
        records.len(),
        out.display()
    );
    Ok(())
}

fn cmd_sweep(ctx: &Context, args: &SweepArgs) -> Result<(), CliError> {
    if ctx.workers == 0 {
        return Err(usage("--workers must be >= 1"));
    }
    let out = ctx.out_dir()?.to_path_buf();
    let (cfg, text, base) = ctx.load_config()?;
    let plan = SweepPlan::from_config(&cfg, &text, &base, ctx.run_seed)?;
    let opts = RunOptions {
        workers: ctx.workers,
        max_jobs: args.max_jobs,
    };
    let outcome = run_sweep(&plan, &out, &opts)?;
    if !outcome.is_complete() {
        println!(
            "ran {} experiments; {} of {} complete. Rerun the same command to resume.",
            outcome.ran, outcome.completed, outcome.total
        );
        return Ok(());
    }
    let rows = outcome.rows.unwrap_or_default();
    let failed = rows
        .iter()
        .filter(|r| r.status == RowStatus::Failed)
        .count();
    let degenerate = rows
        .iter()
        .filter(|r| r.status == RowStatus::Degenerate)
        .count();
    println!(
        "sweep complete: {} experiments ({} ran now, {degenerate} degenerate, {failed} failed) in {}",
        outcome.total,
        outcome.ran,
        out.display()
    );
    if failed > 0 {
        log::warn!(
            "{failed} experiments failed; see {}",
            out.join(MANIFEST_FILE).display()
        );
    }
    Ok(())
}

/// Dataset weights and failure reasons from the manifest next to `results`.
fn manifest_info(results: &Path) -> (Option<BTreeMap<String, f64>>, BTreeMap<String, String>) {
    let path = results.with_file_name(MANIFEST_FILE);
    let Ok(text) = fs::read_to_string(&path) else {
        return (None, BTreeMap::new());
    };
    let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) else {
        log::warn!("ignoring unreadable manifest {}", path.display());
        return (None, BTreeMap::new());
    };
    let weights = v["dataset_weights"].as_object().map(|m| {
        m.iter()
            .filter_map(|(k, w)| w.as_f64().map(|w| (k.clone(), w)))
            .collect()
    });
    let reasons = v["failures"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter_map(|f| {
                    Some((
                        f["key"].as_str()?.to_owned(),
                        f["reason"].as_str()?.to_owned(),
                    ))
                })
                .collect()
        })
        .unwrap_or_default();
    (weights, reasons)
}

fn cmd_report(ctx: &Context, args: &ReportArgs) -> Result<(), CliError> {
    let metric: RankMetric = args
        .metric
        .parse()
        .map_err(|e: SweepError| usage(e.to_string()))?;
    if args.n == 0 {
        return Err(usage("-n must be >= 1"));
    }
    let input = match &args.input {
        Some(p) => p.clone(),
        None => ctx
            .out_dir()
            .map_err(|_| usage("report needs --input or --out"))?
            .join(RESULTS_FILE),
    };
    if !input.is_file() {
        return Err(usage(format!(
            "results file {} does not exist",
            input.display()
        )));
    }
    let file = fs::File::open(&input).map_err(io(&input))?;
    let rows = read_results(file).map_err(|e| usage(format!("{}: {e}", input.display())))?;
    if rows.is_empty() {
        return Err(usage(format!("{} holds no results", input.display())));
    }
    let (weights, reasons) = manifest_info(&input);
    let (failed, usable): (Vec<ResultRow>, Vec<ResultRow>) = rows
        .into_iter()
        .partition(|r| r.status == RowStatus::Failed);
    if usable.is_empty() {
        return Err(runtime(format!(
            "every experiment in {} failed",
            input.display()
        )));
    }
    let weights = weights.unwrap_or_else(|| {
        log::warn!(
            "no manifest next to {}; weighting datasets equally",
            input.display()
        );
        usable
            .iter()
            .map(|r| (r.key.dataset.clone(), 1.0))
            .collect()
    });
    let agg = aggregate_weighted(&usable, &weights)?;
    let ranking = rank_strategies(&agg.overall, metric, args.n)?;
    let lines = report::lines(&agg, args.group_by);
    let failures: report::Failures = failed
        .iter()
        .map(|r| (r.key.to_string(), reasons.get(&r.key.to_string()).cloned()))
        .collect();
    let text = match args.format {
        Format::Markdown => {
            report::render_markdown(&lines, args.group_by, &ranking, metric, &failures)
        }
        Format::Csv => report::render_csv(&lines, &ranking).map_err(runtime)?,
    };
    match &args.output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_train(ctx: &Context, args: &TrainArgs) -> Result<(), CliError> {
    let scheme: TokenizerScheme = args
        .scheme
        .parse()
        .map_err(|e: CorpusError| usage(e.to_string()))?;
    validate_backend_name(&args.name).map_err(|e| usage(e.to_string()))?;
    let out = ctx.out_dir()?.join(format!("{}.json", args.name));
    if !args.corpus.is_file() {
        return Err(usage(format!(
            "corpus file {} does not exist",
            args.corpus.display()
        )));
    }
    let text = fs::read_to_string(&args.corpus).map_err(io(&args.corpus))?;
    let docs: Vec<Vec<String>> = split_documents(&text)
        .iter()
        .map(|d| scheme.split(d))
        .collect();
    let model = train_ngram_backend(
        args.name.clone(),
        &docs,
        args.order,
        args.smoothing,
        args.repr_dim,
    )
    .map_err(|e| usage(e.to_string()))?;
    let json = model.to_json().map_err(runtime)?;
    write_atomic(&out, json.as_bytes())?;
    println!(
        "trained `{}` (order {}, vocabulary {}) into {}",
        args.name,
        args.order,
        model.vocab().len(),
        out.display()
    );
    Ok(())
}

fn cmd_list(ctx: &Context) -> Result<(), CliError> {
    let (cfg, _, base) = ctx.load_config()?;
    let registry = registry(&cfg, &base)?;
    for name in registry.names() {
        let d = registry.get(name).expect("listed").descriptor();
        let params: Vec<String> = d.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let repr = d
            .repr_dim
            .map(|r| r.to_string())
            .unwrap_or_else(|| "none".into());
        println!(
            "{name}\t{}\tvocab={}\trepr_dim={repr}\t{}",
            d.kind,
            d.vocab_size,
            params.join(",")
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Context {
        config: cli.config,
        out: cli.out,
        workers: cli.workers,
        run_seed: cli.run_seed,
    };
    match &cli.command {
        Command::Generate(a) => cmd_generate(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Sweep(a) => cmd_sweep(&ctx, a),
        Command::Report(a) => cmd_report(&ctx, a),
        Command::Backends {
            command: BackendsCommand::Train(a),
        } => cmd_train(&ctx, a),
        Command::Backends {
            command: BackendsCommand::List,
        } => cmd_list(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
