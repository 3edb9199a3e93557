//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime};

use dsweep_core::backend::{
    sequence_logprob, train_ngram_backend, BackendRegistry, LanguageModel, NGramModel, TokenId,
    DEFAULT_REPR_DIM,
};
use dsweep_core::corpus::{Dataset, PromptRecord, TokenizerScheme};
use dsweep_core::decoding::{
    apply_temperature, beam_decode, contrastive_search_decode, greedy_decode, sample_decode,
    DecodingConfig, StrategyKind,
};
use dsweep_core::metrics::{
    diversity, mauve_from_embeddings, mauve_lite, normalize_coherence, qtext, HashedTextEmbedder,
    LabeledText, MauveOptions, NormalizationPool,
};
use dsweep_core::sweep::{
    expand_grid, results_digest, run_experiment, run_sweep, RunOptions, StrategyGrid, SweepGrid,
    SweepPlan, RESULTS_FILE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use support::{all_sequences, random_table, TextGenerator};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn grid(kind: StrategyKind) -> StrategyGrid {
    StrategyGrid::new(kind)
}

// 1. Grid fidelity.
fn grid_fidelity() -> Check {
    let backends: Vec<String> = (1..=7).map(|i| format!("llm{i}")).collect();
    let strategies = vec![
        StrategyGrid {
            w: vec![3, 5, 10, 15, 20, 50],
            ..grid(StrategyKind::Beam)
        },
        StrategyGrid {
            k: vec![1, 3, 5, 10, 15, 20, 50],
            alpha: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            ..grid(StrategyKind::ContrastiveSearch)
        },
        // Adaptive contrastive search runs on a single backend per dataset.
        StrategyGrid {
            backends: Some(vec![backends[0].clone()]),
            ..grid(StrategyKind::AdaptiveContrastiveSearch)
        },
        StrategyGrid {
            t: vec![0.1, 0.3, 0.5, 0.7, 0.9, 1.0],
            ..grid(StrategyKind::Temperature)
        },
        StrategyGrid {
            k: vec![1, 3, 5, 10, 15, 20, 50],
            ..grid(StrategyKind::TopK)
        },
        StrategyGrid {
            p: vec![0.6, 0.7, 0.8, 0.9, 0.95],
            ..grid(StrategyKind::TopP)
        },
    ];
    let g = SweepGrid {
        backends,
        datasets: vec!["news".into(), "wiki".into(), "stories".into()],
        strategies,
        seeds: vec![0],
        max_new_tokens: 256,
    };
    let keys = expand_grid(&g).map_err(err)?;
    let count = |k: StrategyKind| keys.iter().filter(|key| key.config.kind() == k).count();
    let parts = [
        count(StrategyKind::Beam),
        count(StrategyKind::ContrastiveSearch),
        count(StrategyKind::AdaptiveContrastiveSearch),
        count(StrategyKind::Temperature),
        count(StrategyKind::TopK),
        count(StrategyKind::TopP),
    ];
    ensure(keys.len() == 1242, || {
        format!("{} keys, expected 1242", keys.len())
    })?;
    ensure(parts == [126, 735, 3, 126, 147, 105], || {
        format!("partition {parts:?}")
    })?;
    ensure(expand_grid(&g).map_err(err)? == keys, || {
        "re-expansion changed the key list".into()
    })?;
    Ok(format!("1242 keys, partition {parts:?}"))
}

// 2. Beam oracle.
fn beam_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut total_seqs = 0;
    for case in 0..50 {
        let v = rng.gen_range(2..=5);
        let horizon = rng.gen_range(1..=4);
        let model = random_table(1000 + case, v, horizon, false);
        let w = v.pow(horizon as u32);
        let out = beam_decode(&model, &[], w, horizon).map_err(err)?;
        let got = sequence_logprob(&model, &[], &out.tokens).map_err(err)?;
        let seqs = all_sequences(v, horizon);
        total_seqs += seqs.len();
        let mut best = f64::NEG_INFINITY;
        for s in &seqs {
            best = best.max(sequence_logprob(&model, &[], s).map_err(err)?);
        }
        ensure(got == best, || {
            format!("case {case} (|V|={v}, L={horizon}): beam {got} vs oracle {best}")
        })?;
    }
    Ok(format!("50 tables, {total_seqs} sequences enumerated"))
}

fn english_backend(
    name: &str,
    seed: u64,
    tokens: usize,
    order: usize,
) -> (NGramModel, Vec<Vec<String>>) {
    let docs = TextGenerator::new(seed).corpus(tokens, 120);
    let model = train_ngram_backend(name, &docs, order, 0.1, DEFAULT_REPR_DIM)
        .expect("corpus is non-empty");
    (model, docs)
}

// 3. Strategy degeneracies.
fn degeneracies() -> Check {
    let (ngram, _) = english_backend("bi", 3, 5_000, 2);
    let mut backends: Vec<Box<dyn LanguageModel>> = vec![Box::new(ngram)];
    for s in 0..4 {
        backends.push(Box::new(random_table(300 + s, 4, 6, true)));
    }
    let mut prompt_gen = TextGenerator::new(33);
    let mut checked = 0;
    for (b, model) in backends.iter().enumerate() {
        let model = model.as_ref();
        let prompts: Vec<Vec<TokenId>> = if b == 0 {
            (0..5)
                .map(|_| model.vocab().encode(&prompt_gen.document(8)).unwrap())
                .collect()
        } else {
            vec![vec![], vec![1], vec![3, 0]]
        };
        for prompt in &prompts {
            let n = 16;
            let greedy = greedy_decode(model, prompt, n).map_err(err)?.tokens;
            let beam1 = beam_decode(model, prompt, 1, n).map_err(err)?.tokens;
            ensure(beam1 == greedy, || {
                format!("backend {b}: beam(w=1) differs from greedy")
            })?;
            for seed in 0..20 {
                let topk1 = sample_decode(model, prompt, &DecodingConfig::TopK { k: 1 }, seed, n)
                    .map_err(err)?
                    .tokens;
                ensure(topk1 == greedy, || {
                    format!("backend {b}: top_k(k=1) seed {seed} differs from greedy")
                })?;
            }
            for k in [1, 5, 50] {
                let cs0 = contrastive_search_decode(model, prompt, 0.0, k, n)
                    .map_err(err)?
                    .tokens;
                ensure(cs0 == greedy, || {
                    format!("backend {b}: cs(alpha=0,k={k}) differs from greedy")
                })?;
            }
            let reference = contrastive_search_decode(model, prompt, 0.2, 1, n)
                .map_err(err)?
                .tokens;
            for alpha in [0.4, 0.6, 0.8, 1.0] {
                let out = contrastive_search_decode(model, prompt, alpha, 1, n)
                    .map_err(err)?
                    .tokens;
                ensure(out == reference, || {
                    format!("backend {b}: cs(k=1) changes with alpha={alpha}")
                })?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (backend, prompt) pairs, 20 seeds each"))
}

// 4. Sampling fidelity.
fn sampling_fidelity() -> Check {
    let model = random_table(44, 6, 1, false);
    let dist = model.next_distribution(&[]).map_err(err)?;
    let draws: u64 = 100_000;
    let mut counts = [0u64; 6];
    for seed in 0..draws {
        let out =
            sample_decode(&model, &[], &DecodingConfig::TopP { p: 1.0 }, seed, 1).map_err(err)?;
        counts[out.tokens[0]] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(dist.probs())
        .map(|(&o, &p)| {
            let e = p * draws as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new(5.0).map_err(err)?.inverse_cdf(0.99);
    ensure(stat < critical, || {
        format!("chi-square {stat:.3} >= critical {critical:.3}")
    })?;
    Ok(format!(
        "chi-square {stat:.3} < {critical:.3} (df 5, 1e5 draws)"
    ))
}

// 5. Temperature monotonicity.
fn temperature_monotonicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
    for case in 0..100 {
        let n = rng.gen_range(2..=40);
        let mut logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        if logits.iter().all(|l| *l == logits[0]) {
            logits[0] += 1.0;
        }
        let hs: Vec<f64> = grid
            .iter()
            .map(|&t| apply_temperature(&logits, t).map(|d| d.entropy()))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        ensure(hs.windows(2).all(|w| w[0] < w[1]), || {
            format!("case {case}: entropies {hs:?}")
        })?;
    }
    Ok("100 logit vectors, 6 temperatures".into())
}

fn naive_diversity(tokens: &[u8]) -> f64 {
    if tokens.len() < 5 {
        return 0.0;
    }
    let mut value = 1.0;
    for n in 2..=4 {
        let mut grams: Vec<Vec<u8>> = (0..=tokens.len() - n)
            .map(|i| tokens[i..i + n].to_vec())
            .collect();
        let total = grams.len();
        grams.sort();
        grams.dedup();
        value *= grams.len() as f64 / total as f64;
    }
    value
}

// 6. Diversity oracle.
fn diversity_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..1000 {
        let len = rng.gen_range(5..=512);
        let alphabet = rng.gen_range(1..=8u8);
        let seq: Vec<u8> = (0..len).map(|_| rng.gen_range(0..alphabet)).collect();
        let got = diversity(&seq).value;
        let want = naive_diversity(&seq);
        ensure(got == want, || {
            format!("case {case}: {got} vs oracle {want} for {seq:?}")
        })?;
    }
    let abab: Vec<&str> = "a b a b a b".split(' ').collect();
    let d = diversity(&abab).value;
    ensure((d - 2.0 / 15.0).abs() <= 1e-12, || {
        format!("DIV(a b a b a b) = {d}")
    })?;
    Ok(format!("1000 sequences exact; DIV(a b a b a b) = {d:.15}"))
}

// 7. COH formula.
fn coh_formula() -> Check {
    let pool = NormalizationPool::new("acceptance", [-5.0, -3.0, -1.0]).map_err(err)?;
    let got: Vec<f64> = [-5.0, -3.0, -1.0]
        .iter()
        .map(|&v| normalize_coherence(v, &pool))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    ensure(got == [0.2, 0.6, 1.0], || {
        format!("pool {{-5,-3,-1}} gave {got:?}")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..10_000 {
        let n = rng.gen_range(2..20);
        let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(-20.0..0.0)).collect();
        let pool = NormalizationPool::new("fuzz", values.clone()).map_err(err)?;
        values.sort_by(f64::total_cmp);
        let cohs: Vec<f64> = values
            .iter()
            .map(|&v| pool.normalize(v))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        for (w, c) in values.windows(2).zip(cohs.windows(2)) {
            ensure(
                if w[0] < w[1] {
                    c[0] < c[1]
                } else {
                    c[0] == c[1]
                },
                || format!("case {case}: {:?} -> {:?}", w, c),
            )?;
        }
        ensure(cohs.iter().all(|c| *c > 0.0 && *c <= 1.0), || {
            format!("case {case}: COH outside (0,1]")
        })?;
    }
    Ok("(0.2, 0.6, 1.0) exact; 10^4 pools monotone".into())
}

// 8. QText identities.
fn qtext_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let x: f64 = rng.gen_range(0.0..=1.0);
        let q = qtext(x, x, x).map_err(err)?;
        ensure(q == x, || format!("qtext({x},{x},{x}) = {q}"))?;
    }
    for _ in 0..10_000 {
        let (a, b, c): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        let q = qtext(a, b, c).map_err(err)?;
        let (lo, hi) = (a.min(b).min(c), a.max(b).max(c));
        ensure(lo <= q && q <= hi, || {
            format!("qtext({a},{b},{c}) = {q} outside [{lo},{hi}]")
        })?;
    }
    for (a, b, c) in [
        (0.0, 0.5, 0.9),
        (0.7, 0.0, 0.2),
        (0.3, 0.3, 0.0),
        (0.0, 0.0, 0.0),
    ] {
        let q = qtext(a, b, c).map_err(err)?;
        ensure(q == 0.0, || format!("qtext({a},{b},{c}) = {q}, expected 0"))?;
    }
    Ok("identity x100, bounds x10^4, zero component -> 0".into())
}

fn cloud(rng: &mut ChaCha8Rng, center: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..4).map(|_| center + rng.gen_range(-0.5..0.5)).collect())
        .collect()
}

// 9. MAUVE-lite endpoints.
fn mauve_endpoints() -> Check {
    let opts = MauveOptions::default();
    let mut gen = TextGenerator::new(9);
    let texts: Vec<Vec<String>> = (0..40).map(|_| gen.document(20)).collect();
    let ids: Vec<String> = (0..texts.len()).map(|i| format!("t{i}")).collect();
    let labeled: Vec<LabeledText> = ids
        .iter()
        .zip(&texts)
        .map(|(id, t)| LabeledText { id, tokens: t })
        .collect();
    let same =
        mauve_lite(&labeled, &labeled, &HashedTextEmbedder::default(), &opts).map_err(err)?;
    ensure((same - 1.0).abs() <= 1e-6, || {
        format!("identical sets gave {same}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let p = cloud(&mut rng, -10.0, 200);
    let q = cloud(&mut rng, 10.0, 200);
    let apart = mauve_from_embeddings(&p, &q, &opts).map_err(err)?;
    ensure(apart < 0.1, || format!("disjoint clouds gave {apart}"))?;
    Ok(format!("identical {same:.9}, disjoint {apart:.6}"))
}

fn prompt_dataset(id: &str, seed: u64, n: usize, prompt_len: usize, gold_len: usize) -> Dataset {
    let mut gen = TextGenerator::new(seed);
    let records = (0..n)
        .map(|i| {
            let mut doc = gen.document(prompt_len + gold_len);
            let gold = doc.split_off(prompt_len);
            PromptRecord {
                prompt_id: format!("p{i}"),
                dataset_id: id.into(),
                prompt: doc,
                gold,
            }
        })
        .collect();
    Dataset {
        id: id.into(),
        scheme: TokenizerScheme::Whitespace,
        records,
        skipped: 0,
    }
}

// 10. Qualitative trend: beam is less diverse and more likely than sampling.
fn qualitative_trend() -> Check {
    let (model, docs) = english_backend("bi", 10, 50_000, 2);
    let n_tokens: usize = docs.iter().map(Vec::len).sum();
    let mut registry = BackendRegistry::new();
    registry.insert(Arc::new(model)).map_err(err)?;
    let g = SweepGrid {
        backends: vec!["bi".into()],
        datasets: vec!["held".into()],
        strategies: vec![
            StrategyGrid {
                w: vec![10],
                ..grid(StrategyKind::Beam)
            },
            StrategyGrid {
                t: vec![1.0],
                ..grid(StrategyKind::Temperature)
            },
        ],
        seeds: vec![0],
        max_new_tokens: 32,
    };
    let data = prompt_dataset("held", 1010, 200, 16, 32);
    let plan = SweepPlan::new(
        &g,
        registry,
        vec![data],
        "bi",
        0,
        MauveOptions::default(),
        &BTreeMap::new(),
    )
    .map_err(err)?;
    let mut rows = BTreeMap::new();
    for key in &plan.keys {
        let row = run_experiment(key, &plan).row;
        ensure(row.reason.is_none(), || {
            format!("{key} failed: {:?}", row.reason)
        })?;
        rows.insert(key.config.kind(), row);
    }
    let (beam, temp) = (
        &rows[&StrategyKind::Beam],
        &rows[&StrategyKind::Temperature],
    );
    let detail = format!(
        "{n_tokens} training tokens; DIV beam {:.4} < temp {:.4}; coherence beam {:.4} > temp {:.4}",
        beam.div, temp.div, beam.coherence_raw, temp.coherence_raw
    );
    ensure(
        beam.div < temp.div && beam.coherence_raw > temp.coherence_raw,
        || detail.clone(),
    )?;
    Ok(detail)
}

// 11. Harness determinism across worker counts.
fn harness_determinism() -> Check {
    let (bi, docs) = english_backend("bi", 11, 8_000, 2);
    let uni = train_ngram_backend("uni", &docs, 1, 0.1, DEFAULT_REPR_DIM).map_err(err)?;
    let strategies = vec![
        grid(StrategyKind::Greedy),
        StrategyGrid {
            w: vec![3, 5],
            ..grid(StrategyKind::Beam)
        },
        StrategyGrid {
            t: vec![0.5, 1.0],
            ..grid(StrategyKind::Temperature)
        },
        StrategyGrid {
            k: vec![5, 50],
            ..grid(StrategyKind::TopK)
        },
        StrategyGrid {
            p: vec![0.8, 0.95],
            ..grid(StrategyKind::TopP)
        },
        StrategyGrid {
            tau: vec![0.9],
            ..grid(StrategyKind::Typical)
        },
        StrategyGrid {
            alpha: vec![0.2, 0.6],
            k: vec![1, 5],
            ..grid(StrategyKind::ContrastiveSearch)
        },
        grid(StrategyKind::AdaptiveContrastiveSearch),
        grid(StrategyKind::Fsd),
        StrategyGrid {
            amateur: vec!["uni".into()],
            ..grid(StrategyKind::ContrastiveDecoding)
        },
    ];
    let g = SweepGrid {
        backends: vec!["bi".into()],
        datasets: vec!["mini".into()],
        strategies,
        seeds: vec![0, 1],
        max_new_tokens: 32,
    };
    let (bi, uni): (Arc<dyn LanguageModel>, Arc<dyn LanguageModel>) = (Arc::new(bi), Arc::new(uni));
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut digests = Vec::new();
    let mut n_keys = 0;
    for workers in [1, 8] {
        let mut registry = BackendRegistry::new();
        registry.insert(bi.clone()).map_err(err)?;
        registry.insert(uni.clone()).map_err(err)?;
        let data = prompt_dataset("mini", 1111, 20, 12, 32);
        let plan = SweepPlan::new(
            &g,
            registry,
            vec![data],
            "bi",
            0,
            MauveOptions::default(),
            &BTreeMap::new(),
        )
        .map_err(err)?;
        n_keys = plan.keys.len();
        let dir = tmp.path().join(format!("w{workers}"));
        let outcome = run_sweep(
            &plan,
            &dir,
            &RunOptions {
                workers,
                max_jobs: None,
            },
        )
        .map_err(err)?;
        let rows = outcome.rows.ok_or("sweep did not complete")?;
        if let Some(r) = rows.iter().find(|r| r.reason.is_some()) {
            return Err(format!("{} failed: {:?}", r.key, r.reason));
        }
        let csv = std::fs::read_to_string(dir.join(RESULTS_FILE)).map_err(err)?;
        digests.push(results_digest(&csv).map_err(err)?);
    }
    ensure(digests[0] == digests[1], || {
        format!("digests differ: {} vs {}", digests[0], digests[1])
    })?;
    Ok(format!(
        "{n_keys} experiments over 10 strategy families, digest {}",
        &digests[0][..16]
    ))
}

/// Newest executable per test target next to this binary.
fn sibling_test_binaries() -> Vec<PathBuf> {
    let Some(dir) = std::env::current_exe()
        .ok()
        .and_then(|p| p.parent().map(Path::to_path_buf))
    else {
        return Vec::new();
    };
    let targets = [
        "dsweep_core",
        "backend_properties",
        "decoding_properties",
        "metrics_properties",
        "sweep_pipeline",
        "cli",
    ];
    let mut newest: BTreeMap<&str, (SystemTime, PathBuf)> = BTreeMap::new();
    for entry in std::fs::read_dir(&dir).into_iter().flatten().flatten() {
        let path = entry.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if path.extension().is_some() {
            continue;
        }
        let Some((stem, _)) = name.rsplit_once('-') else {
            continue;
        };
        let Some(target) = targets.iter().find(|t| **t == stem) else {
            continue;
        };
        let Ok(modified) = entry.metadata().and_then(|m| m.modified()) else {
            continue;
        };
        if newest.get(target).is_none_or(|(t, _)| modified > *t) {
            newest.insert(target, (modified, path));
        }
    }
    newest.into_values().map(|(_, p)| p).collect()
}

// 12. Full property suite wall time.
fn suite_wall_time(own: Duration) -> Check {
    let bins = sibling_test_binaries();
    ensure(
        bins.iter().any(|b| {
            b.file_name()
                .is_some_and(|n| n.to_string_lossy().starts_with("dsweep_core-"))
        }),
        || "library test binary not found; build with `cargo test --workspace`".into(),
    )?;
    let mut total = own;
    let mut names = Vec::new();
    for bin in &bins {
        let start = Instant::now();
        let out = Command::new(bin).arg("-q").output().map_err(err)?;
        total += start.elapsed();
        let name = bin.file_name().unwrap().to_string_lossy().into_owned();
        ensure(out.status.success(), || {
            format!("{name} failed:\n{}", String::from_utf8_lossy(&out.stdout))
        })?;
        names.push(
            name.rsplit_once('-')
                .map(|(s, _)| s.to_owned())
                .unwrap_or(name),
        );
    }
    ensure(total < Duration::from_secs(300), || {
        format!("suite took {:.1} s", total.as_secs_f64())
    })?;
    Ok(format!(
        "{:.1} s for acceptance plus {}",
        total.as_secs_f64(),
        names.join(", ")
    ))
}

struct Runner {
    failures: usize,
}

impl Runner {
    fn run(
        &mut self,
        id: usize,
        name: &str,
        budget: Duration,
        f: impl FnOnce() -> Check,
    ) -> Duration {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let timing = format!(
            "{:.2} s, budget {} s",
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        let (verdict, detail) = match result {
            Ok(d) if elapsed <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("over time budget; {d}")),
            Err(e) => ("FAIL", e),
        };
        if verdict == "FAIL" {
            self.failures += 1;
        }
        println!("{verdict} [{id:>2}] {name}: {detail} ({timing})");
        elapsed
    }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    let mut r = Runner { failures: 0 };
    let s = Duration::from_secs;
    r.run(1, "grid fidelity", s(1), grid_fidelity);
    r.run(2, "beam oracle", s(10), beam_oracle);
    r.run(3, "strategy degeneracies", s(30), degeneracies);
    r.run(4, "sampling fidelity", s(5), sampling_fidelity);
    r.run(
        5,
        "temperature monotonicity",
        s(1),
        temperature_monotonicity,
    );
    r.run(6, "diversity oracle", s(5), diversity_oracle);
    r.run(7, "COH formula", s(5), coh_formula);
    r.run(8, "QText identities", s(5), qtext_identities);
    r.run(9, "MAUVE-lite endpoints", s(10), mauve_endpoints);
    r.run(10, "qualitative trend", s(120), qualitative_trend);
    r.run(11, "harness determinism", s(120), harness_determinism);
    let own = start.elapsed();
    r.run(12, "property suite wall time", s(300), || {
        suite_wall_time(own)
    });
    if r.failures > 0 {
        println!("acceptance: {} of 12 criteria failed", r.failures);
        std::process::exit(1);
    }
    println!("acceptance: all 12 criteria passed");
}
