//! Grid expansion.

use serde::Deserialize;

use crate::decoding::{DecodingConfig, HyperParams, StrategyKind};

use super::{validate_id, ExperimentKey, SweepError};

/// Value lists for one strategy family. Each non-empty list is one axis of
/// the product; empty lists leave the parameter at its default.
///
/// ```toml
/// [[sweep.strategy]]
/// name = "cs"
/// alpha = [0.2, 0.4, 0.6, 0.8, 1.0]
/// k = [1, 3, 5, 10, 15, 20, 50]
/// ```
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyGrid {
    pub name: String,
    #[serde(default)]
    pub w: Vec<usize>,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub t: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub amateur: Vec<String>,
    /// Restricts this family to a subset of backends.
    pub backends: Option<Vec<String>>,
}

impl StrategyGrid {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            name: kind.as_str().to_owned(),
            ..Default::default()
        }
    }

    pub fn kind(&self) -> Result<StrategyKind, SweepError> {
        Ok(self.name.parse()?)
    }

    /// Every config of the family, in canonical order.
    pub fn configs(&self) -> Result<Vec<DecodingConfig>, SweepError> {
        let kind = self.kind()?;
        let mut combos = vec![HyperParams::default()];
        fn axis<T: Clone>(
            combos: Vec<HyperParams>,
            values: &[T],
            set: impl Fn(&mut HyperParams, T),
        ) -> Vec<HyperParams> {
            if values.is_empty() {
                return combos;
            }
            let mut out = Vec::with_capacity(combos.len() * values.len());
            for hp in combos {
                for v in values {
                    let mut next = hp.clone();
                    set(&mut next, v.clone());
                    out.push(next);
                }
            }
            out
        }
        combos = axis(combos, &self.w, |h, v| h.w = Some(v));
        combos = axis(combos, &self.k, |h, v| h.k = Some(v));
        combos = axis(combos, &self.p, |h, v| h.p = Some(v));
        combos = axis(combos, &self.t, |h, v| h.t = Some(v));
        combos = axis(combos, &self.alpha, |h, v| h.alpha = Some(v));
        combos = axis(combos, &self.tau, |h, v| h.tau = Some(v));
        combos = axis(combos, &self.beta, |h, v| h.beta = Some(v));
        combos = axis(combos, &self.amateur, |h, v| h.amateur = Some(v));
        let mut configs = combos
            .iter()
            .map(|hp| DecodingConfig::from_params(kind, hp))
            .collect::<Result<Vec<_>, _>>()?;
        configs.sort_by(|a, b| a.canonical_cmp(b));
        Ok(configs)
    }
}

/// The full experiment grid of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub backends: Vec<String>,
    pub datasets: Vec<String>,
    pub strategies: Vec<StrategyGrid>,
    /// Replicate seeds for stochastic strategies.
    pub seeds: Vec<u64>,
    pub max_new_tokens: usize,
}

/// Cartesian product per strategy family, concatenated and sorted into
/// canonical order. Deterministic strategies get the single seed 0.
pub fn expand_grid(grid: &SweepGrid) -> Result<Vec<ExperimentKey>, SweepError> {
    let empty = |what: &str| Err(SweepError::Config(format!("sweep grid has no {what}")));
    if grid.backends.is_empty() {
        return empty("backends");
    }
    if grid.datasets.is_empty() {
        return empty("datasets");
    }
    if grid.strategies.is_empty() {
        return empty("strategies");
    }
    if grid.seeds.is_empty() {
        return empty("seeds");
    }
    if grid.max_new_tokens == 0 {
        return Err(SweepError::Config("max_new_tokens must be >= 1".into()));
    }
    for d in &grid.datasets {
        validate_id("dataset id", d)?;
    }
    let mut keys = Vec::new();
    for sg in &grid.strategies {
        let backends = match &sg.backends {
            Some(b) if b.is_empty() => {
                return Err(SweepError::Config(format!(
                    "strategy `{}` has an empty backend list",
                    sg.name
                )))
            }
            Some(b) => b,
            None => &grid.backends,
        };
        for b in backends {
            validate_id("backend name", b)?;
        }
        let configs = sg.configs()?;
        for b in backends {
            for d in &grid.datasets {
                for cfg in &configs {
                    let seeds: &[u64] = if cfg.is_stochastic() {
                        &grid.seeds
                    } else {
                        &[0]
                    };
                    for &seed in seeds {
                        keys.push(ExperimentKey {
                            backend: b.clone(),
                            dataset: d.clone(),
                            config: cfg.clone(),
                            seed,
                        });
                    }
                }
            }
        }
    }
    keys.sort_by(|a, b| a.canonical_cmp(b));
    if let Some(w) = keys.windows(2).find(|w| w[0].canonical_cmp(&w[1]).is_eq()) {
        return Err(SweepError::Config(format!(
            "duplicate experiment `{}`",
            w[0]
        )));
    }
    Ok(keys)
}
