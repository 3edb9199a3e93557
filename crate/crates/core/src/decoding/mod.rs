//! Decoding strategies.
//!
//! Every strategy is a pure function of (backend, prompt, config, seed,
//! `max_new_tokens`). Deterministic strategies ignore the seed; stochastic
//! ones draw from a ChaCha generator local to the call. Ties are broken
//! towards the lowest token index everywhere.

mod contrastive;
mod sampling;
mod search;
mod truncation;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::backend::{BackendError, LanguageModel, TokenDistribution, TokenId};
use crate::util::lossless_f64;

pub use contrastive::{
    adaptive_alpha, adaptive_contrastive_search_decode, contrastive_decode,
    contrastive_decoding_select, contrastive_search_decode, fsd_decode, fsd_select, FSD_ANTI_ORDER,
    FSD_ANTI_SMOOTHING,
};
pub use sampling::{sample_decode, sample_token};
pub use search::{beam_decode, greedy_decode};
pub use truncation::{
    apply_temperature, nucleus_set, truncate_top_k, typical_mass_set, MASS_SLACK,
};

/// Continuation budget used by the reference experiments.
pub const DEFAULT_MAX_NEW_TOKENS: usize = 256;
pub const DEFAULT_ACS_K: usize = 5;
pub const DEFAULT_FSD_K: usize = 5;
pub const DEFAULT_FSD_BETA: f64 = 0.5;
pub const DEFAULT_CD_K: usize = 5;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("invalid decoding config: {0}")]
    Config(String),
    #[error("{0}")]
    Capability(String),
    #[error(transparent)]
    Backend(BackendError),
}

impl From<BackendError> for DecodeError {
    fn from(e: BackendError) -> Self {
        if e.is_capability() {
            DecodeError::Capability(e.to_string())
        } else {
            DecodeError::Backend(e)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Greedy,
    Beam,
    Temperature,
    TopK,
    TopP,
    Typical,
    ContrastiveSearch,
    AdaptiveContrastiveSearch,
    Fsd,
    ContrastiveDecoding,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 10] = [
        StrategyKind::Greedy,
        StrategyKind::Beam,
        StrategyKind::Temperature,
        StrategyKind::TopK,
        StrategyKind::TopP,
        StrategyKind::Typical,
        StrategyKind::ContrastiveSearch,
        StrategyKind::AdaptiveContrastiveSearch,
        StrategyKind::Fsd,
        StrategyKind::ContrastiveDecoding,
    ];

    /// Short name used in strategy keys, config files and CLI flags.
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Greedy => "greedy",
            StrategyKind::Beam => "beam",
            StrategyKind::Temperature => "temp",
            StrategyKind::TopK => "topk",
            StrategyKind::TopP => "topp",
            StrategyKind::Typical => "typical",
            StrategyKind::ContrastiveSearch => "cs",
            StrategyKind::AdaptiveContrastiveSearch => "acs",
            StrategyKind::Fsd => "fsd",
            StrategyKind::ContrastiveDecoding => "cd",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            StrategyKind::Temperature
                | StrategyKind::TopK
                | StrategyKind::TopP
                | StrategyKind::Typical
        )
    }

    /// Hyperparameter names accepted by this strategy.
    pub fn params(self) -> &'static [&'static str] {
        match self {
            StrategyKind::Greedy => &[],
            StrategyKind::Beam => &["w"],
            StrategyKind::Temperature => &["t"],
            StrategyKind::TopK => &["k"],
            StrategyKind::TopP => &["p"],
            StrategyKind::Typical => &["tau"],
            StrategyKind::ContrastiveSearch => &["alpha", "k"],
            StrategyKind::AdaptiveContrastiveSearch => &["k"],
            StrategyKind::Fsd => &["k", "beta"],
            StrategyKind::ContrastiveDecoding => &["k", "amateur"],
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = DecodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| DecodeError::Config(format!("unknown strategy `{s}`")))
    }
}

/// Loose hyperparameter bag, as parsed from flags or config files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HyperParams {
    pub w: Option<usize>,
    pub k: Option<usize>,
    pub p: Option<f64>,
    pub t: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub beta: Option<f64>,
    pub amateur: Option<String>,
}

impl HyperParams {
    fn set_names(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        let flags = [
            ("w", self.w.is_some()),
            ("k", self.k.is_some()),
            ("p", self.p.is_some()),
            ("t", self.t.is_some()),
            ("alpha", self.alpha.is_some()),
            ("tau", self.tau.is_some()),
            ("beta", self.beta.is_some()),
            ("amateur", self.amateur.is_some()),
        ];
        for (name, set) in flags {
            if set {
                names.push(name);
            }
        }
        names
    }
}

/// A strategy together with exactly the hyperparameters it uses.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodingConfig {
    Greedy,
    Beam { w: usize },
    Temperature { t: f64 },
    TopK { k: usize },
    TopP { p: f64 },
    Typical { tau: f64 },
    ContrastiveSearch { alpha: f64, k: usize },
    AdaptiveContrastiveSearch { k: usize },
    Fsd { k: usize, beta: f64 },
    ContrastiveDecoding { k: usize, amateur: String },
}

fn required<T: Clone>(v: &Option<T>, kind: StrategyKind, name: &str) -> Result<T, DecodeError> {
    v.clone()
        .ok_or_else(|| DecodeError::Config(format!("strategy `{kind}` requires `{name}`")))
}

impl DecodingConfig {
    /// Builds and validates a config, rejecting hyperparameters the strategy
    /// does not use.
    pub fn from_params(kind: StrategyKind, hp: &HyperParams) -> Result<Self, DecodeError> {
        if let Some(extra) = hp
            .set_names()
            .into_iter()
            .find(|n| !kind.params().contains(n))
        {
            return Err(DecodeError::Config(format!(
                "strategy `{kind}` does not take `{extra}`"
            )));
        }
        let cfg = match kind {
            StrategyKind::Greedy => DecodingConfig::Greedy,
            StrategyKind::Beam => DecodingConfig::Beam {
                w: required(&hp.w, kind, "w")?,
            },
            StrategyKind::Temperature => DecodingConfig::Temperature {
                t: required(&hp.t, kind, "t")?,
            },
            StrategyKind::TopK => DecodingConfig::TopK {
                k: required(&hp.k, kind, "k")?,
            },
            StrategyKind::TopP => DecodingConfig::TopP {
                p: required(&hp.p, kind, "p")?,
            },
            StrategyKind::Typical => DecodingConfig::Typical {
                tau: required(&hp.tau, kind, "tau")?,
            },
            StrategyKind::ContrastiveSearch => DecodingConfig::ContrastiveSearch {
                alpha: required(&hp.alpha, kind, "alpha")?,
                k: required(&hp.k, kind, "k")?,
            },
            StrategyKind::AdaptiveContrastiveSearch => DecodingConfig::AdaptiveContrastiveSearch {
                k: hp.k.unwrap_or(DEFAULT_ACS_K),
            },
            StrategyKind::Fsd => DecodingConfig::Fsd {
                k: hp.k.unwrap_or(DEFAULT_FSD_K),
                beta: hp.beta.unwrap_or(DEFAULT_FSD_BETA),
            },
            StrategyKind::ContrastiveDecoding => DecodingConfig::ContrastiveDecoding {
                k: hp.k.unwrap_or(DEFAULT_CD_K),
                amateur: required(&hp.amateur, kind, "amateur")?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn kind(&self) -> StrategyKind {
        match self {
            DecodingConfig::Greedy => StrategyKind::Greedy,
            DecodingConfig::Beam { .. } => StrategyKind::Beam,
            DecodingConfig::Temperature { .. } => StrategyKind::Temperature,
            DecodingConfig::TopK { .. } => StrategyKind::TopK,
            DecodingConfig::TopP { .. } => StrategyKind::TopP,
            DecodingConfig::Typical { .. } => StrategyKind::Typical,
            DecodingConfig::ContrastiveSearch { .. } => StrategyKind::ContrastiveSearch,
            DecodingConfig::AdaptiveContrastiveSearch { .. } => {
                StrategyKind::AdaptiveContrastiveSearch
            }
            DecodingConfig::Fsd { .. } => StrategyKind::Fsd,
            DecodingConfig::ContrastiveDecoding { .. } => StrategyKind::ContrastiveDecoding,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.kind().is_stochastic()
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        let bad = |msg: String| Err(DecodeError::Config(msg));
        match *self {
            DecodingConfig::Beam { w: 0 } => bad("beam width w must be >= 1".into()),
            DecodingConfig::TopK { k }
            | DecodingConfig::ContrastiveSearch { k, .. }
            | DecodingConfig::AdaptiveContrastiveSearch { k }
            | DecodingConfig::Fsd { k, .. }
            | DecodingConfig::ContrastiveDecoding { k, .. }
                if k == 0 =>
            {
                bad("candidate count k must be >= 1".into())
            }
            DecodingConfig::Temperature { t } if !(t > 0.0 && t.is_finite()) => {
                bad(format!("temperature t must be > 0, got {t}"))
            }
            DecodingConfig::TopP { p } if !(p > 0.0 && p <= 1.0) => {
                bad(format!("p must be in (0, 1], got {p}"))
            }
            DecodingConfig::Typical { tau } if !(tau > 0.0 && tau <= 1.0) => {
                bad(format!("tau must be in (0, 1], got {tau}"))
            }
            DecodingConfig::ContrastiveSearch { alpha, .. } if !(0.0..=1.0).contains(&alpha) => {
                bad(format!("alpha must be in [0, 1], got {alpha}"))
            }
            DecodingConfig::Fsd { beta, .. } if !(beta >= 0.0 && beta.is_finite()) => {
                bad(format!("beta must be >= 0, got {beta}"))
            }
            DecodingConfig::ContrastiveDecoding { ref amateur, .. } => {
                crate::backend::validate_backend_name(amateur)
                    .map_err(|e| DecodeError::Config(e.to_string()))
            }
            _ => Ok(()),
        }
    }

    fn param_values(&self) -> Vec<f64> {
        match *self {
            DecodingConfig::Greedy => vec![],
            DecodingConfig::Beam { w } => vec![w as f64],
            DecodingConfig::Temperature { t } => vec![t],
            DecodingConfig::TopK { k } => vec![k as f64],
            DecodingConfig::TopP { p } => vec![p],
            DecodingConfig::Typical { tau } => vec![tau],
            DecodingConfig::ContrastiveSearch { alpha, k } => vec![alpha, k as f64],
            DecodingConfig::AdaptiveContrastiveSearch { k } => vec![k as f64],
            DecodingConfig::Fsd { k, beta } => vec![k as f64, beta],
            DecodingConfig::ContrastiveDecoding { k, .. } => vec![k as f64],
        }
    }

    /// Canonical order: strategy family, then hyperparameters ascending in
    /// key order, then amateur name.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.kind()
            .cmp(&other.kind())
            .then_with(|| {
                let (a, b) = (self.param_values(), other.param_values());
                a.iter()
                    .zip(&b)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| match (self, other) {
                (
                    DecodingConfig::ContrastiveDecoding { amateur: a, .. },
                    DecodingConfig::ContrastiveDecoding { amateur: b, .. },
                ) => a.cmp(b),
                _ => Ordering::Equal,
            })
    }

    /// Canonical key, e.g. `cs[alpha=0.6,k=10]`.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

// `{}` on f64 prints the shortest decimal that round-trips.
impl fmt::Display for DecodingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodingConfig::Greedy => write!(f, "greedy"),
            DecodingConfig::Beam { w } => write!(f, "beam[w={w}]"),
            DecodingConfig::Temperature { t } => write!(f, "temp[t={t}]"),
            DecodingConfig::TopK { k } => write!(f, "topk[k={k}]"),
            DecodingConfig::TopP { p } => write!(f, "topp[p={p}]"),
            DecodingConfig::Typical { tau } => write!(f, "typical[tau={tau}]"),
            DecodingConfig::ContrastiveSearch { alpha, k } => write!(f, "cs[alpha={alpha},k={k}]"),
            DecodingConfig::AdaptiveContrastiveSearch { k } if *k == DEFAULT_ACS_K => {
                write!(f, "acs")
            }
            DecodingConfig::AdaptiveContrastiveSearch { k } => write!(f, "acs[k={k}]"),
            DecodingConfig::Fsd { k, beta } => write!(f, "fsd[k={k},beta={beta}]"),
            DecodingConfig::ContrastiveDecoding { k, amateur } => {
                write!(f, "cd[k={k},amateur={amateur}]")
            }
        }
    }
}

impl FromStr for DecodingConfig {
    type Err = DecodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DecodeError::Config(format!("malformed strategy key `{s}`"));
        let (name, body) = match s.find('[') {
            Some(i) => {
                let body = s[i + 1..].strip_suffix(']').ok_or_else(bad)?;
                (&s[..i], Some(body))
            }
            None => (s, None),
        };
        let kind: StrategyKind = name.parse()?;
        let mut hp = HyperParams::default();
        let mut seen: Vec<&str> = Vec::new();
        for pair in body
            .map(|b| b.split(',').collect::<Vec<_>>())
            .unwrap_or_default()
        {
            let (k, v) = pair.split_once('=').ok_or_else(bad)?;
            if seen.contains(&k) {
                return Err(bad());
            }
            seen.push(k);
            let int = || v.parse::<usize>().map_err(|_| bad());
            let float = || v.parse::<f64>().map_err(|_| bad());
            match k {
                "w" => hp.w = Some(int()?),
                "k" => hp.k = Some(int()?),
                "p" => hp.p = Some(float()?),
                "t" => hp.t = Some(float()?),
                "alpha" => hp.alpha = Some(float()?),
                "tau" => hp.tau = Some(float()?),
                "beta" => hp.beta = Some(float()?),
                "amateur" => hp.amateur = Some(v.to_owned()),
                _ => {
                    return Err(DecodeError::Config(format!(
                        "unknown hyperparameter `{k}` in `{s}`"
                    )))
                }
            }
        }
        // keys spell out every parameter except the ACS default
        if kind.params().len() != seen.len() && kind != StrategyKind::AdaptiveContrastiveSearch {
            return Err(bad());
        }
        let cfg = DecodingConfig::from_params(kind, &hp)?;
        if cfg.key() != s {
            return Err(DecodeError::Config(format!(
                "`{s}` is not in canonical form (`{cfg}`)"
            )));
        }
        Ok(cfg)
    }
}

impl Serialize for DecodingConfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.key())
    }
}

impl<'de> Deserialize<'de> for DecodingConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Tokens produced by one decode call.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub tokens: Vec<TokenId>,
    /// `log p(token | prefix)` under the generating backend, per token.
    pub step_logprobs: Vec<f64>,
    /// Per-step penalty weight, adaptive contrastive search only.
    pub alpha_trace: Option<Vec<f64>>,
}

/// One persisted generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub backend_name: String,
    pub dataset_id: String,
    pub prompt_id: String,
    #[serde(rename = "strategy")]
    pub config: DecodingConfig,
    pub seed: u64,
    pub prompt: Vec<TokenId>,
    pub continuation: Vec<TokenId>,
    #[serde(with = "lossless_f64::vec")]
    pub step_logprobs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_trace: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Runs `config` on `prompt`. `amateur` is required for contrastive decoding
/// and ignored otherwise.
pub fn decode(
    model: &dyn LanguageModel,
    amateur: Option<&dyn LanguageModel>,
    prompt: &[TokenId],
    config: &DecodingConfig,
    seed: u64,
    max_new_tokens: usize,
) -> Result<Decoded, DecodeError> {
    config.validate()?;
    match config {
        DecodingConfig::Greedy => greedy_decode(model, prompt, max_new_tokens),
        DecodingConfig::Beam { w } => beam_decode(model, prompt, *w, max_new_tokens),
        DecodingConfig::Temperature { .. }
        | DecodingConfig::TopK { .. }
        | DecodingConfig::TopP { .. }
        | DecodingConfig::Typical { .. } => {
            sample_decode(model, prompt, config, seed, max_new_tokens)
        }
        DecodingConfig::ContrastiveSearch { alpha, k } => {
            contrastive_search_decode(model, prompt, *alpha, *k, max_new_tokens)
        }
        DecodingConfig::AdaptiveContrastiveSearch { k } => {
            adaptive_contrastive_search_decode(model, prompt, *k, max_new_tokens)
        }
        DecodingConfig::Fsd { k, beta } => fsd_decode(model, prompt, *k, *beta, max_new_tokens),
        DecodingConfig::ContrastiveDecoding { k, amateur: name } => {
            let amateur = amateur.ok_or_else(|| {
                DecodeError::Config(format!("amateur backend `{name}` was not supplied"))
            })?;
            contrastive_decode(model, amateur, prompt, *k, max_new_tokens)
        }
    }
}

/// Shared token-by-token driver: asks `choose` for the next token given the
/// current context and distribution, records its log-probability, and stops
/// after `max_new_tokens` or at end-of-text.
pub(crate) fn step_loop<F>(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    max_new_tokens: usize,
    mut choose: F,
) -> Result<Decoded, DecodeError>
where
    F: FnMut(&[TokenId], &TokenDistribution) -> Result<TokenId, DecodeError>,
{
    model.vocab().check(prompt)?;
    let eos = model.eos();
    let mut context = prompt.to_vec();
    let mut tokens = Vec::with_capacity(max_new_tokens);
    let mut step_logprobs = Vec::with_capacity(max_new_tokens);
    for _ in 0..max_new_tokens {
        let dist = model.next_distribution(&context)?;
        let tok = choose(&context, &dist)?;
        step_logprobs.push(dist.prob(tok).ln());
        tokens.push(tok);
        context.push(tok);
        if Some(tok) == eos {
            break;
        }
    }
    Ok(Decoded {
        tokens,
        step_logprobs,
        alpha_trace: None,
    })
}

/// Top-`k` tokens with positive probability, ascending by token id.
pub(crate) fn candidates(dist: &TokenDistribution, k: usize) -> Vec<TokenId> {
    let mut c: Vec<TokenId> = dist
        .ranked()
        .into_iter()
        .filter(|&t| dist.prob(t) > 0.0)
        .take(k.max(1))
        .collect();
    c.sort_unstable();
    c
}

/// Highest-scoring candidate; `cands` must be ascending so ties go to the
/// lowest id.
pub(crate) fn argmax_by<F: Fn(TokenId) -> f64>(cands: &[TokenId], score: F) -> TokenId {
    let mut best = cands[0];
    let mut best_score = score(best);
    for &c in &cands[1..] {
        let s = score(c);
        if s > best_score {
            best = c;
            best_score = s;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_keys_are_bit_exact() {
        let cases = [
            (DecodingConfig::Greedy, "greedy"),
            (DecodingConfig::Beam { w: 10 }, "beam[w=10]"),
            (DecodingConfig::Temperature { t: 0.9 }, "temp[t=0.9]"),
            (DecodingConfig::TopK { k: 50 }, "topk[k=50]"),
            (DecodingConfig::TopP { p: 0.95 }, "topp[p=0.95]"),
            (DecodingConfig::Typical { tau: 0.9 }, "typical[tau=0.9]"),
            (
                DecodingConfig::ContrastiveSearch { alpha: 0.6, k: 10 },
                "cs[alpha=0.6,k=10]",
            ),
            (DecodingConfig::AdaptiveContrastiveSearch { k: 5 }, "acs"),
            (DecodingConfig::Fsd { k: 5, beta: 0.5 }, "fsd[k=5,beta=0.5]"),
            (
                DecodingConfig::ContrastiveDecoding {
                    k: 5,
                    amateur: "small".into(),
                },
                "cd[k=5,amateur=small]",
            ),
        ];
        for (cfg, key) in cases {
            assert_eq!(cfg.key(), key);
            assert_eq!(key.parse::<DecodingConfig>().unwrap(), cfg);
        }
        assert_eq!(DecodingConfig::Temperature { t: 1.0 }.key(), "temp[t=1]");
        assert_eq!(
            DecodingConfig::AdaptiveContrastiveSearch { k: 7 }.key(),
            "acs[k=7]"
        );
    }

    #[test]
    fn malformed_keys_are_rejected() {
        for key in [
            "beam",
            "beam[w=0]",
            "beam[w=3",
            "topk[p=0.5]",
            "cs[k=10,alpha=0.6]",
            "cs[alpha=0.6]",
            "temp[t=0.90]",
            "nope",
            "topp[p=1.5]",
            "cd[k=5,amateur=a,b]",
        ] {
            assert!(key.parse::<DecodingConfig>().is_err(), "{key} should fail");
        }
    }

    #[test]
    fn from_params_rejects_irrelevant_fields() {
        let hp = HyperParams {
            k: Some(5),
            ..Default::default()
        };
        assert!(DecodingConfig::from_params(StrategyKind::Greedy, &hp).is_err());
        assert_eq!(
            DecodingConfig::from_params(StrategyKind::TopK, &hp).unwrap(),
            DecodingConfig::TopK { k: 5 }
        );
        assert_eq!(
            DecodingConfig::from_params(StrategyKind::Fsd, &HyperParams::default()).unwrap(),
            DecodingConfig::Fsd { k: 5, beta: 0.5 }
        );
        let missing = DecodingConfig::from_params(StrategyKind::Beam, &HyperParams::default());
        assert!(matches!(missing, Err(DecodeError::Config(_))));
    }

    #[test]
    fn canonical_ordering() {
        let mut v: Vec<DecodingConfig> = [
            "topk[k=10]",
            "beam[w=5]",
            "cs[alpha=0.4,k=3]",
            "beam[w=3]",
            "cs[alpha=0.2,k=50]",
            "greedy",
        ]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
        v.sort_by(|a, b| a.canonical_cmp(b));
        let keys: Vec<String> = v.iter().map(|c| c.key()).collect();
        assert_eq!(
            keys,
            [
                "greedy",
                "beam[w=3]",
                "beam[w=5]",
                "topk[k=10]",
                "cs[alpha=0.2,k=50]",
                "cs[alpha=0.4,k=3]"
            ]
        );
    }

    #[test]
    fn record_serializes_strategy_as_key() {
        let rec = GenerationRecord {
            backend_name: "b".into(),
            dataset_id: "d".into(),
            prompt_id: "p".into(),
            config: DecodingConfig::TopP { p: 0.95 },
            seed: 7,
            prompt: vec![0],
            continuation: vec![1, 2],
            step_logprobs: vec![-0.5, -1.0],
            alpha_trace: None,
            text: None,
        };
        let s = serde_json::to_string(&rec).unwrap();
        assert!(s.contains("\"strategy\":\"topp[p=0.95]\""));
        assert_eq!(serde_json::from_str::<GenerationRecord>(&s).unwrap(), rec);
    }
}
