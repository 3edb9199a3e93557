//! Language-model backends.
//!
//! A backend supplies next-token distributions over a fixed [`Vocabulary`]
//! and, optionally, per-token representations used by the similarity-based
//! decoding strategies. Two deterministic toy backends are provided: a
//! hand-written conditional table ([`FixedTableModel`]) and an additively
//! smoothed n-gram model ([`NGramModel`]).

mod ngram;
mod registry;
mod repr;
mod table;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ngram::{train_ngram_backend, NGramCounts, NGramModel, NGRAM_FORMAT_VERSION};
pub use registry::{validate_backend_name, BackendRegistry, BackendSpec};
pub use repr::{cosine_similarity, HashedRepresentation, DEFAULT_REPR_DIM};
pub use table::FixedTableModel;

/// Index of a token inside a [`Vocabulary`].
pub type TokenId = usize;

/// Reserved string for the unknown token.
pub const UNK_TOKEN: &str = "<unk>";
/// Reserved string for the end-of-text token.
pub const EOS_TOKEN: &str = "<eos>";

/// Slack tolerated on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("token index {index} is outside the vocabulary (size {size})")]
    UnknownToken { index: TokenId, size: usize },
    #[error("backend `{0}` does not provide token representations")]
    NoRepresentations(String),
    #[error("unsupported backend kind `{0}`")]
    UnsupportedKind(String),
    #[error("invalid vocabulary: {0}")]
    Vocabulary(String),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid backend input: {0}")]
    Input(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("no table row matches context {0:?}")]
    MissingRow(Vec<TokenId>),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BackendError {
    /// Whether the failure is a missing capability rather than bad input.
    pub fn is_capability(&self) -> bool {
        matches!(
            self,
            BackendError::NoRepresentations(_) | BackendError::UnsupportedKind(_)
        )
    }
}

/// Ordered set of distinct token strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new<I, S>(tokens: I) -> Result<Self, BackendError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.len() < 2 {
            return Err(BackendError::Vocabulary(format!(
                "at least two tokens required, got {}",
                tokens.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), i).is_some() {
                return Err(BackendError::Vocabulary(format!("duplicate token `{tok}`")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn unk(&self) -> Option<TokenId> {
        self.id(UNK_TOKEN)
    }

    pub fn eos(&self) -> Option<TokenId> {
        self.id(EOS_TOKEN)
    }

    /// Maps token strings to ids, sending unknown strings to the reserved
    /// unknown token. Fails only if the vocabulary has no unknown token.
    pub fn encode<S: AsRef<str>>(&self, pieces: &[S]) -> Result<Vec<TokenId>, BackendError> {
        pieces
            .iter()
            .map(|p| {
                let p = p.as_ref();
                self.id(p).or_else(|| self.unk()).ok_or_else(|| {
                    BackendError::Input(format!("token `{p}` not in vocabulary and no {UNK_TOKEN}"))
                })
            })
            .collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Result<Vec<String>, BackendError> {
        ids.iter()
            .map(|&id| {
                self.token(id)
                    .map(str::to_owned)
                    .ok_or(BackendError::UnknownToken {
                        index: id,
                        size: self.len(),
                    })
            })
            .collect()
    }

    pub fn check(&self, ids: &[TokenId]) -> Result<(), BackendError> {
        match ids.iter().find(|&&id| id >= self.len()) {
            Some(&index) => Err(BackendError::UnknownToken {
                index,
                size: self.len(),
            }),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = BackendError;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        Vocabulary::new(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

/// Probability vector over a vocabulary at one decoding step.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    probs: Vec<f64>,
    logits: Option<Vec<f64>>,
}

impl TokenDistribution {
    /// Wraps an already normalized probability vector.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self, BackendError> {
        if probs.is_empty() {
            return Err(BackendError::Distribution(
                "empty probability vector".into(),
            ));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(BackendError::Distribution(format!(
                "invalid probability {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(BackendError::Distribution(format!("mass sums to {total}")));
        }
        Ok(Self {
            probs,
            logits: None,
        })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, BackendError> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(BackendError::Distribution(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(BackendError::Distribution("weights have zero mass".into()));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
            logits: None,
        })
    }

    /// Softmax over logits; the logits are kept alongside the probabilities.
    pub fn from_logits(logits: Vec<f64>) -> Result<Self, BackendError> {
        if logits.is_empty() || logits.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(BackendError::Distribution(
                "logits must be finite or -inf".into(),
            ));
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(BackendError::Distribution("all logits are -inf".into()));
        }
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        Ok(Self {
            probs: exps.into_iter().map(|e| e / total).collect(),
            logits: Some(logits),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn logits(&self) -> Option<&[f64]> {
        self.logits.as_deref()
    }

    /// Logits if present, otherwise natural-log probabilities (`-inf` for
    /// zero-mass tokens). Either way softmax of the result recovers `probs`.
    pub fn logits_or_log_probs(&self) -> Vec<f64> {
        match &self.logits {
            Some(l) => l.clone(),
            None => self.probs.iter().map(|p| p.ln()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, token: TokenId) -> f64 {
        self.probs.get(token).copied().unwrap_or(0.0)
    }

    /// Highest-probability token, lowest index on ties.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    /// Token ids ordered by descending probability, lowest index first on ties.
    pub fn ranked(&self) -> Vec<TokenId> {
        let mut ids: Vec<TokenId> = (0..self.probs.len()).collect();
        ids.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        ids
    }

    /// Keeps only `support`, renormalizing. Tokens outside get zero mass.
    pub fn restrict(&self, support: &[TokenId]) -> TokenDistribution {
        let mut probs = vec![0.0; self.probs.len()];
        let total: f64 = support.iter().map(|&i| self.probs[i]).sum();
        for &i in support {
            probs[i] = self.probs[i] / total;
        }
        TokenDistribution {
            probs,
            logits: None,
        }
    }
}

/// Shannon entropy (nats) of a probability vector; zero entries contribute 0.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Latent vector for one (context, token) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenRepresentation(pub Vec<f64>);

impl TokenRepresentation {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn cosine(&self, other: &TokenRepresentation) -> f64 {
        cosine_similarity(&self.0, &other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    FixedTable,
    Ngram,
    External,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::FixedTable => "fixed-table",
            BackendKind::Ngram => "ngram",
            BackendKind::External => "external",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendDescriptor {
    pub name: String,
    pub kind: BackendKind,
    pub vocab_size: usize,
    pub repr_dim: Option<usize>,
    pub params: BTreeMap<String, String>,
}

/// Source of next-token distributions.
///
/// Implementations are immutable once built and are shared across decoding
/// jobs, so every method must be deterministic in its arguments.
pub trait LanguageModel: Send + Sync {
    fn name(&self) -> &str;

    fn vocab(&self) -> &Vocabulary;

    fn descriptor(&self) -> BackendDescriptor;

    /// `p(· | context)`. Fails on token ids outside the vocabulary.
    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution, BackendError>;

    /// Representation of `token` following `context`.
    fn token_representation(
        &self,
        _context: &[TokenId],
        _token: TokenId,
    ) -> Result<TokenRepresentation, BackendError> {
        Err(BackendError::NoRepresentations(self.name().to_owned()))
    }

    fn supports_representations(&self) -> bool {
        false
    }

    fn eos(&self) -> Option<TokenId> {
        self.vocab().eos()
    }
}

/// `Σ_i log p(continuation_i | prefix ++ continuation_<i)`.
///
/// Returns `-inf` as soon as a step has zero probability; callers treat a
/// non-finite result as a flagged record.
pub fn sequence_logprob(
    model: &dyn LanguageModel,
    prefix: &[TokenId],
    continuation: &[TokenId],
) -> Result<f64, BackendError> {
    if continuation.is_empty() {
        return Err(BackendError::Input("continuation must be non-empty".into()));
    }
    model.vocab().check(prefix)?;
    model.vocab().check(continuation)?;
    let mut context = prefix.to_vec();
    let mut total = 0.0;
    for &tok in continuation {
        let p = model.next_distribution(&context)?.prob(tok);
        if p <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += p.ln();
        context.push(tok);
    }
    Ok(total)
}
