//! Additively smoothed n-gram models with backoff to lower orders.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BackendDescriptor, BackendError, BackendKind, HashedRepresentation, LanguageModel,
    TokenDistribution, TokenId, TokenRepresentation, Vocabulary, UNK_TOKEN,
};

pub const NGRAM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    total: u64,
    next: HashMap<TokenId, u64>,
}

/// Raw n-gram counts over a vocabulary of `vocab_size` token ids.
///
/// For a context `c` of length `m - 1` with at least one observed successor,
/// `p(v | c) = (count(c, v) + δ) / (count(c) + |V| δ)`. Unseen contexts drop
/// their oldest token until a seen context (ultimately the empty one) is found.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramCounts {
    order: usize,
    vocab_size: usize,
    smoothing: f64,
    // tables[m] holds contexts of length m
    tables: Vec<HashMap<Vec<TokenId>, ContextCounts>>,
}

impl NGramCounts {
    pub fn new(order: usize, vocab_size: usize, smoothing: f64) -> Result<Self, BackendError> {
        if order == 0 {
            return Err(BackendError::Config("n-gram order must be >= 1".into()));
        }
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(BackendError::Config(format!(
                "smoothing must be > 0, got {smoothing}"
            )));
        }
        if vocab_size == 0 {
            return Err(BackendError::Config("vocabulary must be non-empty".into()));
        }
        Ok(Self {
            order,
            vocab_size,
            smoothing,
            tables: vec![HashMap::new(); order],
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Counts every m-gram (`m = 1..=order`) of `seq`.
    pub fn observe(&mut self, seq: &[TokenId]) {
        for i in 0..seq.len() {
            self.push(&seq[..i], seq[i]);
        }
    }

    /// Counts the m-grams that end at `token` given its left `history`.
    pub fn push(&mut self, history: &[TokenId], token: TokenId) {
        debug_assert!(token < self.vocab_size);
        for ctx_len in 0..self.order.min(history.len() + 1) {
            let ctx = &history[history.len() - ctx_len..];
            let entry = self.tables[ctx_len].entry(ctx.to_vec()).or_default();
            entry.total += 1;
            *entry.next.entry(token).or_default() += 1;
        }
    }

    pub fn probabilities(&self, context: &[TokenId]) -> Vec<f64> {
        let mut ctx_len = (self.order - 1).min(context.len());
        let counts = loop {
            let ctx = &context[context.len() - ctx_len..];
            match self.tables[ctx_len].get(ctx) {
                Some(c) if c.total > 0 => break Some(c),
                _ if ctx_len == 0 => break None,
                _ => ctx_len -= 1,
            }
        };
        let v = self.vocab_size as f64;
        match counts {
            None => vec![1.0 / v; self.vocab_size],
            Some(c) => {
                let denom = c.total as f64 + v * self.smoothing;
                let mut probs = vec![self.smoothing / denom; self.vocab_size];
                for (&tok, &n) in &c.next {
                    probs[tok] = (n as f64 + self.smoothing) / denom;
                }
                probs
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ContextEntry {
    context: Vec<TokenId>,
    next: Vec<(TokenId, u64)>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    name: String,
    order: usize,
    smoothing: f64,
    repr_dim: usize,
    vocab: Vocabulary,
    contexts: Vec<ContextEntry>,
}

/// n-gram backend over a string vocabulary that includes [`UNK_TOKEN`].
#[derive(Debug, Clone)]
pub struct NGramModel {
    name: String,
    vocab: Vocabulary,
    counts: NGramCounts,
    repr: HashedRepresentation,
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.counts.order
    }

    pub fn smoothing(&self) -> f64 {
        self.counts.smoothing
    }

    pub fn counts(&self) -> &NGramCounts {
        &self.counts
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn to_json(&self) -> Result<String, BackendError> {
        let mut contexts: Vec<ContextEntry> = self
            .counts
            .tables
            .iter()
            .flat_map(|t| t.iter())
            .map(|(ctx, c)| {
                let mut next: Vec<(TokenId, u64)> = c.next.iter().map(|(&t, &n)| (t, n)).collect();
                next.sort_unstable();
                ContextEntry {
                    context: ctx.clone(),
                    next,
                }
            })
            .collect();
        contexts.sort_by(|a, b| {
            a.context
                .len()
                .cmp(&b.context.len())
                .then(a.context.cmp(&b.context))
        });
        let file = ModelFile {
            format_version: NGRAM_FORMAT_VERSION,
            name: self.name.clone(),
            order: self.counts.order,
            smoothing: self.counts.smoothing,
            repr_dim: self.repr.dim,
            vocab: self.vocab.clone(),
            contexts,
        };
        serde_json::to_string(&file).map_err(|e| BackendError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| BackendError::Format(e.to_string()))?;
        if file.format_version != NGRAM_FORMAT_VERSION {
            return Err(BackendError::Format(format!(
                "unsupported format version {} (expected {NGRAM_FORMAT_VERSION})",
                file.format_version
            )));
        }
        if file.repr_dim == 0 {
            return Err(BackendError::Format("repr_dim must be positive".into()));
        }
        let mut counts = NGramCounts::new(file.order, file.vocab.len(), file.smoothing)?;
        for entry in file.contexts {
            if entry.context.len() >= file.order {
                return Err(BackendError::Format(format!(
                    "context {:?} too long for order",
                    entry.context
                )));
            }
            file.vocab.check(&entry.context)?;
            let slot = counts.tables[entry.context.len()]
                .entry(entry.context)
                .or_default();
            for (tok, n) in entry.next {
                file.vocab.check(&[tok])?;
                slot.total += n;
                *slot.next.entry(tok).or_default() += n;
            }
        }
        Ok(Self {
            name: file.name,
            repr: HashedRepresentation::new(file.repr_dim, file.order - 1),
            vocab: file.vocab,
            counts,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BackendError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

impl LanguageModel for NGramModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn descriptor(&self) -> BackendDescriptor {
        let mut params = BTreeMap::new();
        params.insert("order".to_owned(), self.counts.order.to_string());
        params.insert("smoothing".to_owned(), self.counts.smoothing.to_string());
        BackendDescriptor {
            name: self.name.clone(),
            kind: BackendKind::Ngram,
            vocab_size: self.vocab.len(),
            repr_dim: Some(self.repr.dim),
            params,
        }
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution, BackendError> {
        self.vocab.check(context)?;
        TokenDistribution::from_probs(self.counts.probabilities(context))
    }

    fn token_representation(
        &self,
        context: &[TokenId],
        token: TokenId,
    ) -> Result<TokenRepresentation, BackendError> {
        self.vocab.check(context)?;
        self.vocab.check(&[token])?;
        let start = context.len().saturating_sub(self.repr.window);
        let ctx: Vec<&str> = context[start..]
            .iter()
            .map(|&t| self.vocab.tokens()[t].as_str())
            .collect();
        Ok(TokenRepresentation(
            self.repr.represent(&ctx, &self.vocab.tokens()[token]),
        ))
    }

    fn supports_representations(&self) -> bool {
        true
    }
}

/// Trains an n-gram backend on token-string sequences.
///
/// The vocabulary lists tokens in order of first appearance followed by
/// [`UNK_TOKEN`] (unless the corpus already contains it).
pub fn train_ngram_backend<S: AsRef<str>>(
    name: impl Into<String>,
    corpus: &[Vec<S>],
    order: usize,
    smoothing: f64,
    repr_dim: usize,
) -> Result<NGramModel, BackendError> {
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(BackendError::Input("training corpus is empty".into()));
    }
    if repr_dim == 0 {
        return Err(BackendError::Config("repr_dim must be positive".into()));
    }
    let mut tokens: Vec<String> = Vec::new();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for tok in corpus.iter().flatten() {
        if seen.insert(tok.as_ref(), ()).is_none() {
            tokens.push(tok.as_ref().to_owned());
        }
    }
    if !seen.contains_key(UNK_TOKEN) {
        tokens.push(UNK_TOKEN.to_owned());
    }
    let vocab = Vocabulary::new(tokens)?;
    let mut counts = NGramCounts::new(order, vocab.len(), smoothing)?;
    for seq in corpus {
        counts.observe(&vocab.encode(seq)?);
    }
    Ok(NGramModel {
        name: name.into(),
        repr: HashedRepresentation::new(repr_dim, order - 1),
        vocab,
        counts,
    })
}
