//! Hand-specified conditional probability tables.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{
    BackendDescriptor, BackendError, BackendKind, HashedRepresentation, LanguageModel,
    TokenDistribution, TokenId, TokenRepresentation, Vocabulary, DEFAULT_REPR_DIM,
};

/// Table-driven backend. A query uses the row keyed by the longest suffix of
/// the context that has a row; a context with no matching suffix (not even
/// the empty one) is an error.
#[derive(Debug, Clone)]
pub struct FixedTableModel {
    name: String,
    vocab: Vocabulary,
    rows: HashMap<Vec<TokenId>, TokenDistribution>,
    max_context: usize,
    repr: Option<HashedRepresentation>,
}

pub struct FixedTableBuilder {
    name: String,
    vocab: Vocabulary,
    rows: Vec<(Vec<TokenId>, Row)>,
    repr: Option<HashedRepresentation>,
}

enum Row {
    Probs(Vec<f64>),
    Logits(Vec<f64>),
}

impl FixedTableModel {
    pub fn builder(name: impl Into<String>, vocab: Vocabulary) -> FixedTableBuilder {
        FixedTableBuilder {
            name: name.into(),
            vocab,
            rows: Vec::new(),
            repr: None,
        }
    }

    /// Loads a JSON table document:
    ///
    /// ```json
    /// {"vocab": ["A", "B"],
    ///  "rows": [{"context": [], "probs": [0.6, 0.4]},
    ///           {"context": ["A"], "logits": [0.0, 1.0]}],
    ///  "repr_window": 1, "repr_dim": 64}
    /// ```
    pub fn from_json(name: impl Into<String>, text: &str) -> Result<Self, BackendError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RowDoc {
            context: Vec<String>,
            probs: Option<Vec<f64>>,
            logits: Option<Vec<f64>>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            vocab: Vocabulary,
            rows: Vec<RowDoc>,
            repr_window: Option<usize>,
            repr_dim: Option<usize>,
        }
        let doc: Doc =
            serde_json::from_str(text).map_err(|e| BackendError::Format(e.to_string()))?;
        let mut b = FixedTableModel::builder(name, doc.vocab.clone());
        for row in doc.rows {
            let ctx: Vec<TokenId> = row
                .context
                .iter()
                .map(|t| {
                    doc.vocab
                        .id(t)
                        .ok_or_else(|| BackendError::Format(format!("unknown token `{t}`")))
                })
                .collect::<Result<_, _>>()?;
            b = match (row.probs, row.logits) {
                (Some(p), None) => b.row(&ctx, &p),
                (None, Some(l)) => b.logit_row(&ctx, &l),
                _ => {
                    return Err(BackendError::Format(
                        "each row needs exactly one of probs/logits".into(),
                    ))
                }
            };
        }
        if let Some(window) = doc.repr_window {
            b = b.hashed_representations(doc.repr_dim.unwrap_or(DEFAULT_REPR_DIM), window);
        }
        b.build()
    }

    pub fn load(name: impl Into<String>, path: impl AsRef<Path>) -> Result<Self, BackendError> {
        Self::from_json(name, &fs::read_to_string(path)?)
    }

    fn lookup(&self, context: &[TokenId]) -> Result<&TokenDistribution, BackendError> {
        let longest = self.max_context.min(context.len());
        (0..=longest)
            .rev()
            .find_map(|len| self.rows.get(&context[context.len() - len..]))
            .ok_or_else(|| BackendError::MissingRow(context.to_vec()))
    }
}

impl FixedTableBuilder {
    pub fn row(mut self, context: &[TokenId], probs: &[f64]) -> Self {
        self.rows
            .push((context.to_vec(), Row::Probs(probs.to_vec())));
        self
    }

    pub fn logit_row(mut self, context: &[TokenId], logits: &[f64]) -> Self {
        self.rows
            .push((context.to_vec(), Row::Logits(logits.to_vec())));
        self
    }

    /// Enables hashed representations over the last `window` context tokens.
    pub fn hashed_representations(mut self, dim: usize, window: usize) -> Self {
        self.repr = Some(HashedRepresentation::new(dim, window));
        self
    }

    pub fn build(self) -> Result<FixedTableModel, BackendError> {
        let mut rows = HashMap::with_capacity(self.rows.len());
        let mut max_context = 0;
        for (ctx, row) in self.rows {
            self.vocab.check(&ctx)?;
            let dist = match row {
                Row::Probs(p) => TokenDistribution::from_probs(p)?,
                Row::Logits(l) => TokenDistribution::from_logits(l)?,
            };
            if dist.len() != self.vocab.len() {
                return Err(BackendError::Distribution(format!(
                    "row {ctx:?} has {} entries for a vocabulary of {}",
                    dist.len(),
                    self.vocab.len()
                )));
            }
            max_context = max_context.max(ctx.len());
            if rows.insert(ctx.clone(), dist).is_some() {
                return Err(BackendError::Config(format!(
                    "duplicate row for context {ctx:?}"
                )));
            }
        }
        if rows.is_empty() {
            return Err(BackendError::Config("table has no rows".into()));
        }
        Ok(FixedTableModel {
            name: self.name,
            vocab: self.vocab,
            rows,
            max_context,
            repr: self.repr,
        })
    }
}

impl LanguageModel for FixedTableModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn descriptor(&self) -> BackendDescriptor {
        let mut params = BTreeMap::new();
        params.insert("rows".to_owned(), self.rows.len().to_string());
        if let Some(r) = &self.repr {
            params.insert("repr_window".to_owned(), r.window.to_string());
        }
        BackendDescriptor {
            name: self.name.clone(),
            kind: BackendKind::FixedTable,
            vocab_size: self.vocab.len(),
            repr_dim: self.repr.map(|r| r.dim),
            params,
        }
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution, BackendError> {
        self.vocab.check(context)?;
        self.lookup(context).cloned()
    }

    fn token_representation(
        &self,
        context: &[TokenId],
        token: TokenId,
    ) -> Result<TokenRepresentation, BackendError> {
        let repr = self
            .repr
            .ok_or_else(|| BackendError::NoRepresentations(self.name.clone()))?;
        self.vocab.check(context)?;
        self.vocab.check(&[token])?;
        let start = context.len().saturating_sub(repr.window);
        let ctx: Vec<&str> = context[start..]
            .iter()
            .map(|&t| self.vocab.tokens()[t].as_str())
            .collect();
        Ok(TokenRepresentation(
            repr.represent(&ctx, &self.vocab.tokens()[token]),
        ))
    }

    fn supports_representations(&self) -> bool {
        self.repr.is_some()
    }
}
