//! Named backends built from config documents.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use super::{
    train_ngram_backend, BackendError, BackendKind, FixedTableModel, LanguageModel, NGramModel,
    DEFAULT_REPR_DIM,
};
use crate::corpus::{split_documents, TokenizerScheme};

pub const DEFAULT_ORDER: usize = 2;
pub const DEFAULT_SMOOTHING: f64 = 0.1;

/// One `[[backend]]` entry of a config document.
///
/// ```toml
/// [[backend]]
/// name = "bigram"
/// kind = "ngram"        # ngram | fixed-table | external
/// order = 2
/// smoothing = 0.1
/// corpus = "train.txt"  # blank-line separated documents
/// scheme = "whitespace"
/// repr_dim = 64
/// # model = "bigram.json"  (pre-trained; replaces corpus/order/smoothing)
/// # table = "toy.json"     (fixed-table kind)
/// ```
///
/// Relative paths resolve against the directory of the config document.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    pub name: String,
    pub kind: BackendKind,
    pub order: Option<usize>,
    pub smoothing: Option<f64>,
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub scheme: Option<TokenizerScheme>,
    pub repr_dim: Option<usize>,
}

impl BackendSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Arc<dyn LanguageModel>, BackendError> {
        let resolve = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base_dir.join(p)
            }
        };
        match self.kind {
            BackendKind::Ngram => {
                if let Some(model) = &self.model {
                    let m = NGramModel::load(resolve(model))?.with_name(self.name.clone());
                    return Ok(Arc::new(m));
                }
                let corpus = self.corpus.as_ref().ok_or_else(|| {
                    BackendError::Config(format!(
                        "backend `{}` needs `corpus` or `model`",
                        self.name
                    ))
                })?;
                let text = fs::read_to_string(resolve(corpus))?;
                let scheme = self.scheme.unwrap_or_default();
                let docs: Vec<Vec<String>> = split_documents(&text)
                    .iter()
                    .map(|d| scheme.split(d))
                    .collect();
                let m = train_ngram_backend(
                    self.name.clone(),
                    &docs,
                    self.order.unwrap_or(DEFAULT_ORDER),
                    self.smoothing.unwrap_or(DEFAULT_SMOOTHING),
                    self.repr_dim.unwrap_or(DEFAULT_REPR_DIM),
                )?;
                Ok(Arc::new(m))
            }
            BackendKind::FixedTable => {
                let table = self.table.as_ref().ok_or_else(|| {
                    BackendError::Config(format!("backend `{}` needs `table`", self.name))
                })?;
                Ok(Arc::new(FixedTableModel::load(
                    self.name.clone(),
                    resolve(table),
                )?))
            }
            BackendKind::External => Err(BackendError::UnsupportedKind(format!(
                "{} (backend `{}`): no external runtime is linked",
                self.kind, self.name
            ))),
        }
    }
}

/// Backends addressable by name.
#[derive(Clone, Default)]
pub struct BackendRegistry {
    backends: BTreeMap<String, Arc<dyn LanguageModel>>,
}

impl BackendRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_specs(specs: &[BackendSpec], base_dir: &Path) -> Result<Self, BackendError> {
        let mut reg = Self::new();
        for spec in specs {
            reg.insert(spec.build(base_dir)?)?;
        }
        Ok(reg)
    }

    /// Registers a backend under its own name. Names must be unique and use
    /// only ASCII letters, digits, `-`, `_` and `.`.
    pub fn insert(&mut self, backend: Arc<dyn LanguageModel>) -> Result<(), BackendError> {
        let name = backend.name().to_owned();
        validate_backend_name(&name)?;
        if self.backends.contains_key(&name) {
            return Err(BackendError::Config(format!(
                "duplicate backend name `{name}`"
            )));
        }
        self.backends.insert(name, backend);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn LanguageModel>> {
        self.backends.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.backends.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.backends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backends.is_empty()
    }
}

pub fn validate_backend_name(name: &str) -> Result<(), BackendError> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(BackendError::Config(format!(
            "invalid backend name `{name}`"
        )))
    }
}
