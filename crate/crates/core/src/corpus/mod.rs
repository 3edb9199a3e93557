//! Prompt/gold datasets and the reversible tokenizers used by toy backends.
//!
//! Two splitting schemes exist. `whitespace` splits on Unicode whitespace and
//! joins with a single space, so round trips are exact only up to collapsing
//! whitespace runs (and trimming the ends). `byte` emits one token per byte
//! and round-trips any string exactly.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, TokenId, Vocabulary, UNK_TOKEN};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("dataset `{0}` contains no usable records")]
    Empty(String),
    #[error("invalid loader options: {0}")]
    Options(String),
    #[error(transparent)]
    Vocabulary(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerScheme {
    #[default]
    Whitespace,
    Byte,
}

impl TokenizerScheme {
    /// Splits text into token strings.
    pub fn split(self, text: &str) -> Vec<String> {
        match self {
            TokenizerScheme::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
            TokenizerScheme::Byte => text.bytes().map(byte_piece).collect(),
        }
    }

    /// Inverse of [`split`](Self::split). Byte pieces that do not form valid
    /// UTF-8 are replaced lossily.
    pub fn join<S: AsRef<str>>(self, pieces: &[S]) -> String {
        match self {
            TokenizerScheme::Whitespace => pieces
                .iter()
                .map(AsRef::as_ref)
                .collect::<Vec<_>>()
                .join(" "),
            TokenizerScheme::Byte => {
                let bytes: Vec<u8> = pieces
                    .iter()
                    .filter_map(|p| piece_byte(p.as_ref()))
                    .collect();
                String::from_utf8_lossy(&bytes).into_owned()
            }
        }
    }
}

impl fmt::Display for TokenizerScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenizerScheme::Whitespace => "whitespace",
            TokenizerScheme::Byte => "byte",
        })
    }
}

impl FromStr for TokenizerScheme {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whitespace" => Ok(TokenizerScheme::Whitespace),
            "byte" => Ok(TokenizerScheme::Byte),
            other => Err(CorpusError::Options(format!(
                "unknown tokenizer scheme `{other}`"
            ))),
        }
    }
}

// Printable ASCII other than space stands for itself; everything else is <0xNN>.
fn byte_piece(b: u8) -> String {
    if b.is_ascii_graphic() {
        (b as char).to_string()
    } else {
        format!("<0x{b:02X}>")
    }
}

fn piece_byte(piece: &str) -> Option<u8> {
    let bytes = piece.as_bytes();
    if bytes.len() == 1 && bytes[0].is_ascii_graphic() {
        return Some(bytes[0]);
    }
    piece
        .strip_prefix("<0x")
        .and_then(|rest| rest.strip_suffix('>'))
        .and_then(|hex| u8::from_str_radix(hex, 16).ok())
}

/// Splitting scheme plus a frozen vocabulary.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    scheme: TokenizerScheme,
    vocab: Vocabulary,
}

impl Tokenizer {
    /// Builds the vocabulary from `texts`. The byte scheme always covers all
    /// 256 bytes so that every string can be encoded.
    pub fn fit<S: AsRef<str>>(scheme: TokenizerScheme, texts: &[S]) -> Result<Self, CorpusError> {
        let mut tokens: Vec<String> = Vec::new();
        match scheme {
            TokenizerScheme::Byte => tokens.extend((0..=255u8).map(byte_piece)),
            TokenizerScheme::Whitespace => {
                let mut seen = HashSet::new();
                for t in texts {
                    for piece in scheme.split(t.as_ref()) {
                        if seen.insert(piece.clone()) {
                            tokens.push(piece);
                        }
                    }
                }
            }
        }
        if !tokens.iter().any(|t| t == UNK_TOKEN) {
            tokens.push(UNK_TOKEN.to_owned());
        }
        // a one-word corpus still needs a second entry
        if tokens.len() < 2 {
            tokens.insert(0, String::new());
        }
        Ok(Self {
            scheme,
            vocab: Vocabulary::new(tokens)?,
        })
    }

    pub fn with_vocab(scheme: TokenizerScheme, vocab: Vocabulary) -> Self {
        Self { scheme, vocab }
    }

    pub fn scheme(&self) -> TokenizerScheme {
        self.scheme
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Encodes against the frozen vocabulary; unseen pieces map to `<unk>`.
    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        let unk = self
            .vocab
            .unk()
            .expect("tokenizer vocabularies always contain <unk>");
        self.scheme
            .split(text)
            .iter()
            .map(|p| self.vocab.id(p).unwrap_or(unk))
            .collect()
    }

    pub fn detokenize(&self, ids: &[TokenId]) -> String {
        let pieces: Vec<&str> = ids.iter().filter_map(|&i| self.vocab.token(i)).collect();
        self.scheme.join(&pieces)
    }
}

/// One prompt paired with its human continuation, as token strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub prompt_id: String,
    pub dataset_id: String,
    pub prompt: Vec<String>,
    pub gold: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    #[default]
    Jsonl,
    Rawtext,
}

impl FromStr for DatasetFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(DatasetFormat::Jsonl),
            "rawtext" => Ok(DatasetFormat::Rawtext),
            other => Err(CorpusError::Options(format!(
                "unknown dataset format `{other}`"
            ))),
        }
    }
}

pub const DEFAULT_PREFIX_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub format: DatasetFormat,
    pub scheme: TokenizerScheme,
    /// Prompt length used to split raw documents.
    pub prefix_len: usize,
    /// Minimum gold length for a raw document to be kept.
    pub min_gold_len: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            format: DatasetFormat::Jsonl,
            scheme: TokenizerScheme::Whitespace,
            prefix_len: DEFAULT_PREFIX_LEN,
            min_gold_len: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub id: String,
    pub scheme: TokenizerScheme,
    pub records: Vec<PromptRecord>,
    /// Raw documents dropped for being too short.
    pub skipped: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn load_dataset(
    path: impl AsRef<Path>,
    dataset_id: &str,
    opts: &LoadOptions,
) -> Result<Dataset, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_dataset(&text, dataset_id, opts)
}

/// Same as [`load_dataset`] on in-memory text.
pub fn parse_dataset(
    text: &str,
    dataset_id: &str,
    opts: &LoadOptions,
) -> Result<Dataset, CorpusError> {
    let (records, skipped) = match opts.format {
        DatasetFormat::Jsonl => (parse_jsonl(text, dataset_id, opts.scheme)?, 0),
        DatasetFormat::Rawtext => parse_rawtext(text, dataset_id, opts)?,
    };
    if skipped > 0 {
        log::warn!(
            "dataset `{dataset_id}`: skipped {skipped} documents shorter than the prompt length"
        );
    }
    if records.is_empty() {
        return Err(CorpusError::Empty(dataset_id.to_owned()));
    }
    Ok(Dataset {
        id: dataset_id.to_owned(),
        scheme: opts.scheme,
        records,
        skipped,
    })
}

#[derive(Deserialize)]
struct JsonRecord {
    prompt_id: Option<String>,
    prompt: String,
    gold: String,
}

fn parse_jsonl(
    text: &str,
    dataset_id: &str,
    scheme: TokenizerScheme,
) -> Result<Vec<PromptRecord>, CorpusError> {
    let mut ids = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let prompt_id = rec.prompt_id.unwrap_or_else(|| format!("line{line_no}"));
        let prompt = scheme.split(&rec.prompt);
        let gold = scheme.split(&rec.gold);
        if prompt.is_empty() || gold.is_empty() {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: "prompt and gold must both contain tokens".into(),
            });
        }
        if !ids.insert(prompt_id.clone()) {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: format!("duplicate prompt_id `{prompt_id}`"),
            });
        }
        out.push(PromptRecord {
            prompt_id,
            dataset_id: dataset_id.to_owned(),
            prompt,
            gold,
        });
    }
    Ok(out)
}

fn parse_rawtext(
    text: &str,
    dataset_id: &str,
    opts: &LoadOptions,
) -> Result<(Vec<PromptRecord>, usize), CorpusError> {
    if opts.prefix_len == 0 {
        return Err(CorpusError::Options(
            "prefix_len must be >= 1 for raw text".into(),
        ));
    }
    let min_gold = opts.min_gold_len.max(1);
    let mut out = Vec::new();
    let mut skipped = 0;
    for (i, doc) in split_documents(text).iter().enumerate() {
        let mut tokens = opts.scheme.split(doc);
        if tokens.len() < opts.prefix_len + min_gold {
            skipped += 1;
            continue;
        }
        let gold = tokens.split_off(opts.prefix_len);
        out.push(PromptRecord {
            prompt_id: format!("doc{i}"),
            dataset_id: dataset_id.to_owned(),
            prompt: tokens,
            gold,
        });
    }
    Ok((out, skipped))
}

/// Splits text into blank-line separated documents.
pub fn split_documents(text: &str) -> Vec<String> {
    let mut docs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                docs.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        docs.push(current.join("\n"));
    }
    docs
}
