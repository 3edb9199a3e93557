//! Decoding strategies, text-quality metrics and a reproducible sweep harness
//! for open-ended generation, runnable against small deterministic backends.
//!
//! * [`backend`]: the language-model interface and toy implementations.
//! * [`decoding`]: greedy, beam, sampling and contrastive strategies.
//! * [`metrics`]: diversity, coherence, a quantized MAUVE variant and QText.
//! * [`corpus`]: dataset loading and tokenization.
//! * [`sweep`]: grid expansion, parallel execution, aggregation and ranking.

pub mod backend;
pub mod corpus;
pub mod decoding;
pub mod metrics;
pub mod sweep;
mod util;

pub use util::stable_hash;
