//! Hashed token representations.
//!
//! A representation is the L2-normalized sum of pseudo-random dense vectors,
//! one per feature: the candidate token alone, and the candidate paired with
//! each context suffix of length `1..=window`. Each feature vector is drawn
//! from a ChaCha stream seeded by a stable hash of the feature, so the same
//! (context, token) always yields the same vector on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::util::stable_hash;

pub const DEFAULT_REPR_DIM: usize = 64;

const CONTEXT_FEATURE_WEIGHT: f64 = 0.5;
const SEP: char = '\u{1f}';

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedRepresentation {
    pub dim: usize,
    pub window: usize,
}

impl HashedRepresentation {
    pub fn new(dim: usize, window: usize) -> Self {
        assert!(dim > 0, "representation dimension must be positive");
        Self { dim, window }
    }

    pub fn represent<S: AsRef<str>>(&self, context: &[S], token: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.add_feature(&mut out, &format!("t{SEP}{token}"), 1.0);
        let window = self.window.min(context.len());
        for m in 1..=window {
            let mut key = format!("c{m}");
            for c in &context[context.len() - m..] {
                key.push(SEP);
                key.push_str(c.as_ref());
            }
            key.push(SEP);
            key.push_str(token);
            self.add_feature(&mut out, &key, CONTEXT_FEATURE_WEIGHT);
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|x| *x /= norm);
        }
        out
    }

    /// Mean of the representations of every token of `tokens`, each taken in
    /// its left context.
    pub fn mean_pooled<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        if tokens.is_empty() {
            return out;
        }
        for i in 0..tokens.len() {
            let v = self.represent(&tokens[..i], tokens[i].as_ref());
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        }
        let n = tokens.len() as f64;
        out.iter_mut().for_each(|x| *x /= n);
        out
    }

    fn add_feature(&self, out: &mut [f64], key: &str, weight: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(key.as_bytes()));
        for o in out.iter_mut() {
            *o += weight * rng.gen_range(-1.0..1.0);
        }
    }
}

/// Cosine similarity; zero if either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unit_norm() {
        let h = HashedRepresentation::new(64, 2);
        let a = h.represent(&["the", "cat"], "sat");
        let b = h.represent(&["the", "cat"], "sat");
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!((cosine_similarity(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distinct_tokens_same_context_are_not_parallel() {
        let h = HashedRepresentation::new(64, 1);
        let a = h.represent(&["x"], "a");
        let b = h.represent(&["x"], "b");
        assert!(cosine_similarity(&a, &b) < 1.0 - 1e-6);
    }

    #[test]
    fn same_token_in_other_context_stays_similar() {
        let h = HashedRepresentation::new(64, 1);
        let a = h.represent(&["x"], "a");
        let b = h.represent(&["y"], "a");
        let c = h.represent(&["x"], "c");
        assert!(cosine_similarity(&a, &b) > cosine_similarity(&a, &c));
    }

    #[test]
    fn window_zero_ignores_context() {
        let h = HashedRepresentation::new(16, 0);
        assert_eq!(h.represent(&["p"], "a"), h.represent(&["q"], "a"));
    }
}
