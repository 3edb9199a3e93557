//! Seeded ancestral sampling with temperature, top-k, nucleus and typical
//! truncation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::{LanguageModel, TokenDistribution, TokenId};

use super::truncation::{apply_temperature, nucleus_set, truncate_top_k, typical_mass_set};
use super::{step_loop, DecodeError, Decoded, DecodingConfig};

/// Inverse-CDF draw: one uniform variate, cumulative sum in ascending id order.
pub fn sample_token<R: Rng + ?Sized>(dist: &TokenDistribution, rng: &mut R) -> TokenId {
    let probs = dist.probs();
    let total: f64 = probs.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cum += p;
        last = i;
        if u < cum {
            return i;
        }
    }
    last
}

/// Samples a continuation. `config` must be one of the four sampling
/// strategies. `step_logprobs` are scored under the unmodified backend
/// distribution.
pub fn sample_decode(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    config: &DecodingConfig,
    seed: u64,
    max_new_tokens: usize,
) -> Result<Decoded, DecodeError> {
    config.validate()?;
    if !config.is_stochastic() {
        return Err(DecodeError::Config(format!(
            "`{config}` is not a sampling strategy"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    step_loop(model, prompt, max_new_tokens, |_, dist| {
        let shaped = match *config {
            DecodingConfig::Temperature { t } => apply_temperature(&dist.logits_or_log_probs(), t)?,
            DecodingConfig::TopK { k } => truncate_top_k(dist, k),
            DecodingConfig::TopP { p } => dist.restrict(&nucleus_set(dist, p)),
            DecodingConfig::Typical { tau } => dist.restrict(&typical_mass_set(dist, tau)),
            _ => unreachable!("checked above"),
        };
        Ok(sample_token(&shaped, &mut rng))
    })
}
