//! Contrastive search (fixed and entropy-adaptive), frustratingly simple
//! decoding against an online anti-LM, and expert/amateur contrastive decoding.

use crate::backend::{LanguageModel, NGramCounts, TokenDistribution, TokenId, TokenRepresentation};

use super::{argmax_by, candidates, step_loop, DecodeError, Decoded};

/// Order of the online anti-LM used by FSD.
pub const FSD_ANTI_ORDER: usize = 2;
/// Additive smoothing of the online anti-LM used by FSD.
pub const FSD_ANTI_SMOOTHING: f64 = 0.1;

/// Normalized entropy `H(dist) / ln |V|`, clamped to `[0, 1]`.
pub fn adaptive_alpha(dist: &TokenDistribution) -> f64 {
    (dist.entropy() / (dist.len() as f64).ln()).clamp(0.0, 1.0)
}

fn cs_loop<A>(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    k: usize,
    max_new_tokens: usize,
    mut alpha_at: A,
) -> Result<Decoded, DecodeError>
where
    A: FnMut(&TokenDistribution) -> f64,
{
    if !model.supports_representations() {
        return Err(DecodeError::Capability(format!(
            "backend `{}` does not expose token representations",
            model.name()
        )));
    }
    model.vocab().check(prompt)?;
    // rep(x_j) for every context position, built once and extended per step
    let mut history: Vec<TokenRepresentation> = (0..prompt.len())
        .map(|j| model.token_representation(&prompt[..j], prompt[j]))
        .collect::<Result<_, _>>()?;
    step_loop(model, prompt, max_new_tokens, |context, dist| {
        let alpha = alpha_at(dist);
        let cands = candidates(dist, k);
        let reps: Vec<TokenRepresentation> = cands
            .iter()
            .map(|&v| model.token_representation(context, v))
            .collect::<Result<_, _>>()?;
        let penalty = |i: usize| {
            if history.is_empty() {
                0.0
            } else {
                history
                    .iter()
                    .map(|h| reps[i].cosine(h))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        };
        let scores: Vec<f64> = (0..cands.len())
            .map(|i| (1.0 - alpha) * dist.prob(cands[i]) - alpha * penalty(i))
            .collect();
        let pick = argmax_by(&(0..cands.len()).collect::<Vec<_>>(), |i| scores[i]);
        history.push(reps[pick].clone());
        Ok(cands[pick])
    })
}

/// Per step, over the top-`k` tokens, maximizes
/// `(1 − α)·p(v | x) − α·max_j cos(rep(v), rep(x_j))`. The penalty is 0 while
/// the context is empty.
pub fn contrastive_search_decode(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    alpha: f64,
    k: usize,
    max_new_tokens: usize,
) -> Result<Decoded, DecodeError> {
    cs_loop(model, prompt, k, max_new_tokens, |_| alpha)
}

/// Contrastive search with `α_t = H_t / ln |V|`. Records the α trace.
pub fn adaptive_contrastive_search_decode(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    k: usize,
    max_new_tokens: usize,
) -> Result<Decoded, DecodeError> {
    let mut trace = Vec::new();
    let mut out = cs_loop(model, prompt, k, max_new_tokens, |d| {
        let a = adaptive_alpha(d);
        trace.push(a);
        a
    })?;
    out.alpha_trace = Some(trace);
    Ok(out)
}

/// Top-`k` candidate maximizing `(1 − β)·p_lm(v) − β·p_anti(v)`.
pub fn fsd_select(lm: &TokenDistribution, anti: &[f64], k: usize, beta: f64) -> TokenId {
    let cands = candidates(lm, k);
    argmax_by(&cands, |v| (1.0 - beta) * lm.prob(v) - beta * anti[v])
}

/// FSD: the anti-LM is an order-2 additive-smoothed n-gram fitted to the
/// prompt and updated with every emitted token.
pub fn fsd_decode(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    k: usize,
    beta: f64,
    max_new_tokens: usize,
) -> Result<Decoded, DecodeError> {
    model.vocab().check(prompt)?;
    let mut anti = NGramCounts::new(FSD_ANTI_ORDER, model.vocab().len(), FSD_ANTI_SMOOTHING)?;
    anti.observe(prompt);
    step_loop(model, prompt, max_new_tokens, |context, dist| {
        let tok = fsd_select(dist, &anti.probabilities(context), k, beta);
        anti.push(context, tok);
        Ok(tok)
    })
}

/// Expert top-`k` candidate maximizing `ln p_expert(v) − ln p_amateur(v)`.
pub fn contrastive_decoding_select(
    expert: &TokenDistribution,
    amateur: &TokenDistribution,
    k: usize,
) -> TokenId {
    let cands = candidates(expert, k);
    argmax_by(&cands, |v| expert.prob(v).ln() - amateur.prob(v).ln())
}

pub fn contrastive_decode(
    expert: &dyn LanguageModel,
    amateur: &dyn LanguageModel,
    prompt: &[TokenId],
    k: usize,
    max_new_tokens: usize,
) -> Result<Decoded, DecodeError> {
    if expert.vocab() != amateur.vocab() {
        return Err(DecodeError::Config(format!(
            "expert `{}` and amateur `{}` have different vocabularies",
            expert.name(),
            amateur.name()
        )));
    }
    step_loop(expert, prompt, max_new_tokens, |context, dist| {
        let weak = amateur.next_distribution(context)?;
        Ok(contrastive_decoding_select(dist, &weak, k))
    })
}
