//! Greedy and beam search.

use std::cmp::Ordering;

use crate::backend::{LanguageModel, TokenId};

use super::{step_loop, DecodeError, Decoded};

pub fn greedy_decode(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    max_new_tokens: usize,
) -> Result<Decoded, DecodeError> {
    step_loop(model, prompt, max_new_tokens, |_, dist| Ok(dist.argmax()))
}

#[derive(Debug, Clone)]
struct Hypothesis {
    tokens: Vec<TokenId>,
    step_logprobs: Vec<f64>,
    score: f64,
    finished: bool,
}

// Higher joint log-prob first, then lexicographically smaller token sequence.
fn rank(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Beam search over raw joint log-probability (no length normalization).
///
/// Keeps the `w` best prefixes per step. A hypothesis that emits end-of-text
/// stays in the pool unchanged and keeps competing on its score. Returns the
/// best hypothesis after `max_new_tokens` steps or once every beam is done.
pub fn beam_decode(
    model: &dyn LanguageModel,
    prompt: &[TokenId],
    w: usize,
    max_new_tokens: usize,
) -> Result<Decoded, DecodeError> {
    if w == 0 {
        return Err(DecodeError::Config("beam width w must be >= 1".into()));
    }
    model.vocab().check(prompt)?;
    let eos = model.eos();
    let mut beams = vec![Hypothesis {
        tokens: Vec::new(),
        step_logprobs: Vec::new(),
        score: 0.0,
        finished: false,
    }];
    let mut context = prompt.to_vec();
    for _ in 0..max_new_tokens {
        if beams.iter().all(|h| h.finished) {
            break;
        }
        let mut pool = Vec::with_capacity(beams.len() * w);
        for hyp in beams {
            if hyp.finished {
                pool.push(hyp);
                continue;
            }
            context.truncate(prompt.len());
            context.extend_from_slice(&hyp.tokens);
            let dist = model.next_distribution(&context)?;
            // the global top-w can hold at most w children of one parent
            for tok in dist
                .ranked()
                .into_iter()
                .filter(|&t| dist.prob(t) > 0.0)
                .take(w)
            {
                let lp = dist.prob(tok).ln();
                let mut child = hyp.clone();
                child.tokens.push(tok);
                child.step_logprobs.push(lp);
                child.score += lp;
                child.finished = Some(tok) == eos;
                pool.push(child);
            }
        }
        pool.sort_by(rank);
        pool.truncate(w);
        beams = pool;
    }
    let best = beams.into_iter().min_by(rank).expect("beam is never empty");
    Ok(Decoded {
        tokens: best.tokens,
        step_logprobs: best.step_logprobs,
        alpha_trace: None,
    })
}
