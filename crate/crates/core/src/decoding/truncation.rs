//! Distribution transforms: top-k, nucleus, typical set and temperature.

use crate::backend::{TokenDistribution, TokenId};

use super::DecodeError;

/// Slack on cumulative-mass comparisons. Absorbs summation rounding so that,
/// e.g., eight tokens of mass 0.1 reach a threshold of 0.8.
pub const MASS_SLACK: f64 = 1e-12;

/// Keeps the `k` most probable tokens (lowest index on ties) and
/// renormalizes. `k >= |V|` is the identity; `k = 0` is treated as 1.
pub fn truncate_top_k(dist: &TokenDistribution, k: usize) -> TokenDistribution {
    if k >= dist.len() {
        return dist.clone();
    }
    let keep: Vec<TokenId> = dist.ranked().into_iter().take(k.max(1)).collect();
    dist.restrict(&keep)
}

/// Shortest prefix of the probability-ranked tokens whose cumulative mass
/// reaches `p`; the crossing token is included. Returned ascending by id.
pub fn nucleus_set(dist: &TokenDistribution, p: f64) -> Vec<TokenId> {
    let ranked: Vec<TokenId> = dist
        .ranked()
        .into_iter()
        .filter(|&t| dist.prob(t) > 0.0)
        .collect();
    mass_prefix(dist, ranked, p)
}

/// Tokens ranked by `|−log p(v) − H|` (closest to the expected surprisal
/// first), then the shortest prefix whose mass reaches `tau`. Ascending by id.
pub fn typical_mass_set(dist: &TokenDistribution, tau: f64) -> Vec<TokenId> {
    let h = dist.entropy();
    let mut scored: Vec<(TokenId, f64)> = (0..dist.len())
        .filter(|&t| dist.prob(t) > 0.0)
        .map(|t| (t, (-dist.prob(t).ln() - h).abs()))
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    mass_prefix(dist, scored.into_iter().map(|(t, _)| t).collect(), tau)
}

fn mass_prefix(dist: &TokenDistribution, ranked: Vec<TokenId>, threshold: f64) -> Vec<TokenId> {
    let mut cum = 0.0;
    let mut set = Vec::new();
    for t in ranked {
        cum += dist.prob(t);
        set.push(t);
        if cum + MASS_SLACK >= threshold {
            break;
        }
    }
    set.sort_unstable();
    set
}

/// `softmax(logits / t)`.
pub fn apply_temperature(logits: &[f64], t: f64) -> Result<TokenDistribution, DecodeError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(DecodeError::Config(format!(
            "temperature must be > 0, got {t}"
        )));
    }
    Ok(TokenDistribution::from_logits(
        logits.iter().map(|l| l / t).collect(),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::entropy;
    use proptest::prelude::*;

    fn dist(p: &[f64]) -> TokenDistribution {
        TokenDistribution::from_probs(p.to_vec()).unwrap()
    }

    #[test]
    fn top_k_examples() {
        let d = dist(&[0.5, 0.3, 0.2]);
        let t = truncate_top_k(&d, 2);
        assert!((t.probs()[0] - 0.625).abs() < 1e-15);
        assert!((t.probs()[1] - 0.375).abs() < 1e-15);
        assert_eq!(t.probs()[2], 0.0);
        assert_eq!(truncate_top_k(&d, 3), d);
        assert_eq!(truncate_top_k(&d, 10), d);
        assert_eq!(truncate_top_k(&d, 1).probs(), &[1.0, 0.0, 0.0]);
        // ties keep the lowest index
        let tie = dist(&[0.2, 0.4, 0.4]);
        assert_eq!(truncate_top_k(&tie, 1).probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn nucleus_examples() {
        let d = dist(&[0.5, 0.3, 0.2]);
        assert_eq!(nucleus_set(&d, 0.7), vec![0, 1]);
        assert_eq!(nucleus_set(&d, 0.5), vec![0]);
        assert_eq!(nucleus_set(&d, 1.0), vec![0, 1, 2]);
        let u = dist(&[0.1; 10]);
        assert_eq!(nucleus_set(&u, 0.35), vec![0, 1, 2, 3]);
        assert_eq!(nucleus_set(&u, 0.8), (0..8).collect::<Vec<_>>());
        let with_zero = dist(&[0.0, 0.6, 0.4]);
        assert_eq!(nucleus_set(&with_zero, 1.0), vec![1, 2]);
    }

    #[test]
    fn temperature_examples() {
        let plain = TokenDistribution::from_logits(vec![2.0, 0.0]).unwrap();
        let t1 = apply_temperature(&[2.0, 0.0], 1.0).unwrap();
        assert_eq!(t1.probs(), plain.probs());
        let e2 = 2f64.exp();
        assert!((t1.probs()[0] - e2 / (e2 + 1.0)).abs() < 1e-15);
        assert!((t1.probs()[0] - 0.8808).abs() < 1e-4);
        let cold = apply_temperature(&[2.0, 0.0], 1e-3).unwrap();
        assert_eq!(cold.probs(), &[1.0, 0.0]);
        assert!(apply_temperature(&[2.0, 0.0], 0.0).is_err());
        assert!(apply_temperature(&[2.0, 0.0], -1.0).is_err());
    }

    // Brute force: every subset ordered by (distance, id), prefix by mass.
    fn typical_oracle(p: &[f64], tau: f64) -> Vec<TokenId> {
        let h: f64 = -p
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|x| x * x.ln())
            .sum::<f64>();
        let mut idx: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
        idx.sort_by(|&a, &b| {
            let da = (-p[a].ln() - h).abs();
            let db = (-p[b].ln() - h).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        for n in 1..=idx.len() {
            let mass: f64 = idx[..n].iter().map(|&i| p[i]).sum();
            if mass + MASS_SLACK >= tau {
                let mut s = idx[..n].to_vec();
                s.sort();
                return s;
            }
        }
        let mut s = idx;
        s.sort();
        s
    }

    #[test]
    fn typical_examples() {
        let d = dist(&[0.7, 0.2, 0.1]);
        let h = d.entropy();
        assert!((h - 0.8018).abs() < 1e-4);
        // token 0: |0.357 - 0.802| = 0.445; token 1: |1.609 - 0.802| = 0.807
        assert_eq!(typical_oracle(d.probs(), 0.2), vec![0]);
        assert_eq!(typical_mass_set(&d, 0.2), vec![0]);
        assert_eq!(typical_mass_set(&dist(&[0.0, 1.0, 0.0]), 0.5), vec![1]);
        let u = dist(&[0.1; 10]);
        for (tau, n) in [(0.05, 1), (0.3, 3), (0.35, 4), (0.8, 8), (1.0, 10)] {
            assert_eq!(
                typical_mass_set(&u, tau),
                (0..n).collect::<Vec<_>>(),
                "tau={tau}"
            );
        }
    }

    fn arb_dist() -> impl Strategy<Value = TokenDistribution> {
        prop::collection::vec(0.0f64..1.0, 2..20)
            .prop_filter_map("zero mass", |w| TokenDistribution::from_weights(w).ok())
    }

    proptest! {
        #[test]
        fn truncations_stay_valid_and_inside_support(d in arb_dist(), k in 1usize..25, p in 0.01f64..=1.0) {
            for out in [
                truncate_top_k(&d, k),
                d.restrict(&nucleus_set(&d, p)),
                d.restrict(&typical_mass_set(&d, p)),
            ] {
                let total: f64 = out.probs().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                for (i, &q) in out.probs().iter().enumerate() {
                    prop_assert!(q >= 0.0);
                    if d.prob(i) == 0.0 {
                        prop_assert_eq!(q, 0.0);
                    }
                }
            }
        }

        #[test]
        fn nucleus_is_monotone_in_p(d in arb_dist(), a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let small = nucleus_set(&d, lo);
            let big = nucleus_set(&d, hi);
            prop_assert!(small.iter().all(|t| big.contains(t)));
        }

        #[test]
        fn top_k_is_monotone_in_k(d in arb_dist(), a in 1usize..25, b in 1usize..25) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let small = truncate_top_k(&d, lo);
            let big = truncate_top_k(&d, hi);
            for i in 0..d.len() {
                if small.prob(i) > 0.0 {
                    prop_assert!(big.prob(i) > 0.0);
                }
            }
        }

        #[test]
        fn typical_matches_oracle(d in arb_dist(), tau in 0.01f64..=1.0) {
            prop_assert_eq!(typical_mass_set(&d, tau), typical_oracle(d.probs(), tau));
        }

        #[test]
        fn entropy_grows_with_temperature(logits in prop::collection::vec(-5.0f64..5.0, 2..30)) {
            let spread = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - logits.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-3);
            let grid = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
            let hs: Vec<f64> = grid.iter().map(|&t| entropy(apply_temperature(&logits, t).unwrap().probs())).collect();
            for w in hs.windows(2) {
                prop_assert!(w[0] < w[1], "{:?}", hs);
            }
        }
    }
}
