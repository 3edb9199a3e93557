//! Quantized divergence-frontier similarity between two text sets.
//!
//! Both sets are embedded, pooled and clustered together with seeded
//! k-means++; each set becomes a histogram over clusters. For mixtures
//! `R = λP + (1 − λ)Q` the frontier points
//! `(exp(−c·KL(Q‖R)), exp(−c·KL(P‖R)))` trace a curve whose area is the score.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::{HashedRepresentation, DEFAULT_REPR_DIM};

use super::MetricsError;

pub const DEFAULT_MAUVE_BINS: usize = 16;
pub const DEFAULT_MAUVE_SCALING: f64 = 5.0;
pub const DEFAULT_MAUVE_SEED: u64 = 0x006d_6175_7665;
/// Number of interior mixture weights on the frontier.
pub const FRONTIER_POINTS: usize = 99;
const LLOYD_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MauveOptions {
    pub num_bins: usize,
    pub scaling: f64,
    pub seed: u64,
}

impl Default for MauveOptions {
    fn default() -> Self {
        Self {
            num_bins: DEFAULT_MAUVE_BINS,
            scaling: DEFAULT_MAUVE_SCALING,
            seed: DEFAULT_MAUVE_SEED,
        }
    }
}

/// A text to embed, with an id used in error messages.
#[derive(Debug, Clone, Copy)]
pub struct LabeledText<'a> {
    pub id: &'a str,
    pub tokens: &'a [String],
}

pub trait TextEmbedder: Sync {
    fn embed(&self, tokens: &[String]) -> Result<Vec<f64>, String>;
}

/// Mean-pooled hashed token representations.
#[derive(Debug, Clone, Copy)]
pub struct HashedTextEmbedder {
    pub repr: HashedRepresentation,
}

impl HashedTextEmbedder {
    pub fn new(dim: usize, window: usize) -> Self {
        Self {
            repr: HashedRepresentation::new(dim, window),
        }
    }
}

impl Default for HashedTextEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_REPR_DIM, 1)
    }
}

impl TextEmbedder for HashedTextEmbedder {
    fn embed(&self, tokens: &[String]) -> Result<Vec<f64>, String> {
        if tokens.is_empty() {
            return Err("empty text".into());
        }
        Ok(self.repr.mean_pooled(tokens))
    }
}

pub fn mauve_lite(
    generated: &[LabeledText<'_>],
    reference: &[LabeledText<'_>],
    embedder: &dyn TextEmbedder,
    opts: &MauveOptions,
) -> Result<f64, MetricsError> {
    let embed = |texts: &[LabeledText<'_>]| -> Result<Vec<Vec<f64>>, MetricsError> {
        texts
            .iter()
            .map(|t| {
                embedder
                    .embed(t.tokens)
                    .map_err(|message| MetricsError::Embedding {
                        id: t.id.to_owned(),
                        message,
                    })
            })
            .collect()
    };
    mauve_from_embeddings(&embed(generated)?, &embed(reference)?, opts)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Seeded k-means++ initialization followed by Lloyd iterations. Stops adding
/// centers once every point coincides with one.
fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let u = rng.gen::<f64>() * total;
        let mut cum = 0.0;
        let mut pick = points.len() - 1;
        for (i, &d) in d2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            cum += d;
            pick = i;
            if u < cum {
                break;
            }
        }
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    let dim = points[0].len();
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..LLOYD_MAX_ITERS {
        let mut sums = vec![vec![0.0; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for ((c, s), &n) in centers.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *c = s.into_iter().map(|x| x / n as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

fn kl(p: &[f64], r: &[f64]) -> f64 {
    p.iter()
        .zip(r)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &ri)| pi * (pi / ri).ln())
        .sum()
}

/// Frontier area for two point clouds of equal dimension.
pub fn mauve_from_embeddings(
    p_points: &[Vec<f64>],
    q_points: &[Vec<f64>],
    opts: &MauveOptions,
) -> Result<f64, MetricsError> {
    if p_points.is_empty() || q_points.is_empty() {
        return Err(MetricsError::Input(
            "both text sets must be non-empty".into(),
        ));
    }
    if opts.num_bins < 2 {
        return Err(MetricsError::Input(format!(
            "num_bins must be >= 2, got {}",
            opts.num_bins
        )));
    }
    if !(opts.scaling > 0.0 && opts.scaling.is_finite()) {
        return Err(MetricsError::Input(format!(
            "scaling must be > 0, got {}",
            opts.scaling
        )));
    }
    let dim = p_points[0].len();
    if dim == 0
        || p_points
            .iter()
            .chain(q_points)
            .any(|v| v.len() != dim || v.iter().any(|x| !x.is_finite()))
    {
        return Err(MetricsError::Input(
            "embeddings must be finite and share one non-zero dimension".into(),
        ));
    }
    // sorting the pooled cloud makes clustering independent of input order
    // and of which set is which
    let mut pooled: Vec<(&Vec<f64>, bool)> = p_points
        .iter()
        .map(|v| (v, true))
        .chain(q_points.iter().map(|v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| lex_cmp(a.0, b.0));
    let points: Vec<Vec<f64>> = pooled.iter().map(|(v, _)| (*v).clone()).collect();
    let assign = kmeans(&points, opts.num_bins.min(points.len()), opts.seed);
    let bins = assign.iter().max().map_or(0, |m| m + 1);
    let mut p = vec![0.0; bins];
    let mut q = vec![0.0; bins];
    for ((_, from_p), &a) in pooled.iter().zip(&assign) {
        if *from_p {
            p[a] += 1.0;
        } else {
            q[a] += 1.0;
        }
    }
    p.iter_mut().for_each(|x| *x /= p_points.len() as f64);
    q.iter_mut().for_each(|x| *x /= q_points.len() as f64);

    let mut curve = vec![(0.0, 1.0), (1.0, 0.0)];
    for i in 1..=FRONTIER_POINTS {
        let lambda = i as f64 / (FRONTIER_POINTS + 1) as f64;
        let r: Vec<f64> = p
            .iter()
            .zip(&q)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        curve.push((
            (-opts.scaling * kl(&q, &r)).exp(),
            (-opts.scaling * kl(&p, &r)).exp(),
        ));
    }
    curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let area: f64 = curve
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok(area.clamp(0.0, 1.0))
}
