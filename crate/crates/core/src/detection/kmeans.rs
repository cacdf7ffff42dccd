//! Seeded Lloyd iterations from a k-means++ start.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::projection::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansParams {
    pub clusters: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Independent runs (ChaCha streams 0..restarts); the lowest final
    /// objective wins, earliest on ties.
    pub restarts: usize,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            clusters: 16,
            seed: 0,
            max_iters: 300,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub labels: Vec<usize>,
    /// `clusters x dim`, row-major.
    pub centroids: Vec<f64>,
    pub clusters: usize,
    pub dim: usize,
    pub counts: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective_trace: Vec<f64>,
    /// Assignment steps performed.
    pub iterations: usize,
    /// Labels stopped changing before `max_iters`.
    pub converged: bool,
}

impl KmeansFit {
    pub fn centroid(&self, k: usize) -> &[f64] {
        &self.centroids[k * self.dim..(k + 1) * self.dim]
    }

    pub fn is_empty_cluster(&self, k: usize) -> bool {
        self.counts[k] == 0
    }

    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Uniform float in `[0, 1)` from 53 random bits.
#[inline]
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn index_below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    ((unit(rng) * n as f64) as usize).min(n - 1)
}

fn plus_plus_init(x: &FeatureMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = x.rows;
    let dim = x.dim;
    let mut centroids = Vec::with_capacity(k * dim);
    let first = index_below(rng, n);
    centroids.extend_from_slice(x.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = unit(rng) * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &v) in d2.iter().enumerate() {
                acc += v;
                if acc > target && v > 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `acc` just below `target`
            chosen.unwrap_or_else(|| d2.iter().rposition(|&v| v > 0.0).unwrap())
        } else {
            index_below(rng, n)
        };
        let c = x.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            let nd = sq_dist(x.row(i), &c);
            if nd < *d {
                *d = nd;
            }
        }
        centroids.extend(c);
    }
    centroids
}

/// Nearest centroid for every point (lowest index on ties). Returns the
/// objective and the number of changed labels.
fn assign(
    x: &FeatureMatrix,
    centroids: &[f64],
    k: usize,
    labels: &mut [usize],
    dists: &mut [f64],
) -> (f64, usize) {
    let dim = x.dim;
    let mut total = 0.0;
    let mut changed = 0;
    for i in 0..x.rows {
        let p = x.row(i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let d = sq_dist(p, &centroids[c * dim..(c + 1) * dim]);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if labels[i] != best {
            changed += 1;
            labels[i] = best;
        }
        dists[i] = best_d;
        total += best_d;
    }
    (total, changed)
}

fn run_once(x: &FeatureMatrix, params: &KmeansParams, stream: u64) -> KmeansFit {
    let k = params.clusters;
    let dim = x.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(stream);
    let mut centroids = plus_plus_init(x, k, &mut rng);
    let mut labels = vec![usize::MAX; x.rows];
    let mut dists = vec![0.0; x.rows];
    let mut reseeded = vec![false; k];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut relocated = false;
    loop {
        let (objective, changed) = assign(x, &centroids, k, &mut labels, &mut dists);
        iterations += 1;
        trace.push(objective);
        if changed == 0 && !relocated {
            converged = true;
            break;
        }
        if iterations >= params.max_iters.max(1) {
            break;
        }

        // update step
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums[l * dim..(l + 1) * dim].iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centroids[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .zip(&sums[c * dim..(c + 1) * dim])
                {
                    *dst = s * inv;
                }
            }
        }
        // an empty cluster moves once onto the point farthest from its centroid
        relocated = false;
        for c in 0..k {
            if counts[c] > 0 || reseeded[c] {
                continue;
            }
            reseeded[c] = true;
            let mut far = 0;
            for i in 1..x.rows {
                if dists[i] > dists[far] {
                    far = i;
                }
            }
            if dists[far] > 0.0 {
                centroids[c * dim..(c + 1) * dim].copy_from_slice(x.row(far));
                dists[far] = 0.0;
                relocated = true;
            }
        }
    }
    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    KmeansFit {
        labels,
        centroids,
        clusters: k,
        dim,
        counts,
        objective_trace: trace,
        iterations,
        converged,
    }
}

/// Clusters the rows of `x` into `params.clusters` groups.
pub fn kmeans(x: &FeatureMatrix, params: &KmeansParams) -> Result<KmeansFit> {
    if params.clusters < 2 {
        return Err(Error::InvalidParameter("at least two clusters are required"));
    }
    if params.clusters > x.rows {
        return Err(Error::InvalidParameter("more clusters than points"));
    }
    let mut best: Option<KmeansFit> = None;
    for r in 0..params.restarts.max(1) {
        let fit = run_once(x, params, r as u64);
        if best.as_ref().map_or(true, |b| fit.objective() < b.objective()) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one run"))
}
