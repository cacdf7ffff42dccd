use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::affine::{fit_affine_indexed, AffineTransform, Correspondence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub inlier_threshold_px: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            inlier_threshold_px: 3.0,
            max_iters: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacFit {
    pub transform: AffineTransform,
    /// Indices into the input correspondences, ascending.
    pub inliers: Vec<usize>,
}

fn inliers_of(pairs: &[Correspondence], t: &AffineTransform, threshold: f64) -> Vec<usize> {
    pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.residual(t) <= threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Unbiased index in `0..n`.
fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % n) as usize;
        }
    }
}

/// Robust affine estimate from target→reference correspondences.
///
/// Minimal three-point samples are drawn from a ChaCha8 stream seeded with
/// `params.seed`; the model with the most inliers wins (earliest on ties),
/// is refit by least squares on its inliers and the inlier set is
/// recomputed against the refit model until it stops changing.
pub fn estimate_affine_ransac(pairs: &[Correspondence], params: &RansacParams) -> Result<RansacFit> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientMatches {
            found: pairs.len(),
            needed: 3,
        });
    }
    let threshold = params.inlier_threshold_px;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(AffineTransform, usize)> = None;
    for _ in 0..params.max_iters.max(1) {
        let a = below(&mut rng, pairs.len());
        let mut b = below(&mut rng, pairs.len() - 1);
        if b >= a {
            b += 1;
        }
        let mut c = below(&mut rng, pairs.len() - 2);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if c >= lo {
            c += 1;
        }
        if c >= hi {
            c += 1;
        }
        let Some(model) = fit_affine_indexed(pairs, &[a, b, c]) else {
            continue;
        };
        let count = pairs.iter().filter(|p| p.residual(&model) <= threshold).count();
        if best.as_ref().map_or(true, |(_, n)| count > *n) {
            best = Some((model, count));
            if count == pairs.len() {
                break;
            }
        }
    }
    let (mut transform, count) = best.ok_or(Error::NoConsensus)?;
    if count < 3 {
        return Err(Error::NoConsensus);
    }
    // The least-squares refit is kept even when it has a few less inliers
    // than the minimal sample: a three-point model extrapolates poorly.
    let mut inliers = inliers_of(pairs, &transform, threshold);
    for _ in 0..10 {
        let Some(refit) = fit_affine_indexed(pairs, &inliers) else {
            break;
        };
        let next = inliers_of(pairs, &refit, threshold);
        if next.len() < 3 {
            break;
        }
        let stable = next == inliers;
        transform = refit;
        inliers = next;
        if stable {
            break;
        }
    }
    Ok(RansacFit { transform, inliers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn pairs_from(t: &AffineTransform, pts: &[(f64, f64)]) -> Vec<Correspondence> {
        pts.iter()
            .map(|&(x, y)| Correspondence::new((x, y), t.apply(x, y)))
            .collect()
    }

    #[test]
    fn identity_exact() {
        let pts: Vec<_> = (0..10)
            .map(|i| ((i * 37 % 100) as f64, (i * 53 % 90) as f64))
            .collect();
        let fit = estimate_affine_ransac(
            &pairs_from(&AffineTransform::IDENTITY, &pts),
            &RansacParams::default(),
        )
        .unwrap();
        assert!(fit.transform.max_abs_diff(&AffineTransform::IDENTITY) < 1e-9);
        assert_eq!(fit.inliers.len(), 10);
    }

    #[test]
    fn minimal_sample_is_exact() {
        let t = AffineTransform::new([[0.9, 0.1, 4.0], [-0.2, 1.1, 2.0]]);
        let pairs = pairs_from(&t, &[(0.0, 0.0), (30.0, 5.0), (8.0, 40.0)]);
        let fit = estimate_affine_ransac(&pairs, &RansacParams::default()).unwrap();
        for p in &pairs {
            assert!(p.residual(&fit.transform) < 1e-9);
        }
    }

    #[test]
    fn recovers_transform_with_outliers() {
        let truth = AffineTransform::similarity(10f64.to_radians(), 1.1, 5.0, -3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<_> = (0..20)
            .map(|_| (rng.gen_range(0.0..200.0), rng.gen_range(0.0..200.0)))
            .collect();
        let mut pairs = pairs_from(&truth, &pts);
        for _ in 0..5 {
            pairs.push(Correspondence::new(
                (rng.gen_range(0.0..200.0), rng.gen_range(0.0..200.0)),
                (rng.gen_range(0.0..200.0), rng.gen_range(0.0..200.0)),
            ));
        }
        let params = RansacParams::default();
        let fit = estimate_affine_ransac(&pairs, &params).unwrap();
        assert!(fit.inliers.len() >= 20);
        for p in &pairs[..20] {
            assert!(p.residual(&fit.transform) < 0.5);
        }
        assert!(fit.transform.corner_error(&truth, 200, 200) < 0.5);
        for &i in &fit.inliers {
            assert!(pairs[i].residual(&fit.transform) <= params.inlier_threshold_px);
        }
        // bit-identical on rerun
        assert_eq!(estimate_affine_ransac(&pairs, &params).unwrap(), fit);
    }

    #[test]
    fn too_few_matches() {
        let pairs = pairs_from(&AffineTransform::IDENTITY, &[(0.0, 0.0), (1.0, 1.0)]);
        assert!(matches!(
            estimate_affine_ransac(&pairs, &RansacParams::default()),
            Err(Error::InsufficientMatches { found: 2, .. })
        ));
    }

    #[test]
    fn collinear_only_has_no_consensus() {
        let pairs: Vec<_> = (0..6)
            .map(|i| Correspondence::new((i as f64, 0.0), (i as f64, 0.0)))
            .collect();
        assert_eq!(
            estimate_affine_ransac(&pairs, &RansacParams::default()),
            Err(Error::NoConsensus)
        );
    }
}
