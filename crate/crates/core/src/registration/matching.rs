use alloc::vec::Vec;

use super::sift::Keypoint;
use crate::{Error, Result};

/// Lowe's nearest / second-nearest distance threshold.
pub const DEFAULT_RATIO_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub ref_index: usize,
    pub tgt_index: usize,
    /// Euclidean descriptor distance to the nearest target keypoint.
    pub distance: f64,
    /// `nearest / second_nearest`, 1 when both distances are zero.
    pub ratio: f64,
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest and second-nearest target for one descriptor; ties keep the
/// lower index.
fn two_nearest(query: &[f64], tgts: &[Keypoint]) -> (usize, f64, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    let mut second = f64::INFINITY;
    for (j, t) in tgts.iter().enumerate() {
        let d = squared_distance(query, &t.descriptor);
        if d < best.1 {
            second = best.1;
            best = (j, d);
        } else if d < second {
            second = d;
        }
    }
    (best.0, libm::sqrt(best.1), libm::sqrt(second))
}

/// Ratio-test ratios for every reference keypoint, before thresholding.
pub fn candidate_matches(refs: &[Keypoint], tgts: &[Keypoint]) -> Result<Vec<MatchPair>> {
    if refs.len() < 2 || tgts.len() < 2 {
        return Err(Error::TooFewKeypoints {
            needed: 2,
            reference: refs.len(),
            target: tgts.len(),
        });
    }
    Ok(refs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (j, d1, d2) = two_nearest(&r.descriptor, tgts);
            let ratio = if d2 > 0.0 { d1 / d2 } else { 1.0 };
            MatchPair {
                ref_index: i,
                tgt_index: j,
                distance: d1,
                ratio,
            }
        })
        .collect())
}

/// Keeps each reference keypoint's nearest target when
/// `nearest / second_nearest <= ratio_threshold`.
pub fn match_features(
    refs: &[Keypoint],
    tgts: &[Keypoint],
    ratio_threshold: f64,
) -> Result<Vec<MatchPair>> {
    let mut all = candidate_matches(refs, tgts)?;
    all.retain(|m| m.ratio <= ratio_threshold);
    Ok(all)
}
