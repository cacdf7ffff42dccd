//! Feature-based affine registration of a target image onto a reference.

mod affine;
mod matching;
mod ransac;
pub mod sift;
mod warp;

use alloc::vec::Vec;

pub use affine::{fit_affine, AffineTransform, Correspondence, MIN_DETERMINANT};
pub use matching::{candidate_matches, match_features, MatchPair, DEFAULT_RATIO_THRESHOLD};
pub use ransac::{estimate_affine_ransac, RansacFit, RansacParams};
pub use sift::{detect_and_describe, detect_and_describe_with, Keypoint, SiftParams};
pub use warp::{warp, warp_with_coverage, Warped};

use crate::imaging::RasterImage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegistrationParams {
    pub ratio_threshold: f64,
    pub ransac: RansacParams,
    pub sift: SiftParams,
}

impl Default for RegistrationParams {
    fn default() -> Self {
        Self {
            ratio_threshold: DEFAULT_RATIO_THRESHOLD,
            ransac: RansacParams::default(),
            sift: SiftParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Registration {
    /// Target resampled into the reference frame (reference dimensions).
    pub aligned: RasterImage,
    /// Output pixels whose sample fell inside the target.
    pub coverage: Vec<bool>,
    pub transform: AffineTransform,
    pub reference_keypoints: Vec<Keypoint>,
    pub target_keypoints: Vec<Keypoint>,
    /// Ratio-test survivors.
    pub matches: Vec<MatchPair>,
    /// Indices into `matches` kept by RANSAC.
    pub inliers: Vec<usize>,
}

/// Detect, match, estimate and warp: aligns `target` to `reference`.
pub fn register(
    reference: &RasterImage,
    target: &RasterImage,
    params: &RegistrationParams,
) -> Result<Registration> {
    let ref_kps = detect_and_describe_with(reference, &params.sift)?;
    let tgt_kps = detect_and_describe_with(target, &params.sift)?;
    let matches = match match_features(&ref_kps, &tgt_kps, params.ratio_threshold) {
        Ok(m) => m,
        Err(Error::TooFewKeypoints { .. }) => {
            return Err(Error::InsufficientMatches {
                found: 0,
                needed: 3,
            })
        }
        Err(e) => return Err(e),
    };
    if matches.len() < 3 {
        return Err(Error::InsufficientMatches {
            found: matches.len(),
            needed: 3,
        });
    }
    let pairs: Vec<Correspondence> = matches
        .iter()
        .map(|m| {
            let r = &ref_kps[m.ref_index];
            let t = &tgt_kps[m.tgt_index];
            Correspondence::new((t.x, t.y), (r.x, r.y))
        })
        .collect();
    let fit = estimate_affine_ransac(&pairs, &params.ransac)?;
    let warped = warp_with_coverage(target, &fit.transform, reference.width(), reference.height())?;
    Ok(Registration {
        aligned: warped.image,
        coverage: warped.coverage,
        transform: fit.transform,
        reference_keypoints: ref_kps,
        target_keypoints: tgt_kps,
        matches,
        inliers: fit.inliers,
    })
}
