//! PCA-Kmeans change clustering.
//!
//! Every pixel is described by the zero-padded `h x h` windows of the
//! absolute RGB and gray differences around it. Two PCA eigenspaces are fit
//! on descriptors sampled at the centers of the non-overlapping `h x h`
//! grid; every pixel is then projected onto both and the concatenated
//! coordinates are clustered into `n` classes.

mod descriptors;
mod diff;
mod kmeans;
mod pca;
mod projection;

use alloc::vec::Vec;

pub use descriptors::{sample_training_descriptors, DescriptorSet};
pub use diff::{build_diff, DiffPlanes};
pub use kmeans::{kmeans, KmeansFit, KmeansParams};
pub use pca::{fit_pca, EigenSpace};
pub use projection::{project_all_pixels, FeatureMatrix};

use crate::imaging::RasterImage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    /// Odd window side.
    pub h: usize,
    /// Number of Kmeans classes.
    pub n: usize,
    pub s_rgb: usize,
    pub s_gray: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub restarts: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            h: 5,
            n: 16,
            s_rgb: 9,
            s_gray: 3,
            seed: 0,
            max_iters: 300,
            restarts: 1,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        if self.h % 2 == 0 {
            return Err(Error::EvenWindow(self.h));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter("class count must be at least 2"));
        }
        if self.s_rgb == 0 || self.s_rgb > 3 * self.h * self.h {
            return Err(Error::InvalidParameter("s_rgb must be in 1..=3h²"));
        }
        if self.s_gray == 0 || self.s_gray > self.h * self.h {
            return Err(Error::InvalidParameter("s_gray must be in 1..=h²"));
        }
        Ok(())
    }
}

/// Per-pixel class labels over an image.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMap {
    pub width: usize,
    pub height: usize,
    /// Raster order, each `< n`.
    pub labels: Vec<usize>,
    pub n: usize,
    pub dim: usize,
    /// `n x dim`, row-major.
    pub centroids: Vec<f64>,
    pub counts: Vec<usize>,
}

impl ClusterMap {
    pub fn from_labels(width: usize, height: usize, n: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                actual: labels.len(),
            });
        }
        if labels.iter().any(|&l| l >= n) {
            return Err(Error::InvalidParameter("label out of range"));
        }
        let mut counts = alloc::vec![0; n];
        for &l in &labels {
            counts[l] += 1;
        }
        Ok(Self {
            width,
            height,
            labels,
            n,
            dim: 0,
            centroids: Vec::new(),
            counts,
        })
    }

    pub fn is_empty_class(&self, k: usize) -> bool {
        self.counts[k] == 0
    }

    pub fn nonempty_classes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Intermediate products of one detection run.
#[derive(Debug, Clone)]
pub struct Detection {
    pub cluster_map: ClusterMap,
    pub eig_rgb: EigenSpace,
    pub eig_gray: EigenSpace,
    pub features: FeatureMatrix,
    pub kmeans: KmeansFit,
}

/// Full chain: differences, training descriptors, both PCAs, per-pixel
/// projection and Kmeans.
pub fn detect_changes(
    reference: &RasterImage,
    aligned: &RasterImage,
    params: &DetectionParams,
) -> Result<Detection> {
    params.validate()?;
    let diff = build_diff(reference, aligned)?;
    let training = sample_training_descriptors(&diff, params.h)?;
    let eig_rgb = fit_pca(&training.rgb, training.len(), training.rgb_dim(), params.s_rgb)?;
    let eig_gray = fit_pca(&training.gray, training.len(), training.gray_dim(), params.s_gray)?;
    let features = project_all_pixels(&diff, &eig_rgb, &eig_gray, params.h)?;
    let fit = kmeans(
        &features,
        &KmeansParams {
            clusters: params.n,
            seed: params.seed,
            max_iters: params.max_iters,
            restarts: params.restarts,
        },
    )?;
    let cluster_map = ClusterMap {
        width: reference.width(),
        height: reference.height(),
        labels: fit.labels.clone(),
        n: fit.clusters,
        dim: fit.dim,
        centroids: fit.centroids.clone(),
        counts: fit.counts.clone(),
    };
    Ok(Detection {
        cluster_map,
        eig_rgb,
        eig_gray,
        features,
        kmeans: fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn board(w: usize, h: usize, seed: u64) -> RasterImage {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        RasterImage::from_fn(w, h, |r, c| {
            let base = if (r / 8 + c / 8) % 2 == 0 { 0.3 } else { 0.5 };
            let n = rng.gen_range(-0.02..0.02);
            [base + n, 0.4 + n, 0.2]
        })
        .unwrap()
    }

    #[test]
    fn identical_images_single_class() {
        let img = board(40, 30, 1);
        let det = detect_changes(&img, &img, &DetectionParams::default()).unwrap();
        assert_eq!(det.cluster_map.nonempty_classes(), 1);
        assert!(det.eig_rgb.degenerate && det.eig_gray.degenerate);
    }

    #[test]
    fn planted_block_separates() {
        let reference = board(80, 80, 2);
        let mut target = reference.clone();
        for r in 30..50 {
            for c in 20..40 {
                target.set_pixel(r, c, [0.9, 0.1, 0.8]);
            }
        }
        let params = DetectionParams::default();
        let det = detect_changes(&reference, &target, &params).unwrap();
        let labels = &det.cluster_map.labels;
        // pixels within h/2 of the block edge see both sides and are skipped
        let core = |r: usize, c: usize| (32..48).contains(&r) && (22..38).contains(&c);
        let far = |r: usize, c: usize| !((28..52).contains(&r) && (18..42).contains(&c));
        let mut inside = alloc::vec![0usize; params.n];
        let mut outside = alloc::vec![0usize; params.n];
        for r in 0..80 {
            for c in 0..80 {
                let l = labels[r * 80 + c];
                if core(r, c) {
                    inside[l] += 1;
                } else if far(r, c) {
                    outside[l] += 1;
                }
            }
        }
        // a class belongs to the block when most of its sampled pixels are inside
        let block_class: Vec<bool> = (0..params.n).map(|k| inside[k] > outside[k]).collect();
        let n_in: usize = inside.iter().sum();
        let n_out: usize = outside.iter().sum();
        let in_hom = (0..params.n).filter(|&k| block_class[k]).map(|k| inside[k]).sum::<usize>() as f64
            / n_in as f64;
        let out_hom = (0..params.n).filter(|&k| !block_class[k]).map(|k| outside[k]).sum::<usize>()
            as f64
            / n_out as f64;
        assert!(in_hom >= 0.95, "{in_hom}");
        assert!(out_hom >= 0.95, "{out_hom}");
    }

    #[test]
    fn binary_partition_with_two_classes() {
        let reference = board(60, 60, 3);
        let mut target = reference.clone();
        for r in 10..30 {
            for c in 10..30 {
                target.set_pixel(r, c, [1.0, 1.0, 1.0]);
            }
        }
        let det = detect_changes(
            &reference,
            &target,
            &DetectionParams { n: 2, ..Default::default() },
        )
        .unwrap();
        let l = &det.cluster_map.labels;
        assert_ne!(l[20 * 60 + 20], l[50 * 60 + 50]);
        assert_eq!(det.cluster_map.nonempty_classes(), 2);
    }

    #[test]
    fn rejects_bad_params() {
        let img = board(20, 20, 4);
        for p in [
            DetectionParams { h: 4, ..Default::default() },
            DetectionParams { n: 1, ..Default::default() },
            DetectionParams { s_gray: 26, ..Default::default() },
            DetectionParams { s_rgb: 76, ..Default::default() },
        ] {
            assert!(detect_changes(&img, &img, &p).is_err());
        }
    }
}
