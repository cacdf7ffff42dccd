use alloc::vec;
use alloc::vec::Vec;

use super::descriptors::{check_window, pixel_descriptors};
use super::diff::DiffPlanes;
use super::pca::EigenSpace;
use crate::{Error, Result};

/// Row-major `N x dim` feature matrix, one row per pixel in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::LengthMismatch {
                expected: rows * dim,
                actual: data.len(),
            });
        }
        Ok(Self { rows, dim, data })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Projects every pixel's zero-padded RGB and gray windows onto the two
/// eigenspaces; row `i` is `[rgb coords | gray coords]`.
pub fn project_all_pixels(
    diff: &DiffPlanes,
    eig_rgb: &EigenSpace,
    eig_gray: &EigenSpace,
    h: usize,
) -> Result<FeatureMatrix> {
    let (w, ht) = (diff.width(), diff.height());
    check_window(h, w, ht)?;
    if eig_rgb.dim != 3 * h * h {
        return Err(Error::LengthMismatch {
            expected: 3 * h * h,
            actual: eig_rgb.dim,
        });
    }
    if eig_gray.dim != h * h {
        return Err(Error::LengthMismatch {
            expected: h * h,
            actual: eig_gray.dim,
        });
    }
    let (s_rgb, s_gray) = (eig_rgb.components, eig_gray.components);
    let dim = s_rgb + s_gray;
    let mut data = vec![0.0; w * ht * dim];
    let mut rgb = vec![0.0; 3 * h * h];
    let mut gray = vec![0.0; h * h];
    for row in 0..ht {
        for col in 0..w {
            pixel_descriptors(diff, row, col, h, &mut rgb, &mut gray);
            let out = &mut data[(row * w + col) * dim..(row * w + col + 1) * dim];
            eig_rgb.project_into(&rgb, &mut out[..s_rgb]);
            eig_gray.project_into(&gray, &mut out[s_rgb..]);
        }
    }
    FeatureMatrix::new(w * ht, dim, data)
}
