use alloc::vec;
use alloc::vec::Vec;

use super::diff::DiffPlanes;
use crate::imaging::fill_window;
use crate::{Error, Result};

/// Training descriptors sampled at the centers of the non-overlapping
/// `h x h` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    /// `M x 3h²`, each row `[R window | G window | B window]`.
    pub rgb: Vec<f64>,
    /// `M x h²`
    pub gray: Vec<f64>,
    pub h: usize,
    /// `(row, col)` of each window center.
    pub centers: Vec<(usize, usize)>,
}

impl DescriptorSet {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn rgb_dim(&self) -> usize {
        3 * self.h * self.h
    }

    pub fn gray_dim(&self) -> usize {
        self.h * self.h
    }

    pub fn rgb_row(&self, i: usize) -> &[f64] {
        let d = self.rgb_dim();
        &self.rgb[i * d..(i + 1) * d]
    }

    pub fn gray_row(&self, i: usize) -> &[f64] {
        let d = self.gray_dim();
        &self.gray[i * d..(i + 1) * d]
    }
}

pub(crate) fn check_window(h: usize, width: usize, height: usize) -> Result<()> {
    if h % 2 == 0 {
        return Err(Error::EvenWindow(h));
    }
    if h > width || h > height {
        return Err(Error::WindowTooLarge {
            size: h,
            width,
            height,
        });
    }
    Ok(())
}

/// Writes the RGB and gray descriptors of the pixel at `(row, col)`.
#[inline]
pub(crate) fn pixel_descriptors(
    diff: &DiffPlanes,
    row: usize,
    col: usize,
    h: usize,
    rgb: &mut [f64],
    gray: &mut [f64],
) {
    let hh = h * h;
    for (k, plane) in diff.rgb().into_iter().enumerate() {
        fill_window(plane, row, col, h, &mut rgb[k * hh..(k + 1) * hh]);
    }
    fill_window(&diff.gray, row, col, h, gray);
}

/// One descriptor pair per full grid cell; leftover border strips are not
/// sampled.
pub fn sample_training_descriptors(diff: &DiffPlanes, h: usize) -> Result<DescriptorSet> {
    let (w, ht) = (diff.width(), diff.height());
    check_window(h, w, ht)?;
    let (gr, gc) = (ht / h, w / h);
    let m = gr * gc;
    let mut rgb = vec![0.0; m * 3 * h * h];
    let mut gray = vec![0.0; m * h * h];
    let mut centers = Vec::with_capacity(m);
    for r in 0..gr {
        for c in 0..gc {
            let i = centers.len();
            let center = (r * h + h / 2, c * h + h / 2);
            pixel_descriptors(
                diff,
                center.0,
                center.1,
                h,
                &mut rgb[i * 3 * h * h..(i + 1) * 3 * h * h],
                &mut gray[i * h * h..(i + 1) * h * h],
            );
            centers.push(center);
        }
    }
    Ok(DescriptorSet {
        rgb,
        gray,
        h,
        centers,
    })
}
