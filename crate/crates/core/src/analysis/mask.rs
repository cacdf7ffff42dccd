use alloc::vec::Vec;

use crate::detection::ClusterMap;
use crate::imaging::{check_dims, RasterImage};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeMask {
    pub width: usize,
    pub height: usize,
    /// Raster order.
    pub mask: Vec<bool>,
    /// Class ids whose pixels are set, ascending.
    pub classes: Vec<usize>,
}

impl ChangeMask {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }
}

pub fn binary_mask(cm: &ClusterMap, selected: &[usize]) -> ChangeMask {
    let mut on = alloc::vec![false; cm.n];
    for &k in selected {
        if k < cm.n {
            on[k] = true;
        }
    }
    let mut classes: Vec<usize> = (0..cm.n).filter(|&k| on[k]).collect();
    classes.dedup();
    ChangeMask {
        width: cm.width,
        height: cm.height,
        mask: cm.labels.iter().map(|&l| on[l]).collect(),
        classes,
    }
}

/// Blends saturated red at 50% over `reference` wherever the mask is set.
pub fn overlay(reference: &RasterImage, mask: &ChangeMask) -> Result<RasterImage> {
    check_dims(reference.width(), reference.height(), mask.width, mask.height)?;
    let mut out = reference.clone();
    for (i, &m) in mask.mask.iter().enumerate() {
        if m {
            let (r, c) = (i / mask.width, i % mask.width);
            let p = reference.pixel(r, c);
            out.set_pixel(r, c, [0.5 * p[0] + 0.5, 0.5 * p[1], 0.5 * p[2]]);
        }
    }
    Ok(out)
}
