//! Exact histogram specification.
//!
//! Pixels are put in a strict total order (value, then a cascade of local
//! means, then flat index) and the sorted pixels receive the reference's
//! 8-bit intensity levels in ascending order, so the output histogram equals
//! the reference histogram bin for bin.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::imaging::{Plane, RasterImage};

/// Number of auxiliary mean filters (windows 3x3 up to 11x11).
pub const DEFAULT_FILTER_LEVELS: usize = 5;

pub const LEVELS: usize = 256;

/// Index of the 8-bit level nearest to `v`.
#[inline]
pub fn level_of(v: f64) -> usize {
    libm::round(v.clamp(0.0, 1.0) * 255.0) as usize
}

/// Per-channel 256-bin histograms on the 8-bit grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramSpec {
    pub bins: [[u64; LEVELS]; 3],
    pub total: u64,
}

impl HistogramSpec {
    pub fn of(img: &RasterImage) -> Self {
        let mut bins = [[0u64; LEVELS]; 3];
        for (c, bins) in bins.iter_mut().enumerate() {
            for &v in img.channel(c) {
                bins[level_of(v)] += 1;
            }
        }
        Self {
            bins,
            total: img.pixel_count() as u64,
        }
    }

    /// Rescales every channel to `total` pixels with largest-remainder
    /// apportionment. Ties in the remainder go to the lower level.
    pub fn rescaled(&self, total: u64) -> Self {
        if total == self.total {
            return self.clone();
        }
        let mut bins = [[0u64; LEVELS]; 3];
        for (dst, src) in bins.iter_mut().zip(&self.bins) {
            *dst = apportion(src, self.total, total);
        }
        Self { bins, total }
    }
}

fn apportion(counts: &[u64; LEVELS], from: u64, to: u64) -> [u64; LEVELS] {
    let mut out = [0u64; LEVELS];
    let mut rems: Vec<(u128, usize)> = Vec::with_capacity(LEVELS);
    let mut assigned = 0u64;
    for (i, &c) in counts.iter().enumerate() {
        let q = c as u128 * to as u128;
        out[i] = (q / from as u128) as u64;
        assigned += out[i];
        rems.push((q % from as u128, i));
    }
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take((to - assigned) as usize) {
        out[i] += 1;
    }
    out
}

/// Mean over the in-bounds part of the `(2r+1) x (2r+1)` window around each
/// pixel, from a summed-area table.
fn local_means(plane: &Plane, radius: usize) -> Vec<f64> {
    let (w, h) = (plane.width(), plane.height());
    let mut sat = vec![0.0; (w + 1) * (h + 1)];
    for r in 0..h {
        let mut row_sum = 0.0;
        for c in 0..w {
            row_sum += plane.get(r, c);
            sat[(r + 1) * (w + 1) + c + 1] = sat[r * (w + 1) + c + 1] + row_sum;
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        let r0 = r.saturating_sub(radius);
        let r1 = (r + radius + 1).min(h);
        for c in 0..w {
            let c0 = c.saturating_sub(radius);
            let c1 = (c + radius + 1).min(w);
            let s = sat[r1 * (w + 1) + c1] - sat[r0 * (w + 1) + c1] - sat[r1 * (w + 1) + c0]
                + sat[r0 * (w + 1) + c0];
            out.push(s / ((r1 - r0) * (c1 - c0)) as f64);
        }
    }
    out
}

/// Strict total order of pixel indices by (value, 3x3 mean, 5x5 mean, ...,
/// (2K+1)x(2K+1) mean, flat index).
pub fn strict_order(plane: &Plane, filter_levels: usize) -> Vec<usize> {
    let keys: Vec<Vec<f64>> = (1..=filter_levels)
        .map(|radius| local_means(plane, radius))
        .collect();
    let values = plane.data();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        values[a]
            .total_cmp(&values[b])
            .then_with(|| {
                for k in &keys {
                    match k[a].total_cmp(&k[b]) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                Ordering::Equal
            })
            .then(a.cmp(&b))
    });
    order
}

/// Remaps `src` so that each channel's 8-bit histogram equals `reference`'s
/// (rescaled to `src`'s pixel count when the sizes differ).
pub fn exact_histogram_match(src: &RasterImage, reference: &RasterImage) -> RasterImage {
    exact_histogram_match_with(src, reference, DEFAULT_FILTER_LEVELS)
}

pub fn exact_histogram_match_with(
    src: &RasterImage,
    reference: &RasterImage,
    filter_levels: usize,
) -> RasterImage {
    let target = HistogramSpec::of(reference).rescaled(src.pixel_count() as u64);
    let mut channels: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (c, out) in channels.iter_mut().enumerate() {
        let order = strict_order(&src.plane(c), filter_levels);
        let mut data = vec![0.0; src.pixel_count()];
        let mut next = order.iter();
        for (level, &count) in target.bins[c].iter().enumerate() {
            let v = level as f64 / 255.0;
            for &idx in next.by_ref().take(count as usize) {
                data[idx] = v;
            }
        }
        *out = data;
    }
    RasterImage::from_channels(src.width(), src.height(), channels)
        .expect("levels on the 8-bit grid are in range")
}
