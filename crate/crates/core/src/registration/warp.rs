use alloc::vec::Vec;

use super::affine::AffineTransform;
use crate::imaging::RasterImage;
use crate::{Error, Result};

/// A warped image plus, per output pixel, whether its sample point fell
/// inside the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct Warped {
    pub image: RasterImage,
    pub coverage: Vec<bool>,
}

/// Resamples `img` into a `out_w x out_h` frame: output `(x, y)` reads the
/// source at `T⁻¹(x, y)` with bilinear interpolation; source positions
/// outside the image read as zero.
pub fn warp(
    img: &RasterImage,
    t: &AffineTransform,
    out_w: usize,
    out_h: usize,
) -> Result<RasterImage> {
    warp_with_coverage(img, t, out_w, out_h).map(|w| w.image)
}

pub fn warp_with_coverage(
    img: &RasterImage,
    t: &AffineTransform,
    out_w: usize,
    out_h: usize,
) -> Result<Warped> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::EmptyImage {
            width: out_w,
            height: out_h,
        });
    }
    let inv = t.inverse()?;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let n = out_w * out_h;
    let mut channels = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    let mut coverage = Vec::with_capacity(n);
    let src = img.channels();
    let max_x = (w - 1) as f64;
    let max_y = (h - 1) as f64;
    const EDGE_EPS: f64 = 1e-9;

    for y in 0..out_h {
        for x in 0..out_w {
            let (sx, sy) = inv.apply(x as f64, y as f64);
            coverage.push(
                sx >= -EDGE_EPS && sy >= -EDGE_EPS && sx <= max_x + EDGE_EPS && sy <= max_y + EDGE_EPS,
            );
            if !(sx > -1.0 && sy > -1.0 && sx < w as f64 && sy < h as f64) {
                for ch in channels.iter_mut() {
                    ch.push(0.0);
                }
                continue;
            }
            let x0 = libm::floor(sx);
            let y0 = libm::floor(sy);
            let (fx, fy) = (sx - x0, sy - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            let taps = [
                (y0, x0, (1.0 - fx) * (1.0 - fy)),
                (y0, x0 + 1, fx * (1.0 - fy)),
                (y0 + 1, x0, (1.0 - fx) * fy),
                (y0 + 1, x0 + 1, fx * fy),
            ];
            for (c, ch) in channels.iter_mut().enumerate() {
                let mut acc = 0.0;
                for &(r, col, wgt) in &taps {
                    if wgt != 0.0 && r >= 0 && col >= 0 && r < h && col < w {
                        acc += wgt * src[c][(r * w + col) as usize];
                    }
                }
                ch.push(acc.clamp(0.0, 1.0));
            }
        }
    }
    Ok(Warped {
        image: RasterImage::from_channels(out_w, out_h, channels)?,
        coverage,
    })
}
