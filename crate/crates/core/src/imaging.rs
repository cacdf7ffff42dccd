//! Image representation shared by every stage.
//!
//! Channel values are `f64` in `[0, 1]`. Planes are stored row-major, so the
//! value at `(row, col)` lives at `row * width + col`.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Luminance weights applied to (R, G, B).
pub const GRAY_WEIGHTS: [f64; 3] = [0.3, 0.59, 0.11];

/// A single row-major plane of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if data.len() != width * height {
            return Err(Error::BufferSize {
                width,
                height,
                channels: 1,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Value at a signed position, zero outside the plane.
    #[inline]
    pub fn get_or_zero(&self, row: isize, col: isize) -> f64 {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            0.0
        } else {
            self.data[row as usize * self.width + col as usize]
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn same_dims(&self, other: &Plane) -> Result<()> {
        check_dims(self.width, self.height, other.width, other.height)
    }
}

pub(crate) fn check_dims(lw: usize, lh: usize, rw: usize, rh: usize) -> Result<()> {
    if lw != rw || lh != rh {
        return Err(Error::DimensionMismatch {
            left_width: lw,
            left_height: lh,
            right_width: rw,
            right_height: rh,
        });
    }
    Ok(())
}

/// An RGB image with three planes of equal size, every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: [Vec<f64>; 3],
}

impl RasterImage {
    /// Builds an image from three row-major channel buffers.
    pub fn from_channels(width: usize, height: usize, channels: [Vec<f64>; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        for ch in &channels {
            if ch.len() != width * height {
                return Err(Error::BufferSize {
                    width,
                    height,
                    channels: 3,
                    actual: ch.len(),
                });
            }
        }
        for (c, ch) in channels.iter().enumerate() {
            if let Some(i) = ch.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::ValueOutOfRange {
                    index: c * width * height + i,
                    value: ch[i],
                });
            }
        }
        Ok(Self {
            width,
            height,
            channels,
        })
    }

    /// Builds an image from interleaved `RGBRGB...` values.
    pub fn from_interleaved(width: usize, height: usize, rgb: &[f64]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(Error::BufferSize {
                width,
                height,
                channels: 3,
                actual: rgb.len(),
            });
        }
        let mut channels = [
            Vec::with_capacity(rgb.len() / 3),
            Vec::with_capacity(rgb.len() / 3),
            Vec::with_capacity(rgb.len() / 3),
        ];
        for px in rgb.chunks_exact(3) {
            for c in 0..3 {
                channels[c].push(px[c]);
            }
        }
        Self::from_channels(width, height, channels)
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        let n = width * height;
        Self::from_channels(
            width,
            height,
            [vec![rgb[0]; n], vec![rgb[1]; n], vec![rgb[2]; n]],
        )
    }

    /// Builds an image by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let n = width * height;
        let mut channels = [
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        for row in 0..height {
            for col in 0..width {
                let px = f(row, col);
                for c in 0..3 {
                    channels[c].push(px[c]);
                }
            }
        }
        Self::from_channels(width, height, channels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>; 3] {
        &self.channels
    }

    pub fn into_channels(self) -> [Vec<f64>; 3] {
        self.channels
    }

    /// Copy of channel `c` as a [`Plane`].
    pub fn plane(&self, c: usize) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.channels[c].clone(),
        }
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = row * self.width + col;
        [self.channels[0][i], self.channels[1][i], self.channels[2][i]]
    }

    /// Sets one pixel, clamping every component into `[0, 1]`.
    #[inline]
    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [f64; 3]) {
        let i = row * self.width + col;
        for c in 0..3 {
            self.channels[c][i] = rgb[c].clamp(0.0, 1.0);
        }
    }

    pub fn same_dims(&self, other: &RasterImage) -> Result<()> {
        check_dims(self.width, self.height, other.width, other.height)
    }

    /// Copies the `width x height` rectangle whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if x + width > self.width || y + height > self.height {
            return Err(Error::OutOfBounds {
                row: y + height - 1,
                col: x + width - 1,
                width: self.width,
                height: self.height,
            });
        }
        let channels = core::array::from_fn(|c| {
            let ch = &self.channels[c];
            let mut out = Vec::with_capacity(width * height);
            for row in y..y + height {
                let start = row * self.width + x;
                out.extend_from_slice(&ch[start..start + width]);
            }
            out
        });
        Ok(Self {
            width,
            height,
            channels,
        })
    }

    /// Replaces every channel value with `f(value)` clamped to `[0, 1]`.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let channels = core::array::from_fn(|c| {
            self.channels[c].iter().map(|&v| f(v).clamp(0.0, 1.0)).collect()
        });
        Self {
            width: self.width,
            height: self.height,
            channels,
        }
    }
}

/// `gray = 0.3 R + 0.59 G + 0.11 B`, unrounded.
pub fn to_grayscale(img: &RasterImage) -> Plane {
    let [r, g, b] = &img.channels;
    let data = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| GRAY_WEIGHTS[0] * r + GRAY_WEIGHTS[1] * g + GRAY_WEIGHTS[2] * b)
        .collect();
    Plane {
        width: img.width,
        height: img.height,
        data,
    }
}

/// An `h x h` block of plane values centered on a pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelWindow {
    pub center: (usize, usize),
    pub size: usize,
    /// Row-major, `size * size` values.
    pub values: Vec<f64>,
}

/// Extracts the `h x h` window centered at `(row, col)`; positions outside
/// the plane read as zero.
pub fn extract_window(plane: &Plane, row: usize, col: usize, h: usize) -> Result<PixelWindow> {
    if row >= plane.height || col >= plane.width {
        return Err(Error::OutOfBounds {
            row,
            col,
            width: plane.width,
            height: plane.height,
        });
    }
    if h % 2 == 0 {
        return Err(Error::EvenWindow(h));
    }
    let mut values = vec![0.0; h * h];
    fill_window(plane, row, col, h, &mut values);
    Ok(PixelWindow {
        center: (row, col),
        size: h,
        values,
    })
}

/// Writes the zero-padded `h x h` window around `(row, col)` into `out`.
///
/// `h` must be odd and `out.len() == h * h`; the center may be anywhere.
pub fn fill_window(plane: &Plane, row: usize, col: usize, h: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), h * h);
    let half = (h / 2) as isize;
    let (row, col) = (row as isize, col as isize);
    let (w, ht) = (plane.width as isize, plane.height as isize);
    for dr in 0..h as isize {
        let r = row - half + dr;
        let dst = &mut out[dr as usize * h..(dr as usize + 1) * h];
        if r < 0 || r >= ht {
            dst.fill(0.0);
            continue;
        }
        let c0 = col - half;
        let c1 = c0 + h as isize;
        let lo = c0.max(0);
        let hi = c1.min(w);
        let src_row = &plane.data[r as usize * plane.width..(r as usize + 1) * plane.width];
        for (k, v) in dst.iter_mut().enumerate() {
            let c = c0 + k as isize;
            *v = if c >= lo && c < hi {
                src_row[c as usize]
            } else {
                0.0
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grayscale_examples() {
        let img = RasterImage::from_interleaved(3, 1, &[1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 1.0, 0.0, 0.0])
            .unwrap();
        let g = to_grayscale(&img);
        assert!((g.data()[0] - 1.0).abs() < 1e-15);
        assert!((g.data()[1] - 0.5).abs() < 1e-15);
        assert_eq!(g.data()[2], 0.3);
    }

    #[test]
    fn rejects_out_of_range_and_empty() {
        assert!(matches!(
            RasterImage::from_interleaved(1, 1, &[0.0, 1.5, 0.0]),
            Err(Error::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            RasterImage::from_channels(0, 1, [vec![], vec![], vec![]]),
            Err(Error::EmptyImage { .. })
        ));
        assert!(matches!(
            RasterImage::from_channels(2, 1, [vec![0.0; 2], vec![0.0; 2], vec![0.0; 1]]),
            Err(Error::BufferSize { .. })
        ));
    }

    #[test]
    fn window_all_ones_and_corner_padding() {
        let plane = Plane::filled(3, 3, 1.0).unwrap();
        let w = extract_window(&plane, 1, 1, 3).unwrap();
        assert_eq!(w.values, vec![1.0; 9]);
        let w = extract_window(&plane, 0, 0, 3).unwrap();
        assert_eq!(w.values.iter().filter(|&&v| v == 0.0).count(), 5);
        assert_eq!(w.values.iter().filter(|&&v| v == 1.0).count(), 4);
        assert_eq!(w.values, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
    }

    fn naive_window(plane: &Plane, row: usize, col: usize, h: usize) -> Vec<f64> {
        let half = (h / 2) as isize;
        let mut out = Vec::new();
        for dr in -half..=half {
            for dc in -half..=half {
                let r = row as isize + dr;
                let c = col as isize + dc;
                let inside =
                    r >= 0 && c >= 0 && (r as usize) < plane.height() && (c as usize) < plane.width();
                out.push(if inside {
                    plane.get(r as usize, c as usize)
                } else {
                    0.0
                });
            }
        }
        out
    }

    #[test]
    fn window_matches_direct_indexing() {
        let plane = Plane::from_fn(5, 5, |r, c| (r * 5 + c) as f64 / 25.0).unwrap();
        let w = extract_window(&plane, 2, 2, 3).unwrap();
        assert_eq!(w.values, naive_window(&plane, 2, 2, 3));
        assert_eq!(w.values[0], 6.0 / 25.0);
        assert_eq!(w.values[8], 18.0 / 25.0);
        for r in 0..5 {
            for c in 0..5 {
                for h in [1, 3, 5, 7] {
                    assert_eq!(
                        extract_window(&plane, r, c, h).unwrap().values,
                        naive_window(&plane, r, c, h)
                    );
                }
            }
        }
    }

    #[test]
    fn window_errors() {
        let plane = Plane::filled(3, 3, 1.0).unwrap();
        assert!(matches!(
            extract_window(&plane, 3, 0, 3),
            Err(Error::OutOfBounds { .. })
        ));
        assert_eq!(extract_window(&plane, 0, 0, 4), Err(Error::EvenWindow(4)));
    }

    #[test]
    fn crop_sub_block() {
        let img = RasterImage::from_fn(6, 4, |r, c| [r as f64 / 10.0, c as f64 / 10.0, 0.5]).unwrap();
        assert_eq!(img.crop(0, 0, 6, 4).unwrap(), img);
        let one = img.crop(0, 0, 1, 1).unwrap();
        assert_eq!(one.pixel(0, 0), img.pixel(0, 0));
        let sub = img.crop(2, 1, 3, 2).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(sub.pixel(r, c), img.pixel(r + 1, c + 2));
            }
        }
        assert!(img.crop(4, 0, 3, 1).is_err());
    }

    proptest! {
        #[test]
        fn grayscale_is_linear(vals in prop::collection::vec(0.0f64..=1.0, 12), a in 0.0f64..=1.0) {
            let img = RasterImage::from_interleaved(2, 2, &vals).unwrap();
            let scaled = img.map_values(|v| a * v);
            let g = to_grayscale(&img);
            let gs = to_grayscale(&scaled);
            for (x, y) in g.data().iter().zip(gs.data()) {
                prop_assert!((a * x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn unit_windows_sum_to_plane(w in 1usize..8, h in 1usize..8, seed in any::<u64>()) {
            let mut s = seed;
            let plane = Plane::from_fn(w, h, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64
            }).unwrap();
            let mut total = 0.0;
            for r in 0..h {
                for c in 0..w {
                    total += extract_window(&plane, r, c, 1).unwrap().values[0];
                }
            }
            prop_assert_eq!(total, plane.sum());
        }
    }
}
