use crate::imaging::{check_dims, to_grayscale, Plane, RasterImage};
use crate::Result;

/// Per-channel absolute differences `|I1 - I2|` for R, G, B and gray.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffPlanes {
    pub r: Plane,
    pub g: Plane,
    pub b: Plane,
    /// `|gray(I1) - gray(I2)|`
    pub gray: Plane,
}

impl DiffPlanes {
    pub fn width(&self) -> usize {
        self.r.width()
    }

    pub fn height(&self) -> usize {
        self.r.height()
    }

    pub fn rgb(&self) -> [&Plane; 3] {
        [&self.r, &self.g, &self.b]
    }
}

fn abs_diff(a: &[f64], b: &[f64], width: usize, height: usize) -> Plane {
    let data = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    Plane::new(width, height, data).expect("dimensions already checked")
}

pub fn build_diff(reference: &RasterImage, aligned: &RasterImage) -> Result<DiffPlanes> {
    check_dims(
        reference.width(),
        reference.height(),
        aligned.width(),
        aligned.height(),
    )?;
    let (w, h) = (reference.width(), reference.height());
    let gray_ref = to_grayscale(reference);
    let gray_al = to_grayscale(aligned);
    Ok(DiffPlanes {
        r: abs_diff(reference.channel(0), aligned.channel(0), w, h),
        g: abs_diff(reference.channel(1), aligned.channel(1), w, h),
        b: abs_diff(reference.channel(2), aligned.channel(2), w, h),
        gray: abs_diff(gray_ref.data(), gray_al.data(), w, h),
    })
}
