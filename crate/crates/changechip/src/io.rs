//! 8-bit RGB PNG/BMP reading and writing.

use std::path::Path;

use changechip_core::analysis::ChangeMask;
use changechip_core::RasterImage;
use image::{ColorType, DynamicImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};

fn format_for(path: &Path) -> Result<ImageFormat> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("bmp") => Ok(ImageFormat::Bmp),
        _ => Err(Error::Format {
            path: path.to_path_buf(),
            reason: "unsupported format (expected .png or .bmp)".into(),
        }),
    }
}

/// Loads an 8-bit RGB (or gray) PNG/BMP; channel `c` becomes `c / 255`.
/// Images with an alpha channel or more than 8 bits per channel are
/// rejected.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = match img.color() {
        ColorType::Rgb8 | ColorType::L8 => img.to_rgb8(),
        c if c.has_alpha() => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: "images with an alpha channel are not supported".into(),
            })
        }
        c => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("unsupported pixel type {c:?}; expected 8-bit RGB"),
            })
        }
    };
    from_rgb8(&rgb).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn from_rgb8(rgb: &RgbImage) -> Result<RasterImage, changechip_core::Error> {
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let values: Vec<f64> = rgb.as_raw().iter().map(|&b| b as f64 / 255.0).collect();
    RasterImage::from_interleaved(w, h, &values)
}

#[inline]
pub fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn to_rgb8(img: &RasterImage) -> RgbImage {
    let (w, h) = (img.width(), img.height());
    let mut buf = Vec::with_capacity(w * h * 3);
    for i in 0..w * h {
        for c in 0..3 {
            buf.push(to_u8(img.channel(c)[i]));
        }
    }
    RgbImage::from_raw(w as u32, h as u32, buf).expect("buffer sized to image")
}

/// Writes `round(v · 255)` per channel as PNG or BMP (by extension).
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    DynamicImage::ImageRgb8(to_rgb8(img))
        .save_with_format(path, format)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Binary mask as a gray image: 255 for change, 0 otherwise.
pub fn save_mask(mask: &ChangeMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let buf: Vec<u8> = mask.mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    let gray = image::GrayImage::from_raw(mask.width as u32, mask.height as u32, buf)
        .expect("buffer sized to mask");
    DynamicImage::ImageLuma8(gray)
        .save_with_format(path, format)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// Loads a ground-truth mask: a pixel is "change" when its mean channel
/// value is at least 0.5.
pub fn load_mask(path: impl AsRef<Path>) -> Result<ChangeMask> {
    let img = load_image(path)?;
    Ok(mask_from_image(&img))
}

pub fn mask_from_image(img: &RasterImage) -> ChangeMask {
    let mask = (0..img.pixel_count())
        .map(|i| (img.channel(0)[i] + img.channel(1)[i] + img.channel(2)[i]) / 3.0 >= 0.5)
        .collect();
    ChangeMask {
        width: img.width(),
        height: img.height(),
        mask,
        classes: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let img = RasterImage::from_fn(7, 5, |r, c| {
            [
                ((r * 37 + c * 11) % 256) as f64 / 255.0,
                ((r * 5 + c * 101) % 256) as f64 / 255.0,
                255.0 / 255.0,
            ]
        })
        .unwrap();
        for name in ["a.png", "a.bmp"] {
            let p = dir.path().join(name);
            save_image(&img, &p).unwrap();
            assert_eq!(load_image(&p).unwrap(), img);
        }
    }

    #[test]
    fn load_maps_levels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        RgbImage::from_raw(2, 1, vec![255, 128, 0, 0, 0, 0])
            .unwrap()
            .save(&p)
            .unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.pixel(0, 0)[0], 1.0);
        assert_eq!(img.pixel(0, 0)[1], 128.0 / 255.0);
        assert!((img.pixel(0, 0)[1] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn off_grid_values_within_half_level() {
        let dir = tempfile::tempdir().unwrap();
        let img = RasterImage::from_fn(4, 4, |r, c| [r as f64 / 7.0, c as f64 / 9.0, 0.123]).unwrap();
        let p = dir.path().join("q.png");
        save_image(&img, &p).unwrap();
        let back = load_image(&p).unwrap();
        for c in 0..3 {
            for (a, b) in img.channel(c).iter().zip(back.channel(c)) {
                assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_alpha_and_unknown_extension() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("alpha.png");
        image::RgbaImage::from_raw(1, 1, vec![1, 2, 3, 4])
            .unwrap()
            .save(&p)
            .unwrap();
        let err = load_image(&p).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
        assert!(load_image(dir.path().join("x.jpg")).is_err());
        assert!(load_image(dir.path().join("missing.png")).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = ChangeMask {
            width: 3,
            height: 2,
            mask: vec![true, false, false, true, true, false],
            classes: vec![],
        };
        let p = dir.path().join("m.png");
        save_mask(&m, &p).unwrap();
        assert_eq!(load_mask(&p).unwrap().mask, m.mask);
    }
}
