use alloc::vec;
use alloc::vec::Vec;

use super::mse::ClassStats;
use crate::detection::ClusterMap;
use crate::imaging::RasterImage;

/// HSV with `hue` in degrees and `s, v` in `[0, 1]` to RGB.
pub fn hsv_to_rgb(hue: f64, s: f64, v: f64) -> [f64; 3] {
    let h = libm::fmod(hue, 360.0);
    let h = if h < 0.0 { h + 360.0 } else { h } / 60.0;
    let c = v * s;
    let x = c * (1.0 - libm::fabs(libm::fmod(h, 2.0) - 1.0));
    let m = v - c;
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Hue in degrees for `rank` of `count`: 240 (blue) for the lowest score
/// down to 0 (red) for the highest.
pub fn rank_hue(rank: usize, count: usize) -> f64 {
    if count <= 1 {
        240.0
    } else {
        240.0 * (1.0 - rank as f64 / (count - 1) as f64)
    }
}

pub fn rank_color(rank: usize, count: usize) -> [f64; 3] {
    hsv_to_rgb(rank_hue(rank, count), 1.0, 1.0)
}

/// Colors each pixel by its class rank on a linear blue→red hue sweep.
pub fn render_heatmap(cm: &ClusterMap, stats: &[ClassStats]) -> RasterImage {
    let ranked = stats.iter().filter(|s| s.rank.is_some()).count();
    let mut palette: Vec<[f64; 3]> = vec![[0.0; 3]; cm.n];
    for s in stats {
        if let (Some(rank), true) = (s.rank, s.class_id < cm.n) {
            palette[s.class_id] = rank_color(rank, ranked);
        }
    }
    let mut rgb = Vec::with_capacity(cm.labels.len() * 3);
    for &l in &cm.labels {
        rgb.extend_from_slice(&palette[l]);
    }
    RasterImage::from_interleaved(cm.width, cm.height, &rgb).expect("palette values in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::class_mse;

    const BLUE: [f64; 3] = [0.0, 0.0, 1.0];
    const RED: [f64; 3] = [1.0, 0.0, 0.0];

    /// Hue in degrees of a fully saturated color.
    fn hue_of(c: [f64; 3]) -> f64 {
        let max = c.iter().cloned().fold(0.0, f64::max);
        let min = c.iter().cloned().fold(1.0, f64::min);
        let d = max - min;
        let h = if max == c[0] {
            60.0 * libm::fmod((c[1] - c[2]) / d, 6.0)
        } else if max == c[1] {
            60.0 * ((c[2] - c[0]) / d + 2.0)
        } else {
            60.0 * ((c[0] - c[1]) / d + 4.0)
        };
        if h < 0.0 {
            h + 360.0
        } else {
            h
        }
    }

    #[test]
    fn one_class_is_blue() {
        let img = RasterImage::filled(3, 2, [0.2; 3]).unwrap();
        let cm = ClusterMap::from_labels(3, 2, 4, vec![2; 6]).unwrap();
        let stats = class_mse(&img, &img, &cm).unwrap();
        let heat = render_heatmap(&cm, &stats);
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(heat.pixel(r, c), BLUE);
            }
        }
    }

    #[test]
    fn two_classes_blue_and_red() {
        let a = RasterImage::filled(2, 1, [0.2; 3]).unwrap();
        let b = RasterImage::from_interleaved(2, 1, &[0.2, 0.2, 0.2, 0.9, 0.9, 0.9]).unwrap();
        let cm = ClusterMap::from_labels(2, 1, 2, vec![1, 0]).unwrap();
        let stats = class_mse(&a, &b, &cm).unwrap();
        let heat = render_heatmap(&cm, &stats);
        assert_eq!(heat.pixel(0, 0), BLUE);
        assert_eq!(heat.pixel(0, 1), RED);
    }

    #[test]
    fn sixteen_distinct_monotone_hues() {
        let n = 16;
        let mut colors = Vec::new();
        for rank in 0..n {
            colors.push(rank_color(rank, n));
        }
        for i in 0..n {
            for j in i + 1..n {
                assert_ne!(colors[i], colors[j]);
            }
        }
        let hues: Vec<f64> = colors.iter().map(|&c| hue_of(c)).collect();
        assert!((hues[0] - 240.0).abs() < 1e-9);
        assert!(hues[n - 1].abs() < 1e-9);
        for w in hues.windows(2) {
            assert!(w[1] < w[0]);
        }
    }
}
