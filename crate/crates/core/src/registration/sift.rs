//! Difference-of-Gaussians keypoints with 4x4x8 gradient-histogram
//! descriptors.
//!
//! Detector version 1. The scale space starts at the input resolution (no
//! 2x upsampling), uses three intervals per octave and a base blur of 1.6.
//! Extrema are refined to subpixel accuracy with a quadratic fit and
//! filtered on contrast and on the principal-curvature ratio. Orientation
//! comes from a 36-bin smoothed gradient histogram; every peak within 80% of
//! the maximum spawns a keypoint. Descriptors are trilinearly interpolated,
//! L2-normalized, clipped at 0.2 and normalized again.
//!
//! Any change to these constants changes keypoints and therefore registration
//! results; bump [`DETECTOR_VERSION`] when doing so.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::imaging::{to_grayscale, RasterImage};
use crate::linalg;
use crate::{Error, Result};

pub const DETECTOR_VERSION: u32 = 1;
pub const DESCRIPTOR_LEN: usize = 128;
pub const MIN_IMAGE_SIDE: usize = 32;

const INTERVALS: usize = 3;
const BASE_SIGMA: f64 = 1.6;
const INPUT_SIGMA: f64 = 0.5;
const BORDER: usize = 5;
const MAX_REFINE_STEPS: usize = 5;
const ORI_BINS: usize = 36;
const ORI_SIGMA_FACTOR: f64 = 1.5;
const ORI_RADIUS_FACTOR: f64 = 3.0 * ORI_SIGMA_FACTOR;
const ORI_PEAK_RATIO: f64 = 0.8;
const DESC_WIDTH: usize = 4;
const DESC_BINS: usize = 8;
const DESC_SCALE: f64 = 3.0;
const DESC_CLIP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiftParams {
    /// Minimum |DoG| response at the refined extremum (intensities in [0, 1]).
    pub contrast_threshold: f64,
    /// Maximum principal-curvature ratio.
    pub edge_threshold: f64,
    /// Keep at most this many keypoint locations, strongest response first.
    pub max_keypoints: usize,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self {
            contrast_threshold: 0.04,
            edge_threshold: 10.0,
            max_keypoints: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    /// Column coordinate in input pixels.
    pub x: f64,
    /// Row coordinate in input pixels.
    pub y: f64,
    /// Blur scale in input pixels.
    pub scale: f64,
    /// Dominant gradient direction, radians in `[0, 2π)`.
    pub orientation: f64,
    /// |DoG| at the refined extremum.
    pub response: f64,
    /// L2-normalized, [`DESCRIPTOR_LEN`] values.
    pub descriptor: Vec<f64>,
}

#[derive(Clone)]
struct Layer {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Layer {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.w + c]
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = libm::ceil(4.0 * sigma).max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with replicated borders.
fn blur(src: &Layer, sigma: f64) -> Layer {
    let k = gaussian_kernel(sigma);
    let radius = (k.len() / 2) as isize;
    let (w, h) = (src.w, src.h);
    let mut tmp = vec![0.0; w * h];
    for r in 0..h {
        let row = &src.data[r * w..(r + 1) * w];
        for c in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let cc = (c as isize + i as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += kv * row[cc];
            }
            tmp[r * w + c] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for (i, kv) in k.iter().enumerate() {
            let rr = (r as isize + i as isize - radius).clamp(0, h as isize - 1) as usize;
            let src_row = &tmp[rr * w..(rr + 1) * w];
            let dst = &mut out[r * w..(r + 1) * w];
            for (d, s) in dst.iter_mut().zip(src_row) {
                *d += kv * s;
            }
        }
    }
    Layer { w, h, data: out }
}

fn downsample(src: &Layer) -> Layer {
    let w = src.w / 2;
    let h = src.h / 2;
    let mut data = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            data.push(src.at(2 * r, 2 * c));
        }
    }
    Layer { w, h, data }
}

struct Octave {
    gauss: Vec<Layer>,
    dog: Vec<Layer>,
}

fn build_pyramid(base: Layer) -> Vec<Octave> {
    let min_side = base.w.min(base.h) as f64;
    let n_octaves = ((libm::log2(min_side) as isize) - 3).max(1) as usize;
    let k = libm::pow(2.0, 1.0 / INTERVALS as f64);
    let mut incr = [0.0; INTERVALS + 3];
    for (i, s) in incr.iter_mut().enumerate().skip(1) {
        let prev = BASE_SIGMA * libm::pow(k, (i - 1) as f64);
        let total = prev * k;
        *s = libm::sqrt(total * total - prev * prev);
    }
    let mut octaves: Vec<Octave> = Vec::with_capacity(n_octaves);
    let mut first = blur(
        &base,
        libm::sqrt(BASE_SIGMA * BASE_SIGMA - INPUT_SIGMA * INPUT_SIGMA),
    );
    for o in 0..n_octaves {
        if o > 0 {
            first = downsample(&octaves[o - 1].gauss[INTERVALS]);
        }
        let mut gauss = Vec::with_capacity(INTERVALS + 3);
        gauss.push(first.clone());
        for s in incr.iter().skip(1) {
            let next = blur(gauss.last().unwrap(), *s);
            gauss.push(next);
        }
        let dog = gauss
            .windows(2)
            .map(|p| Layer {
                w: p[0].w,
                h: p[0].h,
                data: p[1].data.iter().zip(&p[0].data).map(|(a, b)| a - b).collect(),
            })
            .collect();
        octaves.push(Octave { gauss, dog });
        if first.w / 2 < 2 * BORDER + 2 || first.h / 2 < 2 * BORDER + 2 {
            break;
        }
    }
    octaves
}

fn is_extremum(dog: &[Layer], s: usize, r: usize, c: usize) -> bool {
    let v = dog[s].at(r, c);
    let mut is_max = true;
    let mut is_min = true;
    for layer in &dog[s - 1..=s + 1] {
        for rr in r - 1..=r + 1 {
            for cc in c - 1..=c + 1 {
                let n = layer.at(rr, cc);
                if core::ptr::eq(layer, &dog[s]) && rr == r && cc == c {
                    continue;
                }
                if n >= v {
                    is_max = false;
                }
                if n <= v {
                    is_min = false;
                }
                if !is_max && !is_min {
                    return false;
                }
            }
        }
    }
    is_max || is_min
}

struct Candidate {
    octave: usize,
    layer: usize,
    row: usize,
    col: usize,
    /// subpixel position in octave pixels
    x: f64,
    y: f64,
    /// sigma in octave pixels
    sigma: f64,
    response: f64,
}

fn refine(
    dog: &[Layer],
    octave: usize,
    mut s: usize,
    mut r: usize,
    mut c: usize,
    params: &SiftParams,
) -> Option<Candidate> {
    let (w, h) = (dog[0].w, dog[0].h);
    let mut offset = [0.0; 3];
    let mut grad = [0.0; 3];
    let mut converged = false;
    for _ in 0..MAX_REFINE_STEPS {
        let d = |ds: usize, rr: usize, cc: usize| dog[ds].at(rr, cc);
        let v = d(s, r, c);
        let dx = 0.5 * (d(s, r, c + 1) - d(s, r, c - 1));
        let dy = 0.5 * (d(s, r + 1, c) - d(s, r - 1, c));
        let dsg = 0.5 * (d(s + 1, r, c) - d(s - 1, r, c));
        let dxx = d(s, r, c + 1) + d(s, r, c - 1) - 2.0 * v;
        let dyy = d(s, r + 1, c) + d(s, r - 1, c) - 2.0 * v;
        let dss = d(s + 1, r, c) + d(s - 1, r, c) - 2.0 * v;
        let dxy = 0.25 * (d(s, r + 1, c + 1) - d(s, r + 1, c - 1) - d(s, r - 1, c + 1)
            + d(s, r - 1, c - 1));
        let dxs = 0.25 * (d(s + 1, r, c + 1) - d(s + 1, r, c - 1) - d(s - 1, r, c + 1)
            + d(s - 1, r, c - 1));
        let dys = 0.25 * (d(s + 1, r + 1, c) - d(s + 1, r - 1, c) - d(s - 1, r + 1, c)
            + d(s - 1, r - 1, c));
        let hess = [dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss];
        grad = [dx, dy, dsg];
        let sol = linalg::solve(&hess, &[-dx, -dy, -dsg], 3)?;
        offset = [sol[0], sol[1], sol[2]];
        if offset.iter().all(|o| o.abs() < 0.5) {
            converged = true;
            break;
        }
        if offset.iter().any(|o| o.abs() > (i32::MAX / 3) as f64) {
            return None;
        }
        let nc = c as isize + libm::round(offset[0]) as isize;
        let nr = r as isize + libm::round(offset[1]) as isize;
        let ns = s as isize + libm::round(offset[2]) as isize;
        if ns < 1
            || ns > INTERVALS as isize
            || nc < BORDER as isize
            || nc >= (w - BORDER) as isize
            || nr < BORDER as isize
            || nr >= (h - BORDER) as isize
        {
            return None;
        }
        c = nc as usize;
        r = nr as usize;
        s = ns as usize;
    }
    if !converged {
        return None;
    }
    let v = dog[s].at(r, c);
    let contrast = v + 0.5 * (grad[0] * offset[0] + grad[1] * offset[1] + grad[2] * offset[2]);
    if contrast.abs() * (INTERVALS as f64) < params.contrast_threshold {
        return None;
    }
    let dxx = dog[s].at(r, c + 1) + dog[s].at(r, c - 1) - 2.0 * v;
    let dyy = dog[s].at(r + 1, c) + dog[s].at(r - 1, c) - 2.0 * v;
    let dxy = 0.25
        * (dog[s].at(r + 1, c + 1) - dog[s].at(r + 1, c - 1) - dog[s].at(r - 1, c + 1)
            + dog[s].at(r - 1, c - 1));
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let e = params.edge_threshold;
    if det <= 0.0 || tr * tr * e >= (e + 1.0) * (e + 1.0) * det {
        return None;
    }
    Some(Candidate {
        octave,
        layer: s,
        row: r,
        col: c,
        x: c as f64 + offset[0],
        y: r as f64 + offset[1],
        sigma: BASE_SIGMA * libm::pow(2.0, (s as f64 + offset[2]) / INTERVALS as f64),
        response: contrast.abs(),
    })
}

#[inline]
fn gradient(img: &Layer, r: usize, c: usize) -> (f64, f64) {
    (
        img.at(r, c + 1) - img.at(r, c - 1),
        img.at(r + 1, c) - img.at(r - 1, c),
    )
}

fn orientations(img: &Layer, cand: &Candidate) -> Vec<f64> {
    let sigma = ORI_SIGMA_FACTOR * cand.sigma;
    let radius = libm::round(ORI_RADIUS_FACTOR * cand.sigma) as isize;
    let mut hist = [0.0; ORI_BINS];
    let denom = -1.0 / (2.0 * sigma * sigma);
    for dr in -radius..=radius {
        let r = cand.row as isize + dr;
        if r <= 0 || r >= img.h as isize - 1 {
            continue;
        }
        for dc in -radius..=radius {
            let c = cand.col as isize + dc;
            if c <= 0 || c >= img.w as isize - 1 {
                continue;
            }
            let (gx, gy) = gradient(img, r as usize, c as usize);
            let mag = libm::sqrt(gx * gx + gy * gy);
            let ang = libm::atan2(gy, gx);
            let weight = libm::exp(((dr * dr + dc * dc) as f64) * denom);
            let mut bin = libm::floor(ang * ORI_BINS as f64 / (2.0 * PI) + 0.5) as isize;
            bin = bin.rem_euclid(ORI_BINS as isize);
            hist[bin as usize] += weight * mag;
        }
    }
    let mut smooth = [0.0; ORI_BINS];
    for (i, out) in smooth.iter_mut().enumerate() {
        let at = |o: isize| hist[(i as isize + o).rem_euclid(ORI_BINS as isize) as usize];
        *out = (at(-2) + at(2)) * (1.0 / 16.0)
            + (at(-1) + at(1)) * (4.0 / 16.0)
            + at(0) * (6.0 / 16.0);
    }
    let max = smooth.iter().cloned().fold(0.0, f64::max);
    let mut out = Vec::new();
    if max <= 0.0 {
        return out;
    }
    for i in 0..ORI_BINS {
        let l = smooth[(i + ORI_BINS - 1) % ORI_BINS];
        let rgt = smooth[(i + 1) % ORI_BINS];
        let v = smooth[i];
        if v > l && v > rgt && v >= ORI_PEAK_RATIO * max {
            let bin = i as f64 + 0.5 * (l - rgt) / (l - 2.0 * v + rgt);
            let mut ang = bin * 2.0 * PI / ORI_BINS as f64;
            ang = wrap(ang, 2.0 * PI);
            out.push(ang);
        }
    }
    out
}

fn describe(img: &Layer, cand: &Candidate, orientation: f64) -> Vec<f64> {
    let d = DESC_WIDTH as isize;
    let n = DESC_BINS;
    let hist_width = DESC_SCALE * cand.sigma;
    let max_radius = libm::sqrt((img.w * img.w + img.h * img.h) as f64);
    let radius = libm::round(hist_width * core::f64::consts::SQRT_2 * (d as f64 + 1.0) * 0.5)
        .min(max_radius) as isize;
    let (sin_t, cos_t) = libm::sincos(orientation);
    let (sin_t, cos_t) = (sin_t / hist_width, cos_t / hist_width);
    let exp_scale = -1.0 / (0.5 * (d * d) as f64);
    let bins_per_rad = n as f64 / (2.0 * PI);
    let side = DESC_WIDTH + 2;
    let mut hist = vec![0.0; side * side * (n + 2)];
    let (x0, y0) = (libm::round(cand.x) as isize, libm::round(cand.y) as isize);

    for i in -radius..=radius {
        for j in -radius..=radius {
            // rotate the offset into the keypoint frame
            let c_rot = j as f64 * cos_t + i as f64 * sin_t;
            let r_rot = -(j as f64) * sin_t + i as f64 * cos_t;
            let rbin = r_rot + (d / 2) as f64 - 0.5;
            let cbin = c_rot + (d / 2) as f64 - 0.5;
            if rbin <= -1.0 || rbin >= d as f64 || cbin <= -1.0 || cbin >= d as f64 {
                continue;
            }
            let r = y0 + i;
            let c = x0 + j;
            if r <= 0 || r >= img.h as isize - 1 || c <= 0 || c >= img.w as isize - 1 {
                continue;
            }
            let (gx, gy) = gradient(img, r as usize, c as usize);
            let mag = libm::sqrt(gx * gx + gy * gy)
                * libm::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);
            let mut obin = (libm::atan2(gy, gx) - orientation) * bins_per_rad;
            obin = wrap(obin, n as f64);

            let r0 = libm::floor(rbin);
            let c0 = libm::floor(cbin);
            let o0 = libm::floor(obin);
            let (fr, fc, fo) = (rbin - r0, cbin - c0, obin - o0);
            let (r0, c0) = (r0 as isize, c0 as isize);
            let o0 = (o0 as usize) % n;
            for (dr, wr) in [(0, 1.0 - fr), (1, fr)] {
                for (dc, wc) in [(0, 1.0 - fc), (1, fc)] {
                    let base = ((r0 + 1 + dr) as usize * side + (c0 + 1 + dc) as usize) * (n + 2);
                    let v = mag * wr * wc;
                    hist[base + o0] += v * (1.0 - fo);
                    hist[base + o0 + 1] += v * fo;
                }
            }
        }
    }

    let mut desc = Vec::with_capacity(DESCRIPTOR_LEN);
    for r in 0..DESC_WIDTH {
        for c in 0..DESC_WIDTH {
            let base = ((r + 1) * side + (c + 1)) * (n + 2);
            let mut bins = [0.0; DESC_BINS];
            bins.copy_from_slice(&hist[base..base + n]);
            // wrap the overflow bin
            bins[0] += hist[base + n];
            desc.extend_from_slice(&bins);
        }
    }
    normalize(&mut desc);
    for v in desc.iter_mut() {
        *v = v.min(DESC_CLIP);
    }
    normalize(&mut desc);
    desc
}

/// `v` reduced into `[0, m)`.
#[inline]
fn wrap(v: f64, m: f64) -> f64 {
    let r = libm::fmod(v, m);
    let r = if r < 0.0 { r + m } else { r };
    if r >= m {
        0.0
    } else {
        r
    }
}

fn normalize(v: &mut [f64]) {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Detects keypoints on the grayscale of `img` and describes them.
pub fn detect_and_describe(img: &RasterImage) -> Result<Vec<Keypoint>> {
    detect_and_describe_with(img, &SiftParams::default())
}

pub fn detect_and_describe_with(img: &RasterImage, params: &SiftParams) -> Result<Vec<Keypoint>> {
    let (w, h) = (img.width(), img.height());
    if w < MIN_IMAGE_SIDE || h < MIN_IMAGE_SIDE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: MIN_IMAGE_SIDE,
        });
    }
    let base = Layer {
        w,
        h,
        data: to_grayscale(img).into_data(),
    };
    let octaves = build_pyramid(base);
    let prefilter = 0.5 * params.contrast_threshold / INTERVALS as f64;

    let mut candidates = Vec::new();
    for (o, oct) in octaves.iter().enumerate() {
        let (ow, oh) = (oct.dog[0].w, oct.dog[0].h);
        if ow <= 2 * BORDER || oh <= 2 * BORDER {
            continue;
        }
        for s in 1..=INTERVALS {
            for r in BORDER..oh - BORDER {
                for c in BORDER..ow - BORDER {
                    let v = oct.dog[s].at(r, c);
                    if v.abs() <= prefilter || !is_extremum(&oct.dog, s, r, c) {
                        continue;
                    }
                    if let Some(cand) = refine(&oct.dog, o, s, r, c, params) {
                        candidates.push(cand);
                    }
                }
            }
        }
    }

    // strongest first; position breaks ties so the order is total
    candidates.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.octave.cmp(&b.octave))
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
    candidates.truncate(params.max_keypoints);

    let mut keypoints = Vec::new();
    for cand in &candidates {
        let img = &octaves[cand.octave].gauss[cand.layer];
        let factor = libm::pow(2.0, cand.octave as f64);
        for ori in orientations(img, cand) {
            keypoints.push(Keypoint {
                x: cand.x * factor,
                y: cand.y * factor,
                scale: cand.sigma * factor,
                orientation: ori,
                response: cand.response,
                descriptor: describe(img, cand, ori),
            });
        }
    }
    Ok(keypoints)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize, seed: u64) -> RasterImage {
        let mut s = seed;
        let mut noise = vec![0.0; w * h];
        for v in noise.iter_mut() {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            *v = (s >> 11) as f64 / (1u64 << 53) as f64;
        }
        let noise = blur(&Layer { w, h, data: noise }, 2.0);
        RasterImage::from_fn(w, h, |r, c| {
            let checker = if ((r / 32) + (c / 32)) % 2 == 0 { 0.3 } else { 0.7 };
            let v = (checker + 2.0 * (noise.at(r, c) - 0.5)).clamp(0.0, 1.0);
            [v, v, v]
        })
        .unwrap()
    }

    #[test]
    fn uniform_image_has_no_keypoints() {
        let img = RasterImage::filled(64, 64, [0.5, 0.5, 0.5]).unwrap();
        assert!(detect_and_describe(&img).unwrap().is_empty());
    }

    #[test]
    fn too_small_rejected() {
        let img = RasterImage::filled(31, 64, [0.5, 0.5, 0.5]).unwrap();
        assert!(matches!(
            detect_and_describe(&img),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn textured_checkerboard_has_many_keypoints() {
        let img = textured(256, 256, 7);
        let kps = detect_and_describe(&img).unwrap();
        assert!(kps.len() >= 50, "only {} keypoints", kps.len());
        for kp in &kps {
            assert_eq!(kp.descriptor.len(), DESCRIPTOR_LEN);
            let n: f64 = kp.descriptor.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-9);
            assert!(kp.x >= -1.0 && kp.x <= 257.0 && kp.y >= -1.0 && kp.y <= 257.0);
            assert!(kp.scale > 0.0);
        }
    }

    #[test]
    fn deterministic() {
        let img = textured(128, 96, 3);
        assert_eq!(
            detect_and_describe(&img).unwrap(),
            detect_and_describe(&img).unwrap()
        );
    }

    #[test]
    fn rotation_by_90_degrees_preserves_keypoints() {
        let n = 192;
        let img = textured(n, n, 11);
        // rotated(r, c) = img(c, n-1-r): a 90° turn, exact on the pixel grid
        let rot = RasterImage::from_fn(n, n, |r, c| img.pixel(c, n - 1 - r)).unwrap();
        let a = detect_and_describe(&img).unwrap();
        let b = detect_and_describe(&rot).unwrap();
        let (na, nb) = (a.len() as f64, b.len() as f64);
        assert!((na - nb).abs() <= 0.1 * na.max(nb), "{na} vs {nb}");

        // geometric correspondence: img (x, y) lands at rot (y, n-1-x)
        let mut close = 0;
        let mut checked = 0;
        for kp in a.iter().filter(|k| k.scale < 6.0) {
            let (ex, ey) = (kp.y, (n - 1) as f64 - kp.x);
            let best = b
                .iter()
                .filter(|q| libm::hypot(q.x - ex, q.y - ey) < 1.0)
                .map(|q| {
                    libm::sqrt(
                        q.descriptor
                            .iter()
                            .zip(&kp.descriptor)
                            .map(|(u, v)| (u - v) * (u - v))
                            .sum::<f64>(),
                    )
                })
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                checked += 1;
                if best < 0.2 {
                    close += 1;
                }
            }
        }
        assert!(checked >= 20, "only {checked} geometric correspondences");
        assert!(
            close as f64 >= 0.8 * checked as f64,
            "{close}/{checked} descriptors close"
        );
    }
}
