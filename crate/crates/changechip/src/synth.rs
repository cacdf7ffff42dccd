//! Synthetic PCB-like boards and planted-defect image pairs with ground
//! truth masks.

use changechip_core::analysis::ChangeMask;
use changechip_core::registration::{warp, AffineTransform};
use changechip_core::RasterImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUBSTRATE: [f64; 3] = [0.10, 0.36, 0.16];
const COPPER: [f64; 3] = [0.78, 0.60, 0.28];
const PAD: [f64; 3] = [0.82, 0.82, 0.78];
const BODY: [f64; 3] = [0.08, 0.08, 0.09];
const SILK: [f64; 3] = [0.92, 0.92, 0.90];
const CERAMIC: [f64; 3] = [0.86, 0.70, 0.46];
const CONNECTOR: [f64; 3] = [0.94, 0.93, 0.86];
/// Bare laminate under scraped solder mask.
const LAMINATE: [f64; 3] = [0.84, 0.76, 0.56];

fn quantize(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

#[allow(clippy::too_many_arguments)]
fn fill_rect(img: &mut [[f64; 3]], w: usize, h: usize, x: i64, y: i64, rw: i64, rh: i64, color: [f64; 3]) {
    for r in y.max(0)..(y + rh).min(h as i64) {
        for c in x.max(0)..(x + rw).min(w as i64) {
            img[r as usize * w + c as usize] = color;
        }
    }
}

fn fill_disc(img: &mut [[f64; 3]], w: usize, h: usize, cx: f64, cy: f64, rad: f64, color: [f64; 3]) {
    let (r0, r1) = ((cy - rad).floor().max(0.0) as usize, ((cy + rad).ceil() as usize).min(h - 1));
    let (c0, c1) = ((cx - rad).floor().max(0.0) as usize, ((cx + rad).ceil() as usize).min(w - 1));
    for r in r0..=r1 {
        for c in c0..=c1 {
            let (dx, dy) = (c as f64 - cx, r as f64 - cy);
            if dx * dx + dy * dy <= rad * rad {
                img[r * w + c] = color;
            }
        }
    }
}

/// Separable Gaussian blur with edge clamping.
fn blur(px: &[[f64; 3]], w: usize, h: usize, sigma: f64) -> Vec<[f64; 3]> {
    let radius = (3.0 * sigma).ceil() as i64;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let pass = |src: &[[f64; 3]], horizontal: bool| -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; w * h];
        for r in 0..h {
            for c in 0..w {
                let mut acc = [0.0; 3];
                for (k, wt) in kernel.iter().enumerate() {
                    let o = k as i64 - radius;
                    let (rr, cc) = if horizontal {
                        (r as i64, (c as i64 + o).clamp(0, w as i64 - 1))
                    } else {
                        ((r as i64 + o).clamp(0, h as i64 - 1), c as i64)
                    };
                    let p = src[rr as usize * w + cc as usize];
                    for ch in 0..3 {
                        acc[ch] += wt * p[ch];
                    }
                }
                out[r * w + c] = acc.map(|v| v / norm);
            }
        }
        out
    };
    let tmp = pass(px, true);
    pass(&tmp, false)
}

/// A seeded board: green substrate with traces, pads, IC bodies with pins,
/// two-terminal passives and silkscreen marks, lightly blurred and
/// quantized to 8 bits.
pub fn synthetic_board(width: usize, height: usize, seed: u64) -> Result<RasterImage> {
    if width < 32 || height < 32 {
        return Err(Error::Config("synthetic boards need at least 32x32 pixels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width, height);
    let area = (w * h) as f64;
    let mut px: Vec<[f64; 3]> = (0..w * h)
        .map(|_| {
            let n = rng.gen_range(-0.025..0.025);
            [SUBSTRATE[0] + n, SUBSTRATE[1] + n, SUBSTRATE[2] + n]
        })
        .collect();
    let (wi, hi) = (w as i64, h as i64);

    let traces = (area / 3000.0).ceil() as usize;
    for _ in 0..traces {
        let t = rng.gen_range(2..5);
        let x0 = rng.gen_range(0..wi);
        let y0 = rng.gen_range(0..hi);
        let x1 = rng.gen_range(0..wi);
        let y1 = rng.gen_range(0..hi);
        // L-shaped route
        fill_rect(&mut px, w, h, x0.min(x1), y0, (x1 - x0).abs() + t, t, COPPER);
        fill_rect(&mut px, w, h, x1, y0.min(y1), t, (y1 - y0).abs() + t, COPPER);
    }
    let pads = (area / 1500.0).ceil() as usize;
    for _ in 0..pads {
        let cx = rng.gen_range(0.0..w as f64);
        let cy = rng.gen_range(0.0..h as f64);
        let rad = rng.gen_range(2.0..5.0);
        fill_disc(&mut px, w, h, cx, cy, rad, PAD);
        fill_disc(&mut px, w, h, cx, cy, rad * 0.4, BODY);
    }
    let chips = (area / 6000.0).ceil() as usize;
    for _ in 0..chips {
        let cw = rng.gen_range(10..28);
        let ch = rng.gen_range(8..22);
        let x = rng.gen_range(-4..wi);
        let y = rng.gen_range(-4..hi);
        let pins = rng.gen_range(2..7);
        for p in 0..pins {
            let px_ = x + 2 + p * (cw - 4) / pins.max(1);
            fill_rect(&mut px, w, h, px_, y - 3, 2, ch + 6, PAD);
        }
        fill_rect(&mut px, w, h, x, y, cw, ch, BODY);
        fill_rect(&mut px, w, h, x + 2, y + 2, 2, 2, SILK);
        if rng.gen_bool(0.5) {
            fill_rect(&mut px, w, h, x + cw / 3, y + ch / 2, cw / 3, 1, SILK);
        }
    }
    // two-terminal passives: ceramic body between two pads
    let passives = (area / 2500.0).ceil() as usize;
    for _ in 0..passives {
        let (len, thick) = (rng.gen_range(8..16), rng.gen_range(4..8));
        let x = rng.gen_range(-4..wi);
        let y = rng.gen_range(-4..hi);
        let body = if rng.gen_bool(0.8) { CERAMIC } else { CONNECTOR };
        if rng.gen_bool(0.5) {
            fill_rect(&mut px, w, h, x, y, len, thick, PAD);
            fill_rect(&mut px, w, h, x + 3, y, len - 6, thick, body);
        } else {
            fill_rect(&mut px, w, h, x, y, thick, len, PAD);
            fill_rect(&mut px, w, h, x, y + 3, thick, len - 6, body);
        }
    }
    let marks = (area / 2500.0).ceil() as usize;
    for _ in 0..marks {
        let x = rng.gen_range(0..wi);
        let y = rng.gen_range(0..hi);
        let (mw, mh) = if rng.gen_bool(0.5) { (rng.gen_range(3..9), 1) } else { (1, rng.gen_range(3..9)) };
        fill_rect(&mut px, w, h, x, y, mw, mh, SILK);
    }
    let px = blur(&px, w, h, 1.0);
    let flat: Vec<f64> = px.iter().flat_map(|p| p.map(quantize)).collect();
    Ok(RasterImage::from_interleaved(w, h, &flat)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Defect {
    /// Fills the block with `color`, by default the mean of the ring of
    /// pixels just outside it (a missing part).
    EraseBlock {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
        #[serde(default)]
        color: Option<[f64; 3]>,
    },
    /// Moves the block by `(dx, dy)`; the vacated part is filled like
    /// `erase_block`. Footprint pixels whose largest channel change is at
    /// most `tolerance` count as unchanged.
    ShiftBlock {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
        dx: i64,
        dy: i64,
        #[serde(default)]
        fill: Option<[f64; 3]>,
        #[serde(default)]
        tolerance: f64,
    },
    /// Blends the block towards `color`: `(1 - mix) · old + mix · color`.
    RecolorBlock {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
        color: [f64; 3],
        #[serde(default = "default_mix")]
        mix: f64,
    },
    /// A solid disc (solder ball or bridge).
    PasteBlob {
        cx: f64,
        cy: f64,
        radius: f64,
        #[serde(default = "default_blob")]
        color: [f64; 3],
    },
}

fn default_mix() -> f64 {
    0.6
}

fn default_blob() -> [f64; 3] {
    PAD
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSpec {
    #[serde(default)]
    pub defects: Vec<Defect>,
    /// Global multiplicative gain applied to the target.
    #[serde(default)]
    pub illumination: Option<f64>,
    /// Largest corner displacement (pixels) of a random similarity applied
    /// to the target.
    #[serde(default)]
    pub jitter_px: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DefectPair {
    pub reference: RasterImage,
    pub target: RasterImage,
    pub ground_truth: ChangeMask,
    /// Per defect, its own ground-truth footprint (same frame as
    /// `ground_truth`).
    pub defect_masks: Vec<ChangeMask>,
    /// True target → reference mapping.
    pub transform: AffineTransform,
}

fn check_rect(x: usize, y: usize, rw: usize, rh: usize, w: usize, h: usize) -> Result<()> {
    if rw == 0 || rh == 0 || x + rw > w || y + rh > h {
        return Err(Error::Config(format!(
            "defect block ({x},{y},{rw},{rh}) outside {w}x{h} image"
        )));
    }
    Ok(())
}

fn ring_mean(img: &RasterImage, x: usize, y: usize, rw: usize, rh: usize) -> [f64; 3] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut acc = [0.0; 3];
    let mut n = 0.0;
    for r in y as i64 - 1..=(y + rh) as i64 {
        for c in x as i64 - 1..=(x + rw) as i64 {
            let inside = r >= y as i64 && r < (y + rh) as i64 && c >= x as i64 && c < (x + rw) as i64;
            if inside || r < 0 || c < 0 || r >= h || c >= w {
                continue;
            }
            let p = img.pixel(r as usize, c as usize);
            for k in 0..3 {
                acc[k] += p[k];
            }
            n += 1.0;
        }
    }
    if n == 0.0 {
        return SUBSTRATE.map(quantize);
    }
    acc.map(|v| quantize(v / n))
}

fn empty_mask(w: usize, h: usize) -> ChangeMask {
    ChangeMask {
        width: w,
        height: h,
        mask: vec![false; w * h],
        classes: Vec::new(),
    }
}

/// Applies one defect to `img` in place and returns its footprint.
// `!(x > 0.0)` also rejects NaN.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn apply_defect(img: &mut RasterImage, defect: &Defect) -> Result<ChangeMask> {
    let (w, h) = (img.width(), img.height());
    let mut m = empty_mask(w, h);
    match *defect {
        Defect::EraseBlock { x, y, width, height, color } => {
            check_rect(x, y, width, height, w, h)?;
            let color = color.map_or_else(|| ring_mean(img, x, y, width, height), |c| c.map(quantize));
            for r in y..y + height {
                for c in x..x + width {
                    img.set_pixel(r, c, color);
                    m.mask[r * w + c] = true;
                }
            }
        }
        Defect::ShiftBlock { x, y, width, height, dx, dy, fill, tolerance } => {
            check_rect(x, y, width, height, w, h)?;
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 {
                return Err(Error::Config("shifted block leaves the image".into()));
            }
            check_rect(nx as usize, ny as usize, width, height, w, h)?;
            let (lo_r, lo_c) = (y.min(ny as usize), x.min(nx as usize));
            let (hi_r, hi_c) = (y.max(ny as usize) + height, x.max(nx as usize) + width);
            let before = img.crop(lo_c, lo_r, hi_c - lo_c, hi_r - lo_r)?;
            let fill = fill.map_or_else(|| ring_mean(img, x, y, width, height), |c| c.map(quantize));
            for r in y..y + height {
                for c in x..x + width {
                    img.set_pixel(r, c, fill);
                }
            }
            for r in 0..height {
                for c in 0..width {
                    let v = before.pixel(y - lo_r + r, x - lo_c + c);
                    img.set_pixel(ny as usize + r, nx as usize + c, v);
                }
            }
            // both footprints, minus pixels that ended up unchanged
            for r in lo_r..hi_r {
                for c in lo_c..hi_c {
                    let in_src = r >= y && r < y + height && c >= x && c < x + width;
                    let (ri, ci) = (r as i64, c as i64);
                    let in_dst = ri >= ny && ri < ny + height as i64 && ci >= nx && ci < nx + width as i64;
                    let (a, b) = (img.pixel(r, c), before.pixel(r - lo_r, c - lo_c));
                    let change = (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max);
                    if (in_src || in_dst) && change > tolerance {
                        m.mask[r * w + c] = true;
                    }
                }
            }
        }
        Defect::RecolorBlock { x, y, width, height, color, mix } => {
            check_rect(x, y, width, height, w, h)?;
            if !(0.0..=1.0).contains(&mix) {
                return Err(Error::Config("recolor mix must be in [0, 1]".into()));
            }
            for r in y..y + height {
                for c in x..x + width {
                    let p = img.pixel(r, c);
                    let q = [0, 1, 2].map(|k| quantize((1.0 - mix) * p[k] + mix * color[k]));
                    img.set_pixel(r, c, q);
                    m.mask[r * w + c] = true;
                }
            }
        }
        Defect::PasteBlob { cx, cy, radius, color } => {
            if !(radius > 0.0)
                || cx - radius < 0.0
                || cy - radius < 0.0
                || cx + radius > (w - 1) as f64
                || cy + radius > (h - 1) as f64
            {
                return Err(Error::Config(format!(
                    "blob at ({cx},{cy}) radius {radius} outside {w}x{h} image"
                )));
            }
            let color = color.map(quantize);
            for r in (cy - radius).floor() as usize..=(cy + radius).ceil() as usize {
                for c in (cx - radius).floor() as usize..=(cx + radius).ceil() as usize {
                    let (dx, dy) = (c as f64 - cx, r as f64 - cy);
                    if dx * dx + dy * dy <= radius * radius {
                        img.set_pixel(r, c, color);
                        m.mask[r * w + c] = true;
                    }
                }
            }
        }
    }
    Ok(m)
}

/// A random similarity about the image centre whose four corners move by
/// at most `max_px`.
fn random_jitter(w: usize, h: usize, max_px: f64, rng: &mut ChaCha8Rng) -> AffineTransform {
    let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
    let half_diag = (cx * cx + cy * cy).sqrt();
    // split the budget between translation and rotation
    let t_budget = 0.6 * max_px;
    let ang_budget = 0.4 * max_px / half_diag;
    let dir = rng.gen_range(0.0..std::f64::consts::TAU);
    let mag = rng.gen_range(0.3..1.0) * t_budget;
    let angle = rng.gen_range(-ang_budget..=ang_budget);
    AffineTransform::similarity_about(angle, 1.0, cx, cy, mag * dir.cos(), mag * dir.sin())
}

fn crop_mask(m: &ChangeMask, margin: usize) -> ChangeMask {
    let (w, h) = (m.width - 2 * margin, m.height - 2 * margin);
    let mut out = empty_mask(w, h);
    for r in 0..h {
        for c in 0..w {
            out.mask[r * w + c] = m.mask[(r + margin) * m.width + c + margin];
        }
    }
    out
}

/// Builds `(reference, target, ground_truth)` from `base`.
///
/// Defects are applied in order to a copy of `base`; the ground truth is
/// the union of their footprints. Illumination then scales the target and
/// jitter resamples it. With jitter, all three images are cropped by a
/// margin of `ceil(jitter_px) + 2` so the target has no empty border.
pub fn generate_defect_pair(base: &RasterImage, spec: &DefectSpec, seed: u64) -> Result<DefectPair> {
    let (w, h) = (base.width(), base.height());
    let mut target = base.clone();
    let mut gt = empty_mask(w, h);
    let mut defect_masks = Vec::with_capacity(spec.defects.len());
    for d in &spec.defects {
        let m = apply_defect(&mut target, d)?;
        for (g, v) in gt.mask.iter_mut().zip(&m.mask) {
            *g |= *v;
        }
        defect_masks.push(m);
    }
    if let Some(gain) = spec.illumination {
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::Config("illumination gain must be positive".into()));
        }
        target = target.map_values(|v| quantize(v * gain));
    }
    let mut transform = AffineTransform::IDENTITY;
    let mut reference = base.clone();
    if let Some(max_px) = spec.jitter_px.filter(|&j| j > 0.0) {
        let margin = max_px.ceil() as usize + 2;
        if 2 * margin + 32 > w.min(h) {
            return Err(Error::Config("image too small for the requested jitter".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = random_jitter(w, h, max_px, &mut rng);
        let warped = warp(&target, &j, w, h)?.map_values(quantize);
        let (cw, ch) = (w - 2 * margin, h - 2 * margin);
        target = warped.crop(margin, margin, cw, ch)?;
        reference = base.crop(margin, margin, cw, ch)?;
        gt = crop_mask(&gt, margin);
        defect_masks = defect_masks.iter().map(|m| crop_mask(m, margin)).collect();
        // cropping both frames by the same offset conjugates j
        let shift = AffineTransform::translation(margin as f64, margin as f64);
        let unshift = AffineTransform::translation(-(margin as f64), -(margin as f64));
        transform = unshift.compose(&j.inverse()?).compose(&shift);
    }
    Ok(DefectPair {
        reference,
        target,
        ground_truth: gt,
        defect_masks,
        transform,
    })
}

/// Mean squared RGB change, the fraction of pixels whose squared change
/// exceeds `min_sq` and the pixel count, over the marked pixels of `m`.
/// `before` is the crop of the unchanged image at `origin`, which must
/// contain every marked pixel.
fn visibility(
    before: &RasterImage,
    origin: (usize, usize),
    after: &RasterImage,
    m: &ChangeMask,
    min_sq: f64,
) -> (f64, f64, usize) {
    let (mut sum, mut strong, mut n) = (0.0, 0usize, 0usize);
    let cells = (0..before.height()).flat_map(|r| (0..before.width()).map(move |c| (r + origin.1, c + origin.0)));
    for (r, c) in cells.filter(|&(r, c)| m.mask[r * m.width + c]) {
        let (a, b) = (before.pixel(r - origin.1, c - origin.0), after.pixel(r, c));
        let d = (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>() / 3.0;
        sum += d;
        strong += usize::from(d > min_sq);
        n += 1;
    }
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    (sum / n as f64, strong as f64 / n as f64, n)
}

fn random_defect(kind: usize, w: usize, h: usize, border: usize, rng: &mut ChaCha8Rng) -> (Defect, [usize; 4]) {
    let side = |rng: &mut ChaCha8Rng| rng.gen_range(22..=40usize);
    let (bw, bh) = (side(rng), side(rng));
    let x = rng.gen_range(border..w - border - bw);
    let y = rng.gen_range(border..h - border - bh);
    match kind {
        0 => (Defect::EraseBlock { x, y, width: bw, height: bh, color: Some(LAMINATE) }, [x, y, bw, bh]),
        1 => {
            let s = rng.gen_range(8..=14i64);
            let (dx, dy) = match rng.gen_range(0..4) {
                0 => (s, 0),
                1 => (-s, 0),
                2 => (0, s),
                _ => (0, -s),
            };
            let bx = (x as i64 + dx.min(0)) as usize;
            let by = (y as i64 + dy.min(0)) as usize;
            let d = Defect::ShiftBlock { x, y, width: bw, height: bh, dx, dy, fill: Some(SUBSTRATE), tolerance: 0.1 };
            (d, [bx, by, bw + dx.unsigned_abs() as usize, bh + dy.unsigned_abs() as usize])
        }
        2 => {
            let palette = [[0.9, 0.1, 0.1], [0.1, 0.15, 0.9], [0.95, 0.9, 0.1]];
            let color = palette[rng.gen_range(0..palette.len())];
            (Defect::RecolorBlock { x, y, width: bw, height: bh, color, mix: 0.8 }, [x, y, bw, bh])
        }
        _ => {
            let radius = rng.gen_range(10.0..18.0f64);
            let (cx, cy) = (x as f64 + radius, y as f64 + radius);
            let color = [PAD, CONNECTOR][rng.gen_range(0..2)];
            let r = radius.ceil() as usize;
            (Defect::PasteBlob { cx, cy, radius, color }, [x, y, 2 * r + 1, 2 * r + 1])
        }
    }
}

fn boxes_apart(a: [usize; 4], b: [usize; 4], gap: usize) -> bool {
    a[0] + a[2] + gap <= b[0] || b[0] + b[2] + gap <= a[0] || a[1] + a[3] + gap <= b[1] || b[1] + b[3] + gap <= a[1]
}

/// Smallest mean squared RGB change over a planted defect's footprint.
pub const MIN_DEFECT_MSE: f64 = 0.1;
/// Per-pixel squared change that counts as clearly visible.
pub const MIN_PIXEL_SQ_CHANGE: f64 = 0.02;

/// A seeded planted-defect pair: a fresh board with `defects` clearly
/// visible defects cycling through erase, shift, recolor and blob,
/// illumination gain in `[0.9, 1.1]` and up to 3 px of jitter.
///
/// Candidate placements whose change is too faint to be a defect (for
/// example erasing bare substrate) are redrawn.
pub fn planted_pair(width: usize, height: usize, defects: usize, seed: u64) -> Result<DefectPair> {
    let base = synthetic_board(width, height, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fde_fec7);
    let border = 24;
    let mut placed: Vec<[usize; 4]> = Vec::new();
    let mut chosen = Vec::new();
    let mut scratch = base.clone();
    let mut attempts = 0;
    while chosen.len() < defects {
        attempts += 1;
        if attempts > 200_000 {
            return Err(Error::Config("could not place the requested defects".into()));
        }
        let kind = (seed as usize + chosen.len()) % 4;
        let (d, bbox) = random_defect(kind, width, height, border, &mut rng);
        if !placed.iter().all(|&b| boxes_apart(b, bbox, 16)) {
            continue;
        }
        let [bx, by, bw, bh] = bbox;
        let saved = scratch.crop(bx, by, bw, bh)?;
        let restore = |img: &mut RasterImage| {
            for r in 0..bh {
                for c in 0..bw {
                    img.set_pixel(by + r, bx + c, saved.pixel(r, c));
                }
            }
        };
        let m = match apply_defect(&mut scratch, &d) {
            Ok(m) => m,
            Err(_) => {
                restore(&mut scratch);
                continue;
            }
        };
        let (mse, strong, count) = visibility(&saved, (bx, by), &scratch, &m, MIN_PIXEL_SQ_CHANGE);
        if count < 200 || mse < MIN_DEFECT_MSE || strong < 0.9 {
            restore(&mut scratch);
            continue;
        }
        placed.push(bbox);
        chosen.push(d);
    }
    let spec = DefectSpec {
        defects: chosen,
        illumination: Some(rng.gen_range(0.9..=1.1)),
        jitter_px: Some(3.0),
    };
    generate_defect_pair(&base, &spec, seed)
}
