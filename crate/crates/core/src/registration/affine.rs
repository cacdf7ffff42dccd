use alloc::vec::Vec;

use crate::linalg;
use crate::{Error, Result};

/// Smallest accepted `|det|` of the linear part.
pub const MIN_DETERMINANT: f64 = 1e-6;

/// 2x3 affine map `[a b tx; c d ty]` taking target coordinates `(x, y)` into
/// the reference frame. `x` is the column and `y` the row of a pixel center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    pub matrix: [[f64; 3]; 2],
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl AffineTransform {
    pub const IDENTITY: Self = Self {
        matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };

    pub fn new(matrix: [[f64; 3]; 2]) -> Self {
        Self { matrix }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self::new([[1.0, 0.0, tx], [0.0, 1.0, ty]])
    }

    /// Rotation by `angle` radians and uniform `scale` about the origin,
    /// followed by a translation.
    pub fn similarity(angle: f64, scale: f64, tx: f64, ty: f64) -> Self {
        let (s, c) = libm::sincos(angle);
        Self::new([[scale * c, -scale * s, tx], [scale * s, scale * c, ty]])
    }

    /// Same as [`similarity`](Self::similarity) but about the point `(cx, cy)`.
    pub fn similarity_about(angle: f64, scale: f64, cx: f64, cy: f64, tx: f64, ty: f64) -> Self {
        let to_origin = Self::translation(-cx, -cy);
        let back = Self::translation(cx + tx, cy + ty);
        back.compose(&Self::similarity(angle, scale, 0.0, 0.0).compose(&to_origin))
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.matrix;
        (
            m[0][0] * x + m[0][1] * y + m[0][2],
            m[1][0] * x + m[1][1] * y + m[1][2],
        )
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn is_degenerate(&self) -> bool {
        let det = self.determinant();
        !det.is_finite() || det.abs() <= MIN_DETERMINANT
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.determinant();
        if self.is_degenerate() {
            return Err(Error::DegenerateTransform(det));
        }
        let [[a, b, tx], [c, d, ty]] = self.matrix;
        let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
        Ok(Self::new([
            [ia, ib, -(ia * tx + ib * ty)],
            [ic, id, -(ic * tx + id * ty)],
        ]))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let a = &self.matrix;
        let b = &other.matrix;
        let mut m = [[0.0; 3]; 2];
        for i in 0..2 {
            for j in 0..3 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
            m[i][2] += a[i][2];
        }
        Self::new(m)
    }

    /// Mean distance between where `self` and `other` send the four corners
    /// of a `width x height` image.
    pub fn corner_error(&self, other: &Self, width: usize, height: usize) -> f64 {
        let (w, h) = ((width - 1) as f64, (height - 1) as f64);
        let corners = [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)];
        corners
            .iter()
            .map(|&(x, y)| {
                let (ax, ay) = self.apply(x, y);
                let (bx, by) = other.apply(x, y);
                libm::hypot(ax - bx, ay - by)
            })
            .sum::<f64>()
            / 4.0
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..2 {
            for j in 0..3 {
                d = d.max((self.matrix[i][j] - other.matrix[i][j]).abs());
            }
        }
        d
    }
}

/// A point pair: `target` should map onto `reference`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub target: (f64, f64),
    pub reference: (f64, f64),
}

impl Correspondence {
    pub fn new(target: (f64, f64), reference: (f64, f64)) -> Self {
        Self { target, reference }
    }

    pub fn residual(&self, t: &AffineTransform) -> f64 {
        let (x, y) = t.apply(self.target.0, self.target.1);
        libm::hypot(x - self.reference.0, y - self.reference.1)
    }
}

/// Least-squares affine fit. Needs at least three non-collinear pairs.
pub fn fit_affine(pairs: &[Correspondence]) -> Option<AffineTransform> {
    fit_affine_indexed(pairs, &(0..pairs.len()).collect::<Vec<_>>())
}

pub(crate) fn fit_affine_indexed(
    pairs: &[Correspondence],
    idx: &[usize],
) -> Option<AffineTransform> {
    if idx.len() < 3 {
        return None;
    }
    let n = idx.len() as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for &i in idx {
        mx += pairs[i].target.0;
        my += pairs[i].target.1;
    }
    mx /= n;
    my /= n;
    // normal equations in centered coordinates: [u v 1]
    let mut ata = [0.0; 9];
    let mut atx = [0.0; 3];
    let mut aty = [0.0; 3];
    for &i in idx {
        let p = &pairs[i];
        let row = [p.target.0 - mx, p.target.1 - my, 1.0];
        for r in 0..3 {
            for c in 0..3 {
                ata[r * 3 + c] += row[r] * row[c];
            }
            atx[r] += row[r] * p.reference.0;
            aty[r] += row[r] * p.reference.1;
        }
    }
    // reject (near-)collinear configurations relative to their spread
    let spread = ata[0] + ata[4];
    let det2 = ata[0] * ata[4] - ata[1] * ata[3];
    if spread <= 0.0 || det2 <= 1e-10 * spread * spread {
        return None;
    }
    let px = linalg::solve(&ata, &atx, 3)?;
    let py = linalg::solve(&ata, &aty, 3)?;
    let t = AffineTransform::new([
        [px[0], px[1], px[2] - px[0] * mx - px[1] * my],
        [py[0], py[1], py[2] - py[0] * mx - py[1] * my],
    ]);
    if t.is_degenerate() {
        None
    } else {
        Some(t)
    }
}
