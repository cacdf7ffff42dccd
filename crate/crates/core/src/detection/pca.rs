use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::symmetric_eigen;
use crate::{Error, Result};

/// Mean plus `S` orthonormal principal directions of a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpace {
    pub mean: Vec<f64>,
    /// `S x d`, row `k` is the `k`-th principal direction.
    pub basis: Vec<f64>,
    /// Eigenvalues of the retained directions, descending.
    pub eigenvalues: Vec<f64>,
    pub components: usize,
    pub dim: usize,
    /// Set when the covariance is (numerically) zero, i.e. all samples are
    /// identical; the basis is then an arbitrary orthonormal set.
    pub degenerate: bool,
}

impl EigenSpace {
    pub fn basis_row(&self, k: usize) -> &[f64] {
        &self.basis[k * self.dim..(k + 1) * self.dim]
    }

    /// `basis · (x - mean)` written into `out` (length `S`).
    #[inline]
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (k, o) in out.iter_mut().enumerate().take(self.components) {
            let row = &self.basis[k * self.dim..(k + 1) * self.dim];
            let mut acc = 0.0;
            for ((b, v), m) in row.iter().zip(x).zip(&self.mean) {
                acc += b * (v - m);
            }
            *o = acc;
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.components];
        self.project_into(x, &mut out);
        out
    }

    /// `mean + basisᵀ · coords`
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (k, &c) in coords.iter().enumerate().take(self.components) {
            for (o, b) in out.iter_mut().zip(self.basis_row(k)) {
                *o += c * b;
            }
        }
        out
    }
}

/// PCA of `m` samples of dimension `d` stored row-major in `samples`.
///
/// Covariance uses the `m - 1` divisor. Each retained direction is signed so
/// that its largest-magnitude coordinate is positive (first such coordinate
/// on ties).
pub fn fit_pca(samples: &[f64], m: usize, d: usize, components: usize) -> Result<EigenSpace> {
    if samples.len() != m * d {
        return Err(Error::LengthMismatch {
            expected: m * d,
            actual: samples.len(),
        });
    }
    if m < 2 {
        return Err(Error::InvalidParameter("PCA needs at least two samples"));
    }
    if components == 0 || components > m.min(d) {
        return Err(Error::InvalidParameter(
            "component count must be in 1..=min(samples, dimension)",
        ));
    }
    // shifted by the first row so identical samples give an exact mean
    let first = &samples[..d];
    let mut shift = vec![0.0; d];
    for row in samples.chunks_exact(d) {
        for ((acc, v), f) in shift.iter_mut().zip(row).zip(first) {
            *acc += v - f;
        }
    }
    let mean: Vec<f64> = first
        .iter()
        .zip(&shift)
        .map(|(f, s)| f + s / m as f64)
        .collect();

    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for row in samples.chunks_exact(d) {
        for ((c, v), mu) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - mu;
        }
        for i in 0..d {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let dst = &mut cov[i * d + i..(i + 1) * d];
            for (o, cj) in dst.iter_mut().zip(&centered[i..]) {
                *o += ci * cj;
            }
        }
    }
    let denom = (m - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }

    let eig = symmetric_eigen(&cov, d);
    let top = eig.values.first().copied().unwrap_or(0.0);
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let degenerate = trace <= f64::EPSILON * f64::EPSILON || top <= 0.0;

    let mut basis = Vec::with_capacity(components * d);
    for k in 0..components {
        let mut v = eig.vectors[k * d..(k + 1) * d].to_vec();
        let mut pivot = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        basis.extend(v);
    }
    Ok(EigenSpace {
        mean,
        basis,
        eigenvalues: eig.values[..components].to_vec(),
        components,
        dim: d,
        degenerate,
    })
}
