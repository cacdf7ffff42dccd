//! Reference-based change detection for image pairs.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! parts of the pipeline:
//!
//! 1. [`registration`]: DoG keypoints with gradient-histogram descriptors,
//!    ratio-test matching, RANSAC affine estimation and bilinear warping.
//! 2. [`histogram`]: exact histogram specification with a strict pixel order.
//! 3. [`detection`]: absolute-difference descriptors, two PCA eigenspaces
//!    (RGB and gray), per-pixel projection and seeded Kmeans.
//! 4. [`analysis`]: per-class MSE, blue-to-red heat map, 1-D DBSCAN over the
//!    class scores and the final binary change mask.
//!
//! File formats, configuration and the command line live in the companion
//! `changechip` crate.
#![no_std]
#![deny(unsafe_code)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod detection;
mod error;
pub mod histogram;
pub mod imaging;
pub mod linalg;
pub mod registration;

pub use error::{Error, Result};
pub use imaging::{Plane, RasterImage};
