//! Pipeline configuration as serialized into `run.json`.

use changechip_core::analysis::{EPS_OPTICAL, EPS_RADIOGRAPHIC};
use changechip_core::detection::DetectionParams;
use changechip_core::registration::{RansacParams, RegistrationParams};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    #[default]
    Optical,
    Radiographic,
}

impl Modality {
    pub fn default_eps(self) -> f64 {
        match self {
            Modality::Optical => EPS_OPTICAL,
            Modality::Radiographic => EPS_RADIOGRAPHIC,
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "optical" => Ok(Modality::Optical),
            "radiographic" | "xray" | "x-ray" => Ok(Modality::Radiographic),
            other => Err(Error::Config(format!("unknown modality {other:?}"))),
        }
    }
}

/// Which image exact histogram specification remaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramDirection {
    /// The aligned target takes the reference histogram.
    #[default]
    TargetToReference,
    /// The reference takes the aligned target's histogram.
    ReferenceToTarget,
}

/// Region of interest in reference pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl std::str::FromStr for Roi {
    type Err = Error;

    /// Parses `x,y,w,h`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("roi must be x,y,w,h with non-negative integers, got {s:?}"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let mut v = [0usize; 4];
        for (dst, p) in v.iter_mut().zip(&parts) {
            *dst = p.parse().map_err(|_| bad())?;
        }
        if v[2] == 0 || v[3] == 0 {
            return Err(Error::Config("roi width and height must be positive".into()));
        }
        Ok(Roi {
            x: v[0],
            y: v[1],
            width: v[2],
            height: v[3],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Odd window side.
    pub h: usize,
    /// Kmeans classes.
    pub classes: usize,
    pub s_rgb: usize,
    pub s_gray: usize,
    /// DBSCAN radius over class MSE.
    pub eps: f64,
    /// Lowe ratio threshold.
    pub ratio: f64,
    pub seed: u64,
    pub roi: Option<Roi>,
    pub skip_registration: bool,
    pub skip_histogram: bool,
    pub histogram_direction: HistogramDirection,
    pub modality: Modality,
    pub ransac_threshold_px: f64,
    pub ransac_iters: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_restarts: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let d = DetectionParams::default();
        let r = RansacParams::default();
        Self {
            h: d.h,
            classes: d.n,
            s_rgb: d.s_rgb,
            s_gray: d.s_gray,
            eps: EPS_OPTICAL,
            ratio: RegistrationParams::default().ratio_threshold,
            seed: 0,
            roi: None,
            skip_registration: false,
            skip_histogram: false,
            histogram_direction: HistogramDirection::TargetToReference,
            modality: Modality::Optical,
            ransac_threshold_px: r.inlier_threshold_px,
            ransac_iters: r.max_iters,
            kmeans_max_iters: d.max_iters,
            kmeans_restarts: d.restarts,
        }
    }
}

impl PipelineConfig {
    /// Defaults for a modality, including its DBSCAN radius.
    pub fn for_modality(modality: Modality) -> Self {
        Self {
            modality,
            eps: modality.default_eps(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.h == 0 || self.h % 2 == 0 {
            return fail("h must be a positive odd integer");
        }
        if self.classes < 2 {
            return fail("classes must be at least 2");
        }
        if self.s_rgb == 0 || self.s_rgb > 3 * self.h * self.h {
            return fail("s_rgb must be in 1..=3*h*h");
        }
        if self.s_gray == 0 || self.s_gray > self.h * self.h {
            return fail("s_gray must be in 1..=h*h");
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return fail("eps must be positive");
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return fail("ratio must be in (0, 1]");
        }
        if !(self.ransac_threshold_px.is_finite() && self.ransac_threshold_px > 0.0) {
            return fail("ransac_threshold_px must be positive");
        }
        if self.ransac_iters == 0 || self.kmeans_max_iters == 0 || self.kmeans_restarts == 0 {
            return fail("iteration counts must be positive");
        }
        Ok(())
    }

    pub fn detection_params(&self) -> DetectionParams {
        DetectionParams {
            h: self.h,
            n: self.classes,
            s_rgb: self.s_rgb,
            s_gray: self.s_gray,
            seed: self.seed,
            max_iters: self.kmeans_max_iters,
            restarts: self.kmeans_restarts,
        }
    }

    pub fn registration_params(&self) -> RegistrationParams {
        RegistrationParams {
            ratio_threshold: self.ratio,
            ransac: RansacParams {
                inlier_threshold_px: self.ransac_threshold_px,
                max_iters: self.ransac_iters,
                seed: self.seed,
            },
            ..RegistrationParams::default()
        }
    }
}
