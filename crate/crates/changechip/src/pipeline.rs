//! End-to-end orchestration for one image pair.

use std::path::{Path, PathBuf};
use std::time::Instant;

use changechip_core::analysis::{
    binary_mask, class_mse, overlay, render_heatmap, select_change_classes, ChangeMask, ClassStats,
    Selection,
};
use changechip_core::detection::{detect_changes, Detection};
use changechip_core::histogram::exact_histogram_match;
use changechip_core::registration::{register, AffineTransform};
use changechip_core::RasterImage;
use serde::Serialize;

use crate::config::{HistogramDirection, PipelineConfig, Roi};
use crate::error::{Error, Result, Stage};
use crate::io;

/// Report format version of `run.json` / `classes.json`.
pub const REPORT_VERSION: u32 = 1;

/// Sub-image copy of `roi`.
pub fn crop_roi(img: &RasterImage, roi: &Roi) -> Result<RasterImage> {
    Ok(img.crop(roi.x, roi.y, roi.width, roi.height)?)
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct Timings {
    pub crop_ms: f64,
    pub registration_ms: f64,
    pub histogram_ms: f64,
    pub detection_ms: f64,
    pub analysis_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RegistrationSummary {
    /// Target → reference, `[[a, b, tx], [c, d, ty]]`.
    pub transform: [[f64; 3]; 2],
    pub reference_keypoints: usize,
    pub target_keypoints: usize,
    pub matches: usize,
    pub inliers: usize,
    /// Reference pixels with no target sample, filled from the reference.
    pub uncovered_pixels: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ClassRecord {
    pub id: usize,
    pub pixel_count: usize,
    pub mse: Option<f64>,
    pub rank: Option<usize>,
    pub selected: bool,
}

impl From<&ClassStats> for ClassRecord {
    fn from(s: &ClassStats) -> Self {
        Self {
            id: s.class_id,
            pixel_count: s.pixel_count,
            mse: s.mse,
            rank: s.rank,
            selected: s.selected,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StageError {
    pub stage: Option<Stage>,
    pub message: String,
}

/// Contents of `run.json`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub version: u32,
    pub status: &'static str,
    pub error: Option<StageError>,
    pub reference: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub config: PipelineConfig,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub registration: Option<RegistrationSummary>,
    pub histogram_matched: bool,
    pub nonempty_classes: usize,
    pub dbscan_clusters: usize,
    pub selected_classes: Vec<usize>,
    pub selected_count: usize,
    pub changed_pixels: usize,
    pub classes: Vec<ClassRecord>,
    pub timings: Timings,
}

/// Everything a run produced; fields stay `None` past the failing stage.
#[derive(Debug, Clone, Default)]
pub struct PipelineRun {
    pub reference: Option<RasterImage>,
    pub target: Option<RasterImage>,
    /// Target in the reference frame after every enabled preprocessing stage.
    pub aligned: Option<RasterImage>,
    pub transform: Option<AffineTransform>,
    pub registration: Option<RegistrationSummary>,
    pub histogram_matched: bool,
    pub detection: Option<Detection>,
    pub selection: Option<Selection>,
    pub mask: Option<ChangeMask>,
    pub heatmap: Option<RasterImage>,
    pub overlay: Option<RasterImage>,
    pub timings: Timings,
}

impl PipelineRun {
    pub fn report(
        &self,
        cfg: &PipelineConfig,
        error: Option<&Error>,
        paths: Option<(&Path, &Path)>,
    ) -> RunReport {
        let (width, height) = self
            .reference
            .as_ref()
            .map_or((0, 0), |r| (r.width(), r.height()));
        let sel = self.selection.as_ref();
        RunReport {
            version: REPORT_VERSION,
            status: if error.is_some() { "failed" } else { "ok" },
            error: error.map(|e| StageError {
                stage: e.stage(),
                message: e.to_string(),
            }),
            reference: paths.map(|p| p.0.to_path_buf()),
            target: paths.map(|p| p.1.to_path_buf()),
            config: cfg.clone(),
            seed: cfg.seed,
            width,
            height,
            registration: self.registration.clone(),
            histogram_matched: self.histogram_matched,
            nonempty_classes: self
                .detection
                .as_ref()
                .map_or(0, |d| d.cluster_map.nonempty_classes()),
            dbscan_clusters: sel.map_or(0, |s| s.cluster_count),
            selected_classes: sel.map_or_else(Vec::new, |s| s.selected.clone()),
            selected_count: sel.map_or(0, |s| s.selected.len()),
            changed_pixels: self.mask.as_ref().map_or(0, |m| m.count()),
            classes: self.class_records(),
            timings: self.timings.clone(),
        }
    }

    pub fn class_records(&self) -> Vec<ClassRecord> {
        self.selection
            .as_ref()
            .map_or_else(Vec::new, |s| s.stats.iter().map(ClassRecord::from).collect())
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Copies reference pixels wherever `coverage` is false.
fn fill_uncovered(img: &mut RasterImage, reference: &RasterImage, coverage: &[bool]) {
    for (i, &covered) in coverage.iter().enumerate() {
        if !covered {
            let (r, c) = (i / reference.width(), i % reference.width());
            img.set_pixel(r, c, reference.pixel(r, c));
        }
    }
}

/// Runs every stage on in-memory images, filling `run` as stages complete.
pub fn execute(
    reference: &RasterImage,
    target: &RasterImage,
    cfg: &PipelineConfig,
    run: &mut PipelineRun,
) -> Result<()> {
    cfg.validate()?;
    let start = Instant::now();

    let t = Instant::now();
    let (mut reference, target) = match &cfg.roi {
        Some(roi) => (
            crop_roi(reference, roi).map_err(|e| e.at(Stage::Crop))?,
            crop_roi(target, roi).map_err(|e| e.at(Stage::Crop))?,
        ),
        None => (reference.clone(), target.clone()),
    };
    run.timings.crop_ms = ms(t);
    run.reference = Some(reference.clone());
    run.target = Some(target.clone());

    let t = Instant::now();
    let mut coverage = None;
    let mut aligned = if cfg.skip_registration {
        reference
            .same_dims(&target)
            .map_err(|e| Error::from(e).at(Stage::Registration))?;
        target
    } else {
        let reg = register(&reference, &target, &cfg.registration_params())
            .map_err(|e| Error::from(e).at(Stage::Registration))?;
        let mut aligned = reg.aligned;
        fill_uncovered(&mut aligned, &reference, &reg.coverage);
        run.registration = Some(RegistrationSummary {
            transform: reg.transform.matrix,
            reference_keypoints: reg.reference_keypoints.len(),
            target_keypoints: reg.target_keypoints.len(),
            matches: reg.matches.len(),
            inliers: reg.inliers.len(),
            uncovered_pixels: reg.coverage.iter().filter(|c| !**c).count(),
        });
        run.transform = Some(reg.transform);
        coverage = Some(reg.coverage);
        aligned
    };
    run.timings.registration_ms = ms(t);
    run.aligned = Some(aligned.clone());

    let t = Instant::now();
    if !cfg.skip_histogram {
        match cfg.histogram_direction {
            HistogramDirection::TargetToReference => {
                aligned = exact_histogram_match(&aligned, &reference);
            }
            HistogramDirection::ReferenceToTarget => {
                // the overlay still uses the unmodified reference in `run`
                reference = exact_histogram_match(&reference, &aligned);
            }
        }
        if let Some(cov) = &coverage {
            fill_uncovered(&mut aligned, &reference, cov);
        }
        run.histogram_matched = true;
        run.aligned = Some(aligned.clone());
    }
    run.timings.histogram_ms = ms(t);

    let t = Instant::now();
    let detection = detect_changes(&reference, &aligned, &cfg.detection_params())
        .map_err(|e| Error::from(e).at(Stage::Detection))?;
    run.timings.detection_ms = ms(t);

    let t = Instant::now();
    let cm = &detection.cluster_map;
    let stats =
        class_mse(&reference, &aligned, cm).map_err(|e| Error::from(e).at(Stage::Analysis))?;
    let selection = select_change_classes(&stats, cfg.eps);
    let mask = binary_mask(cm, &selection.selected);
    run.heatmap = Some(render_heatmap(cm, &selection.stats));
    run.overlay =
        Some(overlay(run.reference.as_ref().unwrap_or(&reference), &mask).map_err(|e| Error::from(e).at(Stage::Analysis))?);
    run.mask = Some(mask);
    run.selection = Some(selection);
    run.detection = Some(detection);
    run.timings.analysis_ms = ms(t);
    run.timings.total_ms = ms(start);
    Ok(())
}

/// In-memory pipeline without any file output.
pub fn run_images(
    reference: &RasterImage,
    target: &RasterImage,
    cfg: &PipelineConfig,
) -> Result<PipelineRun> {
    let mut run = PipelineRun::default();
    execute(reference, target, cfg, &mut run)?;
    Ok(run)
}

/// Writes whatever `run` holds into `out_dir`, plus `run.json`.
pub fn write_artifacts(
    run: &PipelineRun,
    cfg: &PipelineConfig,
    error: Option<&Error>,
    paths: Option<(&Path, &Path)>,
    out_dir: &Path,
) -> Result<RunReport> {
    let w = |e: Error| e.at(Stage::Write);
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    if let Some(img) = &run.aligned {
        io::save_image(img, out_dir.join("aligned.png")).map_err(w)?;
    }
    if let Some(img) = &run.heatmap {
        io::save_image(img, out_dir.join("heatmap.png")).map_err(w)?;
    }
    if let Some(mask) = &run.mask {
        io::save_mask(mask, out_dir.join("mask.png")).map_err(w)?;
    }
    if let Some(img) = &run.overlay {
        io::save_image(img, out_dir.join("overlay.png")).map_err(w)?;
    }
    if run.selection.is_some() {
        write_json(&out_dir.join("classes.json"), &run.class_records()).map_err(w)?;
    }
    let report = run.report(cfg, error, paths);
    write_json(&out_dir.join("run.json"), &report).map_err(w)?;
    Ok(report)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Loads both images, runs the pipeline and writes artifacts to `out_dir`.
/// On a stage failure the artifacts of completed stages and a `run.json`
/// carrying the error are still written before the error is returned.
pub fn run_pipeline(
    reference_path: &Path,
    target_path: &Path,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> Result<(PipelineRun, RunReport)> {
    cfg.validate()?;
    let mut run = PipelineRun::default();
    let result = io::load_image(reference_path)
        .and_then(|r| io::load_image(target_path).map(|t| (r, t)))
        .map_err(|e| e.at(Stage::Load))
        .and_then(|(r, t)| execute(&r, &t, cfg, &mut run));
    let paths = Some((reference_path, target_path));
    match result {
        Ok(()) => {
            let report = write_artifacts(&run, cfg, None, paths, out_dir)?;
            Ok((run, report))
        }
        Err(e) => {
            write_artifacts(&run, cfg, Some(&e), paths, out_dir)?;
            Err(e)
        }
    }
}
