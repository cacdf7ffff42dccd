//! Pixel-level precision / recall and manifest-driven dataset runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use changechip_core::analysis::ChangeMask;
use serde::Serialize;

use crate::config::{Modality, PipelineConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::pipeline::{self, write_json};

/// Pixel counts for one prediction against one ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    /// `tp / (tp + fp)`, `None` when nothing was predicted.
    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    /// `tp / (tp + fn)`, `None` when the ground truth is empty.
    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn iou(&self) -> Option<f64> {
        let d = self.tp + self.fp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    /// Nothing predicted and nothing to find.
    pub fn is_vacuous(&self) -> bool {
        self.tp == 0 && self.fp == 0 && self.fn_ == 0
    }

    pub fn merge(self, other: Counts) -> Counts {
        Counts {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scores {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

impl From<Counts> for Scores {
    fn from(c: Counts) -> Self {
        Self {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision: c.precision(),
            recall: c.recall(),
        }
    }
}

pub fn count_masks(pred: &[bool], gt: &[bool]) -> Counts {
    let mut c = Counts::default();
    for (&p, &g) in pred.iter().zip(gt) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            _ => {}
        }
    }
    c
}

pub fn precision_recall(pred: &ChangeMask, gt: &ChangeMask) -> Result<Scores> {
    if (pred.width, pred.height) != (gt.width, gt.height) {
        return Err(changechip_core::Error::DimensionMismatch {
            left_width: pred.width,
            left_height: pred.height,
            right_width: gt.width,
            right_height: gt.height,
        }
        .into());
    }
    Ok(count_masks(&pred.mask, &gt.mask).into())
}

/// IoU of one planted defect against the prediction, restricted to the
/// defect's bounding box grown by `margin` pixels. Pixels of other defects
/// (`all_gt`) inside the box are ignored.
pub fn defect_iou(pred: &[bool], defect: &[bool], all_gt: &[bool], width: usize, margin: usize) -> f64 {
    let height = defect.len() / width;
    let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
    for (i, _) in defect.iter().enumerate().filter(|(_, &d)| d) {
        let (r, c) = (i / width, i % width);
        r0 = r0.min(r);
        r1 = r1.max(r);
        c0 = c0.min(c);
        c1 = c1.max(c);
    }
    if r0 == usize::MAX {
        return 0.0;
    }
    let (r0, c0) = (r0.saturating_sub(margin), c0.saturating_sub(margin));
    let (r1, c1) = ((r1 + margin).min(height - 1), (c1 + margin).min(width - 1));
    let (mut inter, mut union) = (0usize, 0usize);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let i = r * width + c;
            if all_gt[i] && !defect[i] {
                continue;
            }
            inter += usize::from(pred[i] && defect[i]);
            union += usize::from(pred[i] || defect[i]);
        }
    }
    inter as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPair {
    pub reference: PathBuf,
    pub target: PathBuf,
    pub ground_truth: PathBuf,
    pub modality: Modality,
    pub eps: Option<f64>,
}

/// Parses a manifest: one pair per line, whitespace separated
/// `reference target ground_truth modality [eps]`. Relative paths are
/// resolved against `base`. Blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<DatasetPair>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Manifest { line: i + 1, reason };
        let f: Vec<&str> = line.split_whitespace().collect();
        if !(4..=5).contains(&f.len()) {
            return Err(bad(format!(
                "expected `reference target ground_truth modality [eps]`, got {} fields",
                f.len()
            )));
        }
        let modality: Modality = f[3].parse().map_err(|e: Error| bad(e.to_string()))?;
        let eps = match f.get(4) {
            Some(s) => {
                let v: f64 = s.parse().map_err(|_| bad(format!("bad eps {s:?}")))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad("eps must be positive".into()));
                }
                Some(v)
            }
            None => None,
        };
        pairs.push(DatasetPair {
            reference: base.join(f[0]),
            target: base.join(f[1]),
            ground_truth: base.join(f[2]),
            modality,
            eps,
        });
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub index: usize,
    pub reference: PathBuf,
    pub target: PathBuf,
    pub ground_truth: PathBuf,
    pub modality: Modality,
    pub eps: f64,
    pub status: &'static str,
    pub error: Option<String>,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Empty prediction and empty ground truth.
    pub vacuous_perfect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub version: u32,
    pub pairs_total: usize,
    pub pairs_failed: usize,
    /// Pooled over the pixels of every successful pair.
    pub micro: Scores,
    /// Unweighted mean over the pairs where the score is defined.
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub pairs: Vec<PairRow>,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl EvalReport {
    pub fn from_rows(pairs: Vec<PairRow>) -> Self {
        let ok: Vec<&PairRow> = pairs.iter().filter(|r| r.status == "ok").collect();
        let pooled = ok.iter().fold(Counts::default(), |acc, r| {
            acc.merge(Counts {
                tp: r.tp,
                fp: r.fp,
                fn_: r.fn_,
            })
        });
        Self {
            version: pipeline::REPORT_VERSION,
            pairs_total: pairs.len(),
            pairs_failed: pairs.len() - ok.len(),
            micro: pooled.into(),
            macro_precision: mean(ok.iter().filter_map(|r| r.precision)),
            macro_recall: mean(ok.iter().filter_map(|r| r.recall)),
            pairs,
        }
    }

    /// Fixed-width text table.
    pub fn table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>4}  {:<40} {:>10} {:>10} {:>10} {:>9} {:>9}  note",
            "#", "target", "tp", "fp", "fn", "precision", "recall"
        );
        for r in &self.pairs {
            let name = r.target.file_name().map_or_else(
                || r.target.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            );
            let note = match (&r.error, r.vacuous_perfect) {
                (Some(e), _) => format!("error: {e}"),
                (None, true) => "vacuous".to_string(),
                _ => String::new(),
            };
            let _ = writeln!(
                s,
                "{:>4}  {:<40} {:>10} {:>10} {:>10} {:>9} {:>9}  {}",
                r.index, name, r.tp, r.fp, r.fn_, opt(r.precision), opt(r.recall), note
            );
        }
        let m = &self.micro;
        let _ = writeln!(
            s,
            "{:>4}  {:<40} {:>10} {:>10} {:>10} {:>9} {:>9}",
            "", "pooled", m.tp, m.fp, m.fn_, opt(m.precision), opt(m.recall)
        );
        let _ = writeln!(
            s,
            "{:>4}  {:<40} {:>10} {:>10} {:>10} {:>9} {:>9}",
            "", "macro", "", "", "", opt(self.macro_precision), opt(self.macro_recall)
        );
        let _ = writeln!(s, "pairs: {} total, {} failed", self.pairs_total, self.pairs_failed);
        s
    }
}

fn eval_pair(pair: &DatasetPair, cfg: &PipelineConfig, out_dir: Option<&Path>) -> Result<Counts> {
    let gt = io::load_mask(&pair.ground_truth)?;
    let gt = match &cfg.roi {
        Some(roi) => {
            let img = io::load_image(&pair.ground_truth)?;
            io::mask_from_image(&pipeline::crop_roi(&img, roi)?)
        }
        None => gt,
    };
    let pred = match out_dir {
        Some(dir) => pipeline::run_pipeline(&pair.reference, &pair.target, cfg, dir)?.0,
        None => {
            let r = io::load_image(&pair.reference)?;
            let t = io::load_image(&pair.target)?;
            pipeline::run_images(&r, &t, cfg)?
        }
    };
    let mask = pred.mask.expect("successful run has a mask");
    let s = precision_recall(&mask, &gt)?;
    Ok(Counts {
        tp: s.tp,
        fp: s.fp,
        fn_: s.fn_,
    })
}

/// Effective config for one pair: explicit eps > modality default, where
/// optical pairs use `cfg.eps`.
pub fn pair_config(pair: &DatasetPair, cfg: &PipelineConfig) -> PipelineConfig {
    let eps = pair.eps.unwrap_or(match pair.modality {
        Modality::Optical => cfg.eps,
        Modality::Radiographic => pair.modality.default_eps(),
    });
    PipelineConfig {
        eps,
        modality: pair.modality,
        ..cfg.clone()
    }
}

/// Runs every pair; failures are recorded per pair and the run continues.
/// With `out_dir`, per-pair artifacts go to `out_dir/pair_NNN/` and
/// `report.json` / `report.txt` are written at the top level.
pub fn run_pairs(pairs: &[DatasetPair], cfg: &PipelineConfig, out_dir: Option<&Path>) -> Result<EvalReport> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let pcfg = pair_config(pair, cfg);
        let dir = out_dir.map(|d| d.join(format!("pair_{i:03}")));
        let result = eval_pair(pair, &pcfg, dir.as_deref());
        let (status, error, c) = match result {
            Ok(c) => ("ok", None, c),
            Err(e) => ("failed", Some(e.to_string()), Counts::default()),
        };
        rows.push(PairRow {
            index: i,
            reference: pair.reference.clone(),
            target: pair.target.clone(),
            ground_truth: pair.ground_truth.clone(),
            modality: pair.modality,
            eps: pcfg.eps,
            status,
            vacuous_perfect: error.is_none() && c.is_vacuous(),
            error,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision: c.precision(),
            recall: c.recall(),
        });
    }
    let report = EvalReport::from_rows(rows);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join("report.json"), &report)?;
        let p = dir.join("report.txt");
        std::fs::write(&p, report.table()).map_err(|e| Error::io(&p, e))?;
    }
    Ok(report)
}

/// Reads the manifest at `manifest` and evaluates it.
pub fn run_dataset(manifest: &Path, cfg: &PipelineConfig, out_dir: Option<&Path>) -> Result<EvalReport> {
    cfg.validate()?;
    let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let pairs = parse_manifest(&text, base)?;
    run_pairs(&pairs, cfg, out_dir)
}
