use changechip::eval::{count_masks, defect_iou};
use changechip::io::{load_mask, save_image};
use changechip::pipeline::{run_images, run_pipeline};
use changechip::synth::{generate_defect_pair, planted_pair, synthetic_board, DefectSpec};
use changechip::config::HistogramDirection;
use changechip::{PipelineConfig, Stage};
use serde_json::Value;

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn same_file_twice_gives_empty_mask() {
    let dir = tempfile::tempdir().unwrap();
    let img = synthetic_board(160, 120, 7).unwrap();
    let p = dir.path().join("board.png");
    save_image(&img, &p).unwrap();
    let out = dir.path().join("out");
    let (run, report) = run_pipeline(&p, &p, &PipelineConfig::default(), &out).unwrap();
    assert!(run.mask.unwrap().is_empty());
    assert_eq!(report.selected_count, 0);
    let json = read_json(&out.join("run.json"));
    assert_eq!(json["status"], "ok");
    assert_eq!(json["selected_count"], 0);
    assert_eq!(json["dbscan_clusters"], 1);
    assert_eq!(json["changed_pixels"], 0);
    let mask = load_mask(out.join("mask.png")).unwrap();
    assert!(mask.is_empty());
    for f in ["aligned.png", "heatmap.png", "overlay.png", "classes.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn planted_defects_are_found() {
    let base = synthetic_board(220, 220, 3).unwrap();
    let spec: DefectSpec = serde_json::from_str(
        r#"{"defects": [
            {"kind": "erase_block", "x": 40, "y": 50, "width": 34, "height": 28, "color": [0.84, 0.76, 0.56]},
            {"kind": "paste_blob", "cx": 150, "cy": 150, "radius": 14}
        ], "jitter_px": 2.5, "illumination": 1.05}"#,
    )
    .unwrap();
    let pair = generate_defect_pair(&base, &spec, 3).unwrap();
    let cfg = PipelineConfig::default();
    let run = run_images(&pair.reference, &pair.target, &cfg).unwrap();
    let mask = run.mask.unwrap();
    let c = count_masks(&mask.mask, &pair.ground_truth.mask);
    assert!(c.recall().unwrap() >= 0.8, "{c:?}");
    for d in &pair.defect_masks {
        let iou = defect_iou(&mask.mask, &d.mask, &pair.ground_truth.mask, mask.width, cfg.h + 1);
        assert!(iou >= 0.5, "{iou}");
    }
    let t = run.transform.unwrap();
    assert!(t.corner_error(&pair.transform, mask.width, mask.height) < 1.0);
}

#[test]
fn skipping_stages_on_an_aligned_pair_changes_little() {
    // no jitter, no illumination change: preprocessing has nothing to fix
    let base = synthetic_board(200, 200, 11).unwrap();
    let mut target = base.clone();
    for r in 80..110 {
        for c in 60..100 {
            target.set_pixel(r, c, [0.95, 0.1, 0.1]);
        }
    }
    let full = run_images(&base, &target, &PipelineConfig::default()).unwrap();
    let bare = run_images(
        &base,
        &target,
        &PipelineConfig { skip_registration: true, skip_histogram: true, ..Default::default() },
    )
    .unwrap();
    let (a, b) = (full.mask.unwrap(), bare.mask.unwrap());
    let differing = a.mask.iter().zip(&b.mask).filter(|(x, y)| x != y).count();
    assert!((differing as f64) < 0.01 * a.mask.len() as f64, "{differing}");
    assert!(!bare.histogram_matched && bare.registration.is_none());
}

#[test]
fn failed_registration_keeps_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let board = synthetic_board(120, 120, 5).unwrap();
    let flat = changechip::core::RasterImage::filled(120, 120, [0.5; 3]).unwrap();
    let (r, t) = (dir.path().join("r.png"), dir.path().join("t.png"));
    save_image(&board, &r).unwrap();
    save_image(&flat, &t).unwrap();
    let out = dir.path().join("out");
    let err = run_pipeline(&r, &t, &PipelineConfig::default(), &out).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Registration));
    assert_eq!(err.exit_code(), 2);
    let json = read_json(&out.join("run.json"));
    assert_eq!(json["status"], "failed");
    assert_eq!(json["error"]["stage"], "registration");
    assert!(!out.join("mask.png").exists());
}

#[test]
fn missing_input_is_a_load_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("nope.png");
    let err = run_pipeline(&p, &p, &PipelineConfig::default(), &dir.path().join("out")).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Load));
    assert_eq!(read_json(&dir.path().join("out/run.json"))["error"]["stage"], "load");
}

#[test]
fn reruns_are_identical() {
    let pair = planted_pair(160, 160, 1, 8).unwrap();
    let cfg = PipelineConfig { seed: 17, ..Default::default() };
    let a = run_images(&pair.reference, &pair.target, &cfg).unwrap();
    let b = run_images(&pair.reference, &pair.target, &cfg).unwrap();
    assert_eq!(a.mask, b.mask);
    assert_eq!(a.class_records(), b.class_records());
    assert_eq!(a.transform, b.transform);
}

#[test]
fn reverse_histogram_direction_still_finds_the_change() {
    let base = synthetic_board(200, 200, 12).unwrap();
    let mut target = base.map_values(|v| (v * 0.85 * 255.0).round() / 255.0);
    for r in 50..80 {
        for c in 120..160 {
            target.set_pixel(r, c, [0.95, 0.1, 0.1]);
        }
    }
    let cfg = PipelineConfig {
        skip_registration: true,
        histogram_direction: HistogramDirection::ReferenceToTarget,
        ..Default::default()
    };
    let run = run_images(&base, &target, &cfg).unwrap();
    let mask = run.mask.unwrap();
    let inside = |i: usize| (50..80).contains(&(i / 200)) && (120..160).contains(&(i % 200));
    let hits = (0..200 * 200).filter(|&i| mask.mask[i] && inside(i)).count();
    let stray = (0..200 * 200).filter(|&i| mask.mask[i] && !inside(i)).count();
    assert!(hits >= 1000 && stray < 400, "{hits} {stray}");
    // overlay is drawn on the reference as given
    assert_eq!(run.overlay.unwrap().pixel(0, 0), base.pixel(0, 0));
}
