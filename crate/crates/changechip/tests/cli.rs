use std::path::Path;
use std::process::Command;

use changechip::io::save_image;
use changechip::synth::synthetic_board;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_changechip"))
}

fn code(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

fn board(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("board.png");
    save_image(&synthetic_board(100, 90, 4).unwrap(), &p).unwrap();
    p
}

#[test]
fn run_succeeds_and_dumps_features() {
    let dir = tempfile::tempdir().unwrap();
    let b = board(dir.path());
    let dump = dir.path().join("f.bin");
    let out = dir.path().join("out");
    let status = code(cli().args(["run", "--reference"]).arg(&b).arg("--target").arg(&b).arg("--out").arg(&out)
        .arg("--dump-features").arg(&dump));
    assert_eq!(status, 0);
    assert!(out.join("run.json").is_file());
    let d = changechip::dump::FeatureDump::load(&dump).unwrap();
    assert_eq!((d.height, d.width, d.dim), (90, 100, 12));
}

#[test]
fn bad_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let b = board(dir.path());
    let base = || {
        let mut c = cli();
        c.args(["run", "--reference"]).arg(&b).arg("--target").arg(&b).arg("--out").arg(dir.path().join("o"));
        c
    };
    assert_eq!(code(base().args(["--h", "4"])), 3);
    assert_eq!(code(base().args(["--roi", "1,2,3"])), 3);
    assert_eq!(code(base().args(["--eps", "-1"])), 3);
    assert_eq!(code(cli().args(["run", "--bogus"])), 3);
}

#[test]
fn stage_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.png");
    let status = code(cli().args(["run", "--reference"]).arg(&missing).arg("--target").arg(&missing)
        .arg("--out").arg(dir.path().join("o")));
    assert_eq!(status, 2);
}

#[test]
fn synth_writes_pair() {
    let dir = tempfile::tempdir().unwrap();
    let b = board(dir.path());
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"defects":[{"kind":"erase_block","x":10,"y":10,"width":20,"height":15}],"jitter_px":2.0}"#).unwrap();
    let out = dir.path().join("pair");
    assert_eq!(code(cli().args(["synth", "--base"]).arg(&b).arg("--spec").arg(&spec).arg("--out").arg(&out)), 0);
    for f in ["reference.png", "target.png", "gt.png", "transform.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    std::fs::write(&spec, r#"{"defects":[{"kind":"melt"}]}"#).unwrap();
    assert_eq!(code(cli().args(["synth", "--base"]).arg(&b).arg("--spec").arg(&spec).arg("--out").arg(&out)), 3);
}
