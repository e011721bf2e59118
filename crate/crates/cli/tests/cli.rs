use std::path::Path;
use std::process::{Command, Output};

fn triskel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triskel"))
        .args(args)
        .output()
        .expect("run triskel")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, count: &str) {
    let o = triskel(&["synth", "--count", count, "--seed", "42", "--out", p(dir)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&triskel(&["--help"])), 0);
    assert_eq!(code(&triskel(&["--version"])), 0);
    assert_eq!(code(&triskel(&[])), 1);
    assert_eq!(code(&triskel(&["frobnicate"])), 1);
    assert_eq!(code(&triskel(&["synth", "--count", "x"])), 1);
    assert_eq!(code(&triskel(&["synth"])), 1);
    assert_eq!(code(&triskel(&["classify", "kb.json"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    assert_eq!(code(&triskel(&["evaluate", p(&missing)])), 2);
    assert_eq!(code(&triskel(&["features", p(&missing)])), 2);

    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "dce_target_vertices = 2\n").unwrap();
    let o = triskel(&["--config", p(&bad_cfg), "evaluate", p(dir.path())]);
    assert_eq!(code(&o), 2);
    std::fs::write(&bad_cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(
        code(&triskel(&["--config", p(&bad_cfg), "evaluate", p(dir.path())])),
        2
    );

    let junk = dir.path().join("junk.pgm");
    std::fs::write(&junk, b"P5\n4 4\n255\n").unwrap();
    assert_eq!(code(&triskel(&["features", p(&junk)])), 2);
}

#[test]
fn synth_and_evaluate_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth(a.path(), "6");
    synth(b.path(), "6");
    let manifest = |d: &Path| std::fs::read(d.join("manifest.json")).unwrap();
    assert_eq!(manifest(a.path()), manifest(b.path()));

    let run = |d: &Path| {
        let o = triskel(&["evaluate", p(d), "--trials", "3", "--seed", "7"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let first = run(a.path());
    assert_eq!(first, run(a.path()));
    assert_eq!(first, run(b.path()));
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["trials"].as_array().unwrap().len(), 3);
    assert_eq!(report["seed"], 7);

    let out = tempfile::tempdir().unwrap();
    let o = triskel(&[
        "evaluate",
        p(a.path()),
        "--fractions",
        "0.4,0.8",
        "--trials",
        "2",
        "--out",
        p(out.path()),
    ]);
    assert_eq!(code(&o), 0);
    for f in [
        "report_0.40.json",
        "report_0.80.json",
        "trials_0.80.csv",
        "confusion_0.40.csv",
        "plot.csv",
    ] {
        assert!(out.path().join(f).is_file(), "{f}");
    }
    let plot = std::fs::read_to_string(out.path().join("plot.csv")).unwrap();
    assert_eq!(plot.lines().count(), 3);
    assert!(plot.starts_with("training_fraction,max,min,mean\n"));
}

#[test]
fn feature_stages_agree() {
    let corpus = tempfile::tempdir().unwrap();
    synth(corpus.path(), "4");
    let mask = corpus.path().join("star5").join("star5_000.pgm");
    let work = tempfile::tempdir().unwrap();
    let dump = work.path().join("dump");

    let direct = triskel(&["features", p(&mask), "--dump-intermediates", p(&dump)]);
    assert_eq!(code(&direct), 0);
    let rows: serde_json::Value = serde_json::from_slice(&direct.stdout).unwrap();
    assert!(rows.as_array().unwrap().len() >= 4);
    assert!(rows[0].as_array().unwrap().len() == 6);
    for f in [
        "thinned.pgm",
        "skeleton.pgm",
        "contour.json",
        "dce.json",
        "points.json",
        "triangulation.json",
        "features.json",
    ] {
        assert!(dump.join(format!("star5_000.{f}")).is_file(), "{f}");
    }

    let from_tri = triskel(&[
        "features",
        "--from-triangulation",
        p(&dump.join("star5_000.triangulation.json")),
    ]);
    assert_eq!(from_tri.stdout, direct.stdout);
    let from_skel = triskel(&[
        "features",
        "--from-skeleton",
        p(&dump.join("star5_000.skeleton.pgm")),
    ]);
    assert_eq!(from_skel.stdout, direct.stdout);
    assert_eq!(
        std::fs::read(dump.join("star5_000.features.json")).unwrap(),
        direct.stdout
    );

    let csv = triskel(&["features", "--csv", p(&mask)]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("a,b,c,A,B,C\n"));
    assert_eq!(text.lines().count(), rows.as_array().unwrap().len() + 1);

    let skel = work.path().join("skel.pgm");
    assert_eq!(code(&triskel(&["skeletonize", p(&mask), "--out", p(&skel)])), 0);
    assert_eq!(
        std::fs::read(&skel).unwrap(),
        std::fs::read(dump.join("star5_000.skeleton.pgm")).unwrap()
    );
    let tri = triskel(&["triangulate", "--from-skeleton", p(&skel)]);
    assert_eq!(
        tri.stdout,
        std::fs::read(dump.join("star5_000.triangulation.json")).unwrap()
    );
}

#[test]
fn train_then_classify() {
    let corpus = tempfile::tempdir().unwrap();
    synth(corpus.path(), "5");
    let kb = corpus.path().join("kb.json");
    let o = triskel(&["train", p(corpus.path()), "--out", p(&kb)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&kb).unwrap()).unwrap();
    assert_eq!(doc["format_version"], 1);

    let masks: Vec<String> = [
        "cross/cross_001.pgm",
        "star3/star3_002.pgm",
        "star5/star5_003.pgm",
    ]
    .iter()
    .map(|m| p(&corpus.path().join(m)).to_owned())
    .collect();
    let mut args = vec!["classify", p(&kb)];
    args.extend(masks.iter().map(String::as_str));
    let o = triskel(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let results: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = results
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["predicted_name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["cross", "star3", "star5"]);
    assert_eq!(
        code(&triskel(&[
            "classify",
            p(&corpus.path().join("cross/cross_000.pgm")),
            &masks[0]
        ])),
        2
    );
}
