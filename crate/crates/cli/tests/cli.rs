use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_chanimg");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn chanimg")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn error_line(out: &Output) -> String {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "expected one error line, got {stderr:?}");
    lines[0].to_string()
}

#[test]
fn gen_data_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["gen-data", "--links", "100", "--seed", "7", "--out", "a.jsonl"],
    );
    ok(
        dir.path(),
        &["gen-data", "--links", "100", "--seed", "7", "--out", "b.jsonl"],
    );
    ok(
        dir.path(),
        &["gen-data", "--links", "100", "--seed", "8", "--out", "c.jsonl"],
    );
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    let c = std::fs::read(dir.path().join("c.jsonl")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# "));
    let header: serde_json::Value = serde_json::from_str(&header[2..]).unwrap();
    assert_eq!(header["seed"], 7);
    assert_eq!(header["version"], "1.0");
    assert_eq!(lines.count(), 100);
}

#[test]
fn round_trip_report_is_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--links", "1000", "--seed", "11", "--out", "d.jsonl"]);
    ok(
        d,
        &["fit-codec", "--data", "d.jsonl", "--out", "codec.json", "--seed", "11"],
    );
    ok(
        d,
        &[
            "encode",
            "--data",
            "d.jsonl",
            "--codec",
            "codec.json",
            "--out",
            "i.chim",
            "--seed",
            "11",
        ],
    );
    ok(
        d,
        &[
            "decode",
            "--images",
            "i.chim",
            "--codec",
            "codec.json",
            "--data",
            "d.jsonl",
            "--out",
            "back.jsonl",
            "--report",
            "rt.csv",
        ],
    );

    let text = std::fs::read_to_string(d.join("rt.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# report=round-trip version=1.0"));
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        rows += 1;
        assert_eq!(&rec[col("state_match")], "true");
        assert_eq!(rec[col("paths_source")], rec[col("paths_decoded")]);
        let f = |name: &str| rec[col(name)].parse::<f64>().unwrap();
        assert!(f("max_pathloss_err_db") <= 1e-3);
        assert!(f("max_delay_err_s") <= 1e-12);
        assert!(f("max_angle_err_deg") <= 1e-3);
        assert!(f("max_phase_err_deg") <= 1e-3);
    }
    assert_eq!(rows, 1000);
}

#[test]
fn eval_writes_ks_per_feature_and_height() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["gen-data", "--links", "500", "--seed", "1", "--out", "model.jsonl"],
    );
    ok(d, &["gen-data", "--links", "500", "--seed", "2", "--out", "data.jsonl"]);
    ok(
        d,
        &[
            "eval",
            "--model",
            "model.jsonl",
            "--data",
            "data.jsonl",
            "--out-dir",
            "ev",
            "--seed",
            "5",
        ],
    );
    for f in ["feature_ks.csv", "link_state.csv", "uniformity.csv"] {
        let text = std::fs::read_to_string(d.join("ev").join(f)).unwrap();
        assert!(text.starts_with("# report="), "{f}");
        assert!(text.lines().next().unwrap().contains("seed=5"), "{f}");
    }
    let text = std::fs::read_to_string(d.join("ev/feature_ks.csv")).unwrap();
    let header: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    for name in ["height_m", "feature", "ks"] {
        assert!(header.contains(&name), "missing {name} in {header:?}");
    }
    let rows: Vec<&str> = text.lines().skip(2).collect();
    for h in ["1.6", "30", "60", "90", "120"] {
        assert!(
            rows.iter().any(|r| r.starts_with(&format!("{h},pathloss,"))),
            "no pathloss row at height {h}"
        );
    }
}

#[test]
fn resampler_pipeline_composes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--links", "400", "--out", "d.jsonl"]);
    ok(d, &["fit-codec", "--data", "d.jsonl", "--out", "c.json"]);
    ok(
        d,
        &["encode", "--data", "d.jsonl", "--codec", "c.json", "--out", "i.chim"],
    );
    ok(
        d,
        &[
            "train",
            "--backend",
            "resampler",
            "--images",
            "i.chim",
            "--out",
            "m.ckpt",
            "--k",
            "5",
        ],
    );
    ok(
        d,
        &[
            "sample",
            "--checkpoint",
            "m.ckpt",
            "--data",
            "d.jsonl",
            "--out",
            "s.chim",
            "--per-link",
            "2",
        ],
    );
    ok(
        d,
        &[
            "sample",
            "--checkpoint",
            "m.ckpt",
            "--data",
            "d.jsonl",
            "--out",
            "s2.chim",
            "--per-link",
            "2",
        ],
    );
    assert_eq!(
        std::fs::read(d.join("s.chim")).unwrap(),
        std::fs::read(d.join("s2.chim")).unwrap()
    );
    ok(
        d,
        &[
            "decode", "--images", "s.chim", "--codec", "c.json", "--data", "d.jsonl", "--repeat", "2", "--out",
            "s.jsonl",
        ],
    );
    ok(
        d,
        &["eval", "--model", "s.jsonl", "--data", "d.jsonl", "--out-dir", "ev"],
    );
    ok(d, &["report", "--data", "d.jsonl", "--out-dir", "rep"]);
    assert!(d.join("rep/rms_spread.csv").exists());
    assert!(d.join("rep/relative_zod_h1.6.csv").exists());
}

#[test]
fn config_file_supplies_paths_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("exp.toml"),
        "seed = 7\n[paths]\ndata = \"d.jsonl\"\ncodec = \"c.json\"\n[surrogate]\nnum_tx = 2\nnum_rx_per_height = 3\n",
    )
    .unwrap();
    ok(d, &["--config", "exp.toml", "gen-data"]);
    ok(d, &["--config", "exp.toml", "fit-codec"]);
    assert!(d.join("c.json").exists());
    let text = std::fs::read_to_string(d.join("d.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 5);
    assert!(text.lines().next().unwrap().contains("\"seed\":7"));
}

#[test]
fn failures_have_distinct_exit_codes_and_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--links", "50", "--out", "d.jsonl"]);
    ok(d, &["fit-codec", "--data", "d.jsonl", "--out", "c.json"]);
    ok(
        d,
        &["encode", "--data", "d.jsonl", "--codec", "c.json", "--out", "i.chim"],
    );

    let usage = run(d, &["gen-data", "--frobnicate"]);
    let line = error_line(&usage);
    assert!(line.starts_with("error: code=usage exit=2 "), "{line}");

    let missing = run(d, &["fit-codec", "--data", "nope.jsonl", "--out", "x.json"]);
    assert!(error_line(&missing).starts_with("error: code=io exit=3 "));

    std::fs::write(d.join("bad.chim"), b"not a tensor").unwrap();
    let malformed = run(
        d,
        &[
            "decode", "--images", "bad.chim", "--codec", "c.json", "--data", "d.jsonl", "--out", "o",
        ],
    );
    assert!(error_line(&malformed).starts_with("error: code=malformed exit=4 "));

    let codec = std::fs::read_to_string(d.join("c.json")).unwrap();
    std::fs::write(
        d.join("c2.json"),
        codec.replace("\"version\": \"1.0\"", "\"version\": \"2.0\""),
    )
    .unwrap();
    let version = run(
        d,
        &["encode", "--data", "d.jsonl", "--codec", "c2.json", "--out", "j.chim"],
    );
    assert!(error_line(&version).starts_with("error: code=version exit=5 "));

    ok(
        d,
        &[
            "train",
            "--backend",
            "resampler",
            "--images",
            "i.chim",
            "--out",
            "m.ckpt",
        ],
    );
    let mut ckpt = std::fs::read(d.join("m.ckpt")).unwrap();
    ckpt[4] = 9;
    std::fs::write(d.join("m2.ckpt"), ckpt).unwrap();
    let version = run(
        d,
        &[
            "sample",
            "--checkpoint",
            "m2.ckpt",
            "--data",
            "d.jsonl",
            "--out",
            "s.chim",
        ],
    );
    assert!(error_line(&version).starts_with("error: code=version exit=5 "));

    let codes: Vec<i32> = [&usage, &missing, &malformed, &version]
        .iter()
        .map(|o| o.status.code().unwrap())
        .collect();
    assert_eq!(codes, vec![2, 3, 4, 5]);
}
