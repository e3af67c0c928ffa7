use std::path::Path;
use std::process::{Command, Output};

fn ladderlab(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ladderlab"))
        .args(args)
        .env("LADDERLAB_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

#[test]
fn zeta_prints_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = ladderlab(&["zeta", "--t", "100"], &dir.path().join("c.csv"));
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("Z(t) = 2.69269"), "{out}");
}

#[test]
fn verify_chf_exact_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ladderlab(
        &[
            "verify",
            "chf",
            "--L",
            "10000",
            "--U",
            "0.7853981633974483",
            "--k",
            "1",
            "--variant",
            "exact",
        ],
        &dir.path().join("c.csv"),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    let row = out.lines().nth(1).unwrap();
    let ratio: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
    assert!((ratio - 1.0).abs() < 1e-6, "{row}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c.csv");
    for args in [
        vec!["frobnicate"],
        vec!["verify", "chf", "--L", "1000", "--U", "3"],
        vec!["verify", "lemma", "--L", "1000", "--f", "f9"],
        vec!["--set", "kappa=-1", "zeta", "--t", "100"],
        vec![
            "verify", "chf", "--L", "1000", "--U", "0.5", "--U-pi", "0.25",
        ],
    ] {
        let o = ladderlab(&args, &cache);
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn config_errors_are_aggregated() {
    let dir = tempfile::tempdir().unwrap();
    let o = ladderlab(
        &[
            "--set", "kappa=-1", "--set", "bogus=1", "zeta", "--t", "100",
        ],
        &dir.path().join("c.csv"),
    );
    assert_eq!(code(&o), 2);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("kappa") && err.contains("bogus"), "{err}");
}

#[test]
fn engine_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = ladderlab(&["zeta", "--t", "5"], &dir.path().join("c.csv"));
    assert_eq!(code(&o), 3);
}

#[test]
fn sweep_writes_reports_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c.csv");
    let out = dir.path().join("out");
    let o = ladderlab(
        &[
            "--out",
            out.to_str().unwrap(),
            "--format",
            "json",
            "--set",
            "samples_per_anchor=3",
            "sweep",
            "chf",
            "--L",
            "1000,10000",
            "--variant",
            "exact",
        ],
        &cache,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep-chf-exact.json")).unwrap())
            .unwrap();
    assert_eq!(json["verdict"], "PASS");
    assert_eq!(json["points"].as_array().unwrap().len(), 6);
    assert!(out.join("sweep-chf-exact.csv").exists());
    assert!(out.join("sweep-chf-exact.meta.json").exists());
    assert!(cache.exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c.csv");
    let args = [
        "verify",
        "sincos",
        "--L",
        "1000,2000",
        "--U-pi",
        "0.25",
        "--variant",
        "zeta",
    ];
    let a = ladderlab(&args, &cache);
    let b = ladderlab(&[&["--jobs", "1"], &args[..]].concat(), &cache);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn cache_info_reports_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c.csv");
    let o = ladderlab(&["cache", "build", "--T", "2000"], &cache);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("fingerprint = "), "{out}");
    let first = std::fs::read_to_string(&cache).unwrap();
    assert!(first.starts_with("# ladderlab-hl v1 fingerprint="));
}
