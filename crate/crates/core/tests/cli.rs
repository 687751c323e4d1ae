use std::path::Path;
use std::process::Command;

use tripdp::cli::{run, EXIT_BUDGET, EXIT_NO_DATA, EXIT_OK, EXIT_USAGE};
use tripdp::pipeline::Manifest;

fn tripdp(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("tripdp").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generated(dir: &Path, n: usize) {
    let (code, out, _) = tripdp(&["generate", "--out-dir", p(dir), "--n", &n.to_string(), "--seed", "5"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains(&format!("wrote {n} trips")));
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn threshold_prints_anchor_and_validates() {
    let (code, out, _) = tripdp(&["threshold", "--epsilon", "2", "--delta", "1.1920928955078125e-7"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("threshold T = 17.6355"), "{out}");
    assert!(out.contains("2^-25.000"));
    assert_eq!(out.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).count(), 10);

    let (code, out, _) = tripdp(&["threshold", "--epsilon", "2", "--delta", "2"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("threshold T = 1.0000"));

    for bad in [["--epsilon", "0", "--delta", "0.1"], ["--epsilon", "1", "--delta", "3"], ["--epsilon", "-1", "--delta", "0.1"]] {
        let mut args = vec!["threshold"];
        args.extend(bad);
        let (code, _, err) = tripdp(&args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(err.starts_with("error:"));
    }
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(tripdp(&[]).0, EXIT_USAGE);
    assert_eq!(tripdp(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(tripdp(&["threshold", "--epsilon", "x", "--delta", "0.1"]).0, EXIT_USAGE);
    let (code, out, _) = tripdp(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for sub in ["generate", "release", "audit", "threshold", "compose", "paper-examples"] {
        assert!(out.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn compose_charges() {
    let d = "5.9604644775390625e-08";
    let (code, out, _) = tripdp(&["compose", "--charge", &format!("1,{d}"), "--charge", &format!("1,{d}")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("epsilon = 2, delta = 1.1920928955078125e-7 (2^-23.0000)"), "{out}");
    assert_eq!(tripdp(&["compose", "--charge", "1"]).0, EXIT_USAGE);
    assert_eq!(tripdp(&["compose", "--charge", "1,2"]).0, EXIT_USAGE);
}

#[test]
fn generate_release_audit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    generated(&data, 50_000);
    for f in ["trips.csv", "stops.txt", "stop_map.csv", "release.toml"] {
        assert!(data.join(f).is_file(), "{f}");
    }
    let out_dir = dir.path().join("bundle");
    let (code, out, _) = tripdp(&[
        "release",
        "--config",
        p(&data.join("release.toml")),
        "--input",
        p(&data.join("trips.csv")),
        "--out",
        p(&out_dir),
        "--seed",
        "77",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("composed: epsilon = 12"), "{out}");
    let m = manifest(&out_dir);
    assert_eq!(m.partitions.len(), 6);
    assert_eq!(m.master_seed, 77);
    let cfg_bytes = std::fs::read(data.join("release.toml")).unwrap();
    assert_eq!(m.config_digest.as_deref(), Some(tripdp::pipeline::sha256_hex(&cfg_bytes).as_str()));
    assert!(m.input_digest.is_some());

    let (code, out, _) = tripdp(&["compose", "--manifest", p(&out_dir.join("manifest.json"))]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("2^-20.4150"), "{out}");

    let listing = dir.path().join("listing.json");
    std::fs::write(
        &listing,
        r#"{"date=2016-07-25/mode=ferry/view=tap_on": [["ferry-0001", "240"], ["ferry-0002", "300"], ["ferry-0003", "300"]]}"#,
    )
    .unwrap();
    let (code, out, err) = tripdp(&[
        "audit",
        "--bundle",
        p(&out_dir),
        "--assume-delta",
        "1.1920928955078125e-7",
        "--domain-listing",
        p(&listing),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("threshold <= "));
    let report: tripdp::auditor::AuditReport =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("audit.json")).unwrap()).unwrap();
    assert_eq!(report.exhaustion_flags.len(), 1);
    assert_eq!(report.exhaustion_flags[0].slice, "240");
    let t = report.inferred_threshold.unwrap();
    assert!((17.0..=21.0).contains(&t), "{t}");
}

#[test]
fn release_is_reproducible_and_seed_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    generated(&data, 5_000);
    let cfg = data.join("release.toml");
    let input = data.join("trips.csv");
    let release = |out: &Path, seed: Option<&str>| {
        let mut args = vec!["release", "--config", p(&cfg), "--input", p(&input), "--out", p(out)];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        tripdp(&args)
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(release(&a, Some("3")).0, EXIT_OK);
    assert_eq!(release(&b, Some("3")).0, EXIT_OK);
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
    }

    let text = std::fs::read_to_string(&cfg).unwrap().replace("seed = 1\n", "");
    std::fs::write(&cfg, text).unwrap();
    let c = dir.path().join("c");
    let (code, out, _) = release(&c, None);
    assert_eq!(code, EXIT_OK);
    let line = out.lines().find(|l| l.starts_with("no seed given")).unwrap();
    let seed: u64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert_eq!(manifest(&c).master_seed, seed);
    let d = dir.path().join("d");
    assert_eq!(release(&d, Some(&seed.to_string())).0, EXIT_OK);
    assert_eq!(manifest(&c), manifest(&d));
}

#[test]
fn release_failures_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    generated(&data, 1_000);
    let cfg = data.join("release.toml");
    let out = dir.path().join("out");

    let (code, _, err) = tripdp(&[
        "release", "--config", p(&cfg), "--input", p(&data.join("missing.csv")), "--out", p(&out),
    ]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("missing.csv"));
    assert!(!out.exists());

    let capped = std::fs::read_to_string(&cfg).unwrap() + "cap = { epsilon = 6.0, delta = 1e-6 }\n";
    let capped_path = data.join("capped.toml");
    std::fs::write(&capped_path, capped).unwrap();
    let (code, _, err) = tripdp(&[
        "release", "--config", p(&capped_path), "--input", p(&data.join("trips.csv")), "--out", p(&out),
    ]);
    assert_eq!(code, EXIT_BUDGET, "{err}");
    assert!(!out.exists());

    let bad_row = std::fs::read_to_string(data.join("trips.csv")).unwrap() + "2016-07-25,bus,nowhere,480,bus-0001,490\n";
    std::fs::write(data.join("bad.csv"), bad_row).unwrap();
    let (code, _, err) = tripdp(&[
        "release", "--config", p(&cfg), "--input", p(&data.join("bad.csv")), "--out", p(&out),
    ]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("nowhere"), "{err}");
    assert!(!out.exists());
}

#[test]
fn audit_detects_tampering_and_empty_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    generated(&data, 20_000);
    let cfg = data.join("release.toml");
    let bundle = dir.path().join("bundle");
    let trips = data.join("trips.csv");
    let args = ["release", "--config", p(&cfg), "--input", p(&trips), "--out", p(&bundle)];
    assert_eq!(tripdp(&args).0, EXIT_OK);

    let file = bundle.join(&manifest(&bundle).partitions[0].file);
    let original = std::fs::read_to_string(&file).unwrap();
    let edited = original.replacen(",1", ",2", 1);
    assert_ne!(edited, original);
    std::fs::write(&file, edited).unwrap();
    let (code, _, err) = tripdp(&["audit", "--bundle", p(&bundle), "--assume-delta", "1e-7"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("digest"), "{err}");
    std::fs::write(&file, original).unwrap();
    assert_eq!(tripdp(&["audit", "--bundle", p(&bundle), "--assume-delta", "1e-7"]).0, EXIT_OK);

    assert_eq!(tripdp(&["audit", "--bundle", p(dir.path()), "--assume-delta", "1e-7"]).0, EXIT_USAGE);

    let header = std::fs::read_to_string(data.join("trips.csv")).unwrap();
    std::fs::write(data.join("empty.csv"), header.lines().next().unwrap().to_string() + "\n").unwrap();
    let empty = dir.path().join("empty");
    let empty_csv = data.join("empty.csv");
    let args = ["release", "--config", p(&cfg), "--input", p(&empty_csv), "--out", p(&empty)];
    assert_eq!(tripdp(&args).0, EXIT_OK);
    let (code, _, err) = tripdp(&["audit", "--bundle", p(&empty), "--assume-delta", "1e-7"]);
    assert_eq!(code, EXIT_NO_DATA, "{err}");
}

#[test]
fn paper_examples_pass() {
    let (code, out, _) = tripdp(&["paper-examples", "--trials", "3000", "--seed", "1"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(out.matches("[PASS]").count(), 8);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_tripdp");
    let status = Command::new(bin).args(["threshold", "--epsilon", "1", "--delta", "5.9604644775390625e-8"]).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&status.stdout).contains("35.6574"));
    let status = Command::new(bin).args(["threshold", "--epsilon", "1"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}
