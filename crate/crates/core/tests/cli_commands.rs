use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gbs_taylor::cli::{bench_pattern, sidecar_path, SEED_ENV};
use gbs_taylor::{check_unitary, UnitaryMatrix};
use tempfile::TempDir;

/// Runs the binary with a whitespace-separated argument line.
fn run(line: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbs-taylor"))
        .args(line.split_whitespace())
        .env_remove(SEED_ENV)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(line: &str) -> Output {
    let out = run(line);
    assert!(out.status.success(), "{line}: {}", stderr(&out));
    out
}

fn fails_naming(line: &str, field: &str) {
    let out = run(line);
    assert!(!out.status.success(), "{line}");
    assert!(stderr(&out).contains(field), "{line}: {}", stderr(&out));
}

fn rows(path: &str) -> Vec<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

fn sidecar(path: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(sidecar_path(Path::new(path))).unwrap()).unwrap()
}

fn tmp(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

#[test]
fn vacuum_lossless_estimate_is_one() {
    let dir = TempDir::new().unwrap();
    let out = tmp(&dir, "est.csv");
    ok(&format!(
        "estimate --alpha 0 --loss-s2 0 --haar-seed 1 --modes 3 --pattern 0,0,0 --samples 16 --out {out}"
    ));
    let table = rows(&out);
    let header = [
        "pattern",
        "mean",
        "stderr",
        "std_dev",
        "order",
        "samples",
        "seed",
        "negative_flag",
    ];
    assert_eq!(table[0], header);
    assert_eq!(table[1][..3], ["0 0 0", "1", "0"]);
    assert_eq!(table[1][7], "0");
}

#[test]
fn estimate_writes_sidecar_and_warns_on_large_epsilon() {
    let dir = TempDir::new().unwrap();
    let out = tmp(&dir, "est.csv");
    let res = ok(&format!(
        "estimate --alpha 0.9 --loss-s2 0 --haar-seed 4 --modes 2 --photons 2 --samples 64 --out {out}"
    ));
    let err = stderr(&res);
    assert!(err.contains("epsilon = 0.45"), "{err}");
    assert!(err.contains("warning"), "{err}");
    assert_eq!(rows(&out).len(), 4);

    let meta = sidecar(&out);
    assert_eq!(meta["command"], "estimate");
    assert_eq!(meta["config"]["alpha"], 0.9);
    assert!((meta["derived"]["epsilon"].as_f64().unwrap() - 0.45).abs() < 1e-12);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = tmp(&dir, "run.json");
    fs::write(
        &cfg,
        r#"{"alpha": 0.5, "loss_s2": 0.5, "unitary": {"haar": {"seed": 3, "n": 3}},
            "patterns": {"list": [[1, 1, 0], [0, 0, 2]]}, "order": 2, "samples": 100, "seed": 9}"#,
    )
    .unwrap();
    let out = tmp(&dir, "a.csv");
    ok(&format!("estimate --config {cfg} --order 4 --out {out}"));
    let table = rows(&out);
    assert_eq!(table.len(), 3);
    assert_eq!(table[1][0], "1 1 0");
    assert_eq!(table[1][4..6], ["4", "100"]);
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = tmp(&dir, "run.json");
    fs::write(&cfg, r#"{"alpha": 0.5, "loss": 0.5}"#).unwrap();
    fails_naming(&format!("estimate --config {cfg}"), "loss");
}

#[test]
fn errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let missing = tmp(&dir, "nope.json");
    let haar = "--haar-seed 1 --modes 2";
    fails_naming(&format!("estimate --loss-s2 0.5 {haar}"), "alpha");
    fails_naming(&format!("estimate --alpha 1.5 --loss-s2 0.5 {haar}"), "alpha");
    fails_naming(&format!("estimate --alpha 0.5 --loss-s2 -0.1 {haar}"), "loss_s2");
    fails_naming("estimate --alpha 0.5 --loss-s2 0.5", "unitary");
    fails_naming(
        &format!("estimate --alpha 0.5 --loss-s2 0.5 --unitary {missing}"),
        "unitary",
    );
    fails_naming(&format!("estimate --alpha 0.5 --loss-s2 0.5 {haar} --order 3"), "order");
    fails_naming(
        &format!("estimate --alpha 0.5 --loss-s2 0.5 {haar} --samples 1"),
        "samples",
    );
    fails_naming(
        &format!("estimate --alpha 0.5 --loss-s2 0.5 {haar} --workers 0"),
        "workers",
    );
}

#[test]
fn pattern_width_must_match_unitary() {
    fails_naming(
        "estimate --alpha 0.5 --loss-s2 0.5 --haar-seed 1 --modes 3 --pattern 1,1",
        "patterns",
    );
}

#[test]
fn compare_reports_similarity_and_budget() {
    let dir = TempDir::new().unwrap();
    let out = tmp(&dir, "cmp.csv");
    let base = "compare --alpha 0.6 --loss-s2 0.5 --haar-seed 2 --modes 3";
    ok(&format!("{base} --photons 2 --samples 4096 --out {out}"));
    let table = rows(&out);
    assert_eq!(table[0], ["pattern", "estimate", "stderr", "oracle", "abs_error"]);
    assert_eq!(table.len(), 1 + 6 + 1);
    let last = table.last().unwrap();
    assert_eq!(last[0], "cosine_similarity");
    assert!(last[1].parse::<f64>().unwrap() > 0.99);

    fails_naming(&format!("{base} --photons 7"), "oracle budget");
}

#[test]
fn oracle_command_lists_probabilities() {
    let dir = TempDir::new().unwrap();
    let out = tmp(&dir, "or.csv");
    ok(&format!(
        "oracle --alpha 0.6 --loss-s2 0 --haar-seed 1 --modes 1 --pattern 2 --out {out}"
    ));
    let table = rows(&out);
    assert_eq!(table[0], ["pattern", "probability"]);
    assert!((table[1][1].parse::<f64>().unwrap() - 0.144).abs() < 1e-12);
}

#[test]
fn convergence_rows_per_mode_count() {
    let dir = TempDir::new().unwrap();
    let out = tmp(&dir, "conv.csv");
    ok(&format!(
        "convergence --alpha 0.9 --loss-s2 0.5 --haar-seed 5 --modes-list 3,5 --photons 2 --schedule 10,20,30 --out {out}"
    ));
    let table = rows(&out);
    assert_eq!(table[0], ["n_modes", "samples", "similarity"]);
    assert_eq!(table.len(), 1 + 6);
    for row in &table[1..] {
        let s: f64 = row[2].parse().unwrap();
        assert!((-1.0..=1.0 + 1e-12).contains(&s));
    }
    assert_eq!(table[1][..2], ["3", "10"]);
    assert_eq!(table[6][..2], ["5", "30"]);
}

#[test]
fn convergence_settles_at_many_samples() {
    let dir = TempDir::new().unwrap();
    let out = tmp(&dir, "conv.csv");
    ok(&format!(
        "convergence --alpha 0.9 --loss-s2 0.5 --haar-seed 5 --modes 3 --photons 2 --schedule 10000 --out {out}"
    ));
    assert!(rows(&out)[1][2].parse::<f64>().unwrap() >= 0.999);
}

#[test]
fn gen_unitary_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = tmp(&dir, "u.json");
    ok(&format!("gen-unitary --modes 6 --haar-seed 17 --out {out}"));
    let u = UnitaryMatrix::load(&out).unwrap();
    assert_eq!(u.n(), 6);
    assert!(check_unitary(&u) < 1e-12);
    assert_eq!(u, gbs_taylor::haar_random(6, 17).unwrap());

    let est = tmp(&dir, "est.csv");
    ok(&format!(
        "estimate --alpha 0.5 --loss-s2 0.5 --unitary {out} --photons 1 --samples 32 --out {est}"
    ));
    assert_eq!(rows(&est).len(), 7);
}

#[test]
fn non_unitary_file_is_rejected() {
    let dir = TempDir::new().unwrap();
    let path = tmp(&dir, "bad.json");
    fs::write(&path, r#"{"n": 2, "entries": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]}"#).unwrap();
    fails_naming(
        &format!("estimate --alpha 0.5 --loss-s2 0.5 --unitary {path}"),
        "not unitary",
    );
}

#[test]
fn seed_env_matches_seed_flag() {
    let dir = TempDir::new().unwrap();
    let a = tmp(&dir, "a.csv");
    let b = tmp(&dir, "b.csv");
    let base = "estimate --alpha 0.8 --loss-s2 0.4 --haar-seed 2 --modes 3 --photons 2 --samples 200";
    ok(&format!("{base} --seed 1234 --out {a}"));
    let status = Command::new(env!("CARGO_BIN_EXE_gbs-taylor"))
        .args(format!("{base} --out {b}").split_whitespace())
        .env(SEED_ENV, "1234")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn bench_reports_points_and_slopes() {
    let dir = TempDir::new().unwrap();
    let out = tmp(&dir, "bench.csv");
    let res = ok(&format!(
        "bench --modes-list 3,6 --photons-list 2 --samples 16 --reps 5 --out {out}"
    ));
    let table = rows(&out);
    assert_eq!(table[0], ["n_modes", "photons", "precompute_ms", "per_sample_us"]);
    assert_eq!(table.len(), 3);
    assert!(stderr(&res).contains("per-sample slope"));
    assert_eq!(sidecar(&out)["results"]["slopes"][0]["photons"], 2);

    fails_naming("bench --modes-list 3 --reps 2", "reps");
}

#[test]
fn bench_pattern_spreads_photons() {
    assert_eq!(bench_pattern(5, 2).counts(), &[1, 1, 0, 0, 0]);
    assert_eq!(bench_pattern(3, 4).counts(), &[2, 1, 1]);
}
