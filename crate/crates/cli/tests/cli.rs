use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FAST: &[&str] = &[
    "--hidden",
    "6",
    "--epoch-grid",
    "none",
    "--epochs",
    "15",
    "--repeats",
    "2",
];

/// 60 rows of y = x1 - 2 x2 + 0.5 sin(3 x3) + noise, with a manifest entry `toy`.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x1,x2,x3,y\n");
    let mut s: u64 = 12345;
    let mut u = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for _ in 0..60 {
        let (a, b, c, e) = (u(), u(), u(), u());
        let y = a - 2.0 * b + 0.5 * (3.0 * c).sin() + 0.1 * e;
        csv.push_str(&format!("{a},{b},{c},{y}\n"));
    }
    fs::write(dir.path().join("toy.csv"), csv).unwrap();
    fs::write(dir.path().join("manifest.txt"), "toy.path = toy.csv\ntoy.target = y\n").unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltasketch"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![base[0], "--dataset", "toy", "--manifest", "manifest.txt"];
    v.extend_from_slice(&base[1..]);
    v.extend_from_slice(FAST);
    v.extend_from_slice(extra);
    v
}

/// Splits a written table into (comment lines, header, rows).
fn read_table(path: &Path) -> (Vec<String>, String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let (comments, rest): (Vec<&str>, Vec<&str>) = text.lines().partition(|l| l.starts_with('#'));
    let header = rest[0].to_string();
    let rows = rest[1..]
        .iter()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (comments.into_iter().map(str::to_string).collect(), header, rows)
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn evaluate_writes_metrics_and_intervals() {
    let ws = workspace();
    ok(ws.path(), &with(&["evaluate"], &["--rank", "8", "--out", "o"]));
    let (comments, header, rows) = read_table(&ws.path().join("o/metrics.csv"));
    assert!(comments[0].starts_with("# deltasketch ") && comments[0].contains("config_sha256="));
    assert!(comments[1].contains(" hidden=6 ") && comments[1].contains(" activation=tanh ") && comments[1].contains(" rank=8 "));
    assert_eq!(header, "dataset,method,repeat,p_cov,r,w_sd,wall_seconds");
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][2], "mean");
    for row in &rows {
        assert_eq!(row[0], "toy");
        assert_eq!(row[1], "id");
        let p: f64 = row[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(row[5].parse::<f64>().unwrap() > 0.0);
        assert!(row[6].parse::<f64>().unwrap() >= 0.0);
    }

    let (_, header, rows) = read_table(&ws.path().join("o/intervals_id_000.csv"));
    assert_eq!(header, "index,y_true,center,lower,upper");
    assert_eq!(rows.len(), 6);
    for row in rows {
        let v: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        assert!(v[0] < 60.0 && v[3] < v[2] && v[2] < v[4]);
    }
    assert!(ws.path().join("o/intervals_id_001.csv").exists());
}

#[test]
fn no_timing_runs_are_byte_identical() {
    let ws = workspace();
    for out in ["a", "b"] {
        ok(
            ws.path(),
            &with(&["evaluate"], &["--rank", "8", "--no-timing", "--out", out]),
        );
    }
    let (a, b) = (files(&ws.path().join("a")), files(&ws.path().join("b")));
    assert_eq!(a.len(), 3);
    assert_eq!(
        a.iter().map(|p| p.file_name()).collect::<Vec<_>>(),
        b.iter().map(|p| p.file_name()).collect::<Vec<_>>()
    );
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    let (_, _, rows) = read_table(&a[2]);
    assert!(rows.iter().all(|r| r[6] == "NA"));
}

#[test]
fn compare_spectrum_and_sweep_headers() {
    let ws = workspace();
    ok(ws.path(), &with(&["compare-exact"], &["--rank", "8", "--out", "c"]));
    let (_, header, rows) = read_table(&ws.path().join("c/compare.csv"));
    assert!(header.starts_with("dataset,repeat,id_p_cov,id_r,id_w_sd,id_p_star,id_seconds,exact_p_cov"));
    assert_eq!(rows.len(), 3);

    ok(ws.path(), &with(&["spectrum"], &["--rank", "5", "--out", "s"]));
    let (_, header, rows) = read_table(&ws.path().join("s/spectrum.csv"));
    assert_eq!(
        header,
        "index,exact_singular_value,sketch_singular_value,exact_cov_eigenvalue,sketch_cov_eigenvalue"
    );
    // 3-6-1 network: 31 parameters, 54 training rows
    assert_eq!(rows.len(), 31);
    assert!(!rows[0][2].is_empty());
    assert!(rows[10][2].is_empty());

    ok(ws.path(), &with(&["sweep-rank"], &["--ranks", "3,10", "--out", "w"]));
    let (_, header, rows) = read_table(&ws.path().join("w/sweep.csv"));
    assert_eq!(header, "dataset,method,rank,repeat,p_cov,r,w_sd,p_star,wall_seconds");
    assert_eq!(rows.len(), 6);
    let p3: f64 = rows[4][7].parse().unwrap();
    let p10: f64 = rows[5][7].parse().unwrap();
    assert!(p3 <= 3.0 + 1e-9 && p10 > p3, "{p3} {p10}");
}

#[test]
fn csv_path_with_target() {
    let ws = workspace();
    let out = run(
        ws.path(),
        &[
            "evaluate",
            "--dataset",
            "toy.csv",
            "--target",
            "y",
            "--rank",
            "4",
            "--out",
            "p",
            "--hidden",
            "none",
            "--epoch-grid",
            "none",
            "--epochs",
            "5",
            "--repeats",
            "1",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, _, rows) = read_table(&ws.path().join("p/metrics.csv"));
    assert_eq!(rows[0][0], "toy");
}

#[test]
fn exit_codes() {
    let ws = workspace();
    let code = |args: &[&str]| run(ws.path(), args).status.code().unwrap();
    assert_eq!(code(&with(&["evaluate"], &["--alpha", "1.5"])), 2);
    assert_eq!(code(&with(&["evaluate"], &["--rank", "zero"])), 2);
    assert_eq!(code(&with(&["evaluate"], &["--method", "bayes"])), 2);
    assert_eq!(
        code(&["evaluate", "--dataset", "nosuch", "--manifest", "manifest.txt"]),
        2
    );
    assert_eq!(code(&["evaluate", "--dataset", "missing.csv", "--target", "y"]), 3);
    assert_eq!(code(&["evaluate", "--dataset", "toy.csv", "--target", "z"]), 3);
    // 3-20-1 network has 101 parameters, more than the 54 training rows,
    // so without a penalty the exact covariance is singular
    assert_eq!(
        code(&[
            "evaluate",
            "--dataset",
            "toy",
            "--manifest",
            "manifest.txt",
            "--method",
            "exact",
            "--lambda",
            "0",
            "--hidden",
            "20",
            "--epoch-grid",
            "none",
            "--epochs",
            "5",
            "--repeats",
            "1",
            "--out",
            "e",
        ]),
        4
    );
    assert_eq!(code(&with(&["evaluate"], &["--rank", "4", "--out", "fine"])), 0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let ws = workspace();
    fs::write(
        ws.path().join("run.conf"),
        "# test configuration\ndataset = toy\nmanifest = manifest.txt\nrank = 4\nrepeats = 1\nhidden = 6\nepoch-grid = none\nepochs = 15\nalpha = 2\n",
    )
    .unwrap();
    assert_eq!(
        run(ws.path(), &["evaluate", "--config", "run.conf"]).status.code(),
        Some(2)
    );

    ok(
        ws.path(),
        &[
            "evaluate",
            "--config",
            "run.conf",
            "--alpha",
            "0.05",
            "--out",
            "f",
            "--no-timing",
        ],
    );
    let (_, _, rows) = read_table(&ws.path().join("f/metrics.csv"));
    assert_eq!(rows.len(), 2);

    ok(
        ws.path(),
        &[
            "evaluate",
            "--dataset",
            "toy",
            "--manifest",
            "manifest.txt",
            "--rank",
            "4",
            "--repeats",
            "1",
            "--hidden",
            "6",
            "--epoch-grid",
            "none",
            "--epochs",
            "15",
            "--out",
            "g",
            "--no-timing",
        ],
    );
    assert_eq!(
        fs::read(ws.path().join("f/metrics.csv")).unwrap(),
        fs::read(ws.path().join("g/metrics.csv")).unwrap()
    );

    fs::write(ws.path().join("bad.conf"), "rank 4\n").unwrap();
    assert_eq!(
        run(ws.path(), &["evaluate", "--config", "bad.conf"]).status.code(),
        Some(2)
    );
}
