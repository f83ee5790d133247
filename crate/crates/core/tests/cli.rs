use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn disctest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disctest"))
        .args(args)
        .env_remove("DISCTEST_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    if let Some(parent) = p.parent() {
        fs::create_dir_all(parent).unwrap();
    }
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const TWO_CLUSTERS: &str = r#"
schema_version = 1
name = "small"
seed = 5
trials = 300
tests = ["likelihood", "mmd", "ks"]
n_grid = { start = 4, stop = 12, step = 4 }

[[clusters]]
members = [{ mean = -1.0, variance = 1.0 }]

[[clusters]]
members = [{ mean = 1.0, variance = 1.0 }]
"#;

#[test]
fn run_figure2_writes_27_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = disctest(&[
        "run",
        "--preset",
        "figure2",
        "--trials",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let errors = fs::read_to_string(out.join("errors.csv")).unwrap();
    let lines: Vec<_> = errors.lines().collect();
    assert_eq!(lines[0], "test,n,error,half_width,trials");
    assert_eq!(lines.len(), 1 + 27);
    assert!(!errors.contains('\r'));

    let exps = fs::read_to_string(out.join("exponents.csv")).unwrap();
    assert_eq!(exps.lines().next(), Some("test,exponent,r2"));
    assert_eq!(exps.lines().count(), 1 + 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["trials"], 100);
    assert_eq!(manifest["seed"], 20190101);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let outputs: Vec<String> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_owned())
        .collect();
    for f in ["errors.csv", "exponents.csv", "manifest.json"] {
        assert!(outputs.iter().any(|o| o.ends_with(f)), "manifest lacks {f}");
    }
    let names: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{names:?}");
}

#[test]
fn reruns_and_worker_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TWO_CLUSTERS);
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let o = disctest(&[
            "run",
            "--config",
            &cfg,
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push((
            fs::read(out.join("errors.csv")).unwrap(),
            fs::read(out.join("exponents.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn seed_override_changes_results_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TWO_CLUSTERS);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(
        disctest(&["run", "--config", &cfg, "--out", a.to_str().unwrap()])
            .status
            .success()
    );
    assert!(disctest(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "6",
        "--out",
        b.to_str().unwrap()
    ])
    .status
    .success());
    assert_ne!(
        fs::read(a.join("errors.csv")).unwrap(),
        fs::read(b.join("errors.csv")).unwrap()
    );
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 6);
}

#[test]
fn workers_env_var_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TWO_CLUSTERS);
    let out = dir.path().join("o");
    let o = Command::new(env!("CARGO_BIN_EXE_disctest"))
        .args(["run", "--config", &cfg, "--out", out.to_str().unwrap()])
        .env("DISCTEST_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let bad = Command::new(env!("CARGO_BIN_EXE_disctest"))
        .args(["run", "--config", &cfg, "--out", out.to_str().unwrap()])
        .env("DISCTEST_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn one_cluster_config_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = TWO_CLUSTERS.rsplit_once("[[clusters]]").unwrap().0;
    let cfg = write(dir.path(), "c.toml", text);
    let o = disctest(&[
        "run",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("clusters ≥ 2"), "{err}");
    assert!(err.contains("`clusters`"), "{err}");
}

#[test]
fn invalid_fields_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (edit, field) in [
        (TWO_CLUSTERS.replace("trials = 300", "trials = 0"), "trials"),
        (
            TWO_CLUSTERS.replace("variance = 1.0 }]\n\n[[", "variance = -1.0 }]\n\n[["),
            "clusters[0].members[0]",
        ),
        (
            TWO_CLUSTERS.replace("schema_version = 1", "schema_version = 9"),
            "schema_version",
        ),
    ] {
        let cfg = write(dir.path(), "c.toml", &edit);
        let o = disctest(&["bounds", "--config", &cfg]);
        assert_eq!(o.status.code(), Some(2), "{field}");
        assert!(stderr(&o).contains(field), "{}", stderr(&o));
    }
    let cfg = write(dir.path(), "c.toml", "not = [toml");
    assert_eq!(
        disctest(&["bounds", "--config", &cfg]).status.code(),
        Some(2)
    );
    assert_eq!(
        disctest(&["bounds", "--preset", "nope"]).status.code(),
        Some(2)
    );
}

#[test]
fn io_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let o = disctest(&["bounds", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let cfg = write(dir.path(), "c.toml", TWO_CLUSTERS);
    let blocker = write(dir.path(), "file", "");
    let o = disctest(&["run", "--config", &cfg, "--out", &format!("{blocker}/sub")]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bounds_figure2_reports_rates_and_fano() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = disctest(&[
        "bounds",
        "--preset",
        "figure2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for line in [
        "rate_mmd",
        "rate_ks",
        "rate_parametric   0.180337",
        "chernoff_min      0.125000",
        "fano_ceiling      2.885390",
    ] {
        assert!(text.contains(line), "missing {line}:\n{text}");
    }
    assert!(!text.contains("VIOLATED"));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bounds.json")).unwrap()).unwrap();
    let rp = json["report"]["rate_parametric"].as_f64().unwrap();
    assert!((rp - std::f64::consts::LOG2_E * 0.125).abs() < 1e-6);
    let csv = fs::read_to_string(out.join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("test,n,bound"));
    assert_eq!(csv.lines().count(), 1 + 2 * 9);
}

#[test]
fn bounds_flags_premise_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "overlap.toml",
        r#"
schema_version = 1
seed = 1
tests = ["mmd", "ks"]
n_grid = [10, 20]

[[clusters]]
members = [{ mean = -3.0, variance = 1.0 }, { mean = 3.0, variance = 1.0 }]

[[clusters]]
members = [{ mean = 0.0, variance = 1.0 }]
"#,
    );
    let o = disctest(&["bounds", "--config", &cfg]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("VIOLATED").count(), 2, "{text}");
    assert!(text.contains("rate_mmd          0.000000"));
    assert!(text.contains("rate_ks           0.000000"));
    assert!(text.contains("rate_parametric   n/a"));
}

#[test]
fn classify_ks_hand_example_and_identical_file() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    write(&train, "a.txt", "1\n2\n3\n");
    write(&train, "b.txt", "4\n5\n6\n");
    let test = write(dir.path(), "y.txt", "# test\n1.1\n2.1\n\n2.9\n");
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        &test,
        "--test",
        "ks",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("cluster 1 (a.txt)\n"), "{text}");
    let score: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("score "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((score - 1.0 / 3.0).abs() < 1e-15, "{text}");

    let same = train.join("b.txt");
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        same.to_str().unwrap(),
        "--test",
        "ks",
    ]);
    let text = stdout(&o);
    assert!(text.starts_with("cluster 2 (b.txt)\n"), "{text}");
    assert!(text.contains("score 0.0000000000000000e0"), "{text}");
}

#[test]
fn classify_mmd_with_composite_directories() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    write(&train, "low/m1.txt", "0,0\n0.1,0\n0,0.1\n");
    write(&train, "low/m2.txt", "-0.1,0\n0,-0.1\n0,0\n");
    write(&train, "high/m1.txt", "5,5\n5.1,5\n5,5.1\n");
    let test = write(dir.path(), "y.txt", "-0.05,0.02\n0.03,-0.1\n");
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        &test,
        "--test",
        "mmd",
        "--kernel-bandwidth",
        "0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    // directories sort by name: high is cluster 1, low is cluster 2
    assert!(
        stdout(&o).starts_with("cluster 2 (low)\n"),
        "{}",
        stdout(&o)
    );

    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        &test,
        "--test",
        "ks",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_likelihood_needs_model_spec() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    write(&train, "a.txt", "1\n2\n3\n");
    write(&train, "b.txt", "4\n5\n6\n");
    let test = write(dir.path(), "y.txt", "4.2\n5.5\n");
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        &test,
        "--test",
        "likelihood",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("likelihood requires model spec"),
        "{}",
        stderr(&o)
    );

    let models = write(
        dir.path(),
        "models.toml",
        "schema_version = 1\n[[models]]\nmean = 2.0\nvariance = 1.0\n[[models]]\nmean = 5.0\nvariance = 1.0\n",
    );
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        &test,
        "--test",
        "likelihood",
        "--models",
        &models,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).starts_with("cluster 2 (b.txt)\n"),
        "{}",
        stdout(&o)
    );

    let one = write(
        dir.path(),
        "one.toml",
        "schema_version = 1\n[[models]]\nmean = 2.0\nvariance = 1.0\n",
    );
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        &test,
        "--test",
        "likelihood",
        "--models",
        &one,
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_reports_malformed_lines_and_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    write(&train, "a.txt", "1\n2\n3\n");
    write(&train, "b.txt", "4\n5\n6\n");
    let bad = write(dir.path(), "bad.txt", "1\n2\nthree\n");
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        &bad,
        "--test",
        "ks",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.txt:3:"), "{}", stderr(&o));

    let ragged = write(dir.path(), "ragged.txt", "1,2\n3\n");
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        &ragged,
        "--test",
        "mmd",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ragged.txt:2:"), "{}", stderr(&o));

    let wide = write(dir.path(), "wide.txt", "1,2\n3,4\n");
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        &wide,
        "--test",
        "mmd",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension"), "{}", stderr(&o));

    let missing = dir.path().join("nope.txt");
    let o = disctest(&[
        "classify",
        "--train-dir",
        train.to_str().unwrap(),
        "--test-file",
        missing.to_str().unwrap(),
        "--test",
        "ks",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn presets_are_listed() {
    let o = disctest(&["presets"]);
    assert!(o.status.success());
    let names: Vec<_> = stdout(&o).lines().map(str::to_owned).collect();
    for p in [
        "figure2",
        "figure3",
        "table1",
        "figure5-composite-means",
        "figure6-composite-variances",
        "m10",
        "m15",
    ] {
        assert!(names.iter().any(|n| n == p), "{p}");
    }
}
