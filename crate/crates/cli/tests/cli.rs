use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hidden_sir(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hidden-sir"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn succeed(args: &[&str], out: &Path) {
    let o = hidden_sir(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

/// Reads a provenance-prefixed CSV into header and rows.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let (first, body) = text.split_once('\n').unwrap();
    assert!(first.starts_with("# hidden-sir "), "{first}");
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn by_system(path: &Path) -> HashMap<String, HashMap<String, String>> {
    let (header, rows) = read_csv(path);
    rows.into_iter()
        .map(|row| {
            let map: HashMap<String, String> = header.iter().cloned().zip(row).collect();
            (map["system"].clone(), map)
        })
        .collect()
}

#[test]
fn threshold_record_for_the_permanent_example() {
    let dir = tempfile::tempdir().unwrap();
    succeed(&["threshold", "--preset", "example2"], dir.path());
    let text = fs::read_to_string(dir.path().join("threshold.txt")).unwrap();
    let record: HashMap<&str, &str> = text.lines().skip(1).filter_map(|l| l.split_once('=')).collect();
    let lambda: f64 = record["lambda"].parse().unwrap();
    assert!((lambda - 14.852198362167508).abs() < 1e-9);
    let lp1: f64 = record["predicted.1.lambda_pre"].parse().unwrap();
    assert!((lp1 - 16.587418).abs() < 1e-5);
    assert_eq!(record["predicted.0.classification"], "Incautious");
    assert_eq!(record["predicted.1.classification"], "Overcautious");
    assert!(text.starts_with("# hidden-sir 0.1.0 kind=threshold config_sha256="));
}

#[test]
fn simulation_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [
        "simulate",
        "--preset",
        "example1",
        "--horizon",
        "20",
        "--seeds",
        "2",
        "--base-seed",
        "42",
    ];
    succeed(&args, a.path());
    succeed(&args, b.path());
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for name in names {
        let (x, y) = (
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
        );
        assert_eq!(x, y, "{name:?} differs between runs");
    }
    let (header, rows) = read_csv(&a.path().join("paths_filtered_42.csv"));
    assert_eq!(header, ["t", "S", "I", "e_1", "e_2", "y"]);
    assert_eq!(rows.len(), 20_000 / 10 + 1);
    let (_, hidden) = read_csv(&a.path().join("paths_hidden_42.csv"));
    // The filter is driven by the hidden system's observation.
    for (h, f) in hidden.iter().zip(&rows) {
        assert_eq!(h[4], f[5]);
    }
}

#[test]
fn different_seeds_give_different_paths() {
    let dir = tempfile::tempdir().unwrap();
    succeed(
        &["simulate", "--preset", "example1", "--horizon", "5", "--seeds", "2"],
        dir.path(),
    );
    let (_, a) = read_csv(&dir.path().join("paths_hidden_1.csv"));
    let (_, b) = read_csv(&dir.path().join("paths_hidden_2.csv"));
    assert_ne!(a, b);
}

#[test]
fn standalone_filtered_mode_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("standalone.toml");
    fs::write(
        &cfg,
        "preset = \"example1\"\n[mode]\ncosimulate = false\n[grid]\nhorizon = 5.0\n",
    )
    .unwrap();
    succeed(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    let (_, rows) = read_csv(&dir.path().join("paths_filtered_1.csv"));
    for row in rows {
        let e: f64 = row[3].parse::<f64>().unwrap() + row[4].parse::<f64>().unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }
}

#[test]
fn compare_extinct_example() {
    let dir = tempfile::tempdir().unwrap();
    succeed(&["compare", "--preset", "example1", "--seeds", "8"], dir.path());
    let t = by_system(&dir.path().join("compare.csv"));
    assert_eq!(t["hidden"]["verdict"], "Extinction");
    assert_eq!(t["filtered"]["verdict"], "Extinction");
    assert_eq!(t["predicted0"]["classification"], "Incautious");
    assert_eq!(t["predicted1"]["classification"], "Overcautious");
    assert_eq!(t["hidden"]["seeds"], "8");
}

#[test]
fn compare_permanent_example() {
    let dir = tempfile::tempdir().unwrap();
    succeed(
        &["compare", "--preset", "example2", "--seeds", "4", "--horizon", "200"],
        dir.path(),
    );
    let t = by_system(&dir.path().join("compare.csv"));
    assert_eq!(t["hidden"]["verdict"], "Permanence");
    assert_eq!(t["filtered"]["verdict"], "Permanence");
    assert_eq!(t["predicted0"]["verdict"], "Extinction");
}

#[test]
fn sweep_over_a1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(
        &cfg,
        "preset = \"example1\"\n[sweep]\nparameter = \"a1\"\nvalues = [0.25, 0.5, 1.0]\n",
    )
    .unwrap();
    succeed(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(&header[..3], ["parameter", "value", "lambda"]);
    assert_eq!(rows.len(), 3);
    let lambdas: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!((lambdas[1] - -1.7450304386473081).abs() < 1e-9);
    // More inflow of susceptibles raises the threshold.
    assert!(lambdas[0] < lambdas[1] && lambdas[1] < lambdas[2]);
}

#[test]
fn density_integrates_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("density.toml");
    fs::write(
        &cfg,
        "preset = \"example2\"\n[grid]\nhorizon = 50.0\n[density]\ns_bins = 20\ni_bins = 10\n",
    )
    .unwrap();
    succeed(&["density", "--config", cfg.to_str().unwrap()], dir.path());
    let (header, rows) = read_csv(&dir.path().join("density.csv"));
    assert_eq!(header, ["S_bin", "I_bin", "density"]);
    assert_eq!(rows.len(), 200);
    let area = (20.0 / 20.0) * (10.0 / 10.0);
    let mass: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap() * area).sum();
    assert!((mass - 1.0).abs() < 1e-9, "{mass}");
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "preset = \"example1\"\n[params]\na1 = -1.0\n").unwrap();
    let o = hidden_sir(&["threshold", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.a1"));

    let o = hidden_sir(&["threshold"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    fs::write(&cfg, "preset = \"example1\"\n[params]\ntypo = 1.0\n").unwrap();
    let o = hidden_sir(&["threshold", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = hidden_sir(&["sweep", "--preset", "example1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
