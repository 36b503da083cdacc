use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn dyntree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyntree"))
        .args(args)
        .output()
        .unwrap()
}

/// Label is `UP` when `a > 0.5`; `day` is categorical.
fn write_dataset(path: &Path, n: usize) {
    let days = ["mon", "tue", "wed"];
    let mut s = String::from("day,a,b,class\n");
    for i in 0..n {
        let a = (i * 37 % 100) as f64 / 100.0;
        let b = (i * 11 % 17) as f64;
        let class = if a > 0.5 { "UP" } else { "DOWN" };
        writeln!(s, "{},{a},{b},{class}", days[i % 3]).unwrap();
    }
    std::fs::write(path, s).unwrap();
}

fn base_args<'a>(data: &'a str, mode: &'a str, eps: &'a str) -> Vec<&'a str> {
    vec![
        "run",
        "--mode",
        mode,
        "--data",
        data,
        "--label",
        "class",
        "--positive",
        "UP",
        "--epsilon",
        eps,
    ]
}

#[test]
fn summary_goes_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_dataset(&data, 300);
    let out = dyntree(&base_args(data.to_str().unwrap(), "incremental", "0.1"));
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["predictions"], 300);
    assert!(v["f1"].as_f64().unwrap() > 0.8);
    assert_eq!(v["config"]["mode"], "incremental");
    assert_eq!(v["config"]["params"]["h"], 10);
}

#[test]
fn writes_summary_and_series_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let (json, series) = (dir.path().join("m.json"), dir.path().join("s.csv"));
    write_dataset(&data, 200);
    let mut args = base_args(data.to_str().unwrap(), "sw", "0");
    args.extend(["--window", "50", "--h", "inf", "--verify"]);
    args.extend([
        "--out",
        json.to_str().unwrap(),
        "--series",
        series.to_str().unwrap(),
    ]);
    let out = dyntree(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["predictions"], 150);
    assert_eq!(v["config"]["params"]["h"], serde_json::Value::Null);
    let rows = std::fs::read_to_string(&series).unwrap();
    assert_eq!(rows.lines().count(), 151);
    assert!(rows.starts_with("t,yhat,y,nanos\n51,"));
}

#[test]
fn random_update_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_dataset(&data, 200);
    let mut args = base_args(data.to_str().unwrap(), "ru", "0.1");
    args.extend(["--seed", "7", "--warmup", "20"]);
    let strip = |o: Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        let obj = v.as_object_mut().unwrap();
        obj.remove("mean_update_nanos");
        obj.remove("median_update_nanos");
        v
    };
    assert_eq!(strip(dyntree(&args)), strip(dyntree(&args)));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_dataset(&data, 20);
    let path = data.to_str().unwrap();

    // Sliding window without a window.
    let out = dyntree(&base_args(path, "sw", "0.1"));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("window"));

    let mut args = base_args(path, "incremental", "0.1");
    args[6] = "nope";
    assert!(!dyntree(&args).status.success());

    let missing = dir.path().join("missing.csv");
    assert!(
        !dyntree(&base_args(missing.to_str().unwrap(), "incremental", "0.1"))
            .status
            .success()
    );

    let out = dyntree(&base_args(path, "incremental", "-1"));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid parameters"));

    assert!(!dyntree(&["run", "--mode", "bogus"]).status.success());
}
