use std::path::Path;
use std::process::{Command, Output};

fn flowexec(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowexec"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("FLOWEXEC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn manifest(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

#[test]
fn table1_has_six_rows_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = flowexec(d, &["table1", "--paths", "200", "--seed", "3"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let table = read(a.join("table1.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "strategy,mean,sd,q05,q95,mean_T0");
    assert_eq!(lines.len(), 7);
    assert_eq!(table, read(b.join("table1.csv")));
    assert_eq!(read(a.join("table1.manifest.json")), read(b.join("table1.manifest.json")));

    let m = manifest(a.join("table1.manifest.json"));
    assert_eq!(m["seed"], 3);
    assert_eq!(m["config"]["paths"], 200);
    assert_eq!(m["outputs"][0], "table1.csv");
}

#[test]
fn ewma_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("trades.csv");
    std::fs::write(&input, "index,signed_volume\n0,10000\n").unwrap();
    let out = flowexec(
        dir.path(),
        &["flow", "ewma", "--beta", "1e-5", "--input", input.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(dir.path().join("imbalance.csv"));
    let last: f64 = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - 0.0951626).abs() < 1e-7);
}

#[test]
fn ewma_with_daily_volume_rule() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("trades.csv");
    std::fs::write(&input, "1,300\n2,-100,limit_at_touch\n3,-300\n").unwrap();
    let out = flowexec(
        dir.path(),
        &["flow", "ewma", "--beta-a", "30", "--input", input.to_str().unwrap()],
    );
    assert!(out.status.success());
    // header, I_0 and two trades; the touch order is filtered out
    assert_eq!(read(dir.path().join("imbalance.csv")).lines().count(), 4);
}

#[test]
fn buckets_and_vpin() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("trades.csv");
    let mut text = String::new();
    for k in 0..100 {
        text.push_str(&format!("{k},{}\n", if k % 4 == 0 { -50 } else { 50 }));
    }
    std::fs::write(&input, text).unwrap();
    let out = flowexec(
        dir.path(),
        &["flow", "buckets", "--bucket-volume", "200", "--window", "3", "--input", input.to_str().unwrap()],
    );
    assert!(out.status.success());
    let csv = read(dir.path().join("buckets.csv"));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "l,I_l,VPIN_l");
    assert_eq!(rows.len(), 26);
    assert_eq!(rows[1], "0,0.5,");
    assert_eq!(rows[3], "2,0.5,0.5");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "kappa = 4\neta = 0.05\n").unwrap();
    let out = flowexec(
        dir.path(),
        &["riccati", "--config", cfg.to_str().unwrap(), "--eta", "0.02", "--t-max", "2"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path().join("riccati.manifest.json"));
    assert_eq!(m["config"]["kappa"], 4.0);
    assert_eq!(m["config"]["eta"], 0.02);
    assert_eq!(m["args"]["t_max"], 2.0);
    assert!(read(dir.path().join("riccati.csv")).starts_with("tau,A,B,C,F\n"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_flowexec"))
        .args(["myopic", "--c", "2"])
        .env("FLOWEXEC_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let values = read(dir.path().join("myopic_values.csv"));
    let mq = values.lines().find(|l| l.starts_with("MQ")).unwrap();
    let t_hat: f64 = mq.split(',').nth(2).unwrap().parse().unwrap();
    assert!((t_hat - 6f64.sqrt()).abs() < 1e-12);
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| flowexec(d, args).status.code().unwrap();

    assert_eq!(code(&["riccati", "--no-such-flag"]), 2);

    let cfg = d.join("bad.cfg");
    std::fs::write(&cfg, "kapa = 4\n").unwrap();
    assert_eq!(code(&["riccati", "--config", cfg.to_str().unwrap()]), 3);
    assert_eq!(code(&["riccati", "--sigma", "-1"]), 3);

    assert_eq!(code(&["myopic", "--horizon=-1"]), 4);

    // explicit scheme on a grid coarser than its stability limit
    assert_eq!(code(&["hjb", "--dx", "0.003", "--n-x", "1000"]), 5);

    let tape = d.join("tape.csv");
    std::fs::write(&tape, "1,10\n2,ten\n").unwrap();
    assert_eq!(code(&["flow", "buckets", "--input", tape.to_str().unwrap()]), 6);

    assert_eq!(code(&["flow", "ewma", "--beta", "1", "--input", "/no/such/file.csv"]), 7);
}

#[test]
fn dp_and_horizon_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(flowexec(d, &["dp", "--n-x", "11", "--n-y", "11", "--n-alpha", "5"]).status.success());
    let policy = read(d.join("dp_policy.csv"));
    assert_eq!(policy.lines().count(), 1 + 11 * 11);

    let out = flowexec(d, &["optimize-horizon", "--points", "20"]);
    assert!(out.status.success());
    let h = read(d.join("horizon.csv"));
    let ml = h.lines().find(|l| l.starts_with("ML,")).unwrap();
    let t: f64 = ml.split(',').nth(1).unwrap().parse().unwrap();
    assert!((t - 3.3716).abs() < 1e-3, "{t}");
    assert_eq!(read(d.join("horizon_curve.csv")).lines().count(), 21);
}

#[test]
fn lists_may_start_with_a_negative_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowexec(dir.path(), &["statics", "--ys", "-0.3,0.3", "--kappas", "5", "--etas", "0.05"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read(dir.path().join("statics.csv"));
    assert!(rows.lines().skip(1).any(|l| l.contains("-0.3")));
}
