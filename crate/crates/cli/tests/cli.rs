use std::f64::consts::PI;
use std::process::{Command, Output};

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sasakian"));
    cmd.args(args).env_remove("SASAKI_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Header and rows of a CSV document, skipping `#` metadata lines.
fn csv(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(out);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "stderr: {err}");
    serde_json::from_str(err.trim()).unwrap()
}

#[test]
fn heisenberg_geodesic_half_turn() {
    let out = run(
        &["geodesic", "--model", "heisenberg", "--n", "1", "--dir", "1,0", "--z", "1", "--T", "3.1416", "--steps", "100"],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out);
    assert_eq!(header, ["t", "x1", "y1", "z", "hamiltonian_dev"]);
    assert_eq!(rows.len(), 100);
    let last = &rows[99];
    assert!(num(&last[1]).abs() < 1e-4);
    assert!((num(&last[2]) - 2.0).abs() < 1e-4);
    assert!((num(&last[3]) - PI / 2.0).abs() < 1e-4);
    assert!(rows.iter().all(|r| num(&r[4]) < 1e-8));
}

#[test]
fn hopf_geodesic_stays_on_sphere() {
    let out = run(&["geodesic", "--model", "hopf", "--n", "2", "--dir", "0.3,-1,2,0.5", "--z", "-1.5"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out);
    let norm = column(&header, "norm");
    assert_eq!(header.len(), 1 + 6 + 2);
    assert!(rows.iter().all(|r| (num(&r[norm]) - 1.0).abs() < 1e-12));
}

#[test]
fn missing_z_is_a_usage_error() {
    let out = run(&["geodesic", "--model", "heisenberg", "--dir", "1,0"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "usage");
    assert!(err["message"].as_str().unwrap().contains("--z"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["geodesic", "--z", "1", "--format", "xml"][..],
        &["volume", "--R", "1,abc"],
        &["conjugate", "--model", "constant", "--k1", "1"],
        &["laplacian", "--model", "hopf"],
        &["verify", "--suite", "nope"],
        &["frobnicate"],
        &["volume", "--model", "heisenberg", "--R", "1", "--reference", "hopf"],
    ] {
        let out = run(args, &[]);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_json(&out)["exit_code"], 2);
    }
    let out = run(&["verify", "--suite", "riccati"], &[("SASAKI_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn conjugate_times_match_bounds() {
    let out = run(&["conjugate", "--model", "heisenberg", "--z", "2"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out);
    for name in ["t_conj_numeric", "bound1", "bound2", "min_bound"] {
        assert!((num(&rows[0][column(&header, name)]) - PI).abs() < 1e-8, "{name}");
    }

    let out = run(&["conjugate", "--model", "hopf", "--z", "0"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out);
    assert!((num(&rows[0][column(&header, "t_conj_numeric")]) - PI).abs() < 1e-8);

    let out = run(&["conjugate", "--model", "constant", "--k1", "-1", "--k2", "-1", "--z", "0"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out);
    assert_eq!(rows[0][column(&header, "t_conj_numeric")], "none");
    assert_eq!(rows[0][column(&header, "status")], "none_within_horizon");
}

#[test]
fn hopf_volume_below_heisenberg() {
    let out = run(&["volume", "--model", "hopf", "--n", "1", "--R", "1", "--reference", "heisenberg"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out);
    let ratio = num(&rows[0][column(&header, "ratio")]);
    assert!(ratio > 0.0 && ratio <= 1.0, "{ratio}");
}

#[test]
fn laplacian_sweep_respects_bound() {
    let args = ["laplacian", "--model", "heisenberg", "--n", "1", "--samples", "200", "--seed", "42"];
    let out = run(&args, &[]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out);
    assert_eq!(rows.len(), 200);
    let margin = column(&header, "margin");
    let worst = rows.iter().map(|r| num(&r[margin])).fold(f64::INFINITY, f64::min);
    assert!(worst >= -1e-4, "{worst}");
    // both closed forms are reported; the trace form sits 1/d above the sharp one
    let (d, sharp, trace) = (column(&header, "d"), column(&header, "h_sharp"), column(&header, "h_trace"));
    for r in &rows {
        assert!((num(&r[trace]) - num(&r[sharp]) - 1.0 / num(&r[d])).abs() < 1e-9);
    }
}

#[test]
fn output_is_byte_identical_across_thread_counts() {
    let args = ["laplacian", "--n", "2", "--samples", "40", "--seed", "7", "--format", "json"];
    let one = run(&args, &[("SASAKI_THREADS", "1")]);
    let four = run(&args, &[("SASAKI_THREADS", "4")]);
    let default = run(&args, &[]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, default.stdout);

    let args = ["conjugate", "--model", "hopf", "--n", "3", "--z", "0,0.5,1,2,3"];
    assert_eq!(run(&args, &[("SASAKI_THREADS", "1")]).stdout, run(&args, &[("SASAKI_THREADS", "3")]).stdout);
}

#[test]
fn json_embeds_resolved_config() {
    let out = run(&["volume", "--model", "heisenberg", "--n", "2", "--R", "1,2", "--format", "json"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["meta"]["command"], "volume");
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
    let cfg = &v["meta"]["config"];
    assert_eq!(cfg["n"], "2");
    assert_eq!(cfg["R"], "1.0000000000000000e0,2.0000000000000000e0");
    assert_eq!(cfg["method"], "quadrature");
    let rows = v["rows"].as_array().unwrap();
    let (v1, v2) = (rows[0]["volume"].as_f64().unwrap(), rows[1]["volume"].as_f64().unwrap());
    assert!((v2 / v1 - 64.0).abs() < 64.0 * 5e-3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = std::env::temp_dir().join(format!("sasakian-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# conjugate run\nmodel = hopf\nn = 2\nz = 0\n").unwrap();
    let path = cfg.to_str().unwrap();

    let from_file = run(&["conjugate", "--config", path], &[]);
    let (header, rows) = csv(&from_file);
    assert!((num(&rows[0][column(&header, "t_conj_numeric")]) - PI).abs() < 1e-8);

    let out_file = dir.join("out.csv");
    let out = out_file.to_str().unwrap();
    let overridden = run(&["conjugate", "--config", path, "--z", "2", "--out", out], &[]);
    assert_eq!(overridden.status.code(), Some(0));
    assert!(overridden.stdout.is_empty());
    let first = std::fs::read(&out_file).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.contains("# model=hopf\n"));
    assert!(text.contains("# z=2.0000000000000000e0\n"));
    let expected = 2.0 * PI / 8f64.sqrt();
    let row = text.lines().last().unwrap();
    assert!((num(row.split(',').nth(2).unwrap()) - expected).abs() < 1e-8);

    run(&["conjugate", "--config", path, "--z", "2", "--out", out], &[("SASAKI_THREADS", "2")]);
    assert_eq!(std::fs::read(&out_file).unwrap(), first);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_suites() {
    let out = run(&["verify", "--suite", "riccati"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out);
    assert!(rows.iter().all(|r| r[column(&header, "passed")] == "true"));

    let out = run(&["verify", "--suite", "laplacian"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "check_failed");
}
