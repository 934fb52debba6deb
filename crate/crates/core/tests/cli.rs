use std::fs;
use std::path::Path;
use std::process::Command;

fn emlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emlab"))
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(
        &p,
        "seed = 5\n\n[grid]\npoints = 16\nbox_length = 50.0\n\n[solver]\nend_time = 6.0\noutput_stride = 2\n",
    )
    .unwrap();
    p
}

#[test]
fn simulate_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let st = emlab()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--ci")
        .status()
        .unwrap();
    assert!(st.success());
    for f in ["timeseries.csv", "summary.json", "resolved_config.toml", "plot.py"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let header = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let header = header.lines().next().unwrap();
    for col in ["time", "gauss_residual", "divB_residual", "E_3", "D_3", "F_0", "G_0"] {
        assert!(header.split(',').any(|c| c == col), "{col} missing from {header}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 5);
    assert_eq!(summary["passed"], true);
    assert!(summary["run"]["horizon"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let st = emlab()
            .args(["simulate", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        fs::read(out.join("timeseries.csv")).unwrap()
    };
    let a = run("a", "9");
    let b = run("b", "9");
    let c = run("c", "10");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let first = dir.path().join("first");
    assert!(emlab()
        .args(["simulate", "--seed", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&first)
        .status()
        .unwrap()
        .success());
    let second = dir.path().join("second");
    assert!(emlab()
        .args(["simulate", "--config"])
        .arg(first.join("resolved_config.toml"))
        .arg("--out")
        .arg(&second)
        .status()
        .unwrap()
        .success());
    assert_eq!(
        fs::read(first.join("timeseries.csv")).unwrap(),
        fs::read(second.join("timeseries.csv")).unwrap()
    );
}

#[test]
fn fit_reads_a_csv_and_ci_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    let mut body = String::from("time,x\n");
    for i in 0..30 {
        let t = i as f64;
        body += &format!("{t},{}\n", (1.0 + t).powf(-1.5));
    }
    fs::write(&csv, body).unwrap();
    let cfg = dir.path().join("fit.toml");
    fs::write(&cfg, "[fit]\nwindow = [0.0, 100.0]\ntargets = { x = -1.0 }\n").unwrap();
    let out = dir.path().join("out");
    let st = emlab().arg("fit").arg(&csv).arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let fits: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fit_report.json")).unwrap()).unwrap();
    assert!((fits[0]["slope"].as_f64().unwrap() + 1.5).abs() < 1e-12);
    let st = emlab().arg("fit").arg(&csv).arg("--config").arg(&cfg).arg("--out").arg(&out).arg("--ci").status().unwrap();
    assert_eq!(st.code(), Some(1));
}

#[test]
fn bad_input_exits_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[solver]\nsteps = 10\nwobble = 1\n").unwrap();
    let o = emlab().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("wobble") && err.contains("line 3"), "{err}");

    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "time,x\n0,1\n1,two\n").unwrap();
    let o = emlab().arg("fit").arg(&csv).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed CSV"));
}

#[test]
fn linear_subcommand_reports_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lin.toml");
    fs::write(
        &cfg,
        "[constants]\nb_infty = [0.0, 0.0, 0.0]\n\n[data_class]\np = 1.2\n\n[linear]\nk_list = [0]\nquantities = [\"full_state\"]\ninclude_b = false\nt_max = 200.0\nwindow = [20.0, 200.0]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let st = emlab().arg("linear").arg("--config").arg(&cfg).arg("--out").arg(&out).arg("--ci").status().unwrap();
    assert!(st.success());
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("decay_report.json")).unwrap()).unwrap();
    let row = &rep["rows"][0];
    assert_eq!(row["quantity"], "full_state");
    assert!((row["target"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert!(out.join("linear_series.csv").is_file());
}
