use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bicons(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bicons"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_writes_csv_to_stdout() {
    let out = bicons(&["solve", "--model", "s3", "--k0", "1", "--dk0", "1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# model = s3\n"), "{text}");
    assert!(text.contains("\nu,k,kp,C_drift\n"));
    assert!(text.contains("# C = 1.8777777777777779e1\n"));
}

#[test]
fn negative_values_parse_as_numbers() {
    let out = bicons(&[
        "solve", "--model", "h3", "--k0", "0.25", "--dk0", "-0.2", "--span", "-0.5,0.5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn bad_input_exits_with_2() {
    for args in [
        &["solve", "--model", "s3", "--k0", "-1"][..],
        &["solve", "--model", "s4"],
        &["solve", "--model", "s3", "--span", "0.5,1"],
        &["verify", "--model", "s3", "--branch", "parabolic"],
        &[
            "verify",
            "--model",
            "h3",
            "--k0",
            "1",
            "--dk0",
            "1",
            "--branch",
            "parabolic",
        ],
        &["surface", "--model", "r3"],
        &["surface", "--model", "r3", "--out", "mesh.stl"],
        &["sweep", "--model", "r3", "--values", "1,2"],
        &["solve", "--config", "/nonexistent/config.toml"],
        &["solve", "--model", "s3", "--bogus"],
    ] {
        let out = bicons(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn failed_verification_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = bicons(&[
        "verify",
        "--model",
        "s3",
        "--nu",
        "8",
        "--nv",
        "8",
        "--tol-profile",
        "r3",
        "--report",
        path(&report),
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let json = fs::read_to_string(&report).unwrap();
    assert!(json.contains("\"pass\": false"));
}

#[test]
fn numerical_failure_exits_with_3() {
    let out = bicons(&[
        "verify",
        "--model",
        "s3",
        "--nu",
        "4",
        "--nv",
        "4",
        "--fd-step",
        "0.5",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "model = \"s3\"\nnu = 6\nnv = 5\n").unwrap();
    let report = dir.path().join("out/report.json");
    let out = bicons(&[
        "verify",
        "--config",
        path(&cfg),
        "--nu",
        "7",
        "--report",
        path(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = fs::read_to_string(&report).unwrap();
    assert!(json.contains("\"nu\": 7"), "{json}");
    assert!(json.contains("\"nv\": 5"), "{json}");

    fs::write(&cfg, "model = \"s3\"\nresolution = 6\n").unwrap();
    assert_eq!(code(&bicons(&["solve", "--config", path(&cfg)])), 2);
}

#[test]
fn surface_writes_mesh_sidecar_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("h3.obj");
    let out = bicons(&[
        "surface",
        "--model",
        "h3",
        "--k0",
        "0.25",
        "--dk0",
        "0.2",
        "--nu",
        "10",
        "--nv",
        "10",
        "--out",
        path(&mesh),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(mesh.exists());
    assert!(mesh.with_extension("csv").exists());
    let json = fs::read_to_string(mesh.with_extension("json")).unwrap();
    assert!(json.contains("\"pass\": true"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let json = dir.path().join(format!("{tag}.json"));
        let a = bicons(&[
            "profile",
            "--model",
            "h3",
            "--k0",
            "1",
            "--dk0",
            "1",
            "--out",
            path(&csv),
        ]);
        let b = bicons(&[
            "verify",
            "--model",
            "s3",
            "--nu",
            "12",
            "--nv",
            "12",
            "--report",
            path(&json),
        ]);
        assert_eq!((code(&a), code(&b)), (0, 0));
        (fs::read(csv).unwrap(), fs::read(json).unwrap())
    };
    assert_eq!(run("first"), run("second"));
}

#[test]
fn sweep_keeps_going_past_an_infeasible_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = bicons(&[
        "sweep",
        "--model",
        "r3",
        "--nu",
        "8",
        "--nv",
        "8",
        "--values",
        "1,-1,2",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4, "{summary}");
    assert!(rows[0].starts_with("C,"));
    assert!(dir.path().join("run_000.json").exists());
    assert!(!dir.path().join("run_001.json").exists());
    assert!(dir.path().join("u_rho_002.csv").exists());
    assert!(stderr(&out).contains("error"));
}
