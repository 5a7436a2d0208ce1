use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn gchsh(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gchsh"));
    cmd.args(args).arg("--quiet").env_remove("GCHSH_TABLE");
    cmd
}

fn run(args: &[&str]) -> Output {
    gchsh(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// An 8-point table built once and shared by the tests.
fn small_table() -> &'static Path {
    static TABLE: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    let (_, path) = TABLE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.json");
        let o = run(&[
            "--table",
            path.to_str().unwrap(),
            "table",
            "build",
            "--theta-points",
            "8",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (dir, path)
    });
    path
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let t = t.to_str().unwrap();
    for args in [
        vec!["--table", t, "bound", "--theta", "pi/4", "--score", "2.9"],
        vec!["--table", t, "bound", "--theta", "banana", "--score", "2.5"],
        vec!["--table", t, "trivial-score", "--theta", "pi/3"],
        vec!["--table", t, "mesh", "--delta", "-0.1", "--out", "m.csv"],
    ] {
        let o = run(&args);
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert!(!Path::new(t).exists());
}

#[test]
fn missing_entries_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let t = t.to_str().unwrap();
    let o = run(&["--table", t, "bound", "--theta", "pi/8", "--score", "2.7"]);
    assert_eq!(code(&o), 3);
    let o = run(&[
        "--table",
        t,
        "select",
        "--x",
        "1.5",
        "--y",
        "1.2",
        "--theta-points",
        "4",
    ]);
    assert_eq!(code(&o), 3);
    let o = run(&[
        "--table",
        small_table().to_str().unwrap(),
        "select",
        "--x",
        "1.5",
        "--y",
        "1.2",
        "--theta-points",
        "9",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn outside_region_exits_4() {
    let t = small_table().to_str().unwrap();
    for (x, y) in [("1.0", "0.9"), ("2.0", "1.0"), ("2.5", "0.0")] {
        let o = run(&[
            "--table",
            t,
            "select",
            "--x",
            x,
            "--y",
            y,
            "--theta-points",
            "8",
        ]);
        assert_eq!(code(&o), 4, "({x}, {y})");
    }
}

#[test]
fn unwritable_paths_exit_5() {
    let t = small_table().to_str().unwrap();
    let o = run(&[
        "--table",
        t,
        "mesh",
        "--delta",
        "0.5",
        "--out",
        "/nonexistent/dir/m.csv",
        "--theta-points",
        "8",
    ]);
    assert_eq!(code(&o), 5);
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--table",
        dir.path().to_str().unwrap(),
        "trivial-score",
        "--theta",
        "pi/4",
    ]);
    assert_ne!(code(&o), 0);
}

#[test]
fn bound_text_and_json_agree() {
    let t = small_table().to_str().unwrap();
    let o = run(&["--table", t, "bound", "--theta", "pi/4", "--score", "2.5"]);
    assert_eq!(code(&o), 0);
    let text: f64 = stdout(&o).trim().parse().unwrap();
    let o = run(&[
        "--json", "--table", t, "bound", "--theta", "pi/4", "--score", "2.5",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let f = v["fidelity"].as_f64().unwrap();
    assert!((text - f).abs() < 1e-11);
    assert!(f > 0.5 && f < 1.0);
    let bt = v["beta_trivial"].as_f64().unwrap();
    assert!((bt - 2.0 * (8.0 + 7.0 * 2f64.sqrt()) / 17.0).abs() < 0.01);
}

#[test]
fn selection_is_deterministic_and_symmetric() {
    let t = small_table().to_str().unwrap();
    let pick = |x: &str, y: &str| {
        let o = run(&[
            "--json",
            "--table",
            t,
            "select",
            "--x",
            x,
            "--y",
            y,
            "--theta-points",
            "8",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_str::<serde_json::Value>(&stdout(&o)).unwrap()
    };
    let a = pick("1.9", "0.6");
    let b = pick("1.9", "0.6");
    assert_eq!(a, b);
    let c = pick("-0.6", "1.9");
    assert_eq!(a["fidelity_bound"], c["fidelity_bound"]);
    assert_eq!(c["symmetries"], serde_json::json!(["flip-x", "swap-xy"]));
}

#[test]
fn mesh_file_layout() {
    let t = small_table().to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mesh.csv");
    let o = run(&[
        "--table",
        t,
        "mesh",
        "--delta",
        "0.25",
        "--out",
        out.to_str().unwrap(),
        "--theta-points",
        "8",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let body = std::fs::read_to_string(&out).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("X,Y,fidelity,theta"));
    // grid points with Y <= X, X + Y >= 2 and X² + Y² <= 4
    let mut expected = 0;
    for i in 0..=8 {
        for j in 0..=i {
            let (x, y) = (0.25 * i as f64, 0.25 * j as f64);
            if x + y >= 2.0 - 1e-12 && x * x + y * y <= 4.0 + 1e-12 {
                expected += 1;
            }
        }
    }
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), expected);
    for r in rows {
        let f: Vec<f64> = r.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(f[1] <= f[0] && (0.5..=1.0).contains(&f[2]));
    }
}

#[test]
fn table_list_shows_every_entry() {
    let t = small_table().to_str().unwrap();
    let o = run(&["--json", "--table", t, "table", "list"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 8);
    for w in rows.windows(2) {
        assert!(w[0]["theta"].as_f64() < w[1]["theta"].as_f64());
    }
    let o = run(&["--table", t, "table", "list"]);
    assert_eq!(stdout(&o).lines().count(), 9);
}

#[test]
fn table_location_from_env_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let from_env = dir.path().join("env.json");
    let from_cfg = dir.path().join("cfg.json");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!("seed = 3\ntable_path = {:?}\n", from_cfg.to_str().unwrap()),
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = run(&["--config", cfg, "trivial-score", "--theta", "pi/4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(from_cfg.exists());

    let o = gchsh(&["--config", cfg, "trivial-score", "--theta", "pi/4"])
        .env("GCHSH_TABLE", &from_env)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(from_env.exists());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    let o = run(&["--config", bad.to_str().unwrap(), "table", "list"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn seed_reproduces_trivial_score() {
    let dir = tempfile::tempdir().unwrap();
    let score = |name: &str| {
        let t = dir.path().join(name);
        let o = run(&[
            "--json",
            "--seed",
            "11",
            "--table",
            t.to_str().unwrap(),
            "trivial-score",
            "--theta",
            "3pi/16",
        ]);
        assert_eq!(code(&o), 0);
        serde_json::from_str::<serde_json::Value>(&stdout(&o)).unwrap()
    };
    assert_eq!(score("a.json"), score("b.json"));
}
