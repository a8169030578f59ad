use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anthracnose"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn zero_pressure_gives_flat_theta() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "flat.toml",
        r#"
name = "flat"
mode = "simulate-ode"
t_end = 1.0
dt = 0.01
[model]
theta1 = 0.6
alpha = { kind = "constant", value = 0.0 }
[initial]
theta = 0.3
[control]
kind = "random"
knots = 5
"#,
    );
    let out = tmp.path().join("out");
    let st = bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let theta = column(&csv, "theta");
    assert_eq!(theta.len(), 101);
    assert!(theta.iter().all(|&t| t == 0.3));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for f in report["files"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).exists());
    }
}

#[test]
fn optimize_report_dominates_constant_controls() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig3");
    assert!(bin().args(["run", "fig3", "--out"]).arg(&out).status().unwrap().success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let c = &report["costs"];
    let (j, j0, j1) = (
        c["controlled"].as_f64().unwrap(),
        c["u0"].as_f64().unwrap(),
        c["u1"].as_f64().unwrap(),
    );
    assert!(j <= j0.min(j1));
    assert_eq!(report["diagnostics"]["dominates_constant_controls"], true);
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,theta,v,v_r,u,p,alpha\n"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.toml", "name = \"x\"\nmode = \"simulate-ode\"\nt_end = 1.0\ndt = 0.1\nbogus = 1\n");
    let st = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("bogus"));

    let st = bin().args(["run", "/nonexistent/scenario.toml"]).status().unwrap();
    assert_eq!(st.code(), Some(4));

    // a one-iteration sweep cannot converge
    let sweep = write(
        tmp.path(),
        "sweep.toml",
        r#"
name = "stuck"
mode = "sweep-pde"
t_end = 1.0
dt = 0.05
[grid]
extents = [1.0]
resolution = [4]
diffusion = { kind = "isotropic", value = 0.01 }
[pde]
theta1 = 0.6
theta0 = { kind = "constant", value = 0.5 }
alpha = { kind = "constant", value = 3.0 }
k1 = { kind = "constant", value = 0.1 }
k2 = { kind = "constant", value = 1.0 }
max_iter = 1
"#,
    );
    let st = bin().arg("run").arg(&sweep).arg("--out").arg(tmp.path().join("s")).status().unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn env_var_sets_default_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["run", "riccati-scalar"])
        .env("ANTHRACNOSE_OUT", tmp.path())
        .status()
        .unwrap();
    assert!(st.success());
    assert!(tmp.path().join("riccati-scalar/costs.csv").exists());
}

#[test]
fn listing_and_show() {
    let out = bin().arg("list-scenarios").output().unwrap();
    let names = String::from_utf8(out.stdout).unwrap();
    for n in ["fig1", "fig2", "fig3", "fig4", "pde-1d-demo", "riccati-scalar", "sweep-1d"] {
        assert!(names.lines().any(|l| l == n), "{n} missing");
    }
    let out = bin().args(["show", "sweep-1d"]).output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("mode = \"sweep-pde\""));
}

#[test]
fn batch_isolates_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["batch", "fig1", "fig3", "riccati-scalar", "--threads", "3", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert!(st.success());
    for n in ["fig1", "fig3", "riccati-scalar"] {
        assert!(tmp.path().join(n).join("costs.csv").exists());
    }
    let single = tmp.path().join("single");
    assert!(bin().args(["run", "fig1", "--out"]).arg(&single).status().unwrap().success());
    assert_eq!(
        std::fs::read(single.join("trajectory.csv")).unwrap(),
        std::fs::read(tmp.path().join("fig1/trajectory.csv")).unwrap()
    );
}

#[test]
fn seed_controls_random_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "r.toml",
        r#"
name = "r"
mode = "simulate-pde"
t_end = 0.1
dt = 0.01
[grid]
extents = [1.0, 1.0]
resolution = [4, 3]
diffusion = { kind = "full", tensor = [[0.2, 0.05], [0.05, 0.1]] }
[pde]
theta1 = 0.6
theta0 = { kind = "random", low = 0.0, high = 1.0 }
alpha = { kind = "constant", value = 1.0 }
"#,
    );
    let run = |seed: &str, dir: &str| {
        let d = tmp.path().join(dir);
        assert!(bin().arg("run").arg(&cfg).args(["--seed", seed, "--out"]).arg(&d).status().unwrap().success());
        std::fs::read(d.join("snapshots.csv")).unwrap()
    };
    assert_eq!(run("3", "a"), run("3", "b"));
    assert_ne!(run("3", "a"), run("4", "c"));
}
