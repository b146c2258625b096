use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wavectl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavectl"))
        .args(args)
        .current_dir(dir)
        .env_remove("WAVECTL_OUT")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, lambda: f64) -> String {
    let text = format!("[grid]\nn_interior = 63\n\n[nonlinearity]\nkind = cubic\nlambda = {lambda}\n\n[run]\nseed = 3\noutput = default_out\n");
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn read(dir: &Path, rel: &str) -> String {
    fs::read_to_string(dir.join(rel)).unwrap()
}

#[test]
fn equilibria_counts_and_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let c15 = config(d, "l15.cfg", 15.0);
    let out = wavectl(&["equilibria", "--config", &c15, "--out", "a"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read(d, "a/equilibria.manifest");
    assert!(m.contains("count = 3"));
    assert!(m.contains("morse_indices = 0 0 1"));
    assert!(d.join("a/equilibrium_2.wctl").exists());

    let c5 = config(d, "l5.cfg", 5.0);
    assert!(wavectl(&["equilibria", "--config", &c5, "--out", "b"], d).status.success());
    assert!(read(d, "b/equilibria.manifest").contains("count = 1"));

    fs::write(d.join("bad.cfg"), "[omega]\na = 0.9\nb = 0.4\n").unwrap();
    assert_eq!(wavectl(&["equilibria", "--config", "bad.cfg"], d).status.code(), Some(2));
    fs::write(d.join("crit.cfg"), "[nonlinearity]\nlambda = 9.8696\n").unwrap();
    assert_eq!(wavectl(&["equilibria", "--config", "crit.cfg"], d).status.code(), Some(2));
    assert_eq!(wavectl(&["frobnicate"], d).status.code(), Some(2));
}

#[test]
fn attractor_portrait_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let c15 = config(d, "l15.cfg", 15.0);
    assert!(wavectl(&["attractor", "--config", &c15, "--out", "a"], d).status.success());
    assert!(wavectl(&["attractor", "--config", &c15, "--out", "b"], d).status.success());
    let svg = read(d, "a/attractor.svg");
    assert_eq!(svg, read(d, "b/attractor.svg"));
    assert_eq!(read(d, "a/graph.manifest"), read(d, "b/graph.manifest"));
    assert_eq!(svg.matches("class=\"equilibrium\"").count(), 3);
    assert_eq!(svg.matches("class=\"heteroclinic\"").count(), 2);
    assert!(read(d, "a/graph.manifest").contains("edges = 2"));

    let c5 = config(d, "l5.cfg", 5.0);
    assert!(wavectl(&["attractor", "--config", &c5, "--out", "c"], d).status.success());
    let svg = read(d, "c/attractor.svg");
    assert_eq!(svg.matches("class=\"equilibrium\"").count(), 1);
    assert_eq!(svg.matches("class=\"heteroclinic\"").count(), 0);
}

#[test]
fn control_steers_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let c15 = config(d, "l15.cfg", 15.0);
    let out = wavectl(&["control", "--config", &c15, "--v0", "eq:m0+", "--v1", "eq:m0-", "--out", "a"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read(d, "a/control.manifest");
    assert!(m.contains("pass = true"));
    assert!(m.contains("kinds = velocity_flip reversed_follow velocity_flip damped_follow local_transfer"));
    let svg = read(d, "a/control.svg");
    assert!(svg.contains("class=\"reversed_follow\""));
    assert!(d.join("a/control.sig").exists() && d.join("a/control.wtrj").exists());

    // identity steering from a state file
    assert!(wavectl(&["equilibria", "--config", &c15, "--out", "e"], d).status.success());
    let f = "e/equilibrium_1.wctl";
    let out = wavectl(&["control", "--config", &c15, "--v0", f, "--v1", f, "--out", "b"], d);
    assert!(out.status.success());
    let m = read(d, "b/control.manifest");
    assert!(m.contains("t_total = 0\n") && m.contains("segments = 0"));

    let missing = wavectl(&["control", "--config", &c15, "--v0", "nope.wctl", "--v1", f, "--out", "c"], d);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn survey_table_and_output_override() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let c15 = config(d, "l15.cfg", 15.0);
    let run = |out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_wavectl"))
            .args(["survey", "--config", &c15, "--radius", "1", "--samples", "2"])
            .current_dir(d)
            .env("WAVECTL_OUT", out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read(d, &format!("{out}/survey.csv"))
    };
    let one = run("s1");
    assert_eq!(one, run("s2"));
    assert_eq!(one.lines().count(), 3);
    assert!(one.lines().skip(1).all(|l| l.ends_with(",ok")));
    assert!(read(d, "s1/survey.manifest").contains("failed = 0"));

    let zero = wavectl(&["survey", "--config", &c15, "--radius", "0", "--samples", "2", "--out", "z"], d);
    assert!(zero.status.success());
    for line in read(d, "z/survey.csv").lines().skip(1) {
        assert_eq!(line.split(',').nth(3), Some("0.0000000000000000e0"));
    }
    assert_eq!(
        wavectl(&["survey", "--config", &c15, "--radius", "1", "--samples", "0"], d).status.code(),
        Some(2)
    );
}
