//! Black-box checks of the binary surface: exit codes, error records, and
//! the documented CSV shapes.

use std::path::Path;
use std::process::Command;

fn cdlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cdlab"))
        .args(args)
        .output()
        .expect("running cdlab binary")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_accepts_good_and_rejects_bad() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(
        tmp.path(),
        "good.toml",
        "[model]\nlambda0 = 1.0\nvalency = 2.0\nrank = 2\nmu = [{ i = 0, j = 1, re = 1.0 }]\n",
    );
    let res = cdlab(&["validate", "--config", &good]);
    assert!(res.status.success());

    let bad = write_config(
        tmp.path(),
        "bad.toml",
        "[model]\nlambda0 = -2.0\nvalency = 2.0\nrank = 2\n",
    );
    let res = cdlab(&["validate", "--config", &bad]);
    assert_eq!(res.status.code(), Some(2));

    let res = cdlab(&["validate", "--config", "/nonexistent/x.toml"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn classify_marks_forced_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "[model]\nlambda0 = 1.0\nvalency = 0.9\nrank = 3\n",
    );
    let out = tmp.path().join("out");
    let res = cdlab(&["classify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(out.join("classify.csv")).unwrap();
    assert!(text.contains("entry,0,2,forced-zero"), "{text}");
    assert!(text.contains("entry,0,1,bounded-nonzero"));
    assert!(text.contains("regime,,,below-one"));
    assert!(text.trim_end().ends_with("status,ok"));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn geometry_line_bundle_curvature_at_origin() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "g.toml",
        "[model]\nlambda0 = 2.0\nvalency = 2.0\nrank = 1\ntrunc = 128\n\n[grid]\nradii = [0.0, 0.3]\nangles = 4\nstep = 1e-4\n",
    );
    let out = tmp.path().join("out");
    let res = cdlab(&["geometry", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = std::fs::read_to_string(out.join("geometry.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let curv_idx = header.iter().position(|h| *h == "curv_00_re").unwrap();
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let curv: f64 = first[curv_idx].parse().unwrap();
    assert!((curv + 2.0).abs() < 1e-9, "curvature at 0 was {curv}");
}

#[test]
fn structured_model_errors_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    // a coefficient on a forced-zero slot
    let cfg = write_config(
        tmp.path(),
        "u.toml",
        "[model]\nlambda0 = 1.0\nvalency = 0.5\nrank = 3\ntrunc = 32\nmu = [{ i = 0, j = 2, re = 1.0 }]\n",
    );
    let out = tmp.path().join("out");
    let res = cdlab(&["assemble", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let text = std::fs::read_to_string(out.join("assemble.csv")).unwrap();
    assert!(text.contains("status,error,unbounded-entry"), "{text}");

    // elimination below the valency threshold
    let cfg = write_config(
        tmp.path(),
        "v.toml",
        "[model]\nlambda0 = 1.0\nvalency = 1.5\nrank = 2\ntrunc = 32\nmu = [{ i = 0, j = 1, re = 1.0 }]\n",
    );
    let out2 = tmp.path().join("out2");
    let res = cdlab(&["reduce", "--config", &cfg, "--out", out2.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let text = std::fs::read_to_string(out2.join("reduce.csv")).unwrap();
    assert!(text.contains("status,error,valency-too-small"), "{text}");
}

#[test]
fn command_outputs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "r.toml",
        "[model]\nlambda0 = 1.0\nvalency = 2.0\nrank = 2\ntrunc = 128\nmu = [{ i = 0, j = 1, re = 1.0, im = 0.5 }]\n\n[grid]\nradii = [0.2, 0.4]\nangles = 4\nstep = 1e-4\n",
    );
    for cmd in ["classify", "assemble", "geometry"] {
        let o1 = tmp.path().join(format!("{cmd}_1"));
        let o2 = tmp.path().join(format!("{cmd}_2"));
        for o in [&o1, &o2] {
            let res = cdlab(&[cmd, "--config", &cfg, "--out", o.to_str().unwrap()]);
            assert!(res.status.success(), "{cmd}");
        }
        let f1 = std::fs::read(o1.join(format!("{cmd}.csv"))).unwrap();
        let f2 = std::fs::read(o2.join(format!("{cmd}.csv"))).unwrap();
        assert_eq!(f1, f2, "{cmd} output differs between runs");
    }
}
