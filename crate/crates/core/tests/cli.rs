use std::path::Path;
use std::process::{Command, Output};

use unavoidable::harness::{RunConfig, RunManifest, REPORT_HEADER};

const CONFIG: &str = r#"{
  "format_version": "1",
  "domain": {"center": [0.0, 0.0], "radius": 1.0},
  "constants": {"alpha": 1.5},
  "seed": 4,
  "profile": {"kind": "constant", "c": 0.3},
  "shells": {"a": 0.5, "shells": 3},
  "criteria": {"grid_points": 8, "max_level": 9},
  "sim": {"h": 0.01, "boundary_eps": 0.001, "max_steps": 100000, "n_traj": 300, "adaptive": true}
}"#;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unavoidable")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_writes_bubbles_and_shell_radii() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", CONFIG);
    let out = tmp.path().join("run");
    let o = cli(&["generate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let shells = std::fs::read_to_string(out.join("shells.csv")).unwrap();
    let q: f64 = 0.5 / 1.5;
    for (i, line) in shells.lines().skip(1).enumerate() {
        let t: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        let expect = 1.0 - 0.5 * q.powi(i as i32 + 1);
        assert!((t - expect).abs() < 1e-15, "shell {i}: {t} vs {expect}");
    }
    let bubbles = std::fs::read_to_string(out.join("bubbles.csv")).unwrap();
    let m = RunManifest::read(&out).unwrap();
    let count = m.sections["generate"]["bubbles"].as_u64().unwrap() as usize;
    assert_eq!(bubbles.lines().count(), count + 1);
    assert!(out.join("timing.json").exists());
}

#[test]
fn missing_profile_exits_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = CONFIG.replace(r#""profile": {"kind": "constant", "c": 0.3},"#, "");
    let cfg = write_config(tmp.path(), "c.json", &text);
    let o = cli(&["generate", "--config", &cfg, "--out", tmp.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("profile"));

    let bad = write_config(tmp.path(), "bad.json", &CONFIG.replace("\"seed\": 4", "\"seed\": 4, \"extra\": 1"));
    let o = cli(&["generate", "--config", &bad, "--out", tmp.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", CONFIG);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (dir, seed) in [(&a, "4"), (&b, "5")] {
        let o = cli(&["simulate", "--config", &cfg, "--out", dir.to_str().unwrap(), "--seed", seed]);
        assert!(o.status.success());
    }
    let ma = RunManifest::read(&a).unwrap();
    let mb = RunManifest::read(&b).unwrap();
    assert_eq!(ma.seed, 4);
    assert_eq!(mb.seed, 5);
    assert_eq!(ma.config_hash, RunConfig::from_json(CONFIG).unwrap().hash());
    assert_ne!(ma.config_hash, mb.config_hash);
}

#[test]
fn report_combines_runs_and_skips_bad_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", CONFIG);
    let run = tmp.path().join("run");
    let r = run.to_str().unwrap();
    for cmd in ["criteria", "simulate"] {
        assert!(cli(&[cmd, "--config", &cfg, "--out", r]).status.success());
    }
    let stale = tmp.path().join("stale");
    std::fs::create_dir(&stale).unwrap();
    let text = std::fs::read_to_string(run.join("manifest.json"))
        .unwrap()
        .replace("\"format_version\": \"1\"", "\"format_version\": \"0\"");
    std::fs::write(stale.join("manifest.json"), text).unwrap();

    let report = tmp.path().join("out/report.csv");
    let rep = report.to_str().unwrap();
    let missing = tmp.path().join("missing");
    let o = cli(&["report", r, stale.to_str().unwrap(), missing.to_str().unwrap(), "--out", rep]);
    assert!(o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert_eq!(stderr.matches("warning").count(), 2, "{stderr}");
    let first = std::fs::read(&report).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], REPORT_HEADER.join(","));
    assert_eq!(lines.len(), 2);
    assert!(lines[1].contains("constant,0.3"));
    assert!(lines[1].contains("Unavoidable"));

    assert!(cli(&["report", r, stale.to_str().unwrap(), missing.to_str().unwrap(), "--out", rep]).status.success());
    assert_eq!(std::fs::read(&report).unwrap(), first);

    assert!(cli(&["report", "--out", rep]).status.success());
    assert_eq!(std::fs::read_to_string(&report).unwrap().trim_end(), REPORT_HEADER.join(","));
}

#[test]
fn csv_format_and_whitney_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", CONFIG);
    let out = tmp.path().join("run");
    let o = out.to_str().unwrap();
    for cmd in ["criteria", "simulate"] {
        assert!(cli(&[cmd, "--config", &cfg, "--out", o, "--format", "csv"]).status.success());
    }
    assert!(cli(&["whitney", "--config", &cfg, "--out", o]).status.success());
    let verdicts = std::fs::read_to_string(out.join("verdicts.csv")).unwrap();
    assert_eq!(verdicts.lines().count(), 9);
    assert!(verdicts.lines().skip(1).all(|l| l.contains("Divergent")));
    let est = std::fs::read_to_string(out.join("estimate.csv")).unwrap();
    assert!(est.starts_with("p_hat,"));
    assert!(out.join("whitney.csv").exists());
    let m = RunManifest::read(&out).unwrap();
    assert_eq!(m.sections["whitney"]["sandwich_passed"], true);
    for s in ["criteria", "simulate", "whitney"] {
        assert!(m.sections.contains_key(s), "{s}");
    }
}
