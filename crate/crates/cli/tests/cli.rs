use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ispval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ispval")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn finch_prints_statistic_and_estimates() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("finch");
    let o = ispval(&["finch", "--n", "10000", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("t(X) = 53.1"), "{s}");
    assert!(s.contains("p_tilde =") && s.contains("p_tilde_star =") && s.contains("se "), "{s}");
    let m = manifest(&out);
    assert_eq!(m["seed"], 7);
    assert_eq!(m["status"], "complete");
}

#[test]
fn lemma_instances_all_hold() {
    let tmp = TempDir::new().unwrap();
    let o = ispval(&["lemma1", "--instances", "10000", "--seed", "1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("10000/10000 hold"), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_one_with_help() {
    for args in [&["finch", "--bogus"][..], &["no-such-command"], &[], &["finch", "--threads", "0"]] {
        let o = ispval(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains("Usage:"), "{args:?}");
    }
    let o = ispval(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("gaussian-cdf"));
}

#[test]
fn pvalue_mode_matches_hand_evaluation() {
    let tmp = TempDir::new().unwrap();
    // two of four draws exceed: (1 + 2) / (1 + 4)
    let f = write(&tmp, "a.csv", "role,stat,log_w\nobserved,1,0\ndraw,2,0\ndraw,0,0\ndraw,3,0\ndraw,-1,0\n");
    let o = ispval(&["pvalue", &f, "--estimator", "p_tilde_star"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((v["estimate"].as_f64().unwrap() - 0.6).abs() < 1e-15);
    assert_eq!(v["kind"], "p_tilde_star");
    assert_eq!(v["n"], 4);

    let f = write(&tmp, "b.csv", "role,stat,log_w\nobserved,5,0.25\n");
    let o = ispval(&["pvalue", &f, "--estimator", "p_hat_star"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((v["estimate"].as_f64().unwrap() - 0.25f64.exp()).abs() < 1e-12);
}

#[test]
fn pvalue_mode_refuses_unnormalized_unbiased_estimators() {
    let tmp = TempDir::new().unwrap();
    let f = write(&tmp, "c.csv", "# normalized=false\nrole,stat,log_w\nobserved,1,0\ndraw,2,0.3\n");
    for est in ["p_hat", "p_hat_star", "q_hat"] {
        let o = ispval(&["pvalue", &f, "--estimator", est]);
        assert_eq!(o.status.code(), Some(2), "{est}");
        assert!(stderr(&o).contains("normalized"));
    }
    assert_eq!(ispval(&["pvalue", &f, "--estimator", "p_tilde"]).status.code(), Some(0));
}

#[test]
fn pvalue_schema_errors_name_the_line() {
    let tmp = TempDir::new().unwrap();
    let f = write(&tmp, "d.csv", "role,stat,log_w\nobserved,1,0\ndraw,2,0\ndraw,abc,0\n");
    let o = ispval(&["pvalue", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn runtime_failures_exit_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(ispval(&["multitest", "--set", "n_test=5", "--out", out]).status.code(), Some(2));
    assert_eq!(ispval(&["finch", "--n", "0", "--out", out]).status.code(), Some(2));
}

#[test]
fn malformed_settings_are_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    let cfg = write(&tmp, "bad.conf", "this line has no equals sign\n");
    let o = ispval(&["finch", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"));
    assert_eq!(ispval(&["finch", "--set", "n", "--out", out]).status.code(), Some(1));
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(&tmp, "mt.conf", "# small run\nn_tests = 40\nfalse_nulls = 4\nn_grid = 10, 50\n");
    let out = tmp.path().join("mt");
    let o = ispval(&["multitest", "--config", &cfg, "--replications", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["replications"], 2);
    assert_eq!(m["n_grid"], serde_json::json!([10, 50]));
    assert_eq!(m["parameters"]["n_tests"], "40");
}

#[test]
fn outputs_are_thread_independent_and_listed_in_the_manifest() {
    let tmp = TempDir::new().unwrap();
    let runs: [(&str, &[&str]); 3] = [
        ("multitest", &["--set", "n_tests=60", "--replications", "2"]),
        ("gaussian-cdf", &["--n", "10", "--replications", "300"]),
        ("rasch-ci", &["--set", "rows=8", "--set", "cols=4", "--n", "20", "--replications", "6"]),
    ];
    for (cmd, extra) in runs {
        let mut dirs = Vec::new();
        for threads in ["1", "4"] {
            let out = tmp.path().join(format!("{cmd}-{threads}"));
            let mut args = vec![cmd, "--seed", "11", "--threads", threads, "--out", out.to_str().unwrap()];
            args.extend_from_slice(extra);
            let o = ispval(&args);
            assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
            dirs.push(out);
        }
        let m = manifest(&dirs[0]);
        let listed: Vec<String> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
        let mut on_disk: Vec<String> = fs::read_dir(&dirs[0])
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n != "manifest.json")
            .collect();
        on_disk.sort();
        let mut sorted = listed.clone();
        sorted.sort();
        assert_eq!(sorted, on_disk, "{cmd}");
        for name in listed {
            let a = fs::read(dirs[0].join(&name)).unwrap();
            let b = fs::read(dirs[1].join(&name)).unwrap();
            assert_eq!(a, b, "{cmd}/{name} differs between thread counts");
        }
    }
}
