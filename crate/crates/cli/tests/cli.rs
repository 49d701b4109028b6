use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mcla(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcla"))
        .args(args)
        .env("MCLA_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mcla(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mcla_reports_the_optimum() {
    let v: Value = serde_json::from_str(&ok(&["mcla", "--sigma-n", "0.7436"])).unwrap();
    assert!((v["r_hat_opt"].as_f64().unwrap() - 0.6594).abs() < 1e-3);
    assert!((v["c_hat_max"].as_f64().unwrap() - 0.4999).abs() < 1e-3);
    assert!(v["c_true_no_si"].as_f64().unwrap() >= v["c_hat_max"].as_f64().unwrap());
}

#[test]
fn capacity_writes_curves_summary_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cap.csv");
    ok(&["capacity", "--sigma-n", "0.6,0.7436", "--r-hat-steps", "20", "--out", path_str(&out)]);
    let curves = fs::read_to_string(&out).unwrap();
    assert_eq!(curves.lines().count(), 1 + 2 * 20);
    assert!(curves.starts_with("sigma_n,r_hat,alpha,c_hat\n"));
    let summary = fs::read_to_string(dir.path().join("cap.csv.summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("sigma_n,r_hat_opt,alpha_opt,c_hat_max,c_true_no_si"));
    assert!(rows[2].starts_with("0.7436,0.6593"));
    let sidecar: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("cap.csv.config.json")).unwrap()).unwrap();
    assert_eq!(sidecar["command"], "capacity");
    assert_eq!(sidecar["workers"], 2);
    assert_eq!(sidecar["r_hat_steps"], 20);
}

#[test]
fn ber_runs_are_reproducible_and_config_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let alist = dir.path().join("code.alist");
    ok(&["alist-convert", "--regular", "3,6", "--n", "600", "--seed", "3", "--out", path_str(&alist)]);
    let config = dir.path().join("run.json");
    fs::write(&config, r#"{"ebn0": [4.2], "min-frame-errors": 5, "max-frames": 128}"#).unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mcla"))
            .args([
                "ber",
                "--alist",
                path_str(&alist),
                "--mode",
                "mcla,mean-gain",
                "--ebn0",
                "9.0",
                "--max-iter",
                "40",
                "--config",
                path_str(&config),
                "--out",
                path_str(&out),
            ])
            .env("MCLA_WORKERS", workers)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        fs::read_to_string(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "2");
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("mcla,4.2,"));
    assert!(lines[2].starts_with("mean-gain,4.2,"));
    // the sidecar replays the run
    let c = dir.path().join("c.csv");
    ok(&["ber", "--config", path_str(&dir.path().join("a.csv.config.json")), "--out", path_str(&c)]);
    assert_eq!(fs::read_to_string(c).unwrap(), a);
}

#[test]
fn threshold_of_the_regular_code() {
    let out = ok(&[
        "threshold",
        "--regular",
        "3,6",
        "--mode",
        "ideal-si",
        "--sigma-lo",
        "0.6",
        "--sigma-hi",
        "0.8",
        "--tol",
        "1e-3",
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["ebn0_star_db"].as_f64().unwrap() - 3.06).abs() < 0.05);
    assert_eq!(v["llr_mode"]["kind"], "ideal_si");
}

#[test]
fn range_marks_the_optimum_alpha_widest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("range.csv");
    let text = ok(&[
        "range",
        "--alpha",
        "2.5,2.9634,3.5",
        "--sigma-min",
        "0.635",
        "--sigma-max",
        "0.645",
        "--sigma-steps",
        "5",
        "--out",
        path_str(&out),
    ]);
    assert!(text.contains("alpha 2.9634: converges up to sigma_n 0.6425"), "{text}");
    assert!(text.contains("alpha 3.5: converges up to sigma_n 0.64\n"), "{text}");
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1 + 3 * 5);
    assert_eq!(fs::read_to_string(dir.path().join("range.csv.mcla.csv")).unwrap().lines().count(), 1 + 5);
}

#[test]
fn alist_normalization_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.alist");
    let b = dir.path().join("b.alist");
    let ensemble = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../ensembles/code1.json");
    let summary = ok(&["alist-convert", "--ensemble", path_str(&ensemble), "--n", "1000", "--out", path_str(&a)]);
    assert!(summary.starts_with("n 1000 m 511"), "{summary}");
    ok(&["alist-convert", "--input", path_str(&a), "--out", path_str(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn design_writes_distribution_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dd.json");
    let text = ok(&["design", "--dv-max", "3", "--rho", "6", "--sigma-n", "0.6", "--out", path_str(&out)]);
    assert!(text.starts_with("rate "), "{text}");
    let dd: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(dd["rho"][0][0], 6);
    let cert: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("dd.json.certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["certificate"]["sigma_n"], 0.6);
    assert!(cert["rate"].as_f64().unwrap() >= 0.5 - 1e-9);
}

#[test]
fn bad_input_exits_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["capacity", "--fading", "nakagami:2", "--out", path_str(&out)],
        vec!["threshold", "--regular", "3", "--mode", "mcla"],
        vec!["threshold", "--regular", "3,6", "--mode", "fixed-alpha"],
        vec!["mcla"],
        vec!["ber", "--out", path_str(&out)],
    ];
    for args in cases {
        let o = mcla(&args);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "), "{args:?}");
    }
    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"sigma_n": 0.7, "colour": "red"}"#).unwrap();
    let o = mcla(&["mcla", "--config", path_str(&config)]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    fs::write(&config, r#"{"command": "ber"}"#).unwrap();
    assert!(!mcla(&["mcla", "--sigma-n", "0.7", "--config", path_str(&config)]).status.success());
}
