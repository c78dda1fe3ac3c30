use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn boltzlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boltzlab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn empty_scenario_list_writes_manifest_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seed = 3\n");
    let out = tmp.path().join("out");
    let o = boltzlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let entries: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, vec!["manifest.json"]);
    let m = manifest(&out);
    assert_eq!(m["seed"], 3);
    assert_eq!(m["pass"], true);
}

#[test]
fn zero_data_converges_in_one_iteration() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[[scenario]]\nname = \"zero\"\nkind = \"gain_only\"\ninitial = { amplitude = 0.0 }\n",
    );
    let out = tmp.path().join("out");
    let o = boltzlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = &manifest(&out)["scenarios"][0];
    assert_eq!(s["summary"]["iterations"], 1);
    assert_eq!(s["summary"]["converged"], true);
    assert!(s["constants"]["fitted_bobylev_constant"].is_number());
    assert!(out.join("zero/monitor.csv").exists());
}

#[test]
fn schema_errors_exit_2_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seed = 1\n\n[[scenario]]\nname = \"a\"\nkind = \"gain_only\"\nbogus = 3\n");
    let o = boltzlab(&["run", "--config", &cfg, "--out", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("run.toml:6:"), "{err}");
    assert!(!tmp.path().join("out").exists(), "nothing computed before validation");

    let cfg = write_config(
        tmp.path(),
        "[[scenario]]\nname = \"a\"\nkind = \"verify_estimate\"\nestimate = \"strichartz\"\npair = [2.0, 6.0]\n",
    );
    let o = boltzlab(&["run", "--config", &cfg, "--out", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.toml:1:"));
}

#[test]
fn failed_certificate_exits_1_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[[scenario]]\nname = \"short\"\nkind = \"gain_only\"\nrule = { n_theta = 4, n_phi = 8 }\n\
         solver = { max_iters = 1, iter_tol = 1e-12, dt = 0.5, T = 1.0 }\ninitial = { amplitude = 0.01 }\n",
    );
    let out = tmp.path().join("out");
    let o = boltzlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("short: picard.converged"));
    assert_eq!(manifest(&out)["pass"], false);
}

#[test]
fn verify_replays_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = boltzlab(&["verify", "convolution", "--samples", "50", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["manifest.json", "convolution/convolution.csv", "convolution/convolution.report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let rows = std::fs::read_to_string(a.join("convolution/convolution.csv")).unwrap();
    assert_eq!(rows.lines().count(), 51);
}

#[test]
fn sweep_table_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "seed = 5\n[[scenario]]\nname = \"amp\"\nkind = \"sweep\"\nrule = { n_theta = 4, n_phi = 8 }\n\
         solver = { max_iters = 30, iter_tol = 1e-10, dt = 0.5, T = 1.0 }\namplitudes = [0.0, 0.001, 0.01]\n",
    );
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = boltzlab(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("amp/sweep.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let text = String::from_utf8(a).unwrap();
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("0.0,true,1,"), "{first}");
}
