use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dacqc::cli::run;
use dacqc::formats::{Manifest, ModelExport};

fn dacqc(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["dacqc".to_string(), "--out".to_string(), out.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    run(argv)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

const RUNS: &[&[&str]] = &[
    &["build-model", "--model", "xxz", "--L", "2", "--random-couplings"],
    &["agp", "--model", "ising", "--L", "2", "--l", "2", "--M", "5"],
    &["synth", "--model", "ising", "--L", "2", "--l", "2", "--method", "pf"],
    &["synth", "--model", "xxz", "--L", "2", "--l", "1", "--method", "aab"],
    &["depth-report", "--model", "ising", "--L", "2", "--l", "2"],
    &["error-scaling", "--model", "ising", "--L", "2", "--decomp", "u1_gc", "--per-decade", "2"],
    &["fidelity", "--model", "ising", "--L", "2", "--M", "4,8", "--method", "aab", "--shots", "200", "--reference"],
    &["table-check", "--model", "ising", "--sizes", "2"],
];

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for args in RUNS {
        assert_eq!(dacqc(a.path(), args), 0, "{args:?}");
        let mut with_threads = vec!["--threads", "3"];
        with_threads.extend_from_slice(args);
        assert_eq!(dacqc(b.path(), &with_threads), 0, "{args:?}");
    }
    let sa = snapshot(a.path());
    assert_eq!(sa, snapshot(b.path()));
    assert!(sa.contains_key("model.json"));
    assert!(sa.contains_key("fidelity_ising_aab_l1_h_first_M8.csv"));
    assert!(sa.keys().filter(|k| k.ends_with(".manifest.json")).count() >= 3);
}

#[test]
fn exported_model_rebuilds() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(dacqc(d.path(), &["build-model", "--model", "ising", "--L", "3", "--seed", "11"]), 0);
    let e: ModelExport = serde_json::from_slice(&fs::read(d.path().join("model.json")).unwrap()).unwrap();
    let m = e.instance().unwrap();
    assert_eq!(m.seed, 11);
    assert_eq!(m.n_qubits(), 9);
}

#[test]
fn config_file_and_flag_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    fs::write(&cfg, r#"{"kind":"xxz","L":2,"J":-1,"delta":0.25,"schedule":{"T":0.5,"M":3}}"#).unwrap();
    let out = d.path().join("out");
    let c = cfg.display().to_string();
    assert_eq!(dacqc(&out, &["fidelity", "--config", &c, "--delta", "0.75", "--M", "3"]), 0);
    let man: Manifest =
        serde_json::from_slice(&fs::read(out.join("fidelity_xxz_pf_l1_h_first.manifest.json")).unwrap()).unwrap();
    assert_eq!(man.config["model"]["delta"], 0.75);
    assert_eq!(man.config["model"]["J"], -1.0);
    assert_eq!(man.config_hash.len(), 64);
    let csv = fs::read_to_string(out.join("fidelity_xxz_pf_l1_h_first_M3.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("step,t,lambda,fidelity,magnetization\n"));
}

#[test]
fn scaling_manifest_carries_fit() {
    let d = tempfile::tempdir().unwrap();
    let args = ["error-scaling", "--model", "xxz", "--L", "2", "--decomp", "aab_u1", "--per-decade", "2"];
    assert_eq!(dacqc(d.path(), &args), 0);
    let man: Manifest =
        serde_json::from_slice(&fs::read(d.path().join("error_scaling_xxz_aab_u1.manifest.json")).unwrap()).unwrap();
    // exact synthesis: nothing to fit
    assert_eq!(man.results["exact"], true);
    assert!(man.results["fit"].is_null());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(dacqc(p, &["--help"]), 0);
    assert_eq!(dacqc(p, &["no-such-command"]), 1);
    assert_eq!(dacqc(p, &["agp", "--bogus"]), 1);
    assert_eq!(dacqc(p, &["agp", "--model", "heisenberg"]), 1);
    assert_eq!(dacqc(p, &["agp", "--L", "1"]), 1);
    assert_eq!(dacqc(p, &["fidelity", "--L", "2", "--M", "0"]), 1);
    assert_eq!(dacqc(p, &["synth", "--model", "xxz", "--L", "2", "--family", "zz"]), 1);
    assert_eq!(dacqc(p, &["fidelity", "--model", "xxz", "--L", "2", "--shots", "10"]), 1);
    assert_eq!(dacqc(p, &["agp", "--config", "/nonexistent/cfg.json"]), 1);
    // 16 qubits exceed the dense-matrix cap
    assert_eq!(dacqc(p, &["error-scaling", "--L", "4"]), 2);
    assert_eq!(dacqc(p, &["fidelity", "--L", "4", "--state-cap", "9"]), 2);
}

#[test]
fn strict_table_check_fails_on_discrepancy() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(dacqc(d.path(), &["table-check", "--model", "ising", "--sizes", "2", "--strict"]), 0);
    assert_eq!(dacqc(d.path(), &["table-check", "--model", "xxz", "--sizes", "2", "--strict"]), 1);
}
