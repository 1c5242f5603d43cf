use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn corrsync(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrsync"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) {
    let out = corrsync(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

const SYNC: [&str; 14] = [
    "sync", "--omega1", "1.1", "--omega2", "0.9", "--j", "0.05", "--gamma", "0.5", "--xi-values", "-0.5,0,0.5", "--n-traj",
    "60", "--t-final=8",
];

#[test]
fn dephase_schema_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        &["dephase", "--sigma", "1", "--gamma", "0.5", "--xi", "0", "--t-final", "10", "--dt", "0.01", "--output", "run"],
        tmp.path(),
    );
    let csv = fs::read_to_string(tmp.path().join("run/dephase.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,gamma_plus,gamma_minus,coh_0110,purity_phi,purity_psi"));
    assert_eq!(lines.count(), 1001);
    let m = manifest(&tmp.path().join("run"));
    assert_eq!(m["scenario"], "dephase");
    assert_eq!(m["config"]["delta"], 0.0);
    assert!(m["engine_version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["outputs"][0], "dephase.csv");
}

#[test]
fn seeded_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str, seed: &str| {
        let mut args = SYNC.to_vec();
        args.extend(["--seed", seed, "--output", dir]);
        ok(&args, tmp.path());
        fs::read(tmp.path().join(dir).join("sync.csv")).unwrap()
    };
    let a = run("a", "11");
    assert_eq!(a, run("b", "11"));
    assert_ne!(a, run("c", "12"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("xi,order_param,stderr,n_excluded\n"));
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    for (dir, threads) in [("one", "1"), ("three", "3")] {
        let mut args = SYNC.to_vec();
        args.extend(["--threads", threads, "--output", dir]);
        ok(&args, tmp.path());
    }
    assert_eq!(
        fs::read(tmp.path().join("one/sync.csv")).unwrap(),
        fs::read(tmp.path().join("three/sync.csv")).unwrap()
    );
}

#[test]
fn replay_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = SYNC.to_vec();
    args.extend(["--seed", "5", "--output", "orig"]);
    ok(&args, tmp.path());
    ok(&["replay", "orig/manifest.json", "--output", "again"], tmp.path());
    assert_eq!(
        fs::read(tmp.path().join("orig/sync.csv")).unwrap(),
        fs::read(tmp.path().join("again/sync.csv")).unwrap()
    );
    assert_eq!(manifest(&tmp.path().join("again"))["config"], manifest(&tmp.path().join("orig"))["config"]);
    let out = corrsync(&["replay", "orig/manifest.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        "scenario = \"dephase\"\nsigma = 1\ngamma = 0.5\nxi = 0\nt_final = 1\ndt = 0.1\nformat = \"json\"\n",
    )
    .unwrap();
    ok(&["--config", "run.toml", "dephase", "--xi", "0.3", "--output", "r"], tmp.path());
    let m = manifest(&tmp.path().join("r"));
    assert_eq!(m["config"]["xi"], 0.3);
    assert_eq!(m["config"]["sigma"], 1.0);
    let rows: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("r/dephase.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 11);
    assert!(rows[0].get("purity_psi").is_some());

    // Wrong scenario for this file.
    let out = corrsync(&["--config", "run.toml", "qcorr", "--output", "w"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("typo.toml"), "sigma = 1\ngamma = 1\nxi = 0\nt_final = 1\ndt = 0.1\nsgima = 2\n").unwrap();
    let unknown = corrsync(&["--config", "typo.toml", "dephase", "--output", "u"], tmp.path());
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("sgima"));

    let missing = corrsync(&["dephase", "--sigma", "1", "--output", "m"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));

    let invalid = corrsync(
        &["dephase", "--sigma", "1", "--gamma", "0.5", "--xi", "1.5", "--t-final", "1", "--dt", "0.1", "--output", "v"],
        tmp.path(),
    );
    assert_eq!(invalid.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("xi"));
    assert!(!tmp.path().join("v").exists());

    // Step far beyond RK4 stability.
    let numerical = corrsync(
        &["evolve", "--xi", "0", "--kappa", "50", "--t-final", "2", "--dt", "0.2", "--output", "n"],
        tmp.path(),
    );
    assert_eq!(numerical.status.code(), Some(4));
    assert!(!tmp.path().join("n").exists());
}

#[test]
fn ep_scan_grid_is_fast_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let start = Instant::now();
    ok(
        &["ep-scan", "--omega1", "1", "--omega2", "0.6", "--j", "0.1", "--gamma", "0.5", "--output", "s"],
        tmp.path(),
    );
    assert!(start.elapsed().as_secs_f64() < 10.0);
    let csv = fs::read_to_string(tmp.path().join("s/ep_scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("xi_re,xi_im,re_lp,im_lp,re_lm,im_lm,gap"));
    assert_eq!(lines.count(), 200 * 200);
}

#[test]
fn qcorr_flags_unstable_points() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        &[
            "qcorr", "--omega1", "1.05", "--omega2", "0.95", "--gamma", "0.5", "--n1", "0", "--n2", "1", "--xi-values",
            "0,0.9", "--output", "q",
        ],
        tmp.path(),
    );
    let csv = fs::read_to_string(tmp.path().join("q/qcorr.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "xi,I2,I2_class,Q,stable_flag");
    assert!(lines[1].ends_with(",1"));
    assert!(lines[2].ends_with(",0") && lines[2].contains("NaN"));
}

#[test]
fn graph_modes_json_schema() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["graph-modes", "--n", "3", "--epsilon", "0.4", "--format", "json", "--output", "g"], tmp.path());
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("g/graph_modes.json")).unwrap()).unwrap();
    assert_eq!(doc["graph"], "C3");
    assert_eq!(doc["epsilon"], 0.4);
    let irreps = doc["irreps"].as_array().unwrap();
    assert_eq!(irreps.len(), 3);
    for r in irreps {
        let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["k", "xi_eig", "predicted_rate", "fitted_rate"]);
        let (p, f) = (r["predicted_rate"].as_f64().unwrap(), r["fitted_rate"].as_f64().unwrap());
        assert!((p - f).abs() / p < 0.02);
    }
    let out = corrsync(&["graph-modes", "--graph", "path", "--n", "3", "--epsilon", "0.2", "--output", "p"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn monodromy_reports_swap() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |cre: &'static str, dir: &'static str| {
        vec![
            "monodromy", "--omega1", "1", "--omega2", "0.6", "--j", "0.1", "--gamma", "0.5", "--center-re", cre,
            "--center-im=-0.2", "--radius", "0.05", "--output", dir,
        ]
    };
    ok(&args("0.4", "around"), tmp.path());
    ok(&args("0.0", "away"), tmp.path());
    assert_eq!(manifest(&tmp.path().join("around"))["summary"]["swapped"], true);
    assert_eq!(manifest(&tmp.path().join("away"))["summary"]["swapped"], false);
}

#[test]
fn trajectories_and_sidecar_stay_inside_output() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        &[
            "trajectories", "--gamma", "1", "--sigma", "1", "--xi", "0.5", "--t-final", "2", "--dt", "0.1", "--n-traj", "3",
            "--seed", "4", "--output", "t",
        ],
        tmp.path(),
    );
    let entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, ["t"]);
    let sidecar: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("t/trajectories.json")).unwrap()).unwrap();
    assert_eq!(sidecar["n_traj"], 3);
    assert_eq!(sidecar["seed"], 4);
    for f in sidecar["files"].as_array().unwrap() {
        let body = fs::read_to_string(tmp.path().join("t").join(f.as_str().unwrap())).unwrap();
        assert!(body.starts_with("time,ch0,ch1\n"));
        assert_eq!(body.lines().count(), 22);
    }
}

#[test]
fn evolve_oscillators_conserves_trace() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        &[
            "evolve", "--system", "oscillators", "--omega1", "1", "--omega2", "0.8", "--j", "0.2", "--gamma", "0.3", "--xi",
            "0.5", "--n-fock", "5", "--fock1", "1", "--t-final", "2", "--dt", "0.01", "--sample-every", "50", "--output", "o",
        ],
        tmp.path(),
    );
    let m = manifest(&tmp.path().join("o"));
    assert!(m["summary"]["audit"]["max_trace_drift"].as_f64().unwrap() < 1e-10);
    let bad = corrsync(
        &["evolve", "--xi", "0", "--kappa", "1", "--omega1", "1", "--t-final", "1", "--dt", "0.1", "--output", "b"],
        tmp.path(),
    );
    assert_eq!(bad.status.code(), Some(2));
}
