use std::path::Path;
use std::process::{Command, Output};

use couette_cli::manifest::{manifest_name, sha256_hex};
use couette_cli::RunManifest;

fn couette(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_couette"))
        .args(args)
        .env("COUETTE_OUT", out)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn manifest(out: &Path, command: &str) -> RunManifest {
    RunManifest::read(&out.join(manifest_name(command))).expect("manifest present")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eigs_writes_hashed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = couette(
        dir.path(),
        &["eigs", "--R", "1000", "--k1", "1", "--k3", "0", "--n2", "32"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(dir.path(), "eigs");
    assert_eq!((m.status.as_str(), m.exit_code), ("ok", 0));
    assert_eq!(m.config["R"], serde_json::json!([1000.0]));
    assert_eq!(m.outputs.len(), 2);
    for f in &m.outputs {
        let bytes = std::fs::read(dir.path().join(&f.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256);
    }
    let top = std::fs::read_to_string(dir.path().join("eigs_rightmost.csv")).unwrap();
    let row: Vec<&str> = top.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..4], &["1", "0", "1000", "32"]);
    assert!(row[4].parse::<f64>().unwrap() < 0.0);
}

#[test]
fn missing_reynolds_is_a_usage_error_naming_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = couette(dir.path(), &["scaling-fit", "--n2", "24"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--R"), "{}", stderr(&o));
    let m = manifest(dir.path(), "scaling-fit");
    assert_eq!((m.status.as_str(), m.exit_code), ("usage-error", 2));
}

#[test]
fn out_of_range_values_are_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["eigs", "--R", "0.5"],
        vec!["eigs", "--R", "100", "--n2", "8"],
        vec!["simulate", "--R", "100", "--n1", "7"],
        vec!["simulate", "--R", "100", "--family", "vortex-ring"],
        vec!["verify", "--checks", "everything"],
        vec!["threshold-search", "--bracket-lo", "5", "--bracket-hi", "2"],
        vec!["frobnicate"],
    ] {
        let o = couette(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!dir.path().join("trajectory.csv").exists());
    }
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# eigs settings\nR = 500\nn2 = 24\nk1 = 1\n").unwrap();
    let o = couette(dir.path(), &["eigs", "--config", cfg.to_str().unwrap(), "--R", "1000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let top = std::fs::read_to_string(dir.path().join("eigs_rightmost.csv")).unwrap();
    let rows: Vec<&str> = top.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("1,0,1000,24,"), "{}", rows[0]);
    let m = manifest(dir.path(), "eigs");
    assert_eq!(m.inputs.len(), 1);
    assert_eq!(m.inputs[0].sha256, sha256_hex(&std::fs::read(&cfg).unwrap()));
}

#[test]
fn unknown_and_conflicting_config_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "R = 100\nwavenumber = 3\n").unwrap();
    let o = couette(dir.path(), &["eigs", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("wavenumber"));
    std::fs::write(&cfg, "R = 100\nR = 200\n").unwrap();
    let o = couette(dir.path(), &["eigs", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("conflicting"));
}

const QUICK_VERIFY: [&str; 7] = [
    "verify",
    "--checks",
    "identity,skew,nonlinearity",
    "--trials",
    "4",
    "--R",
    "10",
];

#[test]
fn verify_passes_with_a_summary_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = couette(dir.path(), &QUICK_VERIFY);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.starts_with("check"));
    for id in [
        "dissipation-identity",
        "skew-symmetry",
        "nonlinearity-l2",
        "nonlinearity-m",
    ] {
        assert!(table.contains(id), "{table}");
    }
    assert!(!table.contains("FAIL"));
    assert!(!dir.path().join("witnesses").exists());
}

#[test]
fn corrupted_constant_fails_with_witness_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = QUICK_VERIFY.to_vec();
    args.extend(["--constant", "nonlinearity-l2=1e-9"]);
    let o = couette(dir.path(), &args);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let m = manifest(dir.path(), "verify");
    assert_eq!(m.status, "check-failed");
    let wdir = dir.path().join("witnesses");
    let mut names: Vec<String> = std::fs::read_dir(&wdir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3, "{names:?}");
    let json = names.iter().find(|n| n.ends_with(".json")).unwrap();
    let w: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(wdir.join(json)).unwrap()).unwrap();
    assert_eq!(w["check"], "nonlinearity-l2");
    assert!(w["witness"]["ratio"].as_f64().unwrap() > 1e-9);
    for f in w["fields"].as_array().unwrap() {
        let bytes = std::fs::read(dir.path().join(f.as_str().unwrap())).unwrap();
        let (v, _) = couette::sim::decode_checkpoint(&bytes).unwrap();
        assert_eq!(v.grid, couette::lab::lab_grid());
    }
    assert!(m.outputs.iter().any(|f| f.path.starts_with("witnesses/")));
}

#[test]
fn scaling_fit_reports_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let o = couette(
        dir.path(),
        &[
            "scaling-fit",
            "--R",
            "100,200,400,800,1600",
            "--n2",
            "24",
            "--k1",
            "0",
            "--k3",
            "1",
            "--norms",
            "m",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("scaling.json")).unwrap()).unwrap();
    let e = j["exponents"]["m"].as_f64().unwrap();
    assert!((e - 1.0).abs() < 0.3, "{e}");
    assert_eq!(j["fits"][0]["r_values"].as_array().unwrap().len(), 5);
    assert!(dir.path().join("scaling.svg").exists() && dir.path().join("scaling_m.dat").exists());
}

#[test]
fn reruns_reproduce_output_hashes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for args in [
        QUICK_VERIFY.to_vec(),
        vec!["eigs", "--R", "100,1000", "--k1", "0,1", "--n2", "24"],
        vec![
            "simulate",
            "--R",
            "300",
            "--n1",
            "8",
            "--n2",
            "17",
            "--n3",
            "8",
            "--t-end",
            "1",
            "--family",
            "random-noise(4)",
        ],
    ] {
        assert_eq!(couette(a.path(), &args).status.code(), Some(0));
        assert_eq!(couette(b.path(), &args).status.code(), Some(0));
        let cmd = args[0];
        let (ma, mb) = (manifest(a.path(), cmd), manifest(b.path(), cmd));
        assert!(!ma.outputs.is_empty());
        assert_eq!(ma.outputs, mb.outputs, "{cmd}");
    }
}

#[test]
fn simulate_restart_continues_the_run() {
    let whole = tempfile::tempdir().unwrap();
    let split = tempfile::tempdir().unwrap();
    let base = [
        "simulate",
        "--R",
        "400",
        "--n1",
        "8",
        "--n2",
        "17",
        "--n3",
        "8",
        "--dt",
        "0.05",
        "--amplitude",
        "0.01",
    ];
    let with = |extra: &[&str]| -> Vec<String> { base.iter().chain(extra).map(|s| s.to_string()).collect() };
    let run = |out: &Path, args: Vec<String>| {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = couette(out, &refs);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run(whole.path(), with(&["--t-end", "2"]));
    run(split.path(), with(&["--t-end", "1"]));
    let chk = split.path().join("final.chk");
    let moved = split.path().join("half.chk");
    std::fs::rename(&chk, &moved).unwrap();
    run(
        split.path(),
        with(&["--t-end", "2", "--restart", moved.to_str().unwrap()]),
    );
    let load = |p: &Path| couette::sim::read_checkpoint(p.join("final.chk")).unwrap();
    let (v1, t1) = load(whole.path());
    let (v2, t2) = load(split.path());
    assert!((t1 - 2.0).abs() < 1e-12 && (t2 - 2.0).abs() < 1e-12);
    let diff = couette::norms::l2_norm(&v1.axpy(-1.0, &v2).unwrap()).unwrap();
    assert!(diff <= 1e-12 * couette::norms::l2_norm(&v1).unwrap(), "{diff}");
    let m = manifest(split.path(), "simulate");
    assert_eq!(m.inputs.len(), 1);
}

#[test]
fn report_flags_outputs_changed_after_their_run() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        couette(dir.path(), &["eigs", "--R", "100", "--n2", "24"]).status.code(),
        Some(0)
    );
    let o = couette(dir.path(), &["report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("| eigs | ok | 0 | 2 | none |"), "{md}");
    std::fs::write(dir.path().join("eigs.csv"), "edited\n").unwrap();
    let o = couette(dir.path(), &["report"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("eigs.csv"));
}

#[test]
fn help_lists_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let o = couette(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for c in [
        "eigs",
        "resolvent-sweep",
        "scaling-fit",
        "simulate",
        "threshold-search",
        "verify",
        "report",
    ] {
        assert!(text.contains(c), "{c}");
    }
    let o = couette(dir.path(), &["eigs", "--help"]);
    assert!(stdout(&o).contains("[default: 64]"));
}
