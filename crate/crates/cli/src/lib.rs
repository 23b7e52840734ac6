//! Command-line driver: argument and config-file parsing, validation,
//! dispatch to the toolkit, and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

pub use config::{parse_args, parse_config, RunConfig};
pub use error::CliError;
pub use manifest::RunManifest;

use commands::{execute, prepare, Run};

/// Exit status used when a run is interrupted.
pub const EXIT_INTERRUPTED: i32 = 130;

type Active = (Arc<Mutex<RunManifest>>, PathBuf);

static ACTIVE: Mutex<Option<Active>> = Mutex::new(None);

/// Write the manifest of the running command as interrupted. Called from
/// the Ctrl-C handler.
pub fn flush_interrupted() {
    let active = ACTIVE.lock().map(|a| a.clone()).unwrap_or(None);
    if let Some((m, out)) = active {
        if let Ok(mut m) = m.lock() {
            m.finish("interrupted", EXIT_INTERRUPTED, Some("interrupted by signal".into()));
            if let Err(e) = m.write(&out) {
                eprintln!("error: could not write the manifest: {e}");
            }
        }
    }
}

/// Output directory and subcommand as far as they can be read from
/// arguments that failed to parse.
fn fallback_target(argv: &[String]) -> (PathBuf, String) {
    let mut out = std::env::var_os(config::OUT_ENV).map_or_else(|| PathBuf::from("couette-out"), PathBuf::from);
    let mut command = "unknown".to_string();
    let names = [
        "eigs",
        "resolvent-sweep",
        "scaling-fit",
        "simulate",
        "threshold-search",
        "verify",
        "report",
    ];
    let mut i = 1;
    while i < argv.len() {
        let a = &argv[i];
        if let Some(p) = a.strip_prefix("--out=") {
            out = PathBuf::from(p);
        } else if a == "--out" {
            if let Some(p) = argv.get(i + 1) {
                out = PathBuf::from(p);
            }
            i += 1;
        } else if command == "unknown" && names.contains(&a.as_str()) {
            command = a.clone();
        }
        i += 1;
    }
    (out, command)
}

fn record_usage_failure(argv: &[String], e: &CliError) {
    let (out, command) = fallback_target(argv);
    let mut m = RunManifest::start(&command, Default::default());
    m.config
        .insert("argv".into(), serde_json::json!(argv.get(1..).unwrap_or(&[])));
    m.finish(e.status(), e.exit_code(), Some(e.to_string()));
    if let Err(w) = m.write(&out) {
        eprintln!("error: could not write the manifest: {w}");
    }
}

/// Run one invocation and return its exit status.
pub fn run(argv: &[String]) -> i32 {
    let cfg = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                print!("{e}");
            } else {
                eprint!("{e}");
                if !matches!(e, CliError::Clap(_)) {
                    eprintln!();
                }
                record_usage_failure(argv, &e);
            }
            return code;
        }
    };
    let common = cfg.command.common().clone();
    let mut manifest = RunManifest::start(cfg.name(), cfg.params.clone());
    let mut early: Option<CliError> = None;
    if let Some(p) = &cfg.config_file {
        if let Err(e) = manifest.add_input(p) {
            early = Some(e);
        }
    }
    let run = Run {
        out: common.out.clone(),
        svg: common.svg,
        manifest: Arc::new(Mutex::new(manifest)),
    };
    if let Ok(mut a) = ACTIVE.lock() {
        *a = Some((run.manifest.clone(), run.out.clone()));
    }
    let result = match early {
        Some(e) => Err(e),
        None => prepare(&cfg.command).and_then(|plan| {
            if let Some(n) = common.workers {
                couette::par::set_workers(n).map_err(|e| CliError::Usage(e.to_string()))?;
            }
            execute(plan, &run)
        }),
    };
    let (code, status, message) = match result {
        Ok(o) => {
            print!("{}", o.summary);
            match o.failure {
                Some(f) => {
                    eprintln!("check failed: {f}");
                    (1, "check-failed", Some(f))
                }
                None => (0, "ok", None),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            (e.exit_code(), e.status(), Some(e.to_string()))
        }
    };
    if let Ok(mut a) = ACTIVE.lock() {
        *a = None;
    }
    let mut m = run.manifest.lock().expect("manifest lock");
    m.finish(status, code, message);
    match m.write(&run.out) {
        Ok(p) => log::info!("manifest written to {}", p.display()),
        Err(e) => {
            eprintln!("error: could not write the manifest: {e}");
            return code.max(3);
        }
    }
    code
}
