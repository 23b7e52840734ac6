//! Command-line and config-file parsing.
//!
//! A config file holds one `key = value` per line with `#` comments. Keys
//! are the long flag names of the chosen command. Values from the file are
//! placed before the command-line arguments, and since every flag may be
//! repeated with the last occurrence winning, command-line flags take
//! precedence. A flag given on the command line replaces the file entry as a
//! whole, including list values.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "COUETTE_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "couette",
    version,
    about = "Stability, resolvent and threshold computations for plane Couette flow"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Serialize, Args)]
pub struct Common {
    /// Key-value config file; command-line flags override its entries.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "couette-out")]
    pub out: PathBuf,
    /// Worker threads (defaults to one per core).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write SVG plots next to the plot-data files.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub svg: bool,
}

#[derive(Debug, Clone, Serialize, Subcommand)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Rightmost eigenvalues and full spectra of the linear operator.
    Eigs(EigsArgs),
    /// Supremum of the resolvent norm over the imaginary axis for a k-set.
    ResolventSweep(SweepArgs),
    /// Power-law fits of the resolvent supremum against R for several norms.
    ScalingFit(ScalingArgs),
    /// Time integration of one perturbation.
    Simulate(SimulateArgs),
    /// Threshold amplitude bisection over several Reynolds numbers.
    ThresholdSearch(ThresholdArgs),
    /// Identity and inequality checks against frozen constants.
    Verify(VerifyArgs),
    /// Summary of earlier runs from their manifests.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eigs(_) => "eigs",
            Command::ResolventSweep(_) => "resolvent-sweep",
            Command::ScalingFit(_) => "scaling-fit",
            Command::Simulate(_) => "simulate",
            Command::ThresholdSearch(_) => "threshold-search",
            Command::Verify(_) => "verify",
            Command::Report(_) => "report",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Eigs(a) => &a.common,
            Command::ResolventSweep(a) => &a.common,
            Command::ScalingFit(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::ThresholdSearch(a) => &a.common,
            Command::Verify(a) => &a.common,
            Command::Report(a) => &a.common,
        }
    }
}

/// Box length: a number, or a multiple of π written `4pi`, `4*pi` or `2π`.
pub fn parse_length(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace('π', "pi");
    let value = match t.strip_suffix("pi") {
        Some(head) => {
            let head = head.trim().trim_end_matches('*').trim();
            if head.is_empty() {
                PI
            } else {
                head.parse::<f64>().map_err(|e| format!("bad length '{s}': {e}"))? * PI
            }
        }
        None => t.parse::<f64>().map_err(|e| format!("bad length '{s}': {e}"))?,
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(format!("length must be positive, got '{s}'"))
    }
}

#[derive(Debug, Clone, Serialize, Args)]
#[command(args_override_self = true)]
pub struct EigsArgs {
    /// Reynolds numbers.
    #[arg(long = "R", value_delimiter = ',', required = true)]
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    /// Streamwise wavenumbers.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub k1: Vec<f64>,
    /// Spanwise wavenumbers.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub k3: Vec<f64>,
    /// Chebyshev points across the channel.
    #[arg(long, default_value_t = 64)]
    pub n2: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Serialize, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    /// Reynolds numbers (at least three).
    #[arg(long = "R", value_delimiter = ',', default_value = "200,400,800,1600,3200")]
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    /// energy, m or htilde1.
    #[arg(long, default_value = "m")]
    pub norm: String,
    #[arg(long, default_value_t = 64)]
    pub n2: usize,
    /// Streamwise wavenumbers of the k-set.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,-0.25,0.5,-0.5,1,-1")]
    pub k1: Vec<f64>,
    /// Spanwise wavenumbers of the k-set.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3")]
    pub k3: Vec<f64>,
    /// Points of the coarse frequency scan.
    #[arg(long, default_value_t = 41)]
    pub coarse_points: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Serialize, Args)]
#[command(args_override_self = true)]
pub struct ScalingArgs {
    /// Reynolds numbers (at least three).
    #[arg(long = "R", value_delimiter = ',', required = true)]
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    /// Norms to fit: energy, m, htilde1.
    #[arg(long, value_delimiter = ',', default_value = "energy,m")]
    pub norms: Vec<String>,
    #[arg(long, default_value_t = 64)]
    pub n2: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,-0.25,0.5,-0.5,1,-1")]
    pub k1: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,3")]
    pub k3: Vec<f64>,
    #[arg(long, default_value_t = 41)]
    pub coarse_points: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Serialize, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 16)]
    pub n1: usize,
    #[arg(long, default_value_t = 33)]
    pub n2: usize,
    #[arg(long, default_value_t = 16)]
    pub n3: usize,
    /// Streamwise box length.
    #[arg(long, value_parser = parse_length, default_value = "4pi")]
    pub l1: f64,
    /// Spanwise box length.
    #[arg(long, value_parser = parse_length, default_value = "2pi")]
    pub l3: f64,
}

#[derive(Debug, Clone, Serialize, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[arg(long = "R", required = true)]
    #[serde(rename = "R")]
    pub r: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    /// streamwise-vortex, oblique-pair or random-noise(seed).
    #[arg(long, default_value = "streamwise-vortex")]
    pub family: String,
    /// Initial H⁴ norm of the perturbation.
    #[arg(long, default_value_t = 1e-3)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t_end: f64,
    /// Steps between trajectory samples.
    #[arg(long, default_value_t = 20)]
    pub cadence: usize,
    /// Drop the nonlinear term.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub linear: bool,
    #[arg(long, default_value_t = 1.0)]
    pub cfl_max: f64,
    /// Start from a checkpoint instead of a family.
    #[arg(long)]
    pub restart: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Serialize, Args)]
#[command(args_override_self = true)]
pub struct ThresholdArgs {
    #[arg(long = "R", value_delimiter = ',', default_value = "500,750,1000,1500")]
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    #[arg(long, default_value = "streamwise-vortex")]
    pub family: String,
    #[arg(long, default_value_t = 16)]
    pub n1: usize,
    #[arg(long, default_value_t = 25)]
    pub n2: usize,
    #[arg(long, default_value_t = 16)]
    pub n3: usize,
    #[arg(long, value_parser = parse_length, default_value = "2pi")]
    pub l1: f64,
    #[arg(long, value_parser = parse_length, default_value = "pi")]
    pub l3: f64,
    #[arg(long, default_value_t = 0.25)]
    pub dt: f64,
    /// Relative bracket width at which bisection stops.
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    #[arg(long, default_value_t = 4.0)]
    pub bracket_lo: f64,
    #[arg(long, default_value_t = 20.0)]
    pub bracket_hi: f64,
    /// Relative L2 size of the seeded noise added to the family shape.
    #[arg(long, default_value_t = 0.1)]
    pub trigger: f64,
    #[arg(long, default_value_t = 7919)]
    pub seed: u64,
    /// Run length per probe in units of R.
    #[arg(long = "horizon-per-R", default_value_t = 0.75)]
    #[serde(rename = "horizon-per-R")]
    pub horizon_per_r: f64,
    /// Start each search below the previous threshold by this factor;
    /// 0 searches every R from the initial bracket.
    #[arg(long, default_value_t = 0.6)]
    pub shrink: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub const VERIFY_CHECKS: [&str; 6] = ["identity", "skew", "nonlinearity", "sobolev", "decay", "forced-linear"];

#[derive(Debug, Clone, Serialize, Args)]
#[command(args_override_self = true)]
pub struct VerifyArgs {
    /// Subset of identity, skew, nonlinearity, sobolev, decay, forced-linear.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "identity,skew,nonlinearity,sobolev,decay,forced-linear"
    )]
    pub checks: Vec<String>,
    /// Random trials per check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Reynolds numbers for the identity and nonlinearity checks.
    #[arg(long = "R", value_delimiter = ',', default_value = "1,100,1000")]
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub n1: usize,
    #[arg(long, default_value_t = 17)]
    pub n2: usize,
    #[arg(long, default_value_t = 8)]
    pub n3: usize,
    #[arg(long, value_parser = parse_length, default_value = "4pi")]
    pub l1: f64,
    #[arg(long, value_parser = parse_length, default_value = "2pi")]
    pub l3: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Forcings in the forced-linear battery.
    #[arg(long, default_value_t = 20)]
    pub battery: usize,
    /// Frozen-constant file (defaults to the bundled constants).
    #[arg(long)]
    pub constants: Option<PathBuf>,
    /// Replace a check's constant, as `check-id=value`.
    #[arg(long = "constant", value_delimiter = ',')]
    pub constant: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Serialize, Args)]
#[command(args_override_self = true)]
pub struct ReportArgs {
    /// Directory holding earlier runs (defaults to the output directory).
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Parsed and merged invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    /// Every parameter after merging, keyed by flag name.
    pub params: BTreeMap<String, serde_json::Value>,
    /// Config file that contributed values.
    pub config_file: Option<PathBuf>,
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        self.command.name()
    }
}

/// `key = value` pairs of a config file, rejecting conflicting repeats.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected 'key = value', got '{line}'", no + 1)))?;
        let key = k.trim().trim_start_matches("--").to_string();
        let value = v
            .trim()
            .trim_matches('"')
            .split(',')
            .map(str::trim)
            .collect::<Vec<_>>()
            .join(",");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", no + 1)));
        }
        match seen.get(&key) {
            Some(prev) if *prev != value => {
                return Err(CliError::Usage(format!(
                    "conflicting values for '{key}' in config file: '{prev}' and '{value}'"
                )))
            }
            Some(_) => continue,
            None => {
                seen.insert(key.clone(), value.clone());
                out.push((key, value));
            }
        }
    }
    Ok(out)
}

/// Subcommand name and `--config` path, found without full parsing so that
/// required flags may come from the file.
fn prescan(argv: &[String]) -> (Option<(usize, String)>, Option<PathBuf>) {
    let names: Vec<String> = Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let mut sub = None;
    let mut config = None;
    let mut i = 1;
    while i < argv.len() {
        let a = &argv[i];
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else if a == "--config" {
            config = argv.get(i + 1).map(PathBuf::from);
            i += 1;
        } else if sub.is_none() && names.contains(a) {
            sub = Some((i, a.clone()));
        }
        i += 1;
    }
    (sub, config)
}

/// Parse `argv` with optional config-file text; flags override the file.
pub fn parse_config(argv: &[String], file: Option<&str>) -> Result<RunConfig, CliError> {
    let (sub, _) = prescan(argv);
    let mut merged: Vec<String> = Vec::with_capacity(argv.len() + 8);
    merged.push(argv.first().cloned().unwrap_or_else(|| "couette".into()));
    match (&sub, file) {
        (Some((idx, name)), Some(text)) => {
            let cmd = Cli::command();
            let sc = cmd.find_subcommand(name).expect("subcommand from prescan");
            merged.push(name.clone());
            let given: Vec<&str> = argv[1..]
                .iter()
                .filter_map(|a| a.strip_prefix("--"))
                .map(|a| a.split('=').next().unwrap_or(a))
                .collect();
            for (key, value) in parse_config_file(text)? {
                let arg = sc
                    .get_arguments()
                    .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
                    .ok_or_else(|| {
                        CliError::Usage(format!("unknown key '{key}' for command '{name}' in config file"))
                    })?;
                if given.contains(&key.as_str()) {
                    continue;
                }
                if matches!(arg.get_action(), ArgAction::SetTrue) {
                    if value == "true" {
                        merged.push(format!("--{key}"));
                    }
                } else {
                    merged.push(format!("--{key}={value}"));
                }
            }
            merged.extend(argv[1..*idx].iter().cloned());
            merged.extend(argv[idx + 1..].iter().cloned());
        }
        _ => merged.extend(argv.iter().skip(1).cloned()),
    }
    let cli = Cli::try_parse_from(&merged).map_err(CliError::from_clap)?;
    let params = match serde_json::to_value(&cli.command)? {
        serde_json::Value::Object(m) => m.into_iter().filter(|(k, _)| k != "command").collect(),
        _ => BTreeMap::new(),
    };
    Ok(RunConfig {
        config_file: cli.command.common().config.clone(),
        command: cli.command,
        params,
    })
}

/// Parse the process arguments, reading the `--config` file if given.
pub fn parse_args(argv: &[String]) -> Result<RunConfig, CliError> {
    let (_, config) = prescan(argv);
    let text = match &config {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", p.display())))?,
        ),
        None => None,
    };
    parse_config(argv, text.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("couette")
            .chain(s.split_whitespace())
            .map(String::from)
            .collect()
    }

    #[test]
    fn flags_map_directly() {
        let c = parse_config(&argv("eigs --R 1000 --k1 1 --k3 0 --n2 64"), None).unwrap();
        match &c.command {
            Command::Eigs(a) => {
                assert_eq!(
                    (a.r.clone(), a.k1.clone(), a.k3.clone(), a.n2),
                    (vec![1000.0], vec![1.0], vec![0.0], 64)
                );
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.params["R"], serde_json::json!([1000.0]));
    }

    #[test]
    fn missing_required_flag_is_named() {
        let e = parse_config(&argv("scaling-fit --n2 32"), None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("--R"), "{e}");
    }

    #[test]
    fn flags_override_the_file() {
        let file = "# comment\nR = 500\nn2 = 48   # trailing\n";
        let c = parse_config(&argv("eigs --R 1000"), Some(file)).unwrap();
        match c.command {
            Command::Eigs(a) => assert_eq!((a.r, a.n2), (vec![1000.0], 48)),
            other => panic!("{other:?}"),
        }
        let c = parse_config(&argv("scaling-fit"), Some("R = 200, 400, 800")).unwrap();
        match c.command {
            Command::ScalingFit(a) => assert_eq!(a.r, vec![200.0, 400.0, 800.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_conflicting_keys_are_rejected() {
        let e = parse_config(&argv("eigs --R 10"), Some("bogus = 1")).unwrap_err();
        assert!(e.to_string().contains("bogus"));
        let e = parse_config(&argv("eigs --R 10"), Some("n2 = 32\nn2 = 48")).unwrap_err();
        assert!(e.to_string().contains("conflicting"));
        assert!(parse_config(&argv("eigs --R 10"), Some("n2 = 32\nn2 = 32")).is_ok());
        assert_eq!(
            parse_config(&argv("eigs --R 10 --nope 3"), None)
                .unwrap_err()
                .exit_code(),
            2
        );
        assert_eq!(parse_config(&argv("frobnicate"), None).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn lengths_accept_multiples_of_pi() {
        assert_eq!(parse_length("4pi").unwrap(), 4.0 * PI);
        assert_eq!(parse_length("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_length("π").unwrap(), PI);
        assert_eq!(parse_length("3.5").unwrap(), 3.5);
        assert!(parse_length("-1").is_err() && parse_length("xpi").is_err());
    }

    #[test]
    fn parsing_is_deterministic() {
        let a = parse_config(&argv("simulate --R 300 --family oblique-pair"), Some("dt = 0.1")).unwrap();
        let b = parse_config(&argv("simulate --R 300 --family oblique-pair"), Some("dt = 0.1")).unwrap();
        assert_eq!(
            serde_json::to_string(&a.params).unwrap(),
            serde_json::to_string(&b.params).unwrap()
        );
        assert_eq!(a.params["dt"], serde_json::json!(0.1));
    }
}
