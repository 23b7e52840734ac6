//! Validation and execution of each command.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use couette::io::{csv_table, plot_data, svg_plot, PlotOptions, Series};
use couette::lab::{
    check_decay_theorem, check_dissipation_identity, check_nonlinearity_bounds, check_skew_symmetry,
    check_sobolev_embedding, check_theorem2, decay_battery, summary_table, witness_fields, CheckReport,
    FrozenConstants, FrozenEntry, Theorem2Config, SOBOLEV_CALIBRATION_FIELDS,
};
use couette::operator::{build_operator, eigenvalues, SPECTRUM_CSV_HEADER};
use couette::resolvent::{scaling_sweep, KSet, ResolventNorm, SearchConfig, SweepResult};
use couette::sim::{
    consistency_check, delta_empirical, encode_checkpoint, fit_gamma, perturbation_family, read_checkpoint, run,
    run_points, threshold_sweep, threshold_sweep_continued, Family, GammaFit, RunStatus, SimConfig, Stepper,
    ThresholdConfig, ThresholdRecord,
};
use couette::{Grid, VelocityField};
use serde::Serialize;

use crate::config::{
    Command, EigsArgs, ReportArgs, ScalingArgs, SimulateArgs, SweepArgs, ThresholdArgs, VerifyArgs, VERIFY_CHECKS,
};
use crate::error::CliError;
use crate::manifest::{manifest_name, sha256_hex, FileHash, RunManifest};

/// Output directory plus the manifest collecting every written file.
pub struct Run {
    pub out: PathBuf,
    pub svg: bool,
    pub manifest: Arc<Mutex<RunManifest>>,
}

impl Run {
    /// Write `name` below the output directory and record its hash.
    pub fn emit(&self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, contents)?;
        let mut m = self.manifest.lock().expect("manifest lock");
        m.outputs.retain(|f| f.path != name);
        m.outputs.push(FileHash {
            path: name.to_string(),
            sha256: sha256_hex(contents),
        });
        Ok(())
    }

    fn emit_svg(&self, name: &str, series: &[Series], opts: &PlotOptions) -> Result<(), CliError> {
        if self.svg {
            self.emit(name, svg_plot(series, opts)?.as_bytes())?;
        }
        Ok(())
    }

    fn add_input(&self, path: &Path) -> Result<(), CliError> {
        self.manifest.lock().expect("manifest lock").add_input(path)
    }
}

/// Result of a command that ran to completion.
pub struct Outcome {
    /// Text for standard output.
    pub summary: String,
    /// Set when a check failed; the command exits 1.
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(summary: String) -> Self {
        Outcome { summary, failure: None }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_reynolds_list(rs: &[f64]) -> Result<(), CliError> {
    if rs.is_empty() {
        return Err(usage("--R needs at least one value"));
    }
    match rs.iter().find(|r| !(**r >= 1.0 && r.is_finite())) {
        Some(r) => Err(usage(format!("--R values must be finite and >= 1, got {r}"))),
        None => Ok(()),
    }
}

fn check_finite(name: &str, xs: &[f64]) -> Result<(), CliError> {
    if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
        return Err(usage(format!("--{name} needs finite values")));
    }
    Ok(())
}

fn check_operator_n2(n2: usize) -> Result<(), CliError> {
    if !(16..=512).contains(&n2) {
        return Err(usage(format!("--n2 must lie in 16..=512, got {n2}")));
    }
    Ok(())
}

fn sorted_unique(rs: &[f64], name: &str) -> Result<Vec<f64>, CliError> {
    let mut v = rs.to_vec();
    v.sort_by(f64::total_cmp);
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage(format!("--{name} values must be distinct")));
    }
    Ok(v)
}

fn parse_family(s: &str) -> Result<Family, CliError> {
    s.parse::<Family>().map_err(|e| usage(e.to_string()))
}

fn search_config(coarse_points: usize) -> Result<SearchConfig, CliError> {
    if coarse_points < 5 {
        return Err(usage(format!(
            "--coarse-points must be at least 5, got {coarse_points}"
        )));
    }
    Ok(SearchConfig {
        coarse_points,
        ..SearchConfig::default()
    })
}

/// Exponent assumed when reporting the empirical constant of a norm.
pub fn assumed_exponent(norm: ResolventNorm) -> f64 {
    match norm {
        ResolventNorm::Energy => 2.0,
        ResolventNorm::Modified | ResolventNorm::Htilde1 => 1.0,
    }
}

/// Fully validated work order.
pub enum Plan {
    Eigs(EigsArgs),
    Sweep {
        args: SweepArgs,
        norm: ResolventNorm,
        r: Vec<f64>,
        search: SearchConfig,
    },
    Scaling {
        args: ScalingArgs,
        norms: Vec<ResolventNorm>,
        r: Vec<f64>,
        search: SearchConfig,
    },
    Simulate {
        args: SimulateArgs,
        cfg: SimConfig,
        family: Family,
    },
    Threshold {
        args: ThresholdArgs,
        cfg: ThresholdConfig,
        family: Family,
    },
    Verify {
        args: VerifyArgs,
        grid: Grid,
        constants: FrozenConstants,
        overrides: Vec<(String, f64)>,
    },
    Report(ReportArgs),
}

/// Check every parameter against the preconditions of the operation it
/// feeds, before anything runs.
pub fn prepare(cmd: &Command) -> Result<Plan, CliError> {
    let common = cmd.common();
    if common.workers == Some(0) {
        return Err(usage("--workers must be at least 1"));
    }
    match cmd {
        Command::Eigs(a) => {
            check_reynolds_list(&a.r)?;
            check_finite("k1", &a.k1)?;
            check_finite("k3", &a.k3)?;
            check_operator_n2(a.n2)?;
            Ok(Plan::Eigs(a.clone()))
        }
        Command::ResolventSweep(a) => {
            check_reynolds_list(&a.r)?;
            let r = sorted_unique(&a.r, "R")?;
            if r.len() < 3 {
                return Err(usage("resolvent-sweep needs at least three --R values"));
            }
            check_finite("k1", &a.k1)?;
            check_finite("k3", &a.k3)?;
            check_operator_n2(a.n2)?;
            Ok(Plan::Sweep {
                norm: ResolventNorm::parse(&a.norm).map_err(|e| usage(e.to_string()))?,
                search: search_config(a.coarse_points)?,
                args: a.clone(),
                r,
            })
        }
        Command::ScalingFit(a) => {
            check_reynolds_list(&a.r)?;
            let r = sorted_unique(&a.r, "R")?;
            if r.len() < 3 {
                return Err(usage("scaling-fit needs at least three --R values"));
            }
            check_finite("k1", &a.k1)?;
            check_finite("k3", &a.k3)?;
            check_operator_n2(a.n2)?;
            let norms = a
                .norms
                .iter()
                .map(|n| ResolventNorm::parse(n).map_err(|e| usage(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            if norms.is_empty() {
                return Err(usage("--norms needs at least one norm"));
            }
            Ok(Plan::Scaling {
                search: search_config(a.coarse_points)?,
                args: a.clone(),
                norms,
                r,
            })
        }
        Command::Simulate(a) => {
            check_reynolds_list(&[a.r])?;
            let g = &a.grid;
            let grid = Grid::new(g.n1, g.n2, g.n3, g.l1, g.l3)?;
            let cfg = SimConfig {
                dt: a.dt,
                t_end: a.t_end,
                cadence: a.cadence,
                nonlinear: !a.linear,
                cfl_max: a.cfl_max,
                ..SimConfig::new(grid, a.r)
            };
            cfg.validate()?;
            if !(a.amplitude > 0.0 && a.amplitude.is_finite()) {
                return Err(usage(format!("--amplitude must be positive, got {}", a.amplitude)));
            }
            let family = parse_family(&a.family)?;
            if a.restart.is_none() {
                perturbation_family(family, &grid)?;
            }
            Ok(Plan::Simulate {
                args: a.clone(),
                cfg,
                family,
            })
        }
        Command::ThresholdSearch(a) => {
            check_reynolds_list(&a.r)?;
            sorted_unique(&a.r, "R")?;
            let grid = Grid::new(a.n1, a.n2, a.n3, a.l1, a.l3)?;
            let sim = SimConfig {
                dt: a.dt,
                cadence: 20,
                ..SimConfig::new(grid, a.r[0])
            };
            let cfg = ThresholdConfig {
                bracket: (a.bracket_lo, a.bracket_hi),
                tol: a.tol,
                trigger: a.trigger,
                trigger_seed: a.seed,
                horizon_per_reynolds: Some(a.horizon_per_r),
                ..ThresholdConfig::new(sim)
            };
            cfg.validate()?;
            if !(a.shrink == 0.0 || (a.shrink > 0.0 && a.shrink < 1.0)) {
                return Err(usage(format!("--shrink must be 0 or lie in (0, 1), got {}", a.shrink)));
            }
            let family = parse_family(&a.family)?;
            perturbation_family(family, &grid)?;
            Ok(Plan::Threshold {
                args: a.clone(),
                cfg,
                family,
            })
        }
        Command::Verify(a) => {
            for c in &a.checks {
                if !VERIFY_CHECKS.contains(&c.as_str()) {
                    return Err(usage(format!(
                        "unknown check '{c}' (available: {})",
                        VERIFY_CHECKS.join(", ")
                    )));
                }
            }
            if a.trials == 0 || a.battery == 0 {
                return Err(usage("--trials and --battery must be at least 1"));
            }
            check_reynolds_list(&a.r)?;
            let grid = Grid::new(a.n1, a.n2, a.n3, a.l1, a.l3)?;
            if grid.n2 < 16 {
                return Err(usage(format!("verify needs --n2 >= 16, got {}", grid.n2)));
            }
            let constants = match &a.constants {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| usage(format!("cannot read constants {}: {e}", p.display())))?;
                    FrozenConstants::from_json(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
                }
                None => FrozenConstants::bundled(),
            };
            let frozen_needed = a.checks.iter().any(|c| c == "sobolev" || c == "forced-linear");
            if frozen_needed && constants.lookup(&grid).is_none() {
                return Err(usage(format!(
                    "no frozen constants for grid {}x{}x{} ({} x {}); pass --constants or use the calibrated grid",
                    grid.n1, grid.n2, grid.n3, grid.l1, grid.l3
                )));
            }
            let overrides = a
                .constant
                .iter()
                .map(|s| {
                    let (k, v) = s
                        .split_once('=')
                        .ok_or_else(|| usage(format!("--constant expects check-id=value, got '{s}'")))?;
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| usage(format!("--constant value '{v}' is not a number")))?;
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(usage(format!("--constant value must be positive, got {v}")));
                    }
                    Ok((k.trim().to_string(), v))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Plan::Verify {
                args: a.clone(),
                grid,
                constants,
                overrides,
            })
        }
        Command::Report(a) => Ok(Plan::Report(a.clone())),
    }
}

pub fn execute(plan: Plan, run: &Run) -> Result<Outcome, CliError> {
    match plan {
        Plan::Eigs(a) => eigs(&a, run),
        Plan::Sweep { args, norm, r, search } => resolvent_sweep(&args, norm, &r, &search, run),
        Plan::Scaling { args, norms, r, search } => scaling_fit(&args, &norms, &r, &search, run),
        Plan::Simulate { args, cfg, family } => simulate(&args, &cfg, family, run),
        Plan::Threshold { args, cfg, family } => threshold(&args, &cfg, family, run),
        Plan::Verify {
            args,
            grid,
            constants,
            overrides,
        } => verify(&args, &grid, &constants, &overrides, run),
        Plan::Report(a) => report(&a, run),
    }
}

fn eigs(a: &EigsArgs, run: &Run) -> Result<Outcome, CliError> {
    let mut full = Vec::new();
    let mut top = Vec::new();
    let mut summary = String::from("R k1 k3 rightmost eigenvalue\n");
    for &r in &a.r {
        for &k1 in &a.k1 {
            for &k3 in &a.k3 {
                let spec = eigenvalues(&build_operator(k1, k3, r, a.n2)?)?;
                full.extend(spec.csv_rows());
                if let Some(l) = spec.rightmost() {
                    top.push(format!("{k1},{k3},{r},{},{:e},{:e}", a.n2, l.re, l.im));
                    summary.push_str(&format!("{r} {k1} {k3} {:.6e} {:+.6e}i\n", l.re, l.im));
                }
            }
        }
    }
    run.emit("eigs.csv", csv_table(SPECTRUM_CSV_HEADER, full).as_bytes())?;
    run.emit("eigs_rightmost.csv", csv_table(SPECTRUM_CSV_HEADER, top).as_bytes())?;
    Ok(Outcome::ok(summary))
}

fn sup_series(sweep: &SweepResult) -> Vec<(f64, f64)> {
    sweep
        .fit
        .r_values
        .iter()
        .copied()
        .zip(sweep.fit.sup_values.iter().copied())
        .collect()
}

fn resolvent_sweep(
    a: &SweepArgs,
    norm: ResolventNorm,
    r: &[f64],
    search: &SearchConfig,
    run: &Run,
) -> Result<Outcome, CliError> {
    let kset = KSet {
        k1: a.k1.clone(),
        k3: a.k3.clone(),
    };
    let sweep = scaling_sweep(&kset, r, norm, a.n2, search)?;
    let name = norm.label();
    let summary = sweep.summary(assumed_exponent(norm));
    run.emit(&format!("resolvent_{name}.csv"), sweep.csv().as_bytes())?;
    run.emit(
        &format!("resolvent_{name}.json"),
        (serde_json::to_string_pretty(&summary)? + "\n").as_bytes(),
    )?;
    let pts = sup_series(&sweep);
    run.emit(&format!("resolvent_{name}.dat"), plot_data("R", "sup", &pts).as_bytes())?;
    run.emit_svg(
        &format!("resolvent_{name}.svg"),
        &[Series {
            label: format!("{name} norm"),
            points: pts,
        }],
        &PlotOptions::log_log("supremum of the resolvent norm", "R", "sup"),
    )?;
    for w in &sweep.warnings {
        log::warn!("{w}");
    }
    Ok(Outcome::ok(format!(
        "{name}: exponent {:.4}, residual {:.2e}, C_emp {:.4e}\n",
        summary.exponent, summary.residual, summary.c_emp
    )))
}

#[derive(Serialize)]
struct NormFit {
    norm: ResolventNorm,
    exponent: f64,
    intercept: f64,
    residual: f64,
    assumed_exponent: f64,
    #[serde(rename = "C_emp")]
    c_emp: f64,
    r_values: Vec<f64>,
    sup_values: Vec<f64>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct ScalingOutput {
    n2: usize,
    exponents: std::collections::BTreeMap<String, f64>,
    fits: Vec<NormFit>,
}

fn scaling_fit(
    a: &ScalingArgs,
    norms: &[ResolventNorm],
    r: &[f64],
    search: &SearchConfig,
    run: &Run,
) -> Result<Outcome, CliError> {
    let kset = KSet {
        k1: a.k1.clone(),
        k3: a.k3.clone(),
    };
    let mut fits = Vec::new();
    let mut series = Vec::new();
    let mut summary = String::new();
    for &norm in norms {
        let sweep = scaling_sweep(&kset, r, norm, a.n2, search)?;
        let name = norm.label();
        let s = sweep.summary(assumed_exponent(norm));
        run.emit(&format!("resolvent_{name}.csv"), sweep.csv().as_bytes())?;
        let pts = sup_series(&sweep);
        run.emit(&format!("scaling_{name}.dat"), plot_data("R", "sup", &pts).as_bytes())?;
        summary.push_str(&format!(
            "{name}: exponent {:.4}, residual {:.2e}, C_emp {:.4e}\n",
            s.exponent, s.residual, s.c_emp
        ));
        series.push(Series {
            label: format!("{name} norm"),
            points: pts,
        });
        fits.push(NormFit {
            norm,
            exponent: sweep.fit.exponent,
            intercept: sweep.fit.intercept,
            residual: sweep.fit.residual,
            assumed_exponent: assumed_exponent(norm),
            c_emp: s.c_emp,
            r_values: sweep.fit.r_values.clone(),
            sup_values: sweep.fit.sup_values.clone(),
            warnings: sweep.warnings.clone(),
        });
    }
    let out = ScalingOutput {
        n2: a.n2,
        exponents: fits.iter().map(|f| (f.norm.label().to_string(), f.exponent)).collect(),
        fits,
    };
    run.emit("scaling.json", (serde_json::to_string_pretty(&out)? + "\n").as_bytes())?;
    run.emit_svg(
        "scaling.svg",
        &series,
        &PlotOptions::log_log("resolvent growth with R", "R", "sup"),
    )?;
    Ok(Outcome::ok(summary))
}

fn simulate(a: &SimulateArgs, cfg: &SimConfig, family: Family, run: &Run) -> Result<Outcome, CliError> {
    let (v0, t0) = match &a.restart {
        Some(p) => {
            run.add_input(p)?;
            let (v, t) = read_checkpoint(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            if v.grid != cfg.grid {
                return Err(usage(format!(
                    "checkpoint grid {:?} differs from the requested grid {:?}",
                    v.grid, cfg.grid
                )));
            }
            if t >= cfg.t_end {
                return Err(usage(format!(
                    "checkpoint time {t} is not before --t-end {}",
                    cfg.t_end
                )));
            }
            (v, t)
        }
        None => (perturbation_family(family, &cfg.grid)?.scaled(a.amplitude), 0.0),
    };
    let stepper = Stepper::new(cfg)?;
    let rec = run_trajectory(&stepper, &v0, t0, cfg.t_end)?;
    let last = *rec.last();
    let final_field = stepper.field(&rec.final_state);
    run.emit("trajectory.csv", rec.csv().as_bytes())?;
    run.emit("final.chk", &encode_checkpoint(&final_field, rec.final_state.t))?;
    let pts: Vec<(f64, f64)> = rec.samples.iter().map(|s| (s.t, s.l2)).collect();
    run.emit("trajectory_l2.dat", plot_data("t", "l2", &pts).as_bytes())?;
    if pts.iter().all(|p| p.1 > 0.0) {
        run.emit_svg(
            "trajectory_l2.svg",
            &[Series {
                label: "L2 norm".into(),
                points: pts,
            }],
            &PlotOptions {
                log_x: false,
                ..PlotOptions::log_log("perturbation energy norm", "t", "l2")
            },
        )?;
    }
    let head = format!(
        "t = {:.4} after {} steps: l2 {:.4e} -> {:.4e}, sup {:.4e}, div {:.1e}, wall {:.1e}",
        last.t,
        rec.steps,
        rec.first().l2,
        last.l2,
        last.sup,
        rec.max_div_residual(),
        rec.max_wall_residual()
    );
    match rec.status {
        RunStatus::Completed => Ok(Outcome::ok(format!("{head}\n"))),
        RunStatus::BlowUp { t } => Ok(Outcome::ok(format!("{head}\nblow-up detected at t = {t:.4}\n"))),
        RunStatus::NumericalFailure { t, message } => Err(CliError::Numerical(format!(
            "{head}\nnumerical failure at t = {t}: {message}; the last valid state is in final.chk"
        ))),
    }
}

fn run_trajectory(
    stepper: &Stepper,
    v0: &VelocityField,
    t0: f64,
    t_end: f64,
) -> Result<couette::sim::TrajectoryRecord, CliError> {
    let st = stepper.state_from_field(v0, t0)?;
    Ok(run(stepper, st, t_end, None)?)
}

#[derive(Serialize)]
struct ThresholdOutput<'a> {
    family: String,
    records: &'a [ThresholdRecord],
    gamma: Option<GammaFit>,
    delta_emp: Option<f64>,
    violations: usize,
}

fn threshold(a: &ThresholdArgs, cfg: &ThresholdConfig, family: Family, run: &Run) -> Result<Outcome, CliError> {
    let records = if a.shrink > 0.0 {
        threshold_sweep_continued(family, &a.r, cfg, a.shrink)?
    } else {
        let mut rs = a.r.clone();
        rs.sort_by(f64::total_cmp);
        threshold_sweep(family, &rs, cfg)?
    };
    let gamma = if records.len() >= 3 {
        Some(fit_gamma(&records)?)
    } else {
        None
    };
    let points = run_points(&records)?;
    let delta = delta_empirical(&points);
    let violations = delta.map_or(0, |d| consistency_check(&points, d).len());
    let out = ThresholdOutput {
        family: family.to_string(),
        records: &records,
        gamma,
        delta_emp: delta,
        violations,
    };
    run.emit(
        "thresholds.json",
        (serde_json::to_string_pretty(&out)? + "\n").as_bytes(),
    )?;
    let rows = records.iter().map(|r| {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{:?}",
            r.reynolds, r.alpha, r.bracket.lo, r.bracket.hi, r.h4_13, r.h4_2, r.weighted, r.monotone, r.outcome
        )
    });
    run.emit(
        "thresholds.csv",
        csv_table("R,alpha,lo,hi,h4_13,h4_2,weighted,monotone,outcome", rows).as_bytes(),
    )?;
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.reynolds, r.alpha)).collect();
    run.emit("alpha.dat", plot_data("R", "alpha", &pts).as_bytes())?;
    run.emit_svg(
        "alpha.svg",
        &[Series {
            label: out.family.clone(),
            points: pts,
        }],
        &PlotOptions::log_log("threshold amplitude", "R", "alpha"),
    )?;
    let mut s = String::new();
    for r in &records {
        s.push_str(&format!(
            "R = {}: alpha = {:.4e} in [{:.4e}, {:.4e}], {} probes, monotone {}\n",
            r.reynolds,
            r.alpha,
            r.bracket.lo,
            r.bracket.hi,
            r.probes.len(),
            r.monotone
        ));
    }
    if let Some(g) = gamma {
        s.push_str(&format!("gamma = {:.4} (log-log slope {:.4})\n", g.alpha, -g.alpha));
    }
    s.push_str(&format!(
        "delta_emp = {}, violations {violations}\n",
        delta.map_or("none".into(), |d| format!("{d:.4e}"))
    ));
    Ok(Outcome::ok(s))
}

/// One report with the Reynolds number it was run at, when that matters.
#[derive(Serialize)]
struct VerifyEntry {
    reynolds: Option<f64>,
    #[serde(flatten)]
    report: CheckReport,
}

fn gather_reports(
    a: &VerifyArgs,
    grid: &Grid,
    entry: Option<&FrozenEntry>,
    margin: f64,
) -> Result<Vec<VerifyEntry>, CliError> {
    let mut out = Vec::new();
    let tagged = |r: Option<f64>, report: CheckReport| VerifyEntry { reynolds: r, report };
    for check in &a.checks {
        match check.as_str() {
            "identity" => {
                for &r in &a.r {
                    out.push(tagged(Some(r), check_dissipation_identity(a.trials, grid, r, a.seed)?));
                }
            }
            "skew" => out.push(tagged(None, check_skew_symmetry(a.trials, grid, a.seed)?)),
            "nonlinearity" => {
                for &r in &a.r {
                    for rep in check_nonlinearity_bounds(a.trials, grid, r, a.seed)? {
                        out.push(tagged(Some(r), rep));
                    }
                }
            }
            "sobolev" => {
                let c = entry.expect("checked in prepare").sobolev;
                let (_, rep) =
                    check_sobolev_embedding(SOBOLEV_CALIBRATION_FIELDS, a.trials, grid, a.seed, Some(c), margin)?;
                out.push(tagged(None, rep));
            }
            "decay" => {
                let inputs = decay_battery()
                    .iter()
                    .map(|f| f.sample(60.0, 120_000))
                    .collect::<couette::Result<Vec<_>>>()?;
                out.push(tagged(None, check_decay_theorem(&inputs, &[0.0, 1.0, 2.0, 4.0, 8.0])?));
            }
            "forced-linear" => {
                let c = entry.expect("checked in prepare").theorem2;
                let cfg = Theorem2Config {
                    reynolds: a.r.clone(),
                    battery: a.battery,
                    seed: a.seed,
                    ..Theorem2Config::new(*grid)
                };
                let (_, _, rep) = check_theorem2(&cfg, Some(c), margin)?;
                out.push(tagged(None, rep));
            }
            other => return Err(usage(format!("unknown check '{other}'"))),
        }
    }
    Ok(out)
}

fn witness_stem(e: &VerifyEntry) -> String {
    match e.reynolds {
        Some(r) => format!("witnesses/{}-R{r}", e.report.check),
        None => format!("witnesses/{}", e.report.check),
    }
}

/// Failing witnesses as JSON, with the regenerated random inputs as
/// coefficient dumps next to them.
fn write_witnesses(entries: &[VerifyEntry], grid: &Grid, run: &Run) -> Result<usize, CliError> {
    let mut files = 0;
    for e in entries.iter().filter(|e| !e.report.pass) {
        let stem = witness_stem(e);
        #[derive(Serialize)]
        struct WitnessFile<'a> {
            check: &'a str,
            reynolds: Option<f64>,
            constant: f64,
            grid: Option<Grid>,
            witness: &'a couette::lab::Witness,
            fields: Vec<String>,
        }
        for w in &e.report.witnesses {
            let tag = match w.seed {
                Some(s) => format!("seed{s}"),
                None => format!("trial{}", w.trial),
            };
            let mut fields = Vec::new();
            if let Some(seed) = w.seed {
                if let Ok(vs) = witness_fields(&e.report.check, grid, seed) {
                    for (i, v) in vs.iter().enumerate() {
                        let name = format!("{stem}-{tag}-field{i}.chk");
                        run.emit(&name, &encode_checkpoint(v, 0.0))?;
                        fields.push(name);
                        files += 1;
                    }
                }
            }
            let body = WitnessFile {
                check: &e.report.check,
                reynolds: e.reynolds,
                constant: e.report.constant,
                grid: e.report.grid,
                witness: w,
                fields,
            };
            run.emit(
                &format!("{stem}-{tag}.json"),
                (serde_json::to_string_pretty(&body)? + "\n").as_bytes(),
            )?;
            files += 1;
        }
    }
    Ok(files)
}

fn verify(
    a: &VerifyArgs,
    grid: &Grid,
    constants: &FrozenConstants,
    overrides: &[(String, f64)],
    run: &Run,
) -> Result<Outcome, CliError> {
    if let Some(p) = &a.constants {
        run.add_input(p)?;
    }
    let mut entries = gather_reports(a, grid, constants.lookup(grid), constants.margin)?;
    for (check, c) in overrides {
        let mut hit = false;
        for e in entries.iter_mut().filter(|e| &e.report.check == check) {
            e.report = e.report.with_constant(*c);
            hit = true;
        }
        if !hit {
            log::warn!("--constant {check}={c} matches no report of this run");
        }
    }
    let reports: Vec<CheckReport> = entries.iter().map(|e| e.report.clone()).collect();
    let table = summary_table(&reports);
    run.emit(
        "verify.json",
        (serde_json::to_string_pretty(&entries)? + "\n").as_bytes(),
    )?;
    run.emit("verify.txt", table.as_bytes())?;
    let witnesses = write_witnesses(&entries, grid, run)?;
    let failing: Vec<String> = entries
        .iter()
        .filter(|e| !e.report.pass)
        .map(|e| match e.reynolds {
            Some(r) => format!("{} (R = {r})", e.report.check),
            None => e.report.check.clone(),
        })
        .collect();
    Ok(Outcome {
        summary: table,
        failure: (!failing.is_empty()).then(|| {
            format!(
                "failing checks: {}; {witnesses} witness files under {}",
                failing.join(", "),
                run.out.join("witnesses").display()
            )
        }),
    })
}

fn report(a: &ReportArgs, run: &Run) -> Result<Outcome, CliError> {
    let from = a.from.clone().unwrap_or_else(|| run.out.clone());
    let mut names: Vec<PathBuf> = std::fs::read_dir(&from)
        .map_err(|e| usage(format!("cannot read {}: {e}", from.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("manifest-") && n.ends_with(".json") && n != manifest_name("report"))
        })
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(usage(format!("no manifests in {}", from.display())));
    }
    let mut md = format!("# Run report\n\nSource directory: `{}`\n\n", from.display());
    md.push_str("| command | status | exit | outputs | changed since run |\n|---|---|---|---|---|\n");
    let mut stale_total = Vec::new();
    let mut sections = String::new();
    for p in &names {
        run.add_input(p)?;
        let m = RunManifest::read(p)?;
        let stale = m.stale_outputs(&from);
        md.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            m.command,
            m.status,
            m.exit_code,
            m.outputs.len(),
            if stale.is_empty() {
                "none".to_string()
            } else {
                stale.join(", ")
            }
        ));
        stale_total.extend(stale.into_iter().map(|s| format!("{}: {s}", m.command)));
        if let Some(msg) = &m.message {
            sections.push_str(&format!("\n## {}\n\n{msg}\n", m.command));
        }
    }
    let excerpt = |name: &str| std::fs::read_to_string(from.join(name)).ok();
    if let Some(t) = excerpt("verify.txt") {
        md.push_str(&format!("\n## Verification\n\n```\n{t}```\n"));
    }
    if let Some(j) = excerpt("scaling.json") {
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&j) {
            md.push_str("\n## Resolvent scaling exponents\n\n");
            if let Some(map) = v["exponents"].as_object() {
                for (k, e) in map {
                    md.push_str(&format!("- {k}: {}\n", e));
                }
            }
        }
    }
    if let Some(j) = excerpt("thresholds.json") {
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&j) {
            md.push_str(&format!(
                "\n## Threshold amplitudes\n\n- gamma: {}\n- delta_emp: {}\n- violations: {}\n",
                v["gamma"]["alpha"], v["delta_emp"], v["violations"]
            ));
        }
    }
    md.push_str(&sections);
    run.emit("report.md", md.as_bytes())?;
    Ok(Outcome {
        summary: md,
        failure: (!stale_total.is_empty())
            .then(|| format!("outputs changed after their run: {}", stale_total.join(", "))),
    })
}
