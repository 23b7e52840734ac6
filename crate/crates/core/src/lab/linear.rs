use serde::{Deserialize, Serialize};

use super::functionals::{evaluate_functionals, FunctionalBundle, FunctionalSamples};
use super::{CheckReport, Witness};
use crate::error::{Error, Result};
use crate::field::{random_solenoidal, RandomFieldSpec, VelocityField};
use crate::norms::{h_tilde_norms, hk_norm, m_norm};
use crate::operator::apply_l;
use crate::sim::{SimConfig, SimState, Stepper};
use crate::spectral::Grid;

/// Scalar time factor `a(t)` of a separable forcing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeProfile {
    Constant,
    /// `e^{-λt}`.
    Exp {
        rate: f64,
    },
    /// `1 - e^{-λt}`.
    Ramp {
        rate: f64,
    },
    /// `e^{-λt} cos(ωt)`.
    Oscillating {
        rate: f64,
        omega: f64,
    },
    /// `t e^{-λt}`.
    Pulse {
        rate: f64,
    },
}

impl TimeProfile {
    /// `(a(t), a'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            TimeProfile::Constant => (1.0, 0.0),
            TimeProfile::Exp { rate } => {
                let e = (-rate * t).exp();
                (e, -rate * e)
            }
            TimeProfile::Ramp { rate } => {
                let e = (-rate * t).exp();
                (1.0 - e, rate * e)
            }
            TimeProfile::Oscillating { rate, omega } => {
                let e = (-rate * t).exp();
                let (s, c) = (omega * t).sin_cos();
                (e * c, -e * (rate * c + omega * s))
            }
            TimeProfile::Pulse { rate } => {
                let e = (-rate * t).exp();
                (t * e, e * (1.0 - rate * t))
            }
        }
    }
}

/// `a(t) g(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableForcing {
    pub shape: VelocityField,
    pub profile: TimeProfile,
}

/// Sum of separable terms on one grid; no terms means `f ≡ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingTerm {
    pub grid: Grid,
    pub label: String,
    pub terms: Vec<SeparableForcing>,
}

impl ForcingTerm {
    pub fn zero(grid: &Grid) -> Self {
        ForcingTerm {
            grid: *grid,
            label: "zero".into(),
            terms: Vec::new(),
        }
    }

    pub fn single(label: &str, shape: VelocityField, profile: TimeProfile) -> Self {
        ForcingTerm {
            grid: shape.grid,
            label: label.into(),
            terms: vec![SeparableForcing { shape, profile }],
        }
    }

    /// `f(·, t)` and `f_t(·, t)`.
    pub fn at(&self, t: f64) -> Result<(VelocityField, VelocityField)> {
        let mut f = VelocityField::zeros(&self.grid);
        let mut ft = VelocityField::zeros(&self.grid);
        for term in &self.terms {
            let (a, da) = term.profile.eval(t);
            f = f.axpy(a, &term.shape)?;
            ft = ft.axpy(da, &term.shape)?;
        }
        Ok((f, ft))
    }

    /// The theorem-proof forcing `e^{-t}(L+1)v⁽⁰⁾`.
    pub fn shifted_initial(v0: &VelocityField, reynolds: f64) -> Result<Self> {
        let shape = apply_l(v0, reynolds)?.axpy(1.0, v0)?;
        Ok(ForcingTerm::single(
            "exp(-t) (L+1) v0",
            shape,
            TimeProfile::Exp { rate: 1.0 },
        ))
    }
}

/// Time samples of the forced linear solution and the norms entering the
/// estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcedSolution {
    pub samples: FunctionalSamples,
    pub w_final: VelocityField,
    /// Uniform step away from `t = 0`.
    pub dt: f64,
}

/// Exponential-integrator solver for `w_t + ∇p = Lw + f`, `w(0) = 0`.
///
/// Away from the origin the step is uniform. The first Simpson panel is
/// replaced by `grading` octaves `[2dt/2^j, 2dt/2^{j-1}]`, each split into
/// `per_octave` panels, plus `per_octave` panels on `[0, 2dt/2^grading]`.
/// When `f(0)` violates the wall conditions `‖w_t‖_H̃₁²` has a boundary
/// layer at `t = 0` whose width does not shrink with `dt`.
pub struct ForcedSolver {
    pub grid: Grid,
    pub reynolds: f64,
    pub dt: f64,
    /// `steppers[0]` has step `dt`, `steppers[j]` has `dt / (per_octave 2^j)`.
    steppers: Vec<Stepper>,
    schedule: Vec<usize>,
}

impl ForcedSolver {
    /// `t_end / (2 dt)` is rounded up to a whole number of panels.
    pub fn new(grid: &Grid, reynolds: f64, t_end: f64, dt: f64, grading: usize, per_octave: usize) -> Result<Self> {
        if !(t_end > 0.0 && dt > 0.0) || per_octave == 0 {
            return Err(Error::InvalidInput(format!(
                "need t_end, dt > 0 and per_octave >= 1, got {t_end}, {dt}, {per_octave}"
            )));
        }
        let panels = (t_end / (2.0 * dt) - 1e-9).ceil().max(1.0) as usize;
        let dt = t_end / (2 * panels) as f64;
        let steppers = (0..=grading)
            .map(|j| {
                let step = if j == 0 {
                    dt
                } else {
                    dt / (per_octave as f64 * (1u64 << j) as f64)
                };
                Stepper::new(&SimConfig {
                    dt: step,
                    t_end,
                    cadence: 1,
                    nonlinear: false,
                    cfl_max: f64::INFINITY,
                    ..SimConfig::new(*grid, reynolds)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut schedule = Vec::new();
        if grading == 0 {
            schedule.extend([0, 0]);
        } else {
            schedule.extend(std::iter::repeat(grading).take(2 * per_octave));
            for j in (1..=grading).rev() {
                schedule.extend(std::iter::repeat(j).take(2 * per_octave));
            }
        }
        schedule.extend(std::iter::repeat(0).take(2 * (panels - 1)));
        Ok(ForcedSolver {
            grid: *grid,
            reynolds,
            dt,
            steppers,
            schedule,
        })
    }

    pub fn solve(&self, forcing: &ForcingTerm) -> Result<ForcedSolution> {
        if forcing.grid != self.grid {
            return Err(Error::GridMismatch("forcing and solver grids differ".into()));
        }
        let r = self.reynolds;
        let f = |t: f64| -> Result<VelocityField> { Ok(forcing.at(t)?.0) };
        let f: &(dyn Fn(f64) -> Result<VelocityField> + Sync) = &f;
        let forcing_arg = if forcing.terms.is_empty() { None } else { Some(f) };

        let (f0, _) = forcing.at(0.0)?;
        let (_, f0_h2) = h_tilde_norms(&f0, r)?;
        let shifted = apply_l(&f0, r)?.axpy(1.0, &f0)?;
        let mut samples = FunctionalSamples {
            f0_htilde2: f0_h2 * f0_h2,
            f0_shifted_m: m_norm(&shifted, r)?.powi(2),
            ..Default::default()
        };
        let base = &self.steppers[0];
        let mut record = |st: &SimState| -> Result<()> {
            let w = base.field(st);
            let rate = base.rate(st, forcing_arg)?;
            let wt = base.field(&SimState { t: st.t, coeffs: rate });
            let (ft, ftt) = forcing.at(st.t)?;
            samples.push(st.t, &w, &wt, &ft, &ftt, r)
        };
        let mut st = base.zero_state(0.0);
        record(&st)?;
        for &j in &self.schedule {
            self.steppers[j].step(&mut st, forcing_arg)?;
            record(&st)?;
        }
        Ok(ForcedSolution {
            samples,
            w_final: base.field(&st),
            dt: self.dt,
        })
    }
}

/// One-off [`ForcedSolver`] run.
pub fn solve_forced(
    forcing: &ForcingTerm,
    reynolds: f64,
    t_end: f64,
    dt: f64,
    grading: usize,
    per_octave: usize,
) -> Result<ForcedSolution> {
    ForcedSolver::new(&forcing.grid, reynolds, t_end, dt, grading, per_octave)?.solve(forcing)
}

/// Settings for the forced-response estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Config {
    pub grid: Grid,
    pub reynolds: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    /// Largest accepted relative Simpson–trapezoid gap.
    pub quadrature_tol: f64,
    pub max_halvings: usize,
    /// Geometric panels resolving the start of the run.
    pub grading: usize,
    /// Panels per octave at the coarsest step; doubled with every halving.
    pub per_octave: usize,
    pub battery: usize,
    pub seed: u64,
}

impl Theorem2Config {
    pub fn new(grid: Grid) -> Self {
        Theorem2Config {
            grid,
            reynolds: vec![10.0, 100.0, 1000.0],
            t_end: 10.0,
            dt: 0.05,
            quadrature_tol: 0.01,
            max_halvings: 3,
            grading: 12,
            per_octave: 2,
            battery: 20,
            seed: 2024,
        }
    }
}

/// Both sides of the estimate for one forcing, with unit constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Result {
    pub label: String,
    pub reynolds: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub dt: f64,
    pub quadrature_gap: f64,
    pub bundle: FunctionalBundle,
}

/// Solvers for one Reynolds number at `dt, dt/2, dt/4, ...`, built on
/// first use.
pub struct SolverLadder {
    cfg: Theorem2Config,
    reynolds: f64,
    levels: Vec<std::sync::OnceLock<std::result::Result<ForcedSolver, String>>>,
}

impl SolverLadder {
    pub fn new(cfg: &Theorem2Config, reynolds: f64) -> Self {
        SolverLadder {
            cfg: cfg.clone(),
            reynolds,
            levels: (0..=cfg.max_halvings).map(|_| std::sync::OnceLock::new()).collect(),
        }
    }

    fn level(&self, k: usize) -> Result<&ForcedSolver> {
        let c = &self.cfg;
        self.levels[k]
            .get_or_init(|| {
                ForcedSolver::new(
                    &c.grid,
                    self.reynolds,
                    c.t_end,
                    c.dt / (1u64 << k) as f64,
                    c.grading,
                    c.per_octave << k,
                )
                .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| Error::Numerical(e.clone()))
    }

    /// `N(w, T) / M₀(f, T)`, halving the step until Simpson and the
    /// trapezoid rule agree to `quadrature_tol`.
    pub fn ratio(&self, forcing: &ForcingTerm) -> Result<Theorem2Result> {
        let mut gap = f64::NAN;
        for k in 0..self.levels.len() {
            let solver = self.level(k)?;
            let sol = solver.solve(forcing)?;
            let bundle = evaluate_functionals(&sol.samples, self.reynolds)?;
            gap = bundle.quadrature_gap;
            if gap <= self.cfg.quadrature_tol {
                let (lhs, rhs) = (bundle.n_value, bundle.m0_value);
                return Ok(Theorem2Result {
                    label: forcing.label.clone(),
                    reynolds: self.reynolds,
                    lhs,
                    rhs,
                    ratio: if lhs == 0.0 { 0.0 } else { lhs / rhs },
                    dt: sol.dt,
                    quadrature_gap: gap,
                    bundle,
                });
            }
        }
        Err(Error::Numerical(format!(
            "{}: time integrals still under-resolved after {} halvings (gap {gap:.2e})",
            forcing.label, self.cfg.max_halvings
        )))
    }
}

/// [`SolverLadder::ratio`] for a single forcing.
pub fn theorem2_ratio(forcing: &ForcingTerm, reynolds: f64, cfg: &Theorem2Config) -> Result<Theorem2Result> {
    let c = Theorem2Config {
        grid: forcing.grid,
        ..cfg.clone()
    };
    SolverLadder::new(&c, reynolds).ratio(forcing)
}

/// `battery` forcings mixing random shapes with every time profile, the
/// first one being the theorem-proof forcing.
pub fn forcing_battery(grid: &Grid, reynolds: f64, battery: usize, seed: u64) -> Result<Vec<ForcingTerm>> {
    let profiles = [
        TimeProfile::Constant,
        TimeProfile::Exp { rate: 0.5 },
        TimeProfile::Ramp { rate: 1.0 },
        TimeProfile::Oscillating { rate: 0.2, omega: 1.5 },
        TimeProfile::Pulse { rate: 1.0 },
    ];
    let shape_spec = |s: u64, deg: usize| RandomFieldSpec {
        max_degree: Some(deg),
        ..RandomFieldSpec::seeded(s)
    };
    let mut out = Vec::with_capacity(battery);
    if battery > 0 {
        let v0 = random_solenoidal(grid, &shape_spec(seed, grid.n2 - 4))?;
        out.push(ForcingTerm::shifted_initial(&v0, reynolds)?);
    }
    for i in 1..battery {
        let s = seed + i as u64;
        let p = profiles[i % profiles.len()];
        let shape = random_solenoidal(grid, &shape_spec(s, grid.n2 - 2))?;
        let mut f = ForcingTerm::single(&format!("seed {s}, {p:?}"), shape, p);
        if i % 3 == 0 {
            let extra = random_solenoidal(grid, &shape_spec(s + 10_000, grid.n2 - 2))?;
            f.terms.push(SeparableForcing {
                shape: extra.scaled(0.5),
                profile: profiles[(i + 2) % profiles.len()],
            });
            f.label.push_str(" + second term");
        }
        out.push(f);
    }
    Ok(out)
}

/// `M₀(e^{-t}(L+1)v⁽⁰⁾, T) / (R² ‖v⁽⁰⁾‖²_{H⁴,m})`.
pub fn initial_data_ratio(v0: &VelocityField, reynolds: f64, cfg: &Theorem2Config) -> Result<f64> {
    let f = ForcingTerm::shifted_initial(v0, reynolds)?;
    let res = theorem2_ratio(&f, reynolds, cfg)?;
    let h4 = hk_norm(v0, 4, Some(reynolds))?;
    Ok(res.rhs / (reynolds * reynolds * h4 * h4))
}

/// Calibrate one constant over the battery at every Reynolds number (or
/// use `frozen`) and check every forcing against `margin` times it. The
/// per-R worst ratios are returned for the trend.
pub fn check_theorem2(
    cfg: &Theorem2Config,
    frozen: Option<f64>,
    margin: f64,
) -> Result<(f64, Vec<(f64, f64)>, CheckReport)> {
    let mut results = Vec::new();
    for &r in &cfg.reynolds {
        let battery = forcing_battery(&cfg.grid, r, cfg.battery, cfg.seed)?;
        let ladder = SolverLadder::new(cfg, r);
        let rows = crate::par::map(&battery, |f| ladder.ratio(f));
        for row in rows {
            results.push(row?);
        }
    }
    let c_emp = frozen.unwrap_or_else(|| results.iter().map(|r| r.ratio).fold(0.0, f64::max));
    let trend = cfg
        .reynolds
        .iter()
        .map(|&r| {
            let worst = results
                .iter()
                .filter(|x| x.reynolds == r)
                .map(|x| x.ratio)
                .fold(0.0, f64::max);
            (r, worst)
        })
        .collect();
    let witnesses = results
        .iter()
        .enumerate()
        .map(|(trial, r)| Witness {
            trial,
            seed: None,
            label: format!("R = {}, {}", r.reynolds, r.label),
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.ratio,
        })
        .collect();
    Ok((
        c_emp,
        trend,
        CheckReport::from_witnesses("forced-linear-estimate", Some(cfg.grid), margin * c_emp, witnesses),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(4, 17, 4, 2.0 * PI, PI).unwrap()
    }

    fn cfg() -> Theorem2Config {
        Theorem2Config {
            reynolds: vec![10.0, 100.0],
            t_end: 4.0,
            dt: 0.1,
            battery: 4,
            ..Theorem2Config::new(grid())
        }
    }

    #[test]
    fn profiles_have_consistent_derivatives() {
        for p in [
            TimeProfile::Constant,
            TimeProfile::Exp { rate: 0.7 },
            TimeProfile::Ramp { rate: 2.0 },
            TimeProfile::Oscillating { rate: 0.3, omega: 4.0 },
            TimeProfile::Pulse { rate: 1.5 },
        ] {
            for t in [0.0, 0.4, 3.0] {
                let h = 1e-5;
                let fd = (p.eval(t + h).0 - p.eval(t - h).0) / (2.0 * h);
                assert!((fd - p.eval(t).1).abs() < 1e-8, "{p:?}");
            }
        }
    }

    #[test]
    fn zero_forcing_gives_zero_sides() {
        let res = theorem2_ratio(&ForcingTerm::zero(&grid()), 100.0, &cfg()).unwrap();
        assert_eq!((res.lhs, res.rhs, res.ratio), (0.0, 0.0, 0.0));
    }

    /// A steady forcing `f = -(L g)` with `g` in the mean mode makes
    /// `w(t) = (1 - e^{-λt}) g` exact when `g` is a heat eigenfunction.
    #[test]
    fn mean_mode_forcing_matches_closed_form() {
        let g = grid();
        let r = 20.0;
        let nodes = crate::spectral::chebyshev_nodes(g.n2).unwrap();
        let prof: Vec<crate::C64> = nodes
            .iter()
            .map(|y| crate::C64::new((PI * y / 2.0).cos(), 0.0))
            .collect();
        let mut shape = VelocityField::zeros(&g);
        shape.set_profile(2, 0, 0, &prof);
        let lambda = PI * PI / (4.0 * r);
        let f = ForcingTerm::single("steady", shape.scaled(lambda), TimeProfile::Constant);
        let sol = solve_forced(&f, r, 2.0, 0.05, 4, 3).unwrap();
        assert_eq!(sol.samples.t.len(), 2 * 19 + 1 + 2 * 3 * 5);
        assert!((sol.samples.t.last().unwrap() - 2.0).abs() < 1e-12);
        let expect = (1.0 - (-lambda * 2.0).exp()) * crate::norms::l2_norm(&shape).unwrap();
        let got = crate::norms::l2_norm(&sol.w_final).unwrap();
        assert!((got - expect).abs() < 1e-6 * expect, "{got} vs {expect}");
    }

    #[test]
    fn n_is_nondecreasing_along_forced_runs() {
        let c = cfg();
        for f in forcing_battery(&c.grid, 100.0, 4, 3).unwrap() {
            let res = theorem2_ratio(&f, 100.0, &c).unwrap();
            assert!(res.bundle.n_is_nondecreasing(1e-9), "{}", f.label);
            assert!(res.quadrature_gap <= c.quadrature_tol);
            assert!(res.lhs > 0.0 && res.rhs > 0.0);
        }
    }

    #[test]
    fn calibrated_constant_covers_the_battery() {
        let (c, trend, rep) = check_theorem2(&cfg(), None, 1.05).unwrap();
        assert!(c > 0.0 && c.is_finite());
        assert_eq!(trend.len(), 2);
        assert!(rep.pass);
        assert_eq!(rep.trials, 8);
    }

    #[test]
    fn initial_data_bound_is_finite() {
        let g = grid();
        let v0 = random_solenoidal(
            &g,
            &RandomFieldSpec {
                max_degree: Some(g.n2 - 4),
                ..RandomFieldSpec::seeded(5)
            },
        )
        .unwrap();
        let q = initial_data_ratio(&v0, 100.0, &cfg()).unwrap();
        assert!(q > 0.0 && q.is_finite());
    }
}
