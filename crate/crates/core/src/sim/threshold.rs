//! Threshold-amplitude bisection.
//!
//! A probe at amplitude `α` runs `v0 = α (φ + ε ψ)` where `φ` is the family
//! shape and `ψ` a fixed noise field with the `L²` norm of `φ`, then
//! classifies the run:
//!
//! * transitioned: blow-up, or at the end of the run the sup norm exceeds
//!   `growth_factor` times its initial value and is not monotonically
//!   falling over the last growth window (some sample exceeds its
//!   predecessor, which holds for growing and for fluctuating signals);
//! * decayed: the `L²` norm fell below `decay_factor` times its initial value;
//! * otherwise the run is continued for another `t_end`, up to
//!   `max_extensions` times, and if still undecided the probe is
//!   indeterminate.
//!
//! A run stops as soon as its `L²` norm falls below the decay level.

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::families::{perturbation_family, Family};
use super::stepper::Stepper;
use super::{RunStatus, TrajectorySample};
use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::norms::{component_hk_sq, l2_norm, sup_norm};
use crate::resolvent::fit_power_law;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Decayed,
    Transitioned,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub sim: SimConfig,
    /// Initial amplitude bracket `(lo, hi)`.
    pub bracket: (f64, f64),
    /// Relative bracket width at which bisection stops.
    pub tol: f64,
    pub growth_factor: f64,
    pub decay_factor: f64,
    /// Bracket expansions allowed on each side before giving up.
    pub max_expansions: usize,
    pub expansion: f64,
    /// Relative size of the noise added to every initial condition.
    pub trigger: f64,
    pub trigger_seed: u64,
    /// Time-step halvings allowed after CFL rejections within one probe.
    pub max_refinements: usize,
    /// Continuations of an undecided run by another `t_end`.
    pub max_extensions: usize,
    /// When set, each search uses `t_end = horizon_per_reynolds · R`.
    pub horizon_per_reynolds: Option<f64>,
}

impl ThresholdConfig {
    pub fn new(sim: SimConfig) -> Self {
        ThresholdConfig {
            sim,
            bracket: (0.5, 10.0),
            tol: 0.02,
            growth_factor: 5.0,
            decay_factor: 0.1,
            max_expansions: 6,
            expansion: 3.0,
            trigger: 0.01,
            trigger_seed: 7919,
            max_refinements: 3,
            max_extensions: 2,
            horizon_per_reynolds: None,
        }
    }

    /// Settings of the threshold experiment on `grid`: time step 0.25,
    /// horizon `0.75 R` (extended up to twice), noise at 10 % of the family
    /// shape in `L²`.
    pub fn experiment(grid: crate::spectral::Grid) -> Self {
        let sim = SimConfig {
            dt: 0.25,
            cadence: 20,
            ..SimConfig::new(grid, 1000.0)
        };
        ThresholdConfig {
            trigger: 0.1,
            horizon_per_reynolds: Some(0.75),
            ..ThresholdConfig::new(sim)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let (lo, hi) = self.bracket;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("bad amplitude bracket ({lo}, {hi})")));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidInput(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.expansion > 1.0 && self.growth_factor > 1.0 && self.decay_factor > 0.0 && self.decay_factor < 1.0) {
            return Err(Error::InvalidInput(
                "expansion > 1, growth_factor > 1 and 0 < decay_factor < 1 required".into(),
            ));
        }
        if self.horizon_per_reynolds.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::InvalidInput("horizon_per_reynolds must be positive".into()));
        }
        if !(self.trigger >= 0.0) {
            return Err(Error::InvalidInput("trigger must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Evidence from one amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub alpha: f64,
    pub classification: Classification,
    /// Final over initial sup norm.
    pub sup_ratio: f64,
    /// Final over initial `L²` norm.
    pub l2_ratio: f64,
    /// Largest sup ratio reached.
    pub peak_sup_ratio: f64,
    pub t_final: f64,
    /// Continuations used.
    pub extensions: usize,
    pub note: Option<String>,
}

impl Probe {
    /// A probe carrying only a verdict (for synthetic classifiers).
    pub fn bare(alpha: f64, classification: Classification) -> Self {
        Probe {
            alpha,
            classification,
            sup_ratio: f64::NAN,
            l2_ratio: f64::NAN,
            peak_sup_ratio: f64::NAN,
            t_final: 0.0,
            extensions: 0,
            note: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// Largest amplitude seen to decay.
    pub lo: f64,
    /// Smallest amplitude seen not to decay.
    pub hi: f64,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub reynolds: f64,
    pub family: String,
    pub grid: crate::spectral::Grid,
    pub alpha: f64,
    pub bracket: Bracket,
    pub tol: f64,
    pub probes: Vec<Probe>,
    /// Every probe below the bracket decayed and every one above did not.
    pub monotone: bool,
    /// `Decayed` never appears here; `Transitioned` means a clean search.
    pub outcome: Classification,
    /// `‖(v1, v3)‖_{H⁴}` of the initial condition at `alpha`.
    pub h4_13: f64,
    /// `‖v2‖_{H⁴}` of the initial condition at `alpha`.
    pub h4_2: f64,
    /// `max(R³ h4_13, R⁴ h4_2)`.
    pub weighted: f64,
    pub trigger: f64,
}

impl ThresholdRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Verdict for a finished run, `None` when undecided.
pub fn classify(
    samples: &[TrajectorySample],
    status: &RunStatus,
    growth_window: f64,
    growth_factor: f64,
    decay_factor: f64,
) -> Option<Classification> {
    if matches!(status, RunStatus::BlowUp { .. }) {
        return Some(Classification::Transitioned);
    }
    let (first, last) = (samples.first()?, samples.last()?);
    if first.l2 == 0.0 {
        return Some(Classification::Decayed);
    }
    if last.l2 < decay_factor * first.l2 {
        return Some(Classification::Decayed);
    }
    let earlier = samples
        .iter()
        .rev()
        .find(|s| s.t <= last.t - growth_window)
        .unwrap_or(first);
    let window: Vec<f64> = samples.iter().filter(|s| s.t >= earlier.t).map(|s| s.sup).collect();
    let rising = window.windows(2).any(|w| w[1] > w[0]);
    if last.sup > growth_factor * first.sup && rising {
        return Some(Classification::Transitioned);
    }
    None
}

/// Bisection driver: `probe(α)` classifies one amplitude.
///
/// The bracket is first widened geometrically until `lo` decays and `hi`
/// does not, then halved until `hi - lo <= tol · mid`. Indeterminate probes
/// count as "did not decay".
pub fn threshold_search_with(
    mut probe: impl FnMut(f64) -> Result<Probe>,
    bracket: (f64, f64),
    tol: f64,
    max_expansions: usize,
    expansion: f64,
) -> Result<(Bracket, Vec<Probe>)> {
    let mut probes = Vec::new();
    let mut run = |a: f64, probes: &mut Vec<Probe>| -> Result<bool> {
        let p = probe(a)?;
        log::info!("alpha = {a:.6e}: {:?}", p.classification);
        let decayed = p.classification == Classification::Decayed;
        probes.push(p);
        Ok(decayed)
    };
    let (mut lo, mut hi) = bracket;
    let mut tries = 0;
    let mut hi_seen = false;
    while !run(lo, &mut probes)? {
        hi = hi.min(lo);
        hi_seen = true;
        if tries == max_expansions {
            return Err(Error::Numerical(format!(
                "no decaying amplitude found down to {lo:.3e}"
            )));
        }
        lo /= expansion;
        tries += 1;
    }
    tries = 0;
    while !hi_seen && (hi <= lo || run(hi, &mut probes)?) {
        lo = lo.max(hi);
        if tries == max_expansions {
            return Err(Error::Numerical(format!(
                "no transitioning amplitude found up to {hi:.3e}"
            )));
        }
        hi *= expansion;
        tries += 1;
    }
    let mut b = Bracket { lo, hi };
    while b.width() > tol * b.mid() {
        let m = b.mid();
        if run(m, &mut probes)? {
            b.lo = m;
        } else {
            b.hi = m;
        }
    }
    Ok((b, probes))
}

/// `true` when the probes are ordered: decays only below `b.lo`, no decay
/// at or above `b.hi`, and nothing indeterminate.
fn monotone(b: &Bracket, probes: &[Probe]) -> bool {
    probes.iter().all(|p| match p.classification {
        Classification::Decayed => p.alpha <= b.lo,
        Classification::Transitioned => p.alpha >= b.hi,
        Classification::Indeterminate => false,
    })
}

fn h4_components(v: &VelocityField) -> Result<(f64, f64)> {
    let c = component_hk_sq(v, 4)?;
    Ok(((c[0] + c[2]).sqrt(), c[1].sqrt()))
}

/// Unit-amplitude initial shape `φ + ε ψ` used by the search, with the noise
/// `ψ` scaled so that `‖ψ‖ = ‖φ‖` in `L²`.
pub fn probe_shape(family: Family, cfg: &ThresholdConfig) -> Result<VelocityField> {
    let phi = perturbation_family(family, &cfg.sim.grid)?;
    if cfg.trigger == 0.0 {
        return Ok(phi);
    }
    let noise = perturbation_family(Family::RandomNoise { seed: cfg.trigger_seed }, &cfg.sim.grid)?;
    phi.axpy(cfg.trigger * l2_norm(&phi)? / l2_norm(&noise)?, &noise)
}

/// Run one amplitude and classify it.
///
/// A step rejected by the CFL check is retried with half the time step, up
/// to `cfg.max_refinements` times.
pub fn run_probe(stepper: &Stepper, shape: &VelocityField, alpha: f64, cfg: &ThresholdConfig) -> Result<Probe> {
    let sim = stepper.cfg;
    let v0 = shape.scaled(alpha);
    let mut st = stepper.state_from_field(&v0, 0.0)?;
    let sample = |v: &VelocityField, t: f64| -> Result<TrajectorySample> {
        Ok(TrajectorySample {
            t,
            l2: l2_norm(v)?,
            sup: sup_norm(v)?,
            ..TrajectorySample::default()
        })
    };
    let mut samples = vec![sample(&v0, 0.0)?];
    let (l2_0, sup0) = (samples[0].l2, samples[0].sup);
    let every = sim.dt * sim.cadence as f64;
    let mut next_sample = every;
    let mut refined: Option<Stepper> = None;
    let mut peak = 1.0f64;
    let mut status = RunStatus::Completed;
    let mut extensions = 0;
    let mut note = None;
    let mut horizon = sim.t_end;
    let verdict = loop {
        while st.t < horizon - 1e-9 && status == RunStatus::Completed {
            let active = refined.as_ref().unwrap_or(stepper);
            match active.step(&mut st, None) {
                Ok(info) => {
                    peak = peak.max(info.sup / sup0);
                    if info.sup > sim.blowup_factor * sup0 {
                        status = RunStatus::BlowUp { t: st.t };
                    }
                }
                Err(Error::Cfl { cfl, suggested_dt }) => {
                    let dt = active.cfg.dt;
                    if dt > sim.dt * 0.5f64.powi(cfg.max_refinements as i32) * 1.5 {
                        log::debug!("CFL {cfl:.2} at t = {:.2}, halving dt {dt}", st.t);
                        let finer = SimConfig {
                            dt: (0.5 * dt).min(suggested_dt.max(0.25 * dt)),
                            ..sim
                        };
                        refined = Some(Stepper::new(&finer)?);
                        continue;
                    }
                    note = Some(format!("CFL {cfl:.2} at t = {:.2} with dt = {dt:.3e}", st.t));
                    let s = samples.last().expect("initial sample").sup;
                    status = if s > cfg.growth_factor * sup0 {
                        RunStatus::BlowUp { t: st.t }
                    } else {
                        RunStatus::NumericalFailure {
                            t: st.t,
                            message: "CFL limit hit before any growth".into(),
                        }
                    };
                }
                Err(Error::Numerical(message)) => {
                    status = RunStatus::NumericalFailure { t: st.t, message };
                }
                Err(e) => return Err(e),
            }
            if st.t >= next_sample - 1e-9 || st.t >= horizon - 1e-9 {
                let s = sample(&stepper.field(&st), st.t)?;
                peak = peak.max(s.sup / sup0);
                let decayed = s.l2 < cfg.decay_factor * l2_0;
                samples.push(s);
                while next_sample <= st.t + 1e-9 {
                    next_sample += every;
                }
                if decayed {
                    break;
                }
            }
        }
        if let RunStatus::NumericalFailure { message, .. } = &status {
            note = Some(message.clone());
            break Classification::Indeterminate;
        }
        match classify(
            &samples,
            &status,
            sim.growth_window,
            cfg.growth_factor,
            cfg.decay_factor,
        ) {
            Some(c) => break c,
            None if extensions < cfg.max_extensions => {
                extensions += 1;
                horizon += sim.t_end;
            }
            None => break Classification::Indeterminate,
        }
    };
    let last = samples.last().expect("initial sample");
    Ok(Probe {
        alpha,
        classification: verdict,
        sup_ratio: last.sup / sup0,
        l2_ratio: last.l2 / l2_0,
        peak_sup_ratio: peak,
        t_final: st.t,
        extensions,
        note,
    })
}

/// Bisect the threshold amplitude of `family` at Reynolds number `reynolds`.
pub fn threshold_search(family: Family, reynolds: f64, cfg: &ThresholdConfig) -> Result<ThresholdRecord> {
    let mut cfg = *cfg;
    cfg.sim.reynolds = reynolds;
    if let Some(c) = cfg.horizon_per_reynolds {
        cfg.sim.t_end = c * reynolds;
    }
    cfg.validate()?;
    let stepper = Stepper::new(&cfg.sim)?;
    let shape = probe_shape(family, &cfg)?;
    let (bracket, probes) = threshold_search_with(
        |a| run_probe(&stepper, &shape, a, &cfg),
        cfg.bracket,
        cfg.tol,
        cfg.max_expansions,
        cfg.expansion,
    )?;
    let alpha = bracket.mid();
    let (h4_13, h4_2) = h4_components(&shape.scaled(alpha))?;
    let mono = monotone(&bracket, &probes);
    Ok(ThresholdRecord {
        reynolds,
        family: family.to_string(),
        grid: cfg.sim.grid,
        alpha,
        bracket,
        tol: cfg.tol,
        monotone: mono,
        outcome: if mono {
            Classification::Transitioned
        } else {
            Classification::Indeterminate
        },
        probes,
        h4_13,
        h4_2,
        weighted: (reynolds.powi(3) * h4_13).max(reynolds.powi(4) * h4_2),
        trigger: cfg.trigger,
    })
}

/// Searches at several Reynolds numbers, run concurrently.
pub fn threshold_sweep(family: Family, reynolds: &[f64], cfg: &ThresholdConfig) -> Result<Vec<ThresholdRecord>> {
    crate::par::map(reynolds, |&r| threshold_search(family, r, cfg))
        .into_iter()
        .collect()
}

/// Searches at increasing Reynolds numbers, one after another, each
/// starting from the bracket `(shrink · α_prev, hi_prev)` of the previous
/// one. The bracket is still verified and widened as needed.
pub fn threshold_sweep_continued(
    family: Family,
    reynolds: &[f64],
    cfg: &ThresholdConfig,
    shrink: f64,
) -> Result<Vec<ThresholdRecord>> {
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(Error::InvalidInput(format!("shrink must lie in (0, 1), got {shrink}")));
    }
    let mut rs = reynolds.to_vec();
    rs.sort_by(f64::total_cmp);
    let mut out: Vec<ThresholdRecord> = Vec::with_capacity(rs.len());
    let mut c = *cfg;
    for r in rs {
        if let Some(prev) = out.last() {
            c.bracket = (shrink * prev.alpha, prev.bracket.hi);
        }
        let rec = threshold_search(family, r, &c)?;
        log::info!("R = {r}: alpha = {:.4e}", rec.alpha);
        out.push(rec);
    }
    Ok(out)
}

/// Exponents `γ` with `α(R) ∝ R^{-γ}`, for the amplitude and both component
/// norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub alpha: f64,
    pub h4_13: f64,
    pub h4_2: f64,
    /// RMS log residual of the amplitude fit.
    pub residual: f64,
}

pub fn fit_gamma(records: &[ThresholdRecord]) -> Result<GammaFit> {
    let mut rs: Vec<&ThresholdRecord> = records.iter().collect();
    rs.sort_by(|a, b| a.reynolds.total_cmp(&b.reynolds));
    let r: Vec<f64> = rs.iter().map(|x| x.reynolds).collect();
    let fit = |f: &dyn Fn(&ThresholdRecord) -> f64| fit_power_law(&r, &rs.iter().map(|x| f(x)).collect::<Vec<_>>());
    let a = fit(&|x| x.alpha)?;
    Ok(GammaFit {
        alpha: -a.exponent,
        h4_13: -fit(&|x| x.h4_13)?.exponent,
        h4_2: -fit(&|x| x.h4_2)?.exponent,
        residual: a.residual,
    })
}

/// One simulated initial condition reduced to what the decay statement needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunPoint {
    pub reynolds: f64,
    pub h4_13: f64,
    pub h4_2: f64,
    pub classification: Classification,
}

impl RunPoint {
    /// Smallest `δ` with `h4_13 ≤ δ/R³` and `h4_2 ≤ δ/R⁴`.
    pub fn weighted(&self) -> f64 {
        (self.reynolds.powi(3) * self.h4_13).max(self.reynolds.powi(4) * self.h4_2)
    }
}

/// Every probe of every record as a [`RunPoint`].
pub fn run_points(records: &[ThresholdRecord]) -> Result<Vec<RunPoint>> {
    let mut out = Vec::new();
    for r in records {
        // component norms are linear in α
        let (c13, c2) = (r.h4_13 / r.alpha, r.h4_2 / r.alpha);
        for p in &r.probes {
            out.push(RunPoint {
                reynolds: r.reynolds,
                h4_13: c13 * p.alpha,
                h4_2: c2 * p.alpha,
                classification: p.classification,
            });
        }
    }
    Ok(out)
}

/// Largest `δ` such that every run inside the `δ`-ball decayed: the smallest
/// weighted size among runs that did not decay. `None` when all runs decayed.
///
/// The ball is open: runs with weighted size strictly below the value all
/// decayed.
pub fn delta_empirical(points: &[RunPoint]) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.classification != Classification::Decayed)
        .map(RunPoint::weighted)
        .min_by(f64::total_cmp)
}

/// Runs inside the open `δ`-ball that did not decay.
pub fn consistency_check(points: &[RunPoint], delta: f64) -> Vec<RunPoint> {
    points
        .iter()
        .filter(|p| p.weighted() < delta && p.classification != Classification::Decayed)
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_classifier(cut: f64) -> impl FnMut(f64) -> Result<Probe> {
        move |a| {
            Ok(Probe::bare(
                a,
                if a < cut {
                    Classification::Decayed
                } else {
                    Classification::Transitioned
                },
            ))
        }
    }

    #[test]
    fn bisection_on_step_function() {
        for (tol, br) in [(0.02, (0.1, 1.0)), (1e-6, (0.3, 0.5)), (0.01, (0.9, 2.0))] {
            let (b, probes) = threshold_search_with(step_classifier(0.37), br, tol, 8, 3.0).unwrap();
            assert!(b.lo < 0.37 && 0.37 <= b.hi, "{b:?}");
            assert!(b.width() <= tol * b.mid());
            assert!((b.mid() - 0.37).abs() <= tol * 0.37 * 1.01);
            assert!(monotone(&b, &probes));
        }
    }

    #[test]
    fn unbracketable_classifiers_fail_loudly() {
        let always = |a| Ok(Probe::bare(a, Classification::Transitioned));
        assert!(threshold_search_with(always, (0.1, 1.0), 0.01, 3, 2.0).is_err());
        let never = |a| Ok(Probe::bare(a, Classification::Decayed));
        assert!(threshold_search_with(never, (0.1, 1.0), 0.01, 3, 2.0).is_err());
    }

    #[test]
    fn indeterminate_probes_break_monotonicity() {
        let cls = |a: f64| {
            Ok(Probe::bare(
                a,
                if a < 0.2 {
                    Classification::Decayed
                } else if a < 0.25 {
                    Classification::Indeterminate
                } else {
                    Classification::Transitioned
                },
            ))
        };
        let (b, probes) = threshold_search_with(cls, (0.1, 1.0), 0.01, 4, 2.0).unwrap();
        assert!(b.hi <= 0.25 && b.lo < 0.2 + 1e-12);
        assert!(!monotone(&b, &probes));
    }

    fn sample(t: f64, l2: f64, sup: f64) -> TrajectorySample {
        TrajectorySample {
            t,
            l2,
            sup,
            ..TrajectorySample::default()
        }
    }

    #[test]
    fn classification_rules() {
        let ok = RunStatus::Completed;
        let grow = [sample(0.0, 1.0, 1.0), sample(10.0, 3.0, 4.0), sample(20.0, 9.0, 6.0)];
        assert_eq!(classify(&grow, &ok, 10.0, 5.0, 0.1), Some(Classification::Transitioned));
        let peaked = [sample(0.0, 1.0, 1.0), sample(10.0, 3.0, 8.0), sample(20.0, 2.0, 6.0)];
        assert_eq!(classify(&peaked, &ok, 10.0, 5.0, 0.1), None);
        let turbulent = [
            sample(0.0, 1.0, 1.0),
            sample(10.0, 9.0, 30.0),
            sample(15.0, 8.0, 25.0),
            sample(20.0, 8.5, 27.0),
            sample(25.0, 8.0, 26.0),
        ];
        assert_eq!(
            classify(&turbulent, &ok, 10.0, 5.0, 0.1),
            Some(Classification::Transitioned)
        );
        let decay = [sample(0.0, 1.0, 1.0), sample(10.0, 0.05, 0.1)];
        assert_eq!(classify(&decay, &ok, 10.0, 5.0, 0.1), Some(Classification::Decayed));
        assert_eq!(
            classify(&peaked, &RunStatus::BlowUp { t: 3.0 }, 10.0, 5.0, 0.1),
            Some(Classification::Transitioned)
        );
    }

    #[test]
    fn empirical_delta_and_check() {
        let p = |r: f64, a: f64, c| RunPoint {
            reynolds: r,
            h4_13: a,
            h4_2: a,
            classification: c,
        };
        use Classification::*;
        let pts = [
            p(10.0, 1e-4, Decayed),
            p(10.0, 2e-4, Transitioned),
            p(20.0, 1e-5, Decayed),
            p(20.0, 3e-5, Indeterminate),
        ];
        let d = delta_empirical(&pts).unwrap();
        assert_eq!(d, (20f64.powi(4) * 3e-5).min(10f64.powi(4) * 2e-4));
        assert!(consistency_check(&pts, d).is_empty());
        assert_eq!(consistency_check(&pts, 10.0 * d).len(), 2);
        assert_eq!(delta_empirical(&pts[..1]), None);
    }
}
