//! Pseudo-spectral simulation of perturbations of plane Couette flow and the
//! threshold-amplitude experiment.
//!
//! The perturbation `v` of `u = (x2, 0, 0) + v` obeys `v_t = Lv - G(v) - ∇p`,
//! `div v = 0`, `v = 0` at the walls, periodic in `x1` and `x3`.

mod checkpoint;
mod config;
mod families;
mod nonlinear;
mod stepper;
mod threshold;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::SimConfig;
pub use families::{perturbation_family, Family, FAMILY_NAMES};
pub use nonlinear::{convective_inner, nonlinear_term, trilinear};
pub use stepper::{mode_slots, step, Forcing, ModeSlot, SimState, StepInfo, Stepper};
pub use threshold::{
    classify, consistency_check, delta_empirical, fit_gamma, probe_shape, run_points, run_probe, threshold_search,
    threshold_search_with, threshold_sweep, threshold_sweep_continued, Bracket, Classification, GammaFit, Probe,
    RunPoint, ThresholdConfig, ThresholdRecord,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::linalg::quad_form;
use crate::norms::{grad_sq, h_tilde_norms, l2_norm, m_norm, sup_norm};
use crate::spectral::{wavenumbers, WallBasis};

/// Recorded quantities at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub l2: f64,
    pub m_norm: f64,
    pub htilde1: f64,
    pub htilde2: f64,
    pub sup: f64,
    pub div_residual: f64,
    pub wall_residual: f64,
    /// `-Re⟨v1, v2⟩`.
    pub production: f64,
    /// `(1/R) Σ_k ‖∂v/∂x_k‖²`.
    pub dissipation: f64,
}

pub const TRAJECTORY_CSV_HEADER: &str =
    "t,l2,m_norm,htilde1,htilde2,sup,div_residual,wall_residual,production,dissipation";

impl TrajectorySample {
    pub fn of(v: &VelocityField, t: f64, reynolds: f64) -> Result<Self> {
        let (h1, h2) = h_tilde_norms(v, reynolds)?;
        Ok(TrajectorySample {
            t,
            l2: l2_norm(v)?,
            m_norm: m_norm(v, reynolds)?,
            htilde1: h1,
            htilde2: h2,
            sup: sup_norm(v)?,
            div_residual: v.max_divergence()?,
            wall_residual: v.max_wall_value(),
            production: -cross_l2(v, 0, 1)?,
            dissipation: grad_sq(v, None)? / reynolds,
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t,
            self.l2,
            self.m_norm,
            self.htilde1,
            self.htilde2,
            self.sup,
            self.div_residual,
            self.wall_residual,
            self.production,
            self.dissipation
        )
    }
}

/// `Re⟨v_a, v_b⟩` over the box.
pub fn cross_l2(v: &VelocityField, a: usize, b: usize) -> Result<f64> {
    let v = v.to_spectral();
    let g = v.grid;
    let basis = WallBasis::get(g.n2)?;
    let mut s = 0.0;
    for w in wavenumbers(&g) {
        let pa = v.profile(a, w.i1, w.i3);
        let pb = v.profile(b, w.i1, w.i3);
        s += quad_form(&pa, &basis.mass, &pb).re;
    }
    Ok(s * g.area())
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Sup norm exceeded the blow-up multiple of its initial value.
    BlowUp {
        t: f64,
    },
    /// Non-finite values appeared; the last valid state is kept.
    NumericalFailure {
        t: f64,
        message: String,
    },
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub config: SimConfig,
    pub samples: Vec<TrajectorySample>,
    pub status: RunStatus,
    pub steps: usize,
    pub final_state: SimState,
}

impl TrajectoryRecord {
    pub fn csv(&self) -> String {
        let mut s = String::from(TRAJECTORY_CSV_HEADER);
        s.push('\n');
        for r in &self.samples {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples
            .last()
            .expect("a trajectory holds at least the initial sample")
    }

    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn max_div_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.div_residual).fold(0.0, f64::max)
    }

    pub fn max_wall_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.wall_residual).fold(0.0, f64::max)
    }
}

/// Run from `v0` to `cfg.t_end`.
pub fn simulate(v0: &VelocityField, cfg: &SimConfig) -> Result<TrajectoryRecord> {
    let stepper = Stepper::new(cfg)?;
    let st = stepper.state_from_field(v0, 0.0)?;
    run(&stepper, st, cfg.t_end, None)
}

/// Continue `st` until `t_end` with a prepared stepper, optionally forced.
pub fn run(stepper: &Stepper, mut st: SimState, t_end: f64, forcing: Option<Forcing>) -> Result<TrajectoryRecord> {
    let cfg = stepper.cfg;
    let r = cfg.reynolds;
    let first = TrajectorySample::of(&stepper.field(&st), st.t, r)?;
    let sup0 = first.sup;
    let mut samples = vec![first];
    let steps = ((t_end - st.t) / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let mut status = RunStatus::Completed;
    let mut done = 0;
    for k in 0..steps {
        let prev = st.clone();
        match stepper.step(&mut st, forcing) {
            Ok(info) => {
                done += 1;
                if sup0 > 0.0 && info.sup > cfg.blowup_factor * sup0 {
                    samples.push(TrajectorySample::of(&stepper.field(&st), st.t, r)?);
                    status = RunStatus::BlowUp { t: st.t };
                    break;
                }
            }
            Err(Error::Numerical(message)) => {
                st = prev;
                status = RunStatus::NumericalFailure { t: st.t, message };
                break;
            }
            Err(e) => return Err(e),
        }
        if (k + 1) % cfg.cadence == 0 || k + 1 == steps {
            let smp = TrajectorySample::of(&stepper.field(&st), st.t, r)?;
            let blown = sup0 > 0.0 && smp.sup > cfg.blowup_factor * sup0;
            samples.push(smp);
            if blown {
                status = RunStatus::BlowUp { t: st.t };
                break;
            }
        }
    }
    Ok(TrajectoryRecord {
        config: cfg,
        samples,
        status,
        steps: done,
        final_state: st,
    })
}

#[cfg(test)]
mod tests;
