//! Numerical checks of the energy identity, the nonlinearity and Sobolev
//! bounds, the decay lemma and the linear forced-response estimate.
//!
//! Identities are checked at roundoff. Inequalities whose constant is not
//! known are calibrated on one battery, frozen, and re-checked on fresh
//! seeds at `1.05×` the frozen value.

mod bounds;
mod decay;
mod frozen;
mod functionals;
mod identity;
mod linear;
mod witness;

pub use bounds::{
    check_nonlinearity_bounds, check_sobolev_embedding, nonlinearity_ratios, sobolev_kernel_bound, sobolev_ratio,
    wall_concentrated, BoundRatios, A13_CONSTANT,
};
pub use decay::{check_decay_theorem, decay_battery, decay_ratios, DecayInput, TestFunction, DECAY_QUADRATURE_TOL};
pub use frozen::{lab_grid, FrozenConstants, FrozenEntry, FROZEN_MARGIN, SOBOLEV_CALIBRATION_FIELDS};
pub use functionals::{
    evaluate_functionals, implied_constant, simpson, trapezoid, FunctionalBundle, FunctionalSamples,
};
pub use identity::{check_dissipation_identity, check_skew_symmetry, dissipation_residual};
pub use linear::{
    check_theorem2, forcing_battery, initial_data_ratio, solve_forced, theorem2_ratio, ForcedSolution, ForcedSolver,
    ForcingTerm, SeparableForcing, SolverLadder, Theorem2Config, Theorem2Result, TimeProfile,
};
pub use witness::witness_fields;

use serde::{Deserialize, Serialize};

use crate::spectral::Grid;

/// Inputs that broke (or came closest to breaking) a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    /// Seed of the random input; `None` for deterministic inputs.
    pub seed: Option<u64>,
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Outcome of one check over a battery of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub trials: usize,
    pub worst_ratio: f64,
    pub constant: f64,
    pub pass: bool,
    pub grid: Option<Grid>,
    /// Failing inputs, or the worst one when all pass.
    pub witnesses: Vec<Witness>,
}

impl CheckReport {
    /// Build a report that passes iff every ratio is at most `constant`.
    pub fn from_witnesses(check: &str, grid: Option<Grid>, constant: f64, all: Vec<Witness>) -> Self {
        let trials = all.len();
        let worst = all.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).cloned();
        let worst_ratio = worst.as_ref().map_or(0.0, |w| w.ratio);
        let failing: Vec<Witness> = all.into_iter().filter(|w| !(w.ratio <= constant)).collect();
        let pass = failing.is_empty();
        CheckReport {
            check: check.to_string(),
            trials,
            worst_ratio,
            constant,
            pass,
            grid,
            witnesses: if pass { worst.into_iter().collect() } else { failing },
        }
    }

    /// The same report judged against another constant. Only the retained
    /// witnesses carry over, so tightening a passing report keeps just its
    /// worst trial.
    pub fn with_constant(&self, constant: f64) -> Self {
        let pass = self.worst_ratio <= constant;
        let witnesses = if pass {
            self.witnesses
                .iter()
                .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
                .cloned()
                .into_iter()
                .collect()
        } else {
            self.witnesses
                .iter()
                .filter(|w| !(w.ratio <= constant))
                .cloned()
                .collect()
        };
        CheckReport {
            constant,
            pass,
            witnesses,
            ..self.clone()
        }
    }

    pub fn summary_row(&self) -> String {
        format!(
            "{:<28} {:>6} {:>12.4e} {:>12.4e}  {}",
            self.check,
            self.trials,
            self.worst_ratio,
            self.constant,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

pub const SUMMARY_HEADER: &str = "check                        trials  worst ratio     constant  status";

/// Human-readable table of reports.
pub fn summary_table(reports: &[CheckReport]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&r.summary_row());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(trial: usize, ratio: f64) -> Witness {
        Witness {
            trial,
            seed: Some(trial as u64),
            label: String::new(),
            lhs: ratio,
            rhs: 1.0,
            ratio,
        }
    }

    #[test]
    fn pass_iff_worst_ratio_within_constant() {
        let r = CheckReport::from_witnesses("x", None, 1.0, vec![w(0, 0.2), w(1, 0.9)]);
        assert!(r.pass);
        assert_eq!(r.worst_ratio, 0.9);
        assert_eq!(r.witnesses[0].trial, 1);
        let r = CheckReport::from_witnesses("x", None, 0.5, vec![w(0, 0.2), w(1, 0.9), w(2, f64::NAN)]);
        assert!(!r.pass);
        assert_eq!(r.witnesses.len(), 2);
        assert!(summary_table(&[r.clone()]).contains("FAIL"));
        let loose = CheckReport::from_witnesses("x", None, 1.0, vec![w(0, 0.2), w(1, 0.9)]);
        let tight = loose.with_constant(0.5);
        assert!(!tight.pass && tight.constant == 0.5);
        assert_eq!(tight.witnesses.len(), 1);
        assert!(tight.with_constant(1.0).pass);
    }
}
