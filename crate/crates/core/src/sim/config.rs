use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::check_reynolds;
use crate::spectral::Grid;

/// Settings for one nonlinear run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: Grid,
    pub reynolds: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Evolve only the two-thirds dealiasing set.
    pub dealias: bool,
    /// Steps between trajectory samples.
    pub cadence: usize,
    /// Time span at the end of a run used to judge growth.
    pub growth_window: f64,
    /// Largest accepted CFL number.
    pub cfl_max: f64,
    /// Include `G(v)`; off gives the linearized problem.
    pub nonlinear: bool,
    /// Stop once the sup norm exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl SimConfig {
    pub fn new(grid: Grid, reynolds: f64) -> Self {
        SimConfig {
            grid,
            reynolds,
            dt: 0.05,
            t_end: 100.0,
            dealias: true,
            cadence: 20,
            growth_window: 20.0,
            cfl_max: 1.0,
            nonlinear: true,
            blowup_factor: 1e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        check_reynolds(self.reynolds)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.cadence == 0 {
            return Err(Error::InvalidInput("cadence must be at least one step".into()));
        }
        if !(self.cfl_max > 0.0) || !(self.blowup_factor > 1.0) || self.growth_window < 0.0 {
            return Err(Error::InvalidInput(
                "cfl_max > 0, blowup_factor > 1 and growth_window >= 0 required".into(),
            ));
        }
        if self.grid.n2 < 16 {
            return Err(Error::InvalidGrid(format!(
                "the time stepper needs n2 >= 16, got {}",
                self.grid.n2
            )));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (the last step is not shortened).
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}
