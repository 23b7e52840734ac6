use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bounds::check_sobolev_embedding;
use super::linear::{check_theorem2, Theorem2Config};
use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Fresh trials must stay within this multiple of a frozen constant.
pub const FROZEN_MARGIN: f64 = 1.05;

/// Random fields in the Sobolev calibration set (seeds `0..N`).
pub const SOBOLEV_CALIBRATION_FIELDS: usize = 200;

const BUNDLED: &str = include_str!("../../constants/frozen.json");

/// Calibrated constants for one resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenEntry {
    pub grid: Grid,
    pub sobolev: f64,
    pub theorem2: f64,
    /// Worst forced-response ratio per Reynolds number at calibration.
    pub theorem2_trend: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenConstants {
    pub margin: f64,
    pub entries: Vec<FrozenEntry>,
}

/// Grid the bundled constants were calibrated on.
pub fn lab_grid() -> Grid {
    Grid::new(8, 17, 8, 4.0 * PI, 2.0 * PI).expect("valid lab grid")
}

impl FrozenConstants {
    /// Constants shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled constants parse")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: FrozenConstants = serde_json::from_str(s)?;
        if !(c.margin >= 1.0) || c.entries.iter().any(|e| !(e.sobolev > 0.0 && e.theorem2 > 0.0)) {
            return Err(Error::InvalidInput(
                "frozen constants must be positive, margin >= 1".into(),
            ));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn lookup(&self, grid: &Grid) -> Option<&FrozenEntry> {
        self.entries.iter().find(|e| e.grid == *grid)
    }

    /// Run both calibration batteries on `grid`.
    pub fn calibrate(grid: &Grid, theorem2: &Theorem2Config) -> Result<FrozenEntry> {
        let (sobolev, _) = check_sobolev_embedding(SOBOLEV_CALIBRATION_FIELDS, 0, grid, 0, None, FROZEN_MARGIN)?;
        let cfg = Theorem2Config {
            grid: *grid,
            ..theorem2.clone()
        };
        let (c, trend, _) = check_theorem2(&cfg, None, FROZEN_MARGIN)?;
        Ok(FrozenEntry {
            grid: *grid,
            sobolev,
            theorem2: c,
            theorem2_trend: trend,
        })
    }

    /// Insert or replace the entry for its grid.
    pub fn upsert(&mut self, entry: FrozenEntry) {
        match self.entries.iter_mut().find(|e| e.grid == entry.grid) {
            Some(e) => *e = entry,
            None => self.entries.push(entry),
        }
    }
}
