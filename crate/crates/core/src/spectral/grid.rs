//! Fourier–Chebyshev grid descriptor and horizontal wavenumber bookkeeping.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization of the periodic channel `[0, l1) x [-1, 1] x [0, l3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Streamwise Fourier modes.
    pub n1: usize,
    /// Wall-normal Chebyshev points.
    pub n2: usize,
    /// Spanwise Fourier modes.
    pub n3: usize,
    /// Streamwise period.
    pub l1: f64,
    /// Spanwise period.
    pub l3: f64,
}

impl Grid {
    pub fn new(n1: usize, n2: usize, n3: usize, l1: f64, l3: f64) -> Result<Self> {
        let g = Grid { n1, n2, n3, l1, l3 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n2 < 8 {
            return Err(Error::InvalidGrid(format!("n2 = {} < 8", self.n2)));
        }
        for (name, n) in [("n1", self.n1), ("n3", self.n3)] {
            if n == 0 {
                return Err(Error::InvalidGrid(format!("{name} must be at least 1")));
            }
            if n > 1 && n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be even")));
            }
        }
        if !(self.l1 > 0.0 && self.l1.is_finite() && self.l3 > 0.0 && self.l3.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "box lengths must be positive, got l1 = {}, l3 = {}",
                self.l1, self.l3
            )));
        }
        Ok(())
    }

    /// Number of horizontal modes.
    pub fn modes(&self) -> usize {
        self.n1 * self.n3
    }

    /// Number of spectral coefficients per velocity component.
    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset of `(j, i1, i3)` in the `[j][i1][i3]` component layout.
    #[inline]
    pub fn index(&self, j: usize, i1: usize, i3: usize) -> usize {
        (j * self.n1 + i1) * self.n3 + i3
    }

    /// Horizontal volume factor `l1 * l3` used by Parseval sums.
    pub fn area(&self) -> f64 {
        self.l1 * self.l3
    }

    pub fn k1(&self, i1: usize) -> f64 {
        2.0 * PI * fft_index(i1, self.n1) as f64 / self.l1
    }

    pub fn k3(&self, i3: usize) -> f64 {
        2.0 * PI * fft_index(i3, self.n3) as f64 / self.l3
    }

    /// Same grid with a different wall-normal resolution.
    pub fn with_n2(&self, n2: usize) -> Result<Self> {
        Grid::new(self.n1, n2, self.n3, self.l1, self.l3)
    }
}

/// Signed integer wavenumber for FFT slot `i` of an `n`-point transform.
#[inline]
pub fn fft_index(i: usize, n: usize) -> i64 {
    if n <= 1 || i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// One horizontal Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveMode {
    pub i1: usize,
    pub i3: usize,
    /// Signed integer indices.
    pub m: i64,
    pub n: i64,
    pub k1: f64,
    pub k3: f64,
    /// Slot of the conjugate-symmetry partner `(-m, -n)`.
    pub partner: (usize, usize),
}

impl WaveMode {
    pub fn k_squared(&self) -> f64 {
        self.k1 * self.k1 + self.k3 * self.k3
    }

    pub fn is_mean(&self) -> bool {
        self.m == 0 && self.n == 0
    }
}

/// All horizontal modes in FFT order (streamwise slot major).
pub fn wavenumbers(grid: &Grid) -> Vec<WaveMode> {
    let mut out = Vec::with_capacity(grid.modes());
    for i1 in 0..grid.n1 {
        for i3 in 0..grid.n3 {
            out.push(WaveMode {
                i1,
                i3,
                m: fft_index(i1, grid.n1),
                n: fft_index(i3, grid.n3),
                k1: grid.k1(i1),
                k3: grid.k3(i3),
                partner: ((grid.n1 - i1) % grid.n1, (grid.n3 - i3) % grid.n3),
            });
        }
    }
    out
}

/// Two-thirds rule: keep `|m| < n1/3` and `|n| < n3/3`. Same order as
/// [`wavenumbers`].
pub fn dealias_mask(grid: &Grid) -> Vec<bool> {
    wavenumbers(grid)
        .iter()
        .map(|w| keeps(w.m, grid.n1) && keeps(w.n, grid.n3))
        .collect()
}

#[inline]
fn keeps(m: i64, n: usize) -> bool {
    3 * m.unsigned_abs() < n as u64
}
