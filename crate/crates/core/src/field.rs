//! Three-component velocity fields on a [`Grid`].
//!
//! Each component is stored as `[j][i1][i3]`: wall-normal node `j`,
//! streamwise slot `i1`, spanwise slot `i3`. In the spectral representation
//! the horizontal directions hold Fourier coefficients and `x2` holds nodal
//! values at the Gauss–Lobatto points; in the physical representation all
//! three directions hold samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{czero, rmatvec};
use crate::spectral::{dealias_mask, wavenumbers, Grid, PlaneFft, WallBasis};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Repr {
    Spectral,
    Physical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: Grid,
    pub repr: Repr,
    pub comps: [Vec<C64>; 3],
}

impl VelocityField {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.len();
        VelocityField {
            grid: *grid,
            repr: Repr::Spectral,
            comps: [vec![czero(); n], vec![czero(); n], vec![czero(); n]],
        }
    }

    /// Wall-normal profile of component `c` at horizontal slot `(i1, i3)`.
    pub fn profile(&self, c: usize, i1: usize, i3: usize) -> Vec<C64> {
        (0..self.grid.n2)
            .map(|j| self.comps[c][self.grid.index(j, i1, i3)])
            .collect()
    }

    pub fn set_profile(&mut self, c: usize, i1: usize, i3: usize, values: &[C64]) {
        assert_eq!(values.len(), self.grid.n2);
        for (j, v) in values.iter().enumerate() {
            let idx = self.grid.index(j, i1, i3);
            self.comps[c][idx] = *v;
        }
    }

    /// All three profiles at slot `(i1, i3)`.
    pub fn mode(&self, i1: usize, i3: usize) -> [Vec<C64>; 3] {
        [
            self.profile(0, i1, i3),
            self.profile(1, i1, i3),
            self.profile(2, i1, i3),
        ]
    }

    pub fn set_mode(&mut self, i1: usize, i3: usize, u: &[Vec<C64>; 3]) {
        for (c, p) in u.iter().enumerate() {
            self.set_profile(c, i1, i3, p);
        }
    }

    pub fn check_grid(&self, other: &VelocityField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        if self.repr != other.repr {
            return Err(Error::GridMismatch("representation differs".into()));
        }
        Ok(())
    }

    fn transform(&self, target: Repr) -> Self {
        if self.repr == target {
            return self.clone();
        }
        let g = self.grid;
        let fft = PlaneFft::new(g.n1, g.n3);
        let plane = g.n1 * g.n3;
        let mut out = self.clone();
        for comp in out.comps.iter_mut() {
            for chunk in comp.chunks_mut(plane) {
                match target {
                    Repr::Physical => fft.inverse(chunk),
                    Repr::Spectral => fft.forward(chunk),
                }
            }
        }
        out.repr = target;
        out
    }

    pub fn to_physical(&self) -> Self {
        self.transform(Repr::Physical)
    }

    pub fn to_spectral(&self) -> Self {
        self.transform(Repr::Spectral)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.comps.iter_mut().for_each(|c| c.iter_mut().for_each(|v| *v *= s));
        out
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &VelocityField) -> Result<Self> {
        self.check_grid(other)?;
        let mut out = self.clone();
        for c in 0..3 {
            for (x, y) in out.comps[c].iter_mut().zip(&other.comps[c]) {
                *x += a * y;
            }
        }
        Ok(out)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter().map(|v| v.norm()))
            .fold(0.0, f64::max)
    }

    /// Spectral divergence `i k1 u1 + D u2 + i k3 u3` at every node and mode.
    pub fn divergence(&self) -> Result<Vec<C64>> {
        let f = self.to_spectral();
        let g = f.grid;
        let b = WallBasis::get(g.n2)?;
        let mut div = vec![czero(); g.len()];
        for w in wavenumbers(&g) {
            let u = f.mode(w.i1, w.i3);
            let du2 = rmatvec(&b.d1, &u[1]);
            for j in 0..g.n2 {
                div[g.index(j, w.i1, w.i3)] = C64::new(0.0, w.k1) * u[0][j] + du2[j] + C64::new(0.0, w.k3) * u[2][j];
            }
        }
        Ok(div)
    }

    /// Largest divergence magnitude over all coefficients.
    pub fn max_divergence(&self) -> Result<f64> {
        Ok(self.divergence()?.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    /// Largest magnitude on the two walls (`j = 0` and `j = n2 - 1`).
    pub fn max_wall_value(&self) -> f64 {
        let g = self.grid;
        let plane = g.n1 * g.n3;
        let top = 0..plane;
        let bottom = (g.n2 - 1) * plane..g.n2 * plane;
        self.comps
            .iter()
            .flat_map(|c| {
                c[top.clone()]
                    .iter()
                    .chain(&c[bottom.clone()])
                    .map(|v| v.norm())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Largest violation of `u(-k) = conj(u(k))` among spectral coefficients.
    pub fn hermitian_defect(&self) -> f64 {
        let f = self.to_spectral();
        let g = f.grid;
        let mut worst: f64 = 0.0;
        for w in wavenumbers(&g) {
            let (p1, p3) = w.partner;
            for c in 0..3 {
                for j in 0..g.n2 {
                    let a = f.comps[c][g.index(j, w.i1, w.i3)];
                    let b = f.comps[c][g.index(j, p1, p3)];
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst
    }

    /// Fraction of `sum |u|^2` carried by the listed horizontal slots.
    pub fn energy_fraction(&self, slots: &[(usize, usize)]) -> f64 {
        let f = self.to_spectral();
        let g = f.grid;
        let total: f64 = f.comps.iter().flatten().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mut part = 0.0;
        for &(i1, i3) in slots {
            for c in 0..3 {
                for j in 0..g.n2 {
                    part += f.comps[c][g.index(j, i1, i3)].norm_sqr();
                }
            }
        }
        part / total
    }
}

/// Options for [`random_solenoidal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldSpec {
    pub seed: u64,
    /// Coefficient envelope `exp(-decay * (p + |m| + |n|))` with `p` the
    /// wall-normal basis index.
    pub decay: f64,
    /// Highest wall-normal polynomial degree used (defaults to `n2 - 2`).
    pub max_degree: Option<usize>,
    /// Restrict horizontal content to the two-thirds dealiasing set.
    pub dealiased: bool,
}

impl Default for RandomFieldSpec {
    fn default() -> Self {
        RandomFieldSpec {
            seed: 0,
            decay: 0.4,
            max_degree: None,
            dealiased: true,
        }
    }
}

impl RandomFieldSpec {
    pub fn seeded(seed: u64) -> Self {
        RandomFieldSpec {
            seed,
            ..Default::default()
        }
    }
}

/// Random real-valued, solenoidal, no-slip field built from random normal
/// velocity and normal vorticity coefficients (and Dirichlet mean-flow
/// profiles for the `k = 0` mode).
pub fn random_solenoidal(grid: &Grid, spec: &RandomFieldSpec) -> Result<VelocityField> {
    grid.validate()?;
    let b = WallBasis::get(grid.n2)?;
    let dmax = spec.max_degree.unwrap_or(grid.n2 - 2).min(grid.n2 - 1);
    if dmax < 4 {
        return Err(Error::Resolution(format!(
            "max_degree {dmax} leaves no clamped basis functions"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let modes = wavenumbers(grid);
    let mask = dealias_mask(grid);
    let mut f = VelocityField::zeros(grid);
    let sample = |rng: &mut ChaCha8Rng, scale: f64, real: bool| -> C64 {
        let re = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        C64::new(re, if real { 0.0 } else { im }) * scale
    };
    for (w, &keep) in modes.iter().zip(&mask) {
        if spec.dealiased && !keep {
            continue;
        }
        // visit one member of each conjugate pair, skipping self-conjugate
        // slots other than the mean
        let self_conj = w.partner == (w.i1, w.i3);
        if self_conj && !w.is_mean() {
            continue;
        }
        if !w.is_mean() && (w.n < 0 || (w.n == 0 && w.m < 0)) {
            continue;
        }
        let horiz = (w.m.abs() + w.n.abs()) as f64;
        let env = |p: usize| (-spec.decay * (p as f64 + horiz)).exp();
        let len = b.state_len(w.k1, w.k3);
        let mut state = vec![czero(); len];
        if w.is_mean() {
            let ne = b.ne();
            for p in 0..=(dmax - 2) {
                state[p] = sample(&mut rng, env(p), true);
                state[ne + p] = sample(&mut rng, env(p), true);
            }
        } else {
            let nv = b.nv();
            for p in 0..=(dmax - 4) {
                state[p] = sample(&mut rng, env(p), false);
            }
            for p in 0..=(dmax - 2) {
                state[nv + p] = sample(&mut rng, env(p), false);
            }
        }
        let u = b.lift(w.k1, w.k3, &state);
        f.set_mode(w.i1, w.i3, &u);
        if !w.is_mean() {
            let conj: [Vec<C64>; 3] = [
                u[0].iter().map(|v| v.conj()).collect(),
                u[1].iter().map(|v| v.conj()).collect(),
                u[2].iter().map(|v| v.conj()).collect(),
            ];
            f.set_mode(w.partner.0, w.partner.1, &conj);
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(8, 16, 6, 2.0 * PI, PI).unwrap()
    }

    #[test]
    fn random_fields_satisfy_construction_contract() {
        for seed in 0..5 {
            let f = random_solenoidal(&grid(), &RandomFieldSpec::seeded(seed)).unwrap();
            assert!(f.max_abs() > 0.0);
            assert!(f.max_divergence().unwrap() < 1e-12);
            assert!(f.max_wall_value() < 1e-12);
            assert!(f.hermitian_defect() < 1e-15);
            let phys = f.to_physical();
            let imag = phys.comps.iter().flatten().map(|v| v.im.abs()).fold(0.0, f64::max);
            assert!(imag < 1e-13);
        }
    }

    #[test]
    fn same_seed_same_field() {
        let a = random_solenoidal(&grid(), &RandomFieldSpec::seeded(7)).unwrap();
        let b = random_solenoidal(&grid(), &RandomFieldSpec::seeded(7)).unwrap();
        let c = random_solenoidal(&grid(), &RandomFieldSpec::seeded(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn transforms_round_trip() {
        let f = random_solenoidal(&grid(), &RandomFieldSpec::seeded(1)).unwrap();
        let back = f.to_physical().to_spectral();
        let err = back.axpy(-1.0, &f).unwrap().max_abs();
        assert!(err < 1e-13 * f.max_abs());
    }
}
