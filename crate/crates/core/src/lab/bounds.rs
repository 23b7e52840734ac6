use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{CheckReport, Witness};
use crate::error::{Error, Result};
use crate::field::{random_solenoidal, RandomFieldSpec, VelocityField};
use crate::linalg::{cholesky, solve_lower};
use crate::norms::{component_grad_sq, h_tilde_norms, sup_norm};
use crate::operator::build_operator;
use crate::physical::{exact_sampling, PhysicalSamples};
use crate::resolvent::{output_gram, ResolventNorm};
use crate::spectral::{chebyshev_nodes, interpolation_matrix, wavenumbers, Grid};
use crate::C64;

/// Left and right sides of the three nonlinearity bounds for one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRatios {
    /// `‖G(w)‖²` and `‖w‖∞² Σ‖∂w/∂x_k‖²`.
    pub a11: (f64, f64),
    /// The same in the m-norm.
    pub a12: (f64, f64),
    /// `‖G_t(w)‖_m²` and `‖w_t‖∞² Σ‖∂w/∂x_k‖_m² + ‖w‖∞² Σ‖∂w_t/∂x_k‖_m²`.
    pub a13: (f64, f64),
}

fn ratio((lhs, rhs): (f64, f64)) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

impl BoundRatios {
    pub fn ratios(&self) -> [f64; 3] {
        [ratio(self.a11), ratio(self.a12), ratio(self.a13)]
    }
}

/// Largest component magnitude, taken over the quadrature samples and the
/// doubled collocation grid.
fn sup_of(f: &VelocityField, s: &PhysicalSamples) -> Result<f64> {
    Ok(s.sup().max(sup_norm(f)?))
}

fn weighted_sq(s: &PhysicalSamples, g: &[Vec<f64>; 3], w2: f64) -> f64 {
    let sq = |c: usize| s.integrate(&g[c].iter().map(|v| v * v).collect::<Vec<_>>());
    sq(0) + w2 * sq(1) + sq(2)
}

fn m_grad_sq(f: &VelocityField, reynolds: f64) -> Result<f64> {
    let c = component_grad_sq(f)?;
    Ok(c[0] + reynolds * reynolds * c[1] + c[2])
}

/// Evaluate both sides of the three bounds with the quadrature that is exact
/// for the quartic integrands. `wt` stands in for the time derivative.
pub fn nonlinearity_ratios(w: &VelocityField, wt: &VelocityField, reynolds: f64) -> Result<BoundRatios> {
    w.check_grid(wt)?;
    let sw = exact_sampling(w, 4, true)?;
    let st = exact_sampling(wt, 4, true)?;
    let (sup_w, sup_t) = (sup_of(w, &sw)?, sup_of(wt, &st)?);
    let g = PhysicalSamples::advect(&sw, &sw)?;
    let a = PhysicalSamples::advect(&st, &sw)?;
    let b = PhysicalSamples::advect(&sw, &st)?;
    let gt: [Vec<f64>; 3] = std::array::from_fn(|c| a[c].iter().zip(&b[c]).map(|(x, y)| x + y).collect());
    let r2 = reynolds * reynolds;
    let grad_w = component_grad_sq(w)?.iter().sum::<f64>();
    let (mg_w, mg_t) = (m_grad_sq(w, reynolds)?, m_grad_sq(wt, reynolds)?);
    Ok(BoundRatios {
        a11: (weighted_sq(&sw, &g, 1.0), sup_w * sup_w * grad_w),
        a12: (weighted_sq(&sw, &g, r2), sup_w * sup_w * mg_w),
        a13: (weighted_sq(&sw, &gt, r2), sup_t * sup_t * mg_w + sup_w * sup_w * mg_t),
    })
}

pub(crate) fn audited(grid: &Grid, seed: u64) -> Result<VelocityField> {
    let f = random_solenoidal(grid, &RandomFieldSpec::seeded(seed))?;
    let (wall, div) = (f.max_wall_value(), f.max_divergence()?);
    if wall > 1e-12 || div > 1e-12 {
        return Err(Error::Numerical(format!(
            "random field {seed} failed its audit: wall {wall:.2e}, divergence {div:.2e}"
        )));
    }
    Ok(f)
}

/// Constant for the two-term time-derivative bound: `(a + b)² ≤ 2a² + 2b²`.
pub const A13_CONSTANT: f64 = 2.0;

/// The three nonlinearity bounds over `trials` pairs of random fields.
/// Returns one report per bound.
pub fn check_nonlinearity_bounds(trials: usize, grid: &Grid, reynolds: f64, seed0: u64) -> Result<[CheckReport; 3]> {
    let seeds: Vec<u64> = (0..trials as u64).map(|i| seed0 + 2 * i).collect();
    let rows = crate::par::map(&seeds, |&seed| -> Result<BoundRatios> {
        let w = audited(grid, seed)?;
        let wt = audited(grid, seed + 1)?;
        nonlinearity_ratios(&w, &wt, reynolds)
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let names = ["nonlinearity-l2", "nonlinearity-m", "nonlinearity-time-derivative"];
    let constants = [1.0, 1.0, A13_CONSTANT];
    Ok(std::array::from_fn(|i| {
        let ws = rows
            .iter()
            .zip(&seeds)
            .enumerate()
            .map(|(trial, (b, &seed))| {
                let (lhs, rhs) = [b.a11, b.a12, b.a13][i];
                Witness {
                    trial,
                    seed: Some(seed),
                    label: format!("R = {reynolds}"),
                    lhs,
                    rhs,
                    ratio: b.ratios()[i],
                }
            })
            .collect();
        CheckReport::from_witnesses(names[i], Some(*grid), constants[i], ws)
    }))
}

/// `‖u‖∞² / ‖u‖_H̃₂²`.
pub fn sobolev_ratio(u: &VelocityField) -> Result<f64> {
    let s = exact_sampling(u, 2, false)?;
    let sup = sup_of(u, &s)?;
    let (_, h2) = h_tilde_norms(u, 1.0)?;
    Ok(if sup == 0.0 { 0.0 } else { sup * sup / (h2 * h2) })
}

/// Streamwise mean flow `u1 = (1 - x2²) ((1 - x2)/2)^p`, which piles up at
/// `x2 = -1` as `p` grows.
pub fn wall_concentrated(grid: &Grid, p: u32) -> Result<VelocityField> {
    let nodes = chebyshev_nodes(grid.n2)?;
    let prof: Vec<C64> = nodes
        .iter()
        .map(|y| C64::new((1.0 - y * y) * (0.5 * (1.0 - y)).powi(p as i32), 0.0))
        .collect();
    let mut u = VelocityField::zeros(grid);
    u.set_profile(0, 0, 0, &prof);
    Ok(u)
}

/// Sharp constant of `max_c |u_c(x)|² ≤ C ‖u‖_H̃₂²` over every solenoidal
/// no-slip field the grid represents: the largest diagonal entry of the
/// reproducing kernel, sampled at `points` wall-normal positions.
pub fn sobolev_kernel_bound(grid: &Grid, points: usize) -> Result<f64> {
    grid.validate()?;
    let ys = chebyshev_nodes(points)?;
    let interp = interpolation_matrix(grid.n2, &ys)?;
    let interp = Mat::<C64>::from_fn(points, grid.n2, |i, j| C64::new(interp[(i, j)], 0.0));
    let mut diag = vec![[0.0f64; 3]; points];
    for w in wavenumbers(grid) {
        // H̃₂ coincides with H̃₁ at R = 1
        let op = build_operator(w.k1, w.k3, 1.0, grid.n2)?;
        let chol = cholesky(&output_gram(&op, ResolventNorm::Htilde1, 1.0))?;
        let lift = op.lift_matrices();
        for (c, lc) in lift.iter().enumerate() {
            // rows of interp * lift are the evaluation functionals; the
            // kernel diagonal is ‖L⁻¹ rowᴴ‖² with G = L Lᴴ
            let rows = &interp * lc;
            let z = solve_lower(&chol, &rows.adjoint().to_owned());
            for (i, d) in diag.iter_mut().enumerate() {
                let mut s = 0.0;
                for k in 0..z.nrows() {
                    s += z[(k, i)].norm_sqr();
                }
                d[c] += s / grid.area();
            }
        }
    }
    Ok(diag.iter().flat_map(|d| d.iter().copied()).fold(0.0, f64::max))
}

/// Calibrate `C = max ‖u‖∞²/‖u‖_H̃₂²` on `calibration` random fields plus the
/// wall-concentrated family, then check `fresh` new seeds against
/// `margin · C`. `frozen` replaces the calibration when given.
pub fn check_sobolev_embedding(
    calibration: usize,
    fresh: usize,
    grid: &Grid,
    seed0: u64,
    frozen: Option<f64>,
    margin: f64,
) -> Result<(f64, CheckReport)> {
    let c_emp = match frozen {
        Some(c) => c,
        None => {
            let seeds: Vec<u64> = (0..calibration as u64).map(|i| seed0 + i).collect();
            let mut ratios = crate::par::map(&seeds, |&s| sobolev_ratio(&audited(grid, s)?))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            for p in 0..=8 {
                ratios.push(sobolev_ratio(&wall_concentrated(grid, p)?)?);
            }
            ratios.into_iter().fold(0.0, f64::max)
        }
    };
    let base = seed0 + calibration as u64 + 1_000_000;
    let seeds: Vec<u64> = (0..fresh as u64).map(|i| base + i).collect();
    let rows = crate::par::map(&seeds, |&seed| -> Result<Witness> {
        let r = sobolev_ratio(&audited(grid, seed)?)?;
        Ok(Witness {
            trial: (seed - base) as usize,
            seed: Some(seed),
            label: String::new(),
            lhs: r,
            rhs: c_emp,
            ratio: r,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((
        c_emp,
        CheckReport::from_witnesses("sobolev-embedding", Some(*grid), margin * c_emp, rows),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(8, 17, 8, 2.0 * PI, PI).unwrap()
    }

    #[test]
    fn zero_field_gives_zero_sides() {
        let z = VelocityField::zeros(&grid());
        let b = nonlinearity_ratios(&z, &z, 10.0).unwrap();
        assert_eq!(b.a11, (0.0, 0.0));
        assert_eq!(b.ratios(), [0.0; 3]);
    }

    #[test]
    fn streamwise_mean_flow_has_no_self_advection() {
        let u = wall_concentrated(&grid(), 2).unwrap();
        let b = nonlinearity_ratios(&u, &u, 10.0).unwrap();
        assert!(b.a11.0 < 1e-28 && b.a11.1 > 0.0);
        assert!(b.a13.0 < 1e-28);
    }

    #[test]
    fn quadrature_matches_spectral_norm_of_g() {
        let g = grid();
        let w = audited(&g, 11).unwrap();
        let s = exact_sampling(&w, 4, true).unwrap();
        let gw = PhysicalSamples::advect(&s, &s).unwrap();
        let lhs = weighted_sq(&s, &gw, 1.0);
        // an independent, coarser quadrature that is still exact for the
        // quartic integrand in x2 must agree
        let s2 = crate::physical::sample_physical(&w, 3 * g.n1, 3 * g.n3, 5 * (g.n2 - 1) + 1, true).unwrap();
        let g2 = PhysicalSamples::advect(&s2, &s2).unwrap();
        let lhs2 = weighted_sq(&s2, &g2, 1.0);
        assert!((lhs - lhs2).abs() < 1e-11 * lhs);
    }

    #[test]
    fn random_battery_has_no_violations() {
        for r in [10.0, 100.0] {
            for rep in check_nonlinearity_bounds(12, &grid(), r, 100).unwrap() {
                assert!(rep.pass, "{rep:?}");
                assert!(rep.worst_ratio > 0.0);
            }
        }
    }

    #[test]
    fn kernel_bound_dominates_every_ratio() {
        let g = grid();
        let k = sobolev_kernel_bound(&g, 4 * g.n2).unwrap();
        for s in 0..10 {
            let r = sobolev_ratio(&audited(&g, s).unwrap()).unwrap();
            assert!(r <= k * (1.0 + 1e-9), "{r} > {k}");
        }
        for p in [0, 4, 16] {
            let r = sobolev_ratio(&wall_concentrated(&g, p).unwrap()).unwrap();
            assert!(r.is_finite() && r > 0.0 && r <= k * (1.0 + 1e-9));
        }
    }

    #[test]
    fn calibrated_constant_holds_on_fresh_seeds() {
        let g = grid();
        let (c, rep) = check_sobolev_embedding(40, 20, &g, 0, None, 1.05).unwrap();
        assert!(c > 0.0);
        assert!(rep.pass, "{rep:?}");
        let (c2, rep2) = check_sobolev_embedding(40, 20, &g, 0, Some(c), 1.05).unwrap();
        assert_eq!(c, c2);
        assert_eq!(rep.worst_ratio, rep2.worst_ratio);
    }
}
