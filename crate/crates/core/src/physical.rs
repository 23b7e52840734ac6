//! Physical-space samples of a field and its gradient on refined grids, with
//! the matching quadrature. Products of dealiased fields integrate exactly
//! when the refinement is large enough.

use faer::Mat;

use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::linalg::{czero, rmatvec};
use crate::spectral::{chebyshev_nodes, interpolation_matrix, quadrature_weights, wavenumbers, PlaneFft, WallBasis};
use crate::C64;

/// Samples on a `p1 x ny x p3` grid, stored `[(j * p1 + i1) * p3 + i3]`.
#[derive(Debug, Clone)]
pub struct PhysicalSamples {
    pub p1: usize,
    pub p3: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Horizontal cell area `L1 L3 / (p1 p3)`.
    pub cell: f64,
    pub u: [Vec<f64>; 3],
    /// `grad[i][k] = ∂u_i/∂x_k`.
    pub grad: Option<[[Vec<f64>; 3]; 3]>,
}

impl PhysicalSamples {
    pub fn len(&self) -> usize {
        self.u[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self) -> usize {
        self.p1 * self.p3
    }

    /// `∫ g` over the box.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        let plane = self.plane();
        g.chunks(plane)
            .zip(&self.weights)
            .map(|(row, w)| w * row.iter().sum::<f64>())
            .sum::<f64>()
            * self.cell
    }

    /// `∫ a · b` for vector fields.
    pub fn inner(&self, a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> f64 {
        let dot: Vec<f64> = (0..self.len())
            .map(|p| a[0][p] * b[0][p] + a[1][p] * b[1][p] + a[2][p] * b[2][p])
            .collect();
        self.integrate(&dot)
    }

    pub fn sup(&self) -> f64 {
        self.u
            .iter()
            .flat_map(|c| c.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    fn gradient(&self) -> Result<&[[Vec<f64>; 3]; 3]> {
        self.grad
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("samples were taken without gradients".into()))
    }

    /// Pointwise `(a · ∇) b` where `a` supplies the velocity and `b` the
    /// gradient.
    pub fn advect(a: &PhysicalSamples, b: &PhysicalSamples) -> Result<[Vec<f64>; 3]> {
        let g = b.gradient()?;
        if a.len() != b.len() {
            return Err(Error::GridMismatch("sample grids differ".into()));
        }
        let mut out: [Vec<f64>; 3] = Default::default();
        for (i, oi) in out.iter_mut().enumerate() {
            *oi = (0..a.len())
                .map(|p| a.u[0][p] * g[i][0][p] + a.u[1][p] * g[i][1][p] + a.u[2][p] * g[i][2][p])
                .collect();
        }
        Ok(out)
    }
}

/// Sample `f` (and optionally its gradient) on `p1 x ny x p3` points, `p1 >= n1`,
/// `p3 >= n3`, with `ny` Gauss–Lobatto points in `x2`.
pub fn sample_physical(f: &VelocityField, p1: usize, p3: usize, ny: usize, with_grad: bool) -> Result<PhysicalSamples> {
    let f = f.to_spectral();
    let g = f.grid;
    if p1 < g.n1 || p3 < g.n3 {
        return Err(Error::InvalidGrid(format!(
            "sampling grid {p1} x {p3} coarser than field grid {} x {}",
            g.n1, g.n3
        )));
    }
    let nodes = chebyshev_nodes(ny)?;
    let weights = quadrature_weights(ny)?;
    let interp = if ny == g.n2 {
        Mat::<f64>::identity(ny, ny)
    } else {
        interpolation_matrix(g.n2, &nodes)?
    };
    let dinterp = if with_grad {
        Some(&interp * &WallBasis::get(g.n2)?.d1)
    } else {
        None
    };
    let fft = PlaneFft::new(p1, p3);
    let plane = p1 * p3;
    let slot = |m: i64, p: usize| -> usize { m.rem_euclid(p as i64) as usize };
    let modes = wavenumbers(&g);
    // 3 velocity slices, then 9 gradient slices
    let nfields = if with_grad { 12 } else { 3 };
    let mut data: Vec<Vec<C64>> = (0..nfields).map(|_| vec![czero(); plane * ny]).collect();
    for w in &modes {
        let ms: Vec<(i64, f64)> = if g.n1 > 1 && 2 * w.i1 == g.n1 {
            vec![(w.m, 0.5), (-w.m, 0.5)]
        } else {
            vec![(w.m, 1.0)]
        };
        let ns: Vec<(i64, f64)> = if g.n3 > 1 && 2 * w.i3 == g.n3 {
            vec![(w.n, 0.5), (-w.n, 0.5)]
        } else {
            vec![(w.n, 1.0)]
        };
        for c in 0..3 {
            let prof = f.profile(c, w.i1, w.i3);
            if prof.iter().all(|v| *v == czero()) {
                continue;
            }
            let val = rmatvec(&interp, &prof);
            let dy = dinterp.as_ref().map(|d| rmatvec(d, &prof));
            for &(m, a) in &ms {
                for &(n, bw) in &ns {
                    let (s1, s3) = (slot(m, p1), slot(n, p3));
                    let wgt = a * bw;
                    let k1 = 2.0 * std::f64::consts::PI * m as f64 / g.l1;
                    let k3 = 2.0 * std::f64::consts::PI * n as f64 / g.l3;
                    for j in 0..ny {
                        let idx = j * plane + s1 * p3 + s3;
                        data[c][idx] += val[j] * wgt;
                        if let Some(dy) = &dy {
                            data[3 + 3 * c][idx] += val[j] * C64::new(0.0, k1) * wgt;
                            data[3 + 3 * c + 1][idx] += dy[j] * wgt;
                            data[3 + 3 * c + 2][idx] += val[j] * C64::new(0.0, k3) * wgt;
                        }
                    }
                }
            }
        }
    }
    let real: Vec<Vec<f64>> = data
        .into_iter()
        .map(|mut d| {
            for chunk in d.chunks_mut(plane) {
                fft.inverse(chunk);
            }
            d.into_iter().map(|v| v.re).collect()
        })
        .collect();
    let mut it = real.into_iter();
    let u = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
    let grad = if with_grad {
        let mut next3 = || [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        Some([next3(), next3(), next3()])
    } else {
        None
    };
    Ok(PhysicalSamples {
        p1,
        p3,
        nodes,
        weights,
        cell: g.area() / plane as f64,
        u,
        grad,
    })
}

/// Refinement that integrates products of up to `factors` dealiased fields of
/// the grid exactly: horizontal sizes doubled, `factors * (n2 - 1) + 1`
/// Gauss–Lobatto points in `x2`.
pub fn exact_sampling(f: &VelocityField, factors: usize, with_grad: bool) -> Result<PhysicalSamples> {
    let g = f.grid;
    let p1 = if g.n1 > 1 { 2 * g.n1 } else { 1 };
    let p3 = if g.n3 > 1 { 2 * g.n3 } else { 1 };
    sample_physical(f, p1, p3, factors * (g.n2 - 1) + 1, with_grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{grad_sq, l2_norm};
    use crate::{random_solenoidal, Grid, RandomFieldSpec};

    #[test]
    fn quadrature_reproduces_spectral_norms() {
        let g = Grid::new(8, 17, 8, 4.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI).unwrap();
        let f = random_solenoidal(&g, &RandomFieldSpec::seeded(3)).unwrap();
        let s = exact_sampling(&f, 2, true).unwrap();
        let l2 = s.inner(&s.u, &s.u);
        let lref = l2_norm(&f).unwrap().powi(2);
        assert!((l2 - lref).abs() < 1e-12 * lref);
        let gr = s.grad.as_ref().unwrap();
        let mut gsum = 0.0;
        for comp in gr {
            for part in comp {
                gsum += s.integrate(&part.iter().map(|v| v * v).collect::<Vec<_>>());
            }
        }
        let gref = grad_sq(&f, None).unwrap();
        assert!((gsum - gref).abs() < 1e-11 * gref);
    }

    #[test]
    fn native_sampling_hits_nodes() {
        let g = Grid::new(4, 9, 4, 1.0, 1.0).unwrap();
        let f = random_solenoidal(&g, &RandomFieldSpec::seeded(1)).unwrap();
        let s = sample_physical(&f, 4, 4, 9, false).unwrap();
        let p = f.to_physical();
        for c in 0..3 {
            for (a, b) in s.u[c].iter().zip(&p.comps[c]) {
                assert!((a - b.re).abs() < 1e-13 && b.im.abs() < 1e-13);
            }
        }
    }
}
