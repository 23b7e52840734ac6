//! Cached wall-normal operators for one resolution `n2`: collocation
//! derivatives, the exact L2 Gram matrix, the clamped (`v`) and Dirichlet
//! (`eta`, mean flow) trial bases and their Galerkin blocks.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use super::cheb::{
    chebyshev_nodes, clamped_basis, diff_matrix, dirichlet_basis, interpolation_matrix, quadrature_weights,
};
use crate::error::{Error, Result};
use crate::linalg::{block, rmatvec, scale_real, to_complex, CMat};
use crate::C64;

/// Quadrature on a refined Gauss–Lobatto grid together with the matrix
/// interpolating coarse nodal data onto it.
#[derive(Debug, Clone)]
pub struct FineQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `nodes.len() x n2`.
    pub interp: Mat<f64>,
}

impl FineQuadrature {
    pub fn new(n2: usize, points: usize) -> Result<Self> {
        let nodes = chebyshev_nodes(points)?;
        let weights = quadrature_weights(points)?;
        let interp = interpolation_matrix(n2, &nodes)?;
        Ok(FineQuadrature { nodes, weights, interp })
    }

    /// `aᵀ diag(w · g) b` for fine-grid samples `a`, `b`.
    pub fn gram_weighted(&self, a: &Mat<f64>, b: &Mat<f64>, g: impl Fn(f64) -> f64) -> Mat<f64> {
        let wa = Mat::from_fn(a.nrows(), a.ncols(), |q, i| {
            a[(q, i)] * self.weights[q] * g(self.nodes[q])
        });
        wa.transpose() * b
    }
}

#[derive(Debug)]
pub struct WallBasis {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub d1: Mat<f64>,
    pub d2: Mat<f64>,
    /// Exact Gram matrix of nodal polynomials.
    pub mass: Mat<f64>,
    /// `D1ᵀ M D1`.
    pub stiff: Mat<f64>,
    /// Clamped basis (`n x (n-4)`) and its first two derivatives.
    pub psi: Mat<f64>,
    pub dpsi: Mat<f64>,
    pub d2psi: Mat<f64>,
    /// Dirichlet basis (`n x (n-2)`) and its derivative.
    pub phi: Mat<f64>,
    pub dphi: Mat<f64>,
    /// L2 projections from nodal values onto the two bases.
    pub proj_psi: Mat<f64>,
    pub proj_phi: Mat<f64>,
    /// Galerkin blocks, all exact.
    pub m_vv: Mat<f64>,
    pub k_vv: Mat<f64>,
    pub b_vv: Mat<f64>,
    pub y_vv: Mat<f64>,
    pub y2_vv: Mat<f64>,
    pub m_ee: Mat<f64>,
    pub k_ee: Mat<f64>,
    pub y_ee: Mat<f64>,
    pub m_ev: Mat<f64>,
}

impl WallBasis {
    fn build(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::Resolution(format!("need n2 >= 8, got {n}")));
        }
        let nodes = chebyshev_nodes(n)?;
        let weights = quadrature_weights(n)?;
        let d1 = diff_matrix(n, 1)?.entries;
        let d2 = &d1 * &d1;
        let psi = clamped_basis(n, n - 4)?;
        let dpsi = &d1 * &psi;
        let d2psi = &d1 * &dpsi;
        let phi = dirichlet_basis(n, n - 2)?;
        let dphi = &d1 * &phi;

        let fine = FineQuadrature::new(n, 2 * n)?;
        let at = |m: &Mat<f64>| &fine.interp * m;
        let ident = Mat::<f64>::identity(n, n);
        let (ef, d1f) = (at(&ident), at(&d1));
        let (pf, dpf, d2pf) = (at(&psi), at(&dpsi), at(&d2psi));
        let (qf, dqf) = (at(&phi), at(&dphi));
        let one = |_: f64| 1.0;
        let lin = |y: f64| y;

        let mass = fine.gram_weighted(&ef, &ef, one);
        let stiff = fine.gram_weighted(&d1f, &d1f, one);
        let m_vv = fine.gram_weighted(&pf, &pf, one);
        let k_vv = fine.gram_weighted(&dpf, &dpf, one);
        let b_vv = fine.gram_weighted(&d2pf, &d2pf, one);
        let y_vv = fine.gram_weighted(&pf, &pf, lin);
        let y2_vv = fine.gram_weighted(&pf, &d2pf, lin);
        let m_ee = fine.gram_weighted(&qf, &qf, one);
        let k_ee = fine.gram_weighted(&dqf, &dqf, one);
        let y_ee = fine.gram_weighted(&qf, &qf, lin);
        let m_ev = fine.gram_weighted(&qf, &pf, one);

        let project = |gram: &Mat<f64>, basis: &Mat<f64>| -> Result<Mat<f64>> {
            let rhs = basis.transpose() * &mass;
            let llt = gram
                .llt(Side::Lower)
                .map_err(|e| Error::Numerical(format!("basis Gram factorization: {e:?}")))?;
            Ok(llt.solve(&rhs))
        };
        let proj_psi = project(&m_vv, &psi)?;
        let proj_phi = project(&m_ee, &phi)?;

        Ok(WallBasis {
            n,
            nodes,
            weights,
            d1,
            d2,
            mass,
            stiff,
            psi,
            dpsi,
            d2psi,
            phi,
            dphi,
            proj_psi,
            proj_phi,
            m_vv,
            k_vv,
            b_vv,
            y_vv,
            y2_vv,
            m_ee,
            k_ee,
            y_ee,
            m_ev,
        })
    }

    /// Shared instance for resolution `n`, built on first use.
    pub fn get(n: usize) -> Result<Arc<WallBasis>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<WallBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().expect("basis cache poisoned").get(&n) {
            return Ok(b.clone());
        }
        let built = Arc::new(WallBasis::build(n)?);
        let mut guard = cache.lock().expect("basis cache poisoned");
        Ok(guard.entry(n).or_insert(built).clone())
    }

    pub fn nv(&self) -> usize {
        self.n - 4
    }

    pub fn ne(&self) -> usize {
        self.n - 2
    }

    /// Length of the modal state for wavenumber `(k1, k3)`.
    pub fn state_len(&self, k1: f64, k3: f64) -> usize {
        if k1 * k1 + k3 * k3 == 0.0 {
            2 * self.ne()
        } else {
            self.nv() + self.ne()
        }
    }

    /// Nodal velocity `(u1, u2, u3)` of a modal state. For `k = 0` the state
    /// holds Dirichlet coefficients of `(u1, u3)` and `u2` is zero; otherwise it
    /// holds the normal velocity `v` (clamped) and normal vorticity `eta`
    /// (Dirichlet) coefficients.
    pub fn lift(&self, k1: f64, k3: f64, state: &[C64]) -> [Vec<C64>; 3] {
        let k2 = k1 * k1 + k3 * k3;
        let (nv, ne) = (self.nv(), self.ne());
        assert_eq!(state.len(), self.state_len(k1, k3));
        if k2 == 0.0 {
            let u1 = rmatvec(&self.phi, &state[..ne]);
            let u3 = rmatvec(&self.phi, &state[ne..]);
            return [u1, vec![C64::new(0.0, 0.0); self.n], u3];
        }
        let (av, ae) = state.split_at(nv);
        let v = rmatvec(&self.psi, av);
        let dv = rmatvec(&self.dpsi, av);
        let eta = rmatvec(&self.phi, ae);
        let (ik1, ik3) = (C64::new(0.0, k1 / k2), C64::new(0.0, k3 / k2));
        let u1 = dv.iter().zip(&eta).map(|(d, e)| ik1 * d - ik3 * e).collect();
        let u3 = dv.iter().zip(&eta).map(|(d, e)| ik3 * d + ik1 * e).collect();
        [u1, v, u3]
    }

    /// Inverse of [`WallBasis::lift`] on solenoidal no-slip profiles.
    pub fn extract(&self, k1: f64, k3: f64, u: &[Vec<C64>; 3]) -> Vec<C64> {
        let k2 = k1 * k1 + k3 * k3;
        if k2 == 0.0 {
            let mut s = rmatvec(&self.proj_phi, &u[0]);
            s.extend(rmatvec(&self.proj_phi, &u[2]));
            return s;
        }
        let (ik1, ik3) = (C64::new(0.0, k1), C64::new(0.0, k3));
        let eta: Vec<C64> = u[0].iter().zip(&u[2]).map(|(a, c)| ik3 * a - ik1 * c).collect();
        let mut s = rmatvec(&self.proj_psi, &u[1]);
        s.extend(rmatvec(&self.proj_phi, &eta));
        s
    }

    /// Nodal lift matrices `[L1, L2, L3]`, each `n x state_len`.
    pub fn lift_matrices(&self, k1: f64, k3: f64) -> [CMat; 3] {
        let k2 = k1 * k1 + k3 * k3;
        let (n, nv, ne) = (self.n, self.nv(), self.ne());
        let zero = |r, c| Mat::<C64>::zeros(r, c);
        if k2 == 0.0 {
            let phi = to_complex(&self.phi);
            let l1 = block(&[vec![Some(&phi), None]], &[n], &[ne, ne]);
            let l3 = block(&[vec![None, Some(&phi)]], &[n], &[ne, ne]);
            return [l1, zero(n, 2 * ne), l3];
        }
        let (ik1, ik3) = (C64::new(0.0, k1 / k2), C64::new(0.0, k3 / k2));
        let a1 = scale_real(&self.dpsi, ik1);
        let b1 = scale_real(&self.phi, -ik3);
        let a3 = scale_real(&self.dpsi, ik3);
        let b3 = scale_real(&self.phi, ik1);
        let psi = to_complex(&self.psi);
        [
            block(&[vec![Some(&a1), Some(&b1)]], &[n], &[nv, ne]),
            block(&[vec![Some(&psi), None]], &[n], &[nv, ne]),
            block(&[vec![Some(&a3), Some(&b3)]], &[n], &[nv, ne]),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projections_invert_bases() {
        let b = WallBasis::get(16).unwrap();
        let p = &b.proj_psi * &b.psi;
        let q = &b.proj_phi * &b.phi;
        for i in 0..b.nv() {
            for j in 0..b.nv() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - e).abs() < 1e-12);
            }
        }
        for i in 0..b.ne() {
            for j in 0..b.ne() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((q[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stiffness_is_integration_by_parts() {
        // <psi, D2 psi> = -<D psi, D psi> for clamped functions
        let b = WallBasis::get(20).unwrap();
        let lhs = b.psi.transpose() * &b.mass * &b.d2psi;
        for i in 0..b.nv() {
            for j in 0..b.nv() {
                assert!((lhs[(i, j)] + b.k_vv[(i, j)]).abs() < 1e-9 * (1.0 + b.k_vv[(i, j)].abs()));
            }
        }
    }

    #[test]
    fn lift_is_solenoidal_and_inverts() {
        let b = WallBasis::get(18).unwrap();
        for (k1, k3) in [(1.0, 0.0), (0.0, 2.0), (0.5, -1.5), (0.0, 0.0)] {
            let len = b.state_len(k1, k3);
            let s: Vec<C64> = (0..len)
                .map(|i| C64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()) * (-0.2 * i as f64).exp())
                .collect();
            let u = b.lift(k1, k3, &s);
            let du2 = rmatvec(&b.d1, &u[1]);
            for j in 0..b.n {
                let div = C64::new(0.0, k1) * u[0][j] + du2[j] + C64::new(0.0, k3) * u[2][j];
                assert!(div.norm() < 1e-11, "div {} at k=({k1},{k3})", div.norm());
            }
            for c in 0..3 {
                assert!(u[c][0].norm() < 1e-13 && u[c][b.n - 1].norm() < 1e-13);
            }
            let back = b.extract(k1, k3, &u);
            for (x, y) in back.iter().zip(&s) {
                assert!((x - y).norm() < 1e-11);
            }
            let lm = b.lift_matrices(k1, k3);
            for c in 0..3 {
                let lu = crate::linalg::matvec(&lm[c], &s);
                for (x, y) in lu.iter().zip(&u[c]) {
                    assert!((x - y).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cache_returns_same_instance() {
        let a = WallBasis::get(12).unwrap();
        let b = WallBasis::get(12).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert!(WallBasis::get(6).is_err());
    }
}
