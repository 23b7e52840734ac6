//! The linearized Couette operator `L = (1/R)Δ - x2 ∂/∂x1 - e1 e2ᵀ` per
//! horizontal wavenumber, in normal-velocity / normal-vorticity variables.
//!
//! For `k² > 0` the state is `(v, eta)` in the clamped and Dirichlet bases and
//! the velocity is recovered by the kinematic lift
//! `u1 = (i k1 Dv - i k3 eta)/k²`, `u2 = v`, `u3 = (i k3 Dv + i k1 eta)/k²`.
//! The pencil `(A, E)` is the Galerkin restriction of `L` to lifted fields:
//! `E = Λᴴ M Λ` and `A = Λᴴ M L Λ`, which removes the pressure exactly.
//! For the mean mode continuity and no-slip force `u2 = 0` and the state is
//! `(u1, u3)` in the Dirichlet basis.

use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::linalg::{self, block, czero, rmatvec, rmatvec_t, scale_real, CMat};
use crate::norms::check_reynolds;
use crate::spectral::{wavenumbers, WallBasis};
use crate::C64;

/// Dense pencil `E x' = A x` for one `(k1, k3, R)`.
#[derive(Debug, Clone)]
pub struct WavenumberOperator {
    pub k1: f64,
    pub k3: f64,
    pub reynolds: f64,
    pub n2: usize,
    pub a: CMat,
    pub e: CMat,
    pub basis: Arc<WallBasis>,
}

impl WavenumberOperator {
    pub fn is_mean(&self) -> bool {
        self.k1 == 0.0 && self.k3 == 0.0
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Nodal lift matrices `[Λ1, Λ2, Λ3]`.
    pub fn lift_matrices(&self) -> [CMat; 3] {
        self.basis.lift_matrices(self.k1, self.k3)
    }

    /// `E⁻¹ A`.
    pub fn generator(&self) -> Result<CMat> {
        linalg::solve(&self.e, &self.a)
    }
}

/// Assemble the operator. Requires `R >= 1` and `n2 >= 16`.
pub fn build_operator(k1: f64, k3: f64, reynolds: f64, n2: usize) -> Result<WavenumberOperator> {
    check_reynolds(reynolds)?;
    if n2 < 16 {
        return Err(Error::Resolution(format!("operator needs n2 >= 16, got {n2}")));
    }
    if !(k1.is_finite() && k3.is_finite()) {
        return Err(Error::InvalidInput("wavenumbers must be finite".into()));
    }
    let b = WallBasis::get(n2)?;
    let (a, e) = assemble(&b, k1, k3, reynolds);
    Ok(WavenumberOperator {
        k1,
        k3,
        reynolds,
        n2,
        a,
        e,
        basis: b,
    })
}

fn assemble(b: &WallBasis, k1: f64, k3: f64, r: f64) -> (CMat, CMat) {
    let (nv, ne) = (b.nv(), b.ne());
    let k2 = k1 * k1 + k3 * k3;
    let re = |s: f64| C64::new(s, 0.0);
    if k2 == 0.0 {
        let m = scale_real(&b.m_ee, re(1.0));
        let k = scale_real(&b.k_ee, re(-1.0 / r));
        let e = block(&[vec![Some(&m), None], vec![None, Some(&m)]], &[ne, ne], &[ne, ne]);
        let a = block(&[vec![Some(&k), None], vec![None, Some(&k)]], &[ne, ne], &[ne, ne]);
        return (a, e);
    }
    let inv = 1.0 / k2;
    let e_vv = Mat::from_fn(nv, nv, |i, j| re(inv * (b.k_vv[(i, j)] + k2 * b.m_vv[(i, j)])));
    let e_ee = scale_real(&b.m_ee, re(inv));
    let a_vv = Mat::from_fn(nv, nv, |i, j| {
        let adv = k2 * b.y_vv[(i, j)] - b.y2_vv[(i, j)];
        let visc = k2 * k2 * b.m_vv[(i, j)] + 2.0 * k2 * b.k_vv[(i, j)] + b.b_vv[(i, j)];
        C64::new(-visc / r, -k1 * adv) * inv
    });
    let a_ev = scale_real(&b.m_ev, C64::new(0.0, -k3 * inv));
    let a_ee = Mat::from_fn(ne, ne, |i, j| {
        let visc = b.k_ee[(i, j)] + k2 * b.m_ee[(i, j)];
        C64::new(-visc / r, -k1 * b.y_ee[(i, j)]) * inv
    });
    let e = block(
        &[vec![Some(&e_vv), None], vec![None, Some(&e_ee)]],
        &[nv, ne],
        &[nv, ne],
    );
    let a = block(
        &[vec![Some(&a_vv), None], vec![Some(&a_ev), Some(&a_ee)]],
        &[nv, ne],
        &[nv, ne],
    );
    (a, e)
}

/// Velocity profiles `(u1, u2, u3)` of a state vector.
pub fn reconstruct_velocity(op: &WavenumberOperator, state: &[C64]) -> Result<[Vec<C64>; 3]> {
    if state.len() != op.dim() {
        return Err(Error::InvalidInput(format!(
            "state length {} does not match operator dimension {}",
            state.len(),
            op.dim()
        )));
    }
    Ok(op.basis.lift(op.k1, op.k3, state))
}

/// State vector of solenoidal no-slip velocity profiles.
pub fn extract_state(op: &WavenumberOperator, u: &[Vec<C64>; 3]) -> Vec<C64> {
    op.basis.extract(op.k1, op.k3, u)
}

/// Weak projection `Λᴴ M g` of nodal profiles onto the test space of mode
/// `(k1, k3)`. For a lifted field `u = Λ x` this gives `Λᴴ M L u`, i.e. `A x`,
/// when `g = L u` is exact at the nodes.
pub fn weak_project(b: &WallBasis, k1: f64, k3: f64, g: &[Vec<C64>; 3]) -> Vec<C64> {
    let k2 = k1 * k1 + k3 * k3;
    let mg: Vec<Vec<C64>> = g.iter().map(|gc| rmatvec(&b.mass, gc)).collect();
    if k2 == 0.0 {
        let mut s = rmatvec_t(&b.phi, &mg[0]);
        s.extend(rmatvec_t(&b.phi, &mg[2]));
        return s;
    }
    // conjugated lift coefficients
    let (c1, c3) = (C64::new(0.0, -k1 / k2), C64::new(0.0, -k3 / k2));
    let d1 = rmatvec_t(&b.dpsi, &mg[0]);
    let p2 = rmatvec_t(&b.psi, &mg[1]);
    let d3 = rmatvec_t(&b.dpsi, &mg[2]);
    let mut s: Vec<C64> = (0..b.nv()).map(|i| c1 * d1[i] + p2[i] + c3 * d3[i]).collect();
    let e1 = rmatvec_t(&b.phi, &mg[0]);
    let e3 = rmatvec_t(&b.phi, &mg[2]);
    // eta test: conj(-i k3 / k²) on u1, conj(i k1 / k²) on u3
    s.extend((0..b.ne()).map(|i| -c3 * e1[i] + c1 * e3[i]));
    s
}

/// `L u` for one mode's nodal profiles, without pressure.
pub fn apply_l_mode(b: &WallBasis, k1: f64, k3: f64, r: f64, u: &[Vec<C64>; 3]) -> [Vec<C64>; 3] {
    let k2 = k1 * k1 + k3 * k3;
    let mut out: [Vec<C64>; 3] = Default::default();
    for c in 0..3 {
        let d2u = rmatvec(&b.d2, &u[c]);
        out[c] = (0..b.n)
            .map(|j| (d2u[j] - k2 * u[c][j]) / r - C64::new(0.0, k1 * b.nodes[j]) * u[c][j])
            .collect();
    }
    for j in 0..b.n {
        out[0][j] -= u[1][j];
    }
    out
}

/// `(1/R)Δf - x2 ∂f/∂x1 - (f2, 0, 0)` evaluated spectrally (no pressure
/// projection).
pub fn apply_l(f: &VelocityField, reynolds: f64) -> Result<VelocityField> {
    check_reynolds(reynolds)?;
    let f = f.to_spectral();
    let g = f.grid;
    let b = WallBasis::get(g.n2)?;
    let mut out = VelocityField::zeros(&g);
    for w in wavenumbers(&g) {
        let u = f.mode(w.i1, w.i3);
        if u.iter().all(|p| p.iter().all(|v| *v == czero())) {
            continue;
        }
        out.set_mode(w.i1, w.i3, &apply_l_mode(&b, w.k1, w.k3, reynolds, &u));
    }
    Ok(out)
}

/// Generalized eigenvalues of one operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub k1: f64,
    pub k3: f64,
    pub reynolds: f64,
    pub n2: usize,
    /// Sorted by decreasing real part.
    pub eigenvalues: Vec<C64>,
}

impl Spectrum {
    pub fn rightmost(&self) -> Option<C64> {
        self.eigenvalues.first().copied()
    }

    /// CSV rows `k1,k3,R,n2,re_lambda,im_lambda` (no header).
    pub fn csv_rows(&self) -> Vec<String> {
        self.eigenvalues
            .iter()
            .map(|l| {
                format!(
                    "{},{},{},{},{:e},{:e}",
                    self.k1, self.k3, self.reynolds, self.n2, l.re, l.im
                )
            })
            .collect()
    }
}

pub const SPECTRUM_CSV_HEADER: &str = "k1,k3,R,n2,re_lambda,im_lambda";

/// Eigenvalues with `|λ|` above `cutoff` are dropped as spurious. The
/// Galerkin pencil has no boundary-row modes, so the default cutoff only
/// discards non-finite values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    pub cutoff: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { cutoff: f64::INFINITY }
    }
}

pub fn eigenvalues(op: &WavenumberOperator) -> Result<Spectrum> {
    eigenvalues_with(op, &EigenConfig::default())
}

pub fn eigenvalues_with(op: &WavenumberOperator, cfg: &EigenConfig) -> Result<Spectrum> {
    let g = op.generator().map_err(|e| {
        Error::Numerical(format!(
            "mass matrix solve failed at k1={}, k3={}, R={}: {e}",
            op.k1, op.k3, op.reynolds
        ))
    })?;
    let mut ev: Vec<C64> = linalg::eigenvalues(&g)
        .map_err(|e| {
            Error::Numerical(format!(
                "eigensolve failed at k1={}, k3={}, R={}, n2={}: {e}",
                op.k1, op.k3, op.reynolds, op.n2
            ))
        })?
        .into_iter()
        .filter(|l| l.re.is_finite() && l.im.is_finite() && l.norm() <= cfg.cutoff)
        .collect();
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(Spectrum {
        k1: op.k1,
        k3: op.k3,
        reynolds: op.reynolds,
        n2: op.n2,
        eigenvalues: ev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matvec, max_abs};
    use std::f64::consts::PI;

    #[test]
    fn mean_mode_heat_spectrum() {
        for r in [1.0, 100.0, 1000.0] {
            let op = build_operator(0.0, 0.0, r, 48).unwrap();
            let sp = eigenvalues(&op).unwrap();
            let lead = -PI * PI / (4.0 * r);
            assert!(sp.eigenvalues.iter().all(|l| l.im.abs() < 1e-8 * l.re.abs()));
            let top = sp.rightmost().unwrap();
            assert!((top.re - lead).abs() < 1e-8 * lead.abs(), "{top} vs {lead}");
            // second Dirichlet mode -4 pi^2/(4R)
            let second = sp.eigenvalues.iter().find(|l| l.re < 2.0 * lead).unwrap();
            assert!((second.re - 4.0 * lead).abs() < 1e-8 * lead.abs());
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let a = build_operator(0.7, 1.3, 300.0, 20).unwrap();
        let b = build_operator(-0.7, -1.3, 300.0, 20).unwrap();
        let conj = Mat::from_fn(a.dim(), a.dim(), |i, j| a.a[(i, j)].conj());
        assert!(max_abs(&(&b.a - &conj)) < 1e-12 * max_abs(&a.a));
        // with k3 = 0 flipping k1 alone conjugates
        let a = build_operator(0.7, 0.0, 300.0, 20).unwrap();
        let b = build_operator(-0.7, 0.0, 300.0, 20).unwrap();
        let conj = Mat::from_fn(a.dim(), a.dim(), |i, j| a.a[(i, j)].conj());
        assert!(max_abs(&(&b.a - &conj)) < 1e-12 * max_abs(&a.a));
    }

    #[test]
    fn galerkin_matches_primitive_operator() {
        let b = WallBasis::get(24).unwrap();
        for (k1, k3, r) in [
            (1.0, 0.0, 100.0),
            (0.5, 2.0, 1000.0),
            (0.0, 1.0, 10.0),
            (0.0, 0.0, 50.0),
        ] {
            let op = build_operator(k1, k3, r, 24).unwrap();
            let n = op.dim();
            // smooth state using basis functions of degree <= n2 - 2
            let nv = if op.is_mean() { b.ne() } else { b.nv() };
            let x: Vec<C64> = (0..n)
                .map(|i| {
                    let p = if i < nv { i } else { i - nv };
                    let deg_ok = if op.is_mean() {
                        p + 2 <= 22
                    } else if i < nv {
                        p + 4 <= 22
                    } else {
                        p + 2 <= 22
                    };
                    if deg_ok {
                        C64::new((0.3 * i as f64).cos(), (0.7 * i as f64).sin()) * (-0.3 * p as f64).exp()
                    } else {
                        czero()
                    }
                })
                .collect();
            let u = reconstruct_velocity(&op, &x).unwrap();
            let lu = apply_l_mode(&b, k1, k3, r, &u);
            let weak = weak_project(&b, k1, k3, &lu);
            let ax = matvec(&op.a, &x);
            let scale = ax.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (p, q) in weak.iter().zip(&ax) {
                assert!((p - q).norm() < 1e-10 * scale, "k=({k1},{k3})");
            }
            let ex = matvec(&op.e, &x);
            let mu: [Vec<C64>; 3] = u.clone();
            let we = weak_project(&b, k1, k3, &mu);
            for (p, q) in we.iter().zip(&ex) {
                assert!((p - q).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn reconstruction_examples() {
        let op = build_operator(0.0, 1.0, 100.0, 16).unwrap();
        let b = &op.basis;
        let mut x = vec![czero(); op.dim()];
        x[b.nv()] = C64::new(1.0, 0.0);
        let u = reconstruct_velocity(&op, &x).unwrap();
        let eta = rmatvec(&b.phi, &x[b.nv()..]);
        for j in 0..b.n {
            assert!((u[0][j] - C64::new(0.0, -1.0) * eta[j]).norm() < 1e-14);
            assert!(u[2][j].norm() < 1e-14 && u[1][j].norm() < 1e-14);
        }
        assert!(reconstruct_velocity(&op, &x[1..]).is_err());
    }

    #[test]
    fn stable_spectrum_and_errors() {
        let op = build_operator(1.0, 0.0, 1000.0, 48).unwrap();
        let sp = eigenvalues(&op).unwrap();
        assert!(sp.rightmost().unwrap().re < 0.0);
        assert!(build_operator(1.0, 0.0, 1000.0, 12).is_err());
        assert!(build_operator(1.0, 0.0, 0.5, 32).is_err());
    }
}
