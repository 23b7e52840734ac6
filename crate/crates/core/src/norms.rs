//! Quadrature norms on velocity fields: L2, modified (m-) norm, H^k,
//! the J2 semi-norm, the two augmented norms H̃₁ and H̃₂, and a sampled
//! sup-norm.
//!
//! Horizontal integrals use Parseval on the Fourier coefficients, so every
//! squared norm carries the box area `l1 * l3`. Wall-normal integrals use the
//! exact Gram matrix of nodal polynomials; `x2` derivatives are collocation
//! derivatives, exact on the represented polynomials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::linalg::{czero, quad_form, rmatvec};
use crate::spectral::{chebyshev_nodes, interpolation_matrix, wavenumbers, Grid, PlaneFft, WallBasis};
use crate::C64;

/// Which norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    L2,
    M { reynolds: f64 },
    Hk { k: usize },
    HkM { k: usize, reynolds: f64 },
    J2,
    Htilde1 { reynolds: f64 },
    Htilde2,
    Sup,
}

impl NormKind {
    pub fn label(&self) -> &'static str {
        match self {
            NormKind::L2 => "L2",
            NormKind::M { .. } => "M",
            NormKind::Hk { .. } => "Hk",
            NormKind::HkM { .. } => "HkM",
            NormKind::J2 => "J2",
            NormKind::Htilde1 { .. } => "Htilde1",
            NormKind::Htilde2 => "Htilde2",
            NormKind::Sup => "Sup",
        }
    }

    /// Reynolds number carried by the weighted variants.
    pub fn reynolds(&self) -> Option<f64> {
        match *self {
            NormKind::M { reynolds } | NormKind::HkM { reynolds, .. } | NormKind::Htilde1 { reynolds } => {
                Some(reynolds)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.reynolds() {
            check_reynolds(r)?;
        }
        Ok(())
    }
}

pub(crate) fn check_reynolds(r: f64) -> Result<()> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "weighted norms need a Reynolds number >= 1, got {r}"
        )));
    }
    Ok(())
}

/// Per-mode squared wall-normal norms `‖D^b u_c‖²` (no area factor).
#[derive(Debug, Clone)]
pub struct ModeMoments {
    pub k1: f64,
    pub k3: f64,
    /// `q[c][b]` for component `c` and derivative order `b`.
    pub q: [Vec<f64>; 3],
}

/// Moments up to derivative order `order` for every horizontal mode.
pub fn mode_moments(f: &VelocityField, order: usize) -> Result<Vec<ModeMoments>> {
    let f = f.to_spectral();
    let g = f.grid;
    let b = WallBasis::get(g.n2)?;
    let mut out = Vec::with_capacity(g.modes());
    for w in wavenumbers(&g) {
        let mut q: [Vec<f64>; 3] = Default::default();
        for (c, qc) in q.iter_mut().enumerate() {
            let mut p = f.profile(c, w.i1, w.i3);
            for ord in 0..=order {
                if ord > 0 {
                    p = rmatvec(&b.d1, &p);
                }
                qc.push(quad_form(&p, &b.mass, &p).re.max(0.0));
            }
        }
        out.push(ModeMoments { k1: w.k1, k3: w.k3, q });
    }
    Ok(out)
}

/// `⟨a, b⟩ = ∫ conj(a) · b` over the box.
pub fn inner(a: &VelocityField, b: &VelocityField) -> Result<C64> {
    a.check_grid(b)?;
    let (a, b) = (a.to_spectral(), b.to_spectral());
    let g = a.grid;
    let basis = WallBasis::get(g.n2)?;
    let mut s = C64::new(0.0, 0.0);
    for w in wavenumbers(&g) {
        for c in 0..3 {
            s += quad_form(&a.profile(c, w.i1, w.i3), &basis.mass, &b.profile(c, w.i1, w.i3));
        }
    }
    Ok(s * g.area())
}

/// Squared L2 norm of each component.
pub fn component_l2_sq(f: &VelocityField) -> Result<[f64; 3]> {
    let area = f.grid.area();
    let mut out = [0.0; 3];
    for m in mode_moments(f, 0)? {
        for c in 0..3 {
            out[c] += area * m.q[c][0];
        }
    }
    Ok(out)
}

pub fn l2_norm(f: &VelocityField) -> Result<f64> {
    Ok(component_l2_sq(f)?.iter().sum::<f64>().sqrt())
}

/// Modified norm `sqrt(‖f1‖² + R²‖f2‖² + ‖f3‖²)`.
pub fn m_norm(f: &VelocityField, reynolds: f64) -> Result<f64> {
    check_reynolds(reynolds)?;
    let c = component_l2_sq(f)?;
    Ok((c[0] + reynolds * reynolds * c[1] + c[2]).sqrt())
}

/// Squared first-derivative sums `Σ_k ‖∂f_c/∂x_k‖²` per component.
pub fn component_grad_sq(f: &VelocityField) -> Result<[f64; 3]> {
    let area = f.grid.area();
    let mut out = [0.0; 3];
    for m in mode_moments(f, 1)? {
        let k2 = m.k1 * m.k1 + m.k3 * m.k3;
        for c in 0..3 {
            out[c] += area * (k2 * m.q[c][0] + m.q[c][1]);
        }
    }
    Ok(out)
}

/// `Σ_k ‖∂f/∂x_k‖²`, optionally with the (1, R², 1) weights.
pub fn grad_sq(f: &VelocityField, reynolds: Option<f64>) -> Result<f64> {
    let c = component_grad_sq(f)?;
    let w2 = reynolds.map_or(1.0, |r| r * r);
    Ok(c[0] + w2 * c[1] + c[2])
}

fn j2_sq_from(moments: &[ModeMoments], area: f64) -> f64 {
    let mut s = 0.0;
    for m in moments {
        let (a, b) = (m.k1 * m.k1, m.k3 * m.k3);
        for c in 0..3 {
            s += area * ((a * a + b * b) * m.q[c][0] + (a + b) * m.q[c][1]);
        }
    }
    s
}

/// `sqrt(‖∂11 f‖² + ‖∂12 f‖² + ‖∂23 f‖² + ‖∂33 f‖²)`.
pub fn j2_seminorm(f: &VelocityField) -> Result<f64> {
    let m = mode_moments(f, 1)?;
    Ok(j2_sq_from(&m, f.grid.area()).sqrt())
}

/// `(H̃₁, H̃₂)`.
pub fn h_tilde_norms(f: &VelocityField, reynolds: f64) -> Result<(f64, f64)> {
    check_reynolds(reynolds)?;
    let area = f.grid.area();
    let moments = mode_moments(f, 1)?;
    let mut l2c = [0.0; 3];
    let mut grad = 0.0;
    for m in &moments {
        let k2 = m.k1 * m.k1 + m.k3 * m.k3;
        for c in 0..3 {
            l2c[c] += area * m.q[c][0];
            grad += area * (k2 * m.q[c][0] + m.q[c][1]);
        }
    }
    let j2 = j2_sq_from(&moments, area);
    let m2 = l2c[0] + reynolds * reynolds * l2c[1] + l2c[2];
    let l2 = l2c[0] + l2c[1] + l2c[2];
    Ok(((m2 + grad + j2).sqrt(), (l2 + grad + j2).sqrt()))
}

/// Squared `H^k` norm of each component.
pub fn component_hk_sq(f: &VelocityField, k: usize) -> Result<[f64; 3]> {
    if k > 4 {
        return Err(Error::InvalidInput(format!("Sobolev order {k} > 4")));
    }
    if f.grid.n2 < k + 4 {
        return Err(Error::Resolution(format!(
            "H^{k} needs n2 >= {}, got {}",
            k + 4,
            f.grid.n2
        )));
    }
    let area = f.grid.area();
    let mut out = [0.0; 3];
    for m in mode_moments(f, k)? {
        // every multi-index (a, b, c) with a + b + c <= k, counted once
        let mut horiz = vec![0.0; k + 1];
        for (s, h) in horiz.iter_mut().enumerate() {
            for a in 0..=s {
                *h += m.k1.powi(2 * a as i32) * m.k3.powi(2 * (s - a) as i32);
            }
        }
        for c in 0..3 {
            for b in 0..=k {
                let hsum: f64 = horiz[..=(k - b)].iter().sum();
                out[c] += area * hsum * m.q[c][b];
            }
        }
    }
    Ok(out)
}

/// `H^k` norm; `reynolds = Some(R)` gives the weighted `H^k,m` variant.
pub fn hk_norm(f: &VelocityField, k: usize, reynolds: Option<f64>) -> Result<f64> {
    if let Some(r) = reynolds {
        check_reynolds(r)?;
    }
    let c = component_hk_sq(f, k)?;
    let w2 = reynolds.map_or(1.0, |r| r * r);
    Ok((c[0] + w2 * c[1] + c[2]).sqrt())
}

/// Physical samples of each component on the grid refined twice in every
/// direction (`2 n1 x (2 n2 - 1) x 2 n3`, Gauss–Lobatto in `x2`, which keeps
/// every original node).
pub fn oversampled_physical(f: &VelocityField) -> Result<(Grid, [Vec<C64>; 3])> {
    let f = f.to_spectral();
    let g = f.grid;
    let p1 = if g.n1 > 1 { 2 * g.n1 } else { 1 };
    let p3 = if g.n3 > 1 { 2 * g.n3 } else { 1 };
    let py = 2 * g.n2 - 1;
    let fine_nodes = chebyshev_nodes(py)?;
    let interp = interpolation_matrix(g.n2, &fine_nodes)?;
    let fg = Grid {
        n1: p1,
        n2: py,
        n3: p3,
        l1: g.l1,
        l3: g.l3,
    };
    let fft = PlaneFft::new(p1, p3);
    let slot = |m: i64, p: usize| -> usize { m.rem_euclid(p as i64) as usize };
    let modes = wavenumbers(&g);
    let mut out: [Vec<C64>; 3] = Default::default();
    for (c, oc) in out.iter_mut().enumerate() {
        let mut data = vec![czero(); p1 * py * p3];
        for w in &modes {
            let prof = f.profile(c, w.i1, w.i3);
            if prof.iter().all(|v| *v == czero()) {
                continue;
            }
            // split Nyquist content evenly between +N/2 and -N/2
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
            let fine = rmatvec(&interp, &prof);
            for &(m, a) in &ms {
                for &(n, bw) in &ns {
                    let (s1, s3) = (slot(m, p1), slot(n, p3));
                    for (jf, v) in fine.iter().enumerate() {
                        data[(jf * p1 + s1) * p3 + s3] += *v * (a * bw);
                    }
                }
            }
        }
        for chunk in data.chunks_mut(p1 * p3) {
            fft.inverse(chunk);
        }
        *oc = data;
    }
    Ok((fg, out))
}

/// Max over components of the largest sampled magnitude on the oversampled
/// grid.
pub fn sup_norm(f: &VelocityField) -> Result<f64> {
    if f.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let (_, comps) = oversampled_physical(f)?;
    Ok(comps
        .iter()
        .flat_map(|c| c.iter().map(|v| v.norm()))
        .fold(0.0, f64::max))
}

/// Evaluate any [`NormKind`].
pub fn norm(f: &VelocityField, kind: NormKind) -> Result<f64> {
    kind.validate()?;
    match kind {
        NormKind::L2 => l2_norm(f),
        NormKind::M { reynolds } => m_norm(f, reynolds),
        NormKind::Hk { k } => hk_norm(f, k, None),
        NormKind::HkM { k, reynolds } => hk_norm(f, k, Some(reynolds)),
        NormKind::J2 => j2_seminorm(f),
        NormKind::Htilde1 { reynolds } => Ok(h_tilde_norms(f, reynolds)?.0),
        NormKind::Htilde2 => Ok(h_tilde_norms(f, 1.0)?.1),
        NormKind::Sup => sup_norm(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{random_solenoidal, RandomFieldSpec};
    use crate::spectral::{chebyshev_coefficients, chebyshev_t};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(8, 16, 6, 2.0 * PI, PI).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn zero_field() {
        let f = VelocityField::zeros(&grid());
        assert_eq!(l2_norm(&f).unwrap(), 0.0);
        assert_eq!(h_tilde_norms(&f, 10.0).unwrap(), (0.0, 0.0));
        assert_eq!(sup_norm(&f).unwrap(), 0.0);
    }

    #[test]
    fn constant_field_volume() {
        let g = Grid::new(4, 10, 4, 2.0 * PI, 2.0 * PI).unwrap();
        let mut f = VelocityField::zeros(&g);
        f.set_profile(0, 0, 0, &vec![C64::new(1.0, 0.0); g.n2]);
        let expect = (2.0 * (2.0 * PI) * (2.0 * PI)).sqrt();
        assert!(close(l2_norm(&f).unwrap(), expect, 1e-14));
    }

    #[test]
    fn m_norm_weights() {
        let g = grid();
        let f = random_solenoidal(&g, &RandomFieldSpec::seeded(2)).unwrap();
        assert!(close(m_norm(&f, 1.0).unwrap(), l2_norm(&f).unwrap(), 1e-14));
        let mut only2 = VelocityField::zeros(&g);
        only2.comps[1] = f.comps[1].clone();
        let g2 = l2_norm(&only2).unwrap();
        assert!(close(m_norm(&only2, 10.0).unwrap(), 10.0 * g2, 1e-14));
        let c = component_l2_sq(&f).unwrap();
        let r = 100.0;
        let recombined = (c[0] + r * r * c[1] + c[2]).sqrt();
        assert!(close(m_norm(&f, r).unwrap(), recombined, 1e-13));
        assert!(matches!(m_norm(&f, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn j2_single_mode() {
        let g = Grid::new(4, 16, 1, 2.0 * PI, 1.0).unwrap();
        let b = WallBasis::get(g.n2).unwrap();
        let phi: Vec<C64> = b
            .nodes
            .iter()
            .map(|&y| C64::new((1.0 - y * y) * y.exp(), 0.0))
            .collect();
        let mut f = VelocityField::zeros(&g);
        f.set_profile(0, 1, 0, &phi);
        // box area times |coefficient|^2 integrals
        let area = g.area();
        let d = rmatvec(&b.d1, &phi);
        let expect = (area * (quad_form(&phi, &b.mass, &phi).re + quad_form(&d, &b.mass, &d).re)).sqrt();
        assert!(close(j2_seminorm(&f).unwrap(), expect, 1e-13));
        // constant in x1 and x3 gives zero
        let mut flat = VelocityField::zeros(&g);
        flat.set_profile(1, 0, 0, &phi);
        assert_eq!(j2_seminorm(&flat).unwrap(), 0.0);
    }

    #[test]
    fn h_tilde_ordering() {
        let f = random_solenoidal(&grid(), &RandomFieldSpec::seeded(4)).unwrap();
        let (a, b) = h_tilde_norms(&f, 1.0).unwrap();
        assert_eq!(a, b);
        let (a, b) = h_tilde_norms(&f, 50.0).unwrap();
        assert!(a >= b);
        assert!(l2_norm(&f).unwrap() <= b);
    }

    #[test]
    fn hk_order_zero_and_weighting() {
        let f = random_solenoidal(&grid(), &RandomFieldSpec::seeded(5)).unwrap();
        assert!(close(hk_norm(&f, 0, None).unwrap(), l2_norm(&f).unwrap(), 1e-14));
        assert!(close(
            hk_norm(&f, 0, Some(30.0)).unwrap(),
            m_norm(&f, 30.0).unwrap(),
            1e-14
        ));
        let g = Grid::new(4, 8, 4, 1.0, 1.0).unwrap();
        assert!(matches!(
            hk_norm(&VelocityField::zeros(&g), 5, None),
            Err(Error::InvalidInput(_))
        ));
        assert!(hk_norm(&VelocityField::zeros(&g), 4, None).is_ok());
    }

    #[test]
    fn hk_single_mode_closed_form() {
        // u1 = cos(x1) T_3(y): H^2 sum over |alpha| <= 2
        let g = Grid::new(4, 12, 1, 2.0 * PI, 1.0).unwrap();
        let b = WallBasis::get(g.n2).unwrap();
        let t3: Vec<C64> = b.nodes.iter().map(|&y| C64::new(chebyshev_t(y, 4)[3], 0.0)).collect();
        let mut f = VelocityField::zeros(&g);
        let half: Vec<C64> = t3.iter().map(|v| v * 0.5).collect();
        f.set_profile(0, 1, 0, &half);
        f.set_profile(0, 3, 0, &half);
        // int T3^2 = 34/35, int (T3')^2 = 1134/35 ... computed from the polynomial
        // T3 = 4y^3 - 3y, T3' = 12y^2 - 3, T3'' = 24y
        let i0 = 34.0 / 35.0;
        let i1 = 2.0 * (144.0 / 5.0 - 24.0 + 9.0);
        let i2 = 576.0 * 2.0 / 3.0;
        // x1 average of cos^2 and sin^2 is 1/2; area = 2 pi
        let area = g.area() * 0.5;
        let expect = area * (i0 + (i0 + i1) + (i0 + i1 + i2));
        let got = hk_norm(&f, 2, None).unwrap().powi(2);
        assert!(close(got, expect, 1e-12), "{got} vs {expect}");
        // degree-3 profile: H^4 only adds the k1 powers and T3''' = 24
        let i3 = 576.0 * 2.0;
        let expect4 = area * (i0 + (i0 + i1) + (i0 + i1 + i2) + (i0 + i1 + i2 + i3) + (i0 + i1 + i2 + i3));
        let got4 = hk_norm(&f, 4, None).unwrap().powi(2);
        assert!(close(got4, expect4, 1e-12), "{got4} vs {expect4}");
        let c = chebyshev_coefficients(&t3.iter().map(|v| v.re).collect::<Vec<_>>());
        assert!((c[3] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn sup_of_known_field() {
        let g = Grid::new(16, 16, 16, 2.0 * PI, 2.0 * PI).unwrap();
        let b = WallBasis::get(g.n2).unwrap();
        let prof: Vec<C64> = b.nodes.iter().map(|&y| C64::new(0.0, -0.5 * (1.0 - y * y))).collect();
        let conj: Vec<C64> = prof.iter().map(|v| v.conj()).collect();
        let mut f = VelocityField::zeros(&g);
        f.set_profile(0, 1, 0, &prof);
        f.set_profile(0, 15, 0, &conj);
        let s = sup_norm(&f).unwrap();
        assert!((s - 1.0).abs() < 1e-3, "{s}");
        assert!(close(sup_norm(&f.scaled(-3.0)).unwrap(), 3.0 * s, 1e-15));
    }
}
