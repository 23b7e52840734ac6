use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::norms::{h_tilde_norms, l2_norm, m_norm};

/// Composite Simpson rule on an odd number of equally spaced samples.
pub fn simpson(values: &[f64], h: f64) -> Result<f64> {
    let n = values.len();
    if n == 0 || n % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "Simpson's rule needs an odd number of samples, got {n}"
        )));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(s * h / 3.0)
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Squared norms of `w`, `w_t`, `f` and `f_t` at times starting from
/// `t = 0` and grouped into Simpson panels `(t[2i], t[2i+1], t[2i+2])`, each
/// with equal halves. Panels may differ in width.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSamples {
    pub t: Vec<f64>,
    pub w_htilde1: Vec<f64>,
    pub w_htilde2: Vec<f64>,
    pub wt_htilde1: Vec<f64>,
    pub f_l2: Vec<f64>,
    pub f_m: Vec<f64>,
    pub ft_m: Vec<f64>,
    /// `‖f⁽⁰⁾‖_H̃₂²` and `‖(L+1) f⁽⁰⁾‖_m²`.
    pub f0_htilde2: f64,
    pub f0_shifted_m: f64,
}

impl FunctionalSamples {
    pub fn push(
        &mut self,
        t: f64,
        w: &VelocityField,
        wt: &VelocityField,
        f: &VelocityField,
        ft: &VelocityField,
        reynolds: f64,
    ) -> Result<()> {
        let (w1, w2) = h_tilde_norms(w, reynolds)?;
        let (t1, _) = h_tilde_norms(wt, reynolds)?;
        self.t.push(t);
        self.w_htilde1.push(w1 * w1);
        self.w_htilde2.push(w2 * w2);
        self.wt_htilde1.push(t1 * t1);
        self.f_l2.push(l2_norm(f)?.powi(2));
        self.f_m.push(m_norm(f, reynolds)?.powi(2));
        self.ft_m.push(m_norm(ft, reynolds)?.powi(2));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Half-widths of the Simpson panels, after checking that every series
    /// has one value per time and that the panels are well formed.
    pub fn panels(&self) -> Result<Vec<f64>> {
        let n = self.t.len();
        let series = [
            &self.w_htilde1,
            &self.w_htilde2,
            &self.wt_htilde1,
            &self.f_l2,
            &self.f_m,
            &self.ft_m,
        ];
        if series.iter().any(|s| s.len() != n) {
            return Err(Error::InvalidInput("unsynchronized functional samples".into()));
        }
        if n == 0 || n % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "need an odd number of time samples, got {n}"
            )));
        }
        if self.t[0].abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "samples start at t = {}, not 0",
                self.t[0]
            )));
        }
        self.t
            .windows(3)
            .step_by(2)
            .map(|p| {
                let (a, b) = (p[1] - p[0], p[2] - p[1]);
                if a > 0.0 && (a - b).abs() <= 1e-9 * a {
                    Ok(a)
                } else {
                    Err(Error::InvalidInput(format!(
                        "panel at t = {} has unequal or non-increasing halves",
                        p[0]
                    )))
                }
            })
            .collect()
    }
}

/// `N`, `M` and `M₀` with unit constant, plus `N` at every even sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBundle {
    pub n_value: f64,
    pub m_value: f64,
    pub m0_value: f64,
    pub t: f64,
    pub reynolds: f64,
    /// `(t, N(w, t))` on the Simpson panel ends.
    pub n_history: Vec<(f64, f64)>,
    /// Largest relative gap between Simpson and the trapezoid rule over the
    /// time integrals.
    pub quadrature_gap: f64,
}

impl FunctionalBundle {
    /// `N ≤ 2 M̄` for a given `M̄`.
    pub fn within_budget(&self, m_bar: f64) -> bool {
        self.n_history.iter().all(|&(_, n)| n <= 2.0 * m_bar)
    }

    pub fn n_is_nondecreasing(&self, rel_tol: f64) -> bool {
        self.n_history
            .windows(2)
            .all(|p| p[1].1 >= p[0].1 - rel_tol * p[1].1.abs().max(p[0].1.abs()))
    }
}

/// Smallest constant in `2M̄ ≤ M̄ + C R⁴ M̄²` that a run with the given `M̄`
/// would need before it could transition.
pub fn implied_constant(m_bar: f64, reynolds: f64) -> f64 {
    1.0 / (reynolds.powi(4) * m_bar)
}

/// Panel-wise Simpson and trapezoid values of `∫ (a + b)`.
fn integrals(a: &[f64], b: &[f64], halves: &[f64]) -> (f64, f64) {
    let g: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let mut simp = 0.0;
    let mut trap = 0.0;
    for (k, h) in halves.iter().enumerate() {
        let (g0, g1, g2) = (g[2 * k], g[2 * k + 1], g[2 * k + 2]);
        simp += h / 3.0 * (g0 + 4.0 * g1 + g2);
        trap += 0.5 * h * (g0 + 2.0 * g1 + g2);
    }
    (simp, trap)
}

fn gap(s: f64, t: f64) -> f64 {
    if s == t {
        0.0
    } else {
        (s - t).abs() / s.abs().max(t.abs())
    }
}

/// Evaluate the functionals over the whole sampled interval.
pub fn evaluate_functionals(s: &FunctionalSamples, reynolds: f64) -> Result<FunctionalBundle> {
    let halves = s.panels()?;
    let n = s.len();
    let r2 = reynolds * reynolds;
    let (iw, iw_trap) = integrals(&s.w_htilde1, &s.wt_htilde1, &halves);
    let (if_, if_trap) = integrals(&s.f_m, &s.ft_m, &halves);
    let last = n - 1;
    let n_value = s.w_htilde2[last] + iw;
    let m_value = r2 * (s.f_l2[last] + if_);
    let m0_value = m_value + reynolds * s.f0_htilde2 + r2 * s.f0_shifted_m;
    let integrand: Vec<f64> = s.w_htilde1.iter().zip(&s.wt_htilde1).map(|(a, b)| a + b).collect();
    let mut n_history = vec![(s.t[0], s.w_htilde2[0])];
    let mut acc = 0.0;
    for (k, h) in halves.iter().enumerate() {
        let e = 2 * k + 2;
        acc += h / 3.0 * (integrand[e - 2] + 4.0 * integrand[e - 1] + integrand[e]);
        n_history.push((s.t[e], s.w_htilde2[e] + acc));
    }
    Ok(FunctionalBundle {
        n_value,
        m_value,
        m0_value,
        t: s.t[last],
        reynolds,
        n_history,
        quadrature_gap: gap(iw, iw_trap).max(gap(if_, if_trap)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{random_solenoidal, RandomFieldSpec};
    use crate::spectral::Grid;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let h = 0.25;
        let v: Vec<f64> = (0..9).map(|i| (i as f64 * h).powi(3) - 2.0 * (i as f64 * h)).collect();
        assert!((simpson(&v, h).unwrap() - (2f64.powi(4) / 4.0 - 4.0)).abs() < 1e-13);
        assert!(simpson(&v[..4], h).is_err());
        assert_eq!(trapezoid(&[1.0, 1.0, 1.0], 0.5), 1.0);
    }

    fn grid() -> Grid {
        Grid::new(4, 17, 4, 2.0, 1.0).unwrap()
    }

    #[test]
    fn graded_panels_integrate_exactly_for_quadratics() {
        let g = grid();
        let z = VelocityField::zeros(&g);
        let mut s = FunctionalSamples::default();
        for t in [0.0, 0.125, 0.25, 0.375, 0.5, 1.0, 1.5] {
            s.push(t, &z, &z, &z, &z, 1.0).unwrap();
        }
        s.w_htilde1 = s.t.iter().map(|t| t * t).collect();
        let b = evaluate_functionals(&s, 1.0).unwrap();
        assert!((b.n_value - 1.5f64.powi(3) / 3.0).abs() < 1e-14);
        assert_eq!(b.n_history.len(), 4);
    }

    #[test]
    fn zero_inputs_give_zero() {
        let z = VelocityField::zeros(&grid());
        let mut s = FunctionalSamples::default();
        for k in 0..5 {
            s.push(0.1 * k as f64, &z, &z, &z, &z, 10.0).unwrap();
        }
        let b = evaluate_functionals(&s, 10.0).unwrap();
        assert_eq!((b.n_value, b.m_value, b.m0_value), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_w_grows_affinely_with_htilde1_slope() {
        let g = grid();
        let w = random_solenoidal(&g, &RandomFieldSpec::seeded(1)).unwrap();
        let z = VelocityField::zeros(&g);
        let r = 30.0;
        let (h1, h2) = h_tilde_norms(&w, r).unwrap();
        let mut s = FunctionalSamples::default();
        for k in 0..21 {
            s.push(0.5 * k as f64, &w, &z, &z, &z, r).unwrap();
        }
        let b = evaluate_functionals(&s, r).unwrap();
        for &(t, n) in &b.n_history {
            let expect = h2 * h2 + t * h1 * h1;
            assert!((n - expect).abs() < 1e-12 * expect);
        }
        assert!(b.n_is_nondecreasing(0.0));
    }

    #[test]
    fn unsynchronized_samples_are_rejected() {
        let z = VelocityField::zeros(&grid());
        let mut s = FunctionalSamples::default();
        for k in 0..3 {
            s.push(k as f64, &z, &z, &z, &z, 2.0).unwrap();
        }
        s.ft_m.pop();
        assert!(evaluate_functionals(&s, 2.0).is_err());
        s.ft_m.push(0.0);
        s.t[2] = 2.5;
        assert!(evaluate_functionals(&s, 2.0).is_err());
        s.t[2] = 2.0;
        assert!(evaluate_functionals(&s, 2.0).is_ok());
        s.t[0] = 0.5;
        assert!(evaluate_functionals(&s, 2.0).is_err());
    }
}
