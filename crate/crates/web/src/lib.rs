//! Browser bindings: eigenvalue spectra, the resolvent norm along the
//! imaginary axis, and resolvent growth with the Reynolds number.
//!
//! Every entry point returns a JSON string; errors come back as
//! `{"error": "..."}` so the page needs no exception handling.

use couette::operator::{build_operator, eigenvalues};
use couette::resolvent::{scaling_sweep, sup_resolvent_ctx, KSet, ResolventContext, ResolventNorm, SearchConfig};
use couette::C64;
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest wall-normal resolution the page accepts.
pub const MAX_N2: usize = 96;

fn check_n2(n2: usize) -> couette::Result<()> {
    if !(16..=MAX_N2).contains(&n2) {
        return Err(couette::Error::InvalidInput(format!(
            "n2 must lie in 16..={MAX_N2}, got {n2}"
        )));
    }
    Ok(())
}

fn to_json<T: Serialize>(r: couette::Result<T>) -> String {
    match r.and_then(|v| Ok(serde_json::to_string(&v)?)) {
        Ok(s) => s,
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

#[derive(Debug, Serialize)]
pub struct SpectrumOut {
    /// `[re, im]` pairs sorted by decreasing real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub rightmost: [f64; 2],
}

pub fn spectrum_data(k1: f64, k3: f64, reynolds: f64, n2: usize) -> couette::Result<SpectrumOut> {
    check_n2(n2)?;
    let spec = eigenvalues(&build_operator(k1, k3, reynolds, n2)?)?;
    let top = spec
        .rightmost()
        .ok_or_else(|| couette::Error::Numerical("empty spectrum".into()))?;
    Ok(SpectrumOut {
        eigenvalues: spec.eigenvalues.iter().map(|l| [l.re, l.im]).collect(),
        rightmost: [top.re, top.im],
    })
}

#[derive(Debug, Serialize)]
pub struct CurveOut {
    pub omega: Vec<f64>,
    pub value: Vec<f64>,
    /// Refined supremum `[omega, value]`.
    pub sup: [f64; 2],
}

pub fn resolvent_curve_data(
    k1: f64,
    k3: f64,
    reynolds: f64,
    n2: usize,
    norm: &str,
    points: usize,
) -> couette::Result<CurveOut> {
    check_n2(n2)?;
    if !(3..=2001).contains(&points) {
        return Err(couette::Error::InvalidInput(format!(
            "points must lie in 3..=2001, got {points}"
        )));
    }
    let norm = ResolventNorm::parse(norm)?;
    let ctx = ResolventContext::new(build_operator(k1, k3, reynolds, n2)?, norm)?;
    let half = k1.abs() + 1.0;
    let omega: Vec<f64> = (0..points)
        .map(|i| -half + 2.0 * half * i as f64 / (points - 1) as f64)
        .collect();
    let value = omega
        .iter()
        .map(|&w| ctx.value(C64::new(0.0, w)))
        .collect::<couette::Result<Vec<_>>>()?;
    let sup = sup_resolvent_ctx(&ctx, &SearchConfig::default())?;
    Ok(CurveOut {
        omega,
        value,
        sup: [sup.s.im, sup.value],
    })
}

#[derive(Debug, Serialize)]
pub struct ScalingOut {
    pub reynolds: Vec<f64>,
    pub sup: Vec<f64>,
    pub exponent: f64,
    pub residual: f64,
}

pub fn scaling_data(k1: f64, k3: f64, n2: usize, norm: &str, reynolds: &[f64]) -> couette::Result<ScalingOut> {
    check_n2(n2)?;
    let norm = ResolventNorm::parse(norm)?;
    let mut r = reynolds.to_vec();
    r.sort_by(f64::total_cmp);
    r.dedup();
    let kset = KSet {
        k1: vec![k1],
        k3: vec![k3],
    };
    let sweep = scaling_sweep(&kset, &r, norm, n2, &SearchConfig::default())?;
    Ok(ScalingOut {
        reynolds: sweep.fit.r_values,
        sup: sweep.fit.sup_values,
        exponent: sweep.fit.exponent,
        residual: sweep.fit.residual,
    })
}

/// Eigenvalues of the linear operator at one wavenumber pair.
#[wasm_bindgen]
pub fn spectrum(k1: f64, k3: f64, reynolds: f64, n2: usize) -> String {
    to_json(spectrum_data(k1, k3, reynolds, n2))
}

/// Resolvent norm at `points` frequencies on the imaginary axis, plus the
/// refined supremum.
#[wasm_bindgen]
pub fn resolvent_curve(k1: f64, k3: f64, reynolds: f64, n2: usize, norm: &str, points: usize) -> String {
    to_json(resolvent_curve_data(k1, k3, reynolds, n2, norm, points))
}

/// Supremum of the resolvent norm for each Reynolds number and the fitted
/// log-log slope.
#[wasm_bindgen]
pub fn scaling(k1: f64, k3: f64, n2: usize, norm: &str, reynolds: Vec<f64>) -> String {
    to_json(scaling_data(k1, k3, n2, norm, &reynolds))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_is_sorted_and_stable() {
        let s = spectrum_data(1.0, 0.0, 1000.0, 24).unwrap();
        assert_eq!(s.rightmost, s.eigenvalues[0]);
        assert!(s.rightmost[0] < 0.0);
        assert!(s.eigenvalues.windows(2).all(|w| w[0][0] >= w[1][0]));
    }

    #[test]
    fn curve_maximum_does_not_exceed_the_refined_supremum() {
        let c = resolvent_curve_data(0.0, 1.0, 200.0, 24, "m", 21).unwrap();
        assert_eq!((c.omega.len(), c.value.len()), (21, 21));
        let top = c.value.iter().copied().fold(0.0, f64::max);
        assert!(top <= c.sup[1] * (1.0 + 1e-9), "{top} > {}", c.sup[1]);
    }

    #[test]
    fn scaling_recovers_linear_growth_of_the_m_norm() {
        let s = scaling_data(0.0, 1.0, 24, "m", &[400.0, 100.0, 200.0]).unwrap();
        assert_eq!(s.reynolds, vec![100.0, 200.0, 400.0]);
        assert!((s.exponent - 1.0).abs() < 0.3, "{}", s.exponent);
    }

    #[test]
    fn bad_input_comes_back_as_json_error() {
        let v: serde_json::Value = serde_json::from_str(&spectrum(0.0, 1.0, 100.0, 4)).unwrap();
        assert!(v["error"].as_str().unwrap().contains("n2"));
        let v: serde_json::Value = serde_json::from_str(&resolvent_curve(0.0, 1.0, 100.0, 24, "sup", 11)).unwrap();
        assert!(v["error"].is_string());
    }
}
