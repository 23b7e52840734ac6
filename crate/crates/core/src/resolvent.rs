//! Weighted resolvent norms `‖(sI - L)⁻¹‖` per wavenumber, their supremum over
//! the closed right half-plane, and log-log scaling fits in `R`.
//!
//! Forcing and response are solenoidal no-slip fields `f = Λ z`, `w = Λ x`
//! with `(sE - A) x = E z`. A norm with component weights `W` and optional
//! derivative terms has Gram matrix `G = Λᴴ (W ⊗ M + ...) Λ` on states; with
//! `G = C Cᴴ` the operator norm is `σ_max(C_outᴴ (sE - A)⁻¹ E C_in⁻ᴴ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cholesky, rmatvec, CMat};
use crate::norms::{check_reynolds, NormKind};
use crate::operator::{build_operator, eigenvalues, weak_project, WavenumberOperator};
use crate::C64;
use faer::Mat;

/// Input/output norm pairing of a resolvent evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolventNorm {
    /// L2 in, L2 out.
    Energy,
    /// m-norm in, m-norm out.
    Modified,
    /// m-norm in, H̃₁ out.
    Htilde1,
}

impl ResolventNorm {
    pub fn at(self, reynolds: f64) -> NormKind {
        match self {
            ResolventNorm::Energy => NormKind::L2,
            ResolventNorm::Modified => NormKind::M { reynolds },
            ResolventNorm::Htilde1 => NormKind::Htilde1 { reynolds },
        }
    }

    pub fn from_kind(kind: NormKind) -> Result<(Self, f64)> {
        match kind {
            NormKind::L2 => Ok((ResolventNorm::Energy, 1.0)),
            NormKind::M { reynolds } => Ok((ResolventNorm::Modified, reynolds)),
            NormKind::Htilde1 { reynolds } => Ok((ResolventNorm::Htilde1, reynolds)),
            other => Err(Error::InvalidInput(format!(
                "resolvent norms support L2, M and Htilde1, got {}",
                other.label()
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ResolventNorm::Energy => "energy",
            ResolventNorm::Modified => "m",
            ResolventNorm::Htilde1 => "htilde1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "energy" | "l2" => Ok(ResolventNorm::Energy),
            "m" | "modified" => Ok(ResolventNorm::Modified),
            "htilde1" | "h1" => Ok(ResolventNorm::Htilde1),
            _ => Err(Error::InvalidInput(format!(
                "unknown resolvent norm '{s}' (expected energy, m or htilde1)"
            ))),
        }
    }
}

/// One resolvent evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSample {
    pub s: C64,
    pub k1: f64,
    pub k3: f64,
    pub reynolds: f64,
    pub n2: usize,
    pub norm_kind: NormKind,
    pub value: f64,
}

pub const RESOLVENT_CSV_HEADER: &str = "k1,k3,R,n2,norm_kind,re_s,im_s,value";

impl ResolventSample {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e},{:e}",
            self.k1,
            self.k3,
            self.reynolds,
            self.n2,
            self.norm_kind.label(),
            self.s.re,
            self.s.im,
            self.value
        )
    }
}

/// Per-component weights `(w1, w2, w3)` for the L2 part of a norm.
fn component_weights(norm: ResolventNorm, r: f64) -> [f64; 3] {
    match norm {
        ResolventNorm::Energy => [1.0; 3],
        _ => [1.0, r * r, 1.0],
    }
}

/// `Λᴴ (diag(wm) ⊗ M + diag(wk) ⊗ K) Λ` for per-component weights on the
/// mass and stiffness parts.
fn gram(op: &WavenumberOperator, wm: [f64; 3], wk: [f64; 3]) -> CMat {
    let b = &op.basis;
    let lift = op.lift_matrices();
    let n = op.dim();
    let mut g = Mat::<C64>::zeros(n, n);
    for c in 0..3 {
        if wm[c] == 0.0 && wk[c] == 0.0 {
            continue;
        }
        let lc = &lift[c];
        let weighted = Mat::from_fn(b.n, b.n, |i, j| {
            C64::new(wm[c] * b.mass[(i, j)] + wk[c] * b.stiff[(i, j)], 0.0)
        });
        g += lc.adjoint() * (&weighted * lc);
    }
    // symmetrize against roundoff before factorization
    Mat::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)].conj()))
}

/// Gram matrix of the output norm on states.
pub fn output_gram(op: &WavenumberOperator, norm: ResolventNorm, r: f64) -> CMat {
    let w = component_weights(norm, r);
    match norm {
        ResolventNorm::Htilde1 => {
            let (k1s, k3s) = (op.k1 * op.k1, op.k3 * op.k3);
            let extra = k1s + k3s + k1s * k1s + k3s * k3s;
            let stiff = 1.0 + k1s + k3s;
            gram(op, [w[0] + extra, w[1] + extra, w[2] + extra], [stiff; 3])
        }
        _ => gram(op, w, [0.0; 3]),
    }
}

/// Gram matrix of the input norm on forcing states.
pub fn input_gram(op: &WavenumberOperator, norm: ResolventNorm, r: f64) -> CMat {
    gram(op, component_weights(norm, r), [0.0; 3])
}

/// Precomputed factors for repeated evaluations at one `(k1, k3, R, norm)`.
#[derive(Debug, Clone)]
pub struct ResolventContext {
    pub op: WavenumberOperator,
    pub norm: ResolventNorm,
    pub c_in: CMat,
    pub c_out: CMat,
    /// `C_inᴴ C_out⁻ᴴ` and `C_inᴴ E⁻¹ A C_out⁻ᴴ`, so that the inverse of
    /// the weighted resolvent is `s e_w - a_w`.
    e_w: CMat,
    a_w: CMat,
}

impl ResolventContext {
    pub fn new(op: WavenumberOperator, norm: ResolventNorm) -> Result<Self> {
        let r = op.reynolds;
        check_reynolds(r)?;
        let c_in = cholesky(&input_gram(&op, norm, r))?;
        let c_out = cholesky(&output_gram(&op, norm, r))?;
        let n = op.dim();
        let c_out_inv_h = linalg::solve_lower_adjoint(&c_out, &linalg::identity(n));
        let e_w = c_in.adjoint() * &c_out_inv_h;
        let a_w = c_in.adjoint() * (op.generator()? * &c_out_inv_h);
        Ok(ResolventContext {
            op,
            norm,
            c_in,
            c_out,
            e_w,
            a_w,
        })
    }

    pub fn kind(&self) -> NormKind {
        self.norm.at(self.op.reynolds)
    }

    fn shifted(&self, s: C64) -> CMat {
        let n = self.op.dim();
        Mat::from_fn(n, n, |i, j| s * self.op.e[(i, j)] - self.op.a[(i, j)])
    }

    /// `C_outᴴ (sE - A)⁻¹ E C_in⁻ᴴ`.
    pub fn weighted_resolvent(&self, s: C64) -> Result<CMat> {
        let rhs = &self.op.e * self.c_in_inv_h();
        let x = linalg::solve(&self.shifted(s), &rhs).map_err(|_| self.violation(s))?;
        Ok(self.c_out.adjoint() * &x)
    }

    fn c_in_inv_h(&self) -> CMat {
        linalg::solve_lower_adjoint(&self.c_in, &linalg::identity(self.op.dim()))
    }

    fn violation(&self, s: C64) -> Error {
        if s.re >= 0.0 {
            Error::StabilityViolation {
                re: s.re,
                im: s.im,
                detail: format!(
                    "sE - A singular at k1={}, k3={}, R={}",
                    self.op.k1, self.op.k3, self.op.reynolds
                ),
            }
        } else {
            Error::Numerical(format!("sE - A singular at s = {s}"))
        }
    }

    /// Operator norm at `s` as `1/σ_min` of the whitened pencil, by Lanczos.
    pub fn value(&self, s: C64) -> Result<f64> {
        let n = self.op.dim();
        let p = Mat::from_fn(n, n, |i, j| s * self.e_w[(i, j)] - self.a_w[(i, j)]);
        let v = linalg::inverse_norm(&p, 1e-13).map_err(|_| self.violation(s))?;
        if !v.is_finite() {
            return Err(self.violation(s));
        }
        Ok(v)
    }

    /// Same quantity by a full SVD of the explicit weighted resolvent.
    pub fn value_svd(&self, s: C64) -> Result<f64> {
        let m = self.weighted_resolvent(s)?;
        let sv = linalg::singular_values(&m)?;
        let v = sv.first().copied().unwrap_or(0.0);
        if !v.is_finite() {
            return Err(self.violation(s));
        }
        Ok(v)
    }

    pub fn sample(&self, s: C64) -> Result<ResolventSample> {
        Ok(ResolventSample {
            s,
            k1: self.op.k1,
            k3: self.op.k3,
            reynolds: self.op.reynolds,
            n2: self.op.n2,
            norm_kind: self.kind(),
            value: self.value(s)?,
        })
    }

    /// Optimal forcing and response states `(f*, w*)` from the top singular
    /// pair, with `‖f*‖_in = 1` and `‖w*‖_out` equal to the norm.
    pub fn optimal_pair(&self, s: C64) -> Result<(Vec<C64>, Vec<C64>)> {
        let m = self.weighted_resolvent(s)?;
        let (sigma, u, v) = linalg::top_singular_triple(&m)?;
        let f = linalg::matvec(&self.c_in_inv_h(), &v);
        let cw = linalg::solve_lower_adjoint(&self.c_out, &linalg::vec_to_col(&u));
        let w = linalg::col_to_vec(&cw, 0).iter().map(|x| x * sigma).collect();
        Ok((f, w))
    }

    /// `‖(sE - A) w* - E f*‖ / ‖E f*‖` for the optimal pair.
    pub fn svd_consistency_residual(&self, s: C64) -> Result<f64> {
        let (f, w) = self.optimal_pair(s)?;
        let lhs = linalg::matvec(&self.shifted(s), &w);
        let rhs = linalg::matvec(&self.op.e, &f);
        let num: f64 = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, c)| (a - c).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        Ok(num / den)
    }

    /// `‖w‖_out / ‖f‖_in` for the forcing state `z`, evaluated on nodal
    /// velocities with direct quadrature (no Gram factors).
    pub fn forcing_ratio(&self, s: C64, z: &[C64]) -> Result<f64> {
        let b = &self.op.basis;
        let (k1, k3) = (self.op.k1, self.op.k3);
        let f = b.lift(k1, k3, z);
        let rhs = weak_project(b, k1, k3, &f);
        let x = linalg::solve(&self.shifted(s), &linalg::vec_to_col(&rhs))?;
        let u = b.lift(k1, k3, &linalg::col_to_vec(&x, 0));
        let w = component_weights(self.norm, self.op.reynolds);
        let sq = |p: &[C64]| linalg::quad_form(p, &b.mass, p).re;
        let fin: f64 = (0..3).map(|c| w[c] * sq(&f[c])).sum();
        let (a, c3) = (k1 * k1, k3 * k3);
        let mut out = 0.0;
        for c in 0..3 {
            let l2 = sq(&u[c]);
            out += w[c] * l2;
            if self.norm == ResolventNorm::Htilde1 {
                let d2 = sq(&rmatvec(&b.d1, &u[c]));
                // first derivatives, then the J2 terms
                out += (a + c3) * l2 + d2;
                out += (a * a + c3 * c3) * l2 + (a + c3) * d2;
            }
        }
        Ok((out / fin).sqrt())
    }
}

/// `resolvent_norm(op, s, kind)`: weighted operator norm at one point.
/// Points with `Re s < 0` are evaluated but logged, since the estimate only
/// covers the closed right half-plane.
pub fn resolvent_norm(op: &WavenumberOperator, s: C64, kind: NormKind) -> Result<f64> {
    let (norm, r) = ResolventNorm::from_kind(kind)?;
    if norm != ResolventNorm::Energy && (r - op.reynolds).abs() > 0.0 {
        return Err(Error::InvalidInput(format!(
            "norm Reynolds number {r} differs from operator Reynolds number {}",
            op.reynolds
        )));
    }
    if s.re < 0.0 {
        log::warn!("resolvent evaluated at Re s = {} < 0", s.re);
    }
    ResolventContext::new(op.clone(), norm)?.value(s)
}

/// Search settings for [`sup_resolvent`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Uniform grid points on the initial frequency window.
    pub coarse_points: usize,
    /// Frequency window `[-half_width, half_width]`; `None` uses `|k1| + 1`.
    pub half_width: Option<f64>,
    /// Golden-section stopping width in `ω`.
    pub tol: f64,
    pub max_iter: usize,
    /// Points of the fallback grid when refinement is not unimodal.
    pub dense_points: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            coarse_points: 41,
            half_width: None,
            tol: 1e-7,
            max_iter: 200,
            dense_points: 401,
        }
    }
}

/// Supremum on the imaginary axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub s: C64,
    pub value: f64,
    pub evaluations: usize,
    /// True when golden-section refinement was abandoned for a dense grid.
    pub fallback: bool,
}

fn golden<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
    evals: &mut usize,
) -> Result<(f64, f64, bool)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let fa = f(a)?;
    let fb = f(b)?;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    *evals += 4;
    let mut unimodal = fc.max(fd) >= fa.max(fb) * (1.0 - 1e-12);
    let mut it = 0;
    while (b - a).abs() > tol && it < max_iter {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
        *evals += 1;
        it += 1;
    }
    let (x, v) = if fc >= fd { (c, fc) } else { (d, fd) };
    if v < fa.max(fb) * (1.0 - 1e-12) {
        unimodal = false;
    }
    let (x, v) = [(a, fa), (b, fb), (x, v)]
        .into_iter()
        .fold((x, v), |best, cand| if cand.1 > best.1 { cand } else { best });
    Ok((x, v, unimodal))
}

fn grid_max<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    lo: f64,
    hi: f64,
    points: usize,
    evals: &mut usize,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let pts: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let mut vals = Vec::with_capacity(points);
    for &w in &pts {
        vals.push(f(w)?);
    }
    *evals += points;
    let mut best = 0;
    for i in 1..points {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    Ok((pts, vals, best))
}

/// Supremum of the weighted resolvent over `Re s >= 0`, located on the
/// imaginary axis: the resolvent is analytic for `Re s > 0` when the operator
/// is stable and decays at infinity, so the maximum modulus principle places
/// the supremum on the boundary. Coarse grid, then golden-section refinement
/// around the best grid point; a non-unimodal refinement falls back to a
/// dense grid and logs a warning.
pub fn sup_resolvent_ctx(ctx: &ResolventContext, search: &SearchConfig) -> Result<SupResult> {
    if search.coarse_points < 3 {
        return Err(Error::InvalidInput("coarse_points must be at least 3".into()));
    }
    let mut evals = 0usize;
    let mut f = |w: f64| ctx.value(C64::new(0.0, w));
    let mut half = search.half_width.unwrap_or(ctx.op.k1.abs() + 1.0);
    let (mut pts, mut vals, mut best);
    // widen the window while the maximum sits on its edge
    loop {
        let r = grid_max(&mut f, -half, half, search.coarse_points, &mut evals)?;
        pts = r.0;
        vals = r.1;
        best = r.2;
        if (best == 0 || best == pts.len() - 1) && half < 64.0 * (ctx.op.k1.abs() + 1.0) {
            half *= 2.0;
            continue;
        }
        break;
    }
    let lo = pts[best.saturating_sub(1)];
    let hi = pts[(best + 1).min(pts.len() - 1)];
    let (mut w, mut v, unimodal) = golden(&mut f, lo, hi, search.tol, search.max_iter, &mut evals)?;
    let mut fallback = false;
    if !unimodal || v < vals[best] {
        log::warn!(
            "non-unimodal resolvent refinement at k1={}, k3={}, R={}; using dense grid",
            ctx.op.k1,
            ctx.op.k3,
            ctx.op.reynolds
        );
        fallback = true;
        let (dp, dv, db) = grid_max(&mut f, -half, half, search.dense_points, &mut evals)?;
        let lo = dp[db.saturating_sub(1)];
        let hi = dp[(db + 1).min(dp.len() - 1)];
        let r = golden(&mut f, lo, hi, search.tol, search.max_iter, &mut evals)?;
        w = r.0;
        v = r.1;
        if dv[db] > v {
            w = dp[db];
            v = dv[db];
        }
    }
    if vals[best] > v {
        w = pts[best];
        v = vals[best];
    }
    Ok(SupResult {
        s: C64::new(0.0, w),
        value: v,
        evaluations: evals,
        fallback,
    })
}

/// Requires a spectrally stable operator.
pub fn sup_resolvent(op: &WavenumberOperator, kind: NormKind, search: &SearchConfig) -> Result<SupResult> {
    let (norm, _) = ResolventNorm::from_kind(kind)?;
    let sp = eigenvalues(op)?;
    if let Some(l) = sp.rightmost() {
        if l.re >= 0.0 {
            return Err(Error::StabilityViolation {
                re: l.re,
                im: l.im,
                detail: format!(
                    "rightmost eigenvalue not in the left half-plane at k1={}, k3={}, R={}",
                    op.k1, op.k3, op.reynolds
                ),
            });
        }
    }
    sup_resolvent_ctx(&ResolventContext::new(op.clone(), norm)?, search)
}

/// Largest ratio `value(s) / axis_sup` over a coarse grid in the open right
/// half-plane; at most `1 + 1e-8` when the supremum is on the axis.
pub fn half_plane_check(ctx: &ResolventContext, axis_sup: f64, re_values: &[f64], omegas: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &x in re_values {
        for &w in omegas {
            worst = worst.max(ctx.value(C64::new(x, w))? / axis_sup);
        }
    }
    Ok(worst)
}

/// Log-log power-law fit of the sweep suprema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub r_values: Vec<f64>,
    pub sup_values: Vec<f64>,
    pub exponent: f64,
    pub intercept: f64,
    /// RMS of the log residuals.
    pub residual: f64,
}

/// Least-squares slope of `ln v` against `ln R`.
pub fn fit_power_law(r_values: &[f64], values: &[f64]) -> Result<ScalingFit> {
    if r_values.len() != values.len() || r_values.len() < 3 {
        return Err(Error::InvalidInput(
            "scaling fit needs at least three (R, value) pairs".into(),
        ));
    }
    if r_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("R values must be strictly increasing".into()));
    }
    if values.iter().chain(r_values).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("fit values must be positive and finite".into()));
    }
    let x: Vec<f64> = r_values.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ScalingFit {
        r_values: r_values.to_vec(),
        sup_values: values.to_vec(),
        exponent: slope,
        intercept,
        residual: rms,
    })
}

/// Horizontal wavenumber pairs swept by [`scaling_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSet {
    pub k1: Vec<f64>,
    pub k3: Vec<f64>,
}

impl Default for KSet {
    fn default() -> Self {
        KSet {
            k1: vec![0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0],
            k3: vec![0.5, 1.0, 2.0, 3.0],
        }
    }
}

impl KSet {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &a in &self.k1 {
            for &b in &self.k3 {
                out.push((a, b));
            }
        }
        out
    }
}

/// Everything a sweep produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub norm: ResolventNorm,
    pub n2: usize,
    pub fit: ScalingFit,
    /// Per-`(k, R)` suprema, in `R`-major then k-set order.
    pub samples: Vec<ResolventSample>,
    /// Index into `samples` of the maximizer for each `R`.
    pub argmax: Vec<usize>,
    pub warnings: Vec<String>,
}

/// JSON summary `{exponent, residual, C_emp, samples}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub exponent: f64,
    pub residual: f64,
    #[serde(rename = "C_emp")]
    pub c_emp: f64,
    pub samples: Vec<ResolventSample>,
}

impl SweepResult {
    pub fn summary(&self, assumed_exponent: f64) -> SweepSummary {
        SweepSummary {
            exponent: self.fit.exponent,
            residual: self.fit.residual,
            c_emp: empirical_constant(&self.fit, assumed_exponent).value,
            samples: self.samples.clone(),
        }
    }

    pub fn csv(&self) -> String {
        let mut s = String::from(RESOLVENT_CSV_HEADER);
        s.push('\n');
        for smp in &self.samples {
            s.push_str(&smp.csv_row());
            s.push('\n');
        }
        s
    }
}

/// `sup_{Re s >= 0} ‖(sI-L)⁻¹‖` for one `(k1, k3, R)`; `±k1` share the same
/// supremum by the reflection `x3 -> -x3` combined with conjugation, so
/// negative `k1` reuses the positive value with `ω -> -ω`.
fn sup_for(k1: f64, k3: f64, r: f64, n2: usize, norm: ResolventNorm, search: &SearchConfig) -> Result<ResolventSample> {
    let op = build_operator(k1.abs(), k3, r, n2)?;
    let res = sup_resolvent(&op, norm.at(r), search)?;
    let s = if k1 < 0.0 { res.s.conj() } else { res.s };
    Ok(ResolventSample {
        s,
        k1,
        k3,
        reynolds: r,
        n2,
        norm_kind: norm.at(r),
        value: res.value,
    })
}

/// Sweep the k-set over every `R`, take the supremum over `s` and `k` for each
/// `R`, and fit the power law.
pub fn scaling_sweep(
    kset: &KSet,
    r_values: &[f64],
    norm: ResolventNorm,
    n2: usize,
    search: &SearchConfig,
) -> Result<SweepResult> {
    if r_values.len() < 3 {
        return Err(Error::InvalidInput(
            "scaling sweep needs at least three R values".into(),
        ));
    }
    for &r in r_values {
        check_reynolds(r)?;
    }
    let pairs = kset.pairs();
    if pairs.is_empty() {
        return Err(Error::InvalidInput("empty k-set".into()));
    }
    // distinct (|k1|, k3, R) jobs; results are reassembled in fixed order
    let mut jobs: Vec<(f64, f64, f64)> = Vec::new();
    for &r in r_values {
        for &(k1, k3) in &pairs {
            let key = (k1.abs(), k3, r);
            if !jobs.contains(&key) {
                jobs.push(key);
            }
        }
    }
    let results = crate::par::map(&jobs, |&(k1, k3, r)| sup_for(k1, k3, r, n2, norm, search));
    let mut table = Vec::with_capacity(jobs.len());
    for (job, res) in jobs.iter().zip(results) {
        table.push((*job, res?));
    }
    let mut samples = Vec::new();
    let mut argmax = Vec::new();
    let mut sups = Vec::new();
    let mut warnings = Vec::new();
    let mut prev_s: Option<C64> = None;
    for &r in r_values {
        let mut best: Option<usize> = None;
        for &(k1, k3) in &pairs {
            let (_, base) = table
                .iter()
                .find(|(j, _)| *j == (k1.abs(), k3, r))
                .expect("every job was evaluated");
            let mut smp = base.clone();
            if k1 < 0.0 {
                smp.k1 = k1;
                smp.s = smp.s.conj();
            }
            samples.push(smp);
            let idx = samples.len() - 1;
            if best.is_none_or(|b| samples[idx].value > samples[b].value) {
                best = Some(idx);
            }
        }
        let b = best.expect("non-empty k-set");
        if let Some(p) = prev_s {
            let spacing =
                2.0 * (kset.k1.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0) / (search.coarse_points - 1) as f64;
            if (samples[b].s.im.abs() - p.im.abs()).abs() > spacing {
                warnings.push(format!(
                    "supremum location jumped from {} to {} between adjacent R values",
                    p.im, samples[b].s.im
                ));
            }
        }
        prev_s = Some(samples[b].s);
        argmax.push(b);
        sups.push(samples[b].value);
    }
    let fit = fit_power_law(r_values, &sups)?;
    Ok(SweepResult {
        norm,
        n2,
        fit,
        samples,
        argmax,
        warnings,
    })
}

/// Empirical stand-in for the constant of the resolvent estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub exponent: f64,
    pub ratios: Vec<f64>,
    /// Set when the ratios strictly decrease in `R`, which suggests the
    /// assumed exponent is too large.
    pub decreasing: bool,
}

/// `max_R value / R^exponent`.
pub fn empirical_constant(fit: &ScalingFit, exponent: f64) -> ConstantEstimate {
    let ratios: Vec<f64> = fit
        .r_values
        .iter()
        .zip(&fit.sup_values)
        .map(|(r, v)| v / r.powf(exponent))
        .collect();
    let value = ratios.iter().copied().fold(0.0, f64::max);
    let decreasing = ratios.len() > 1 && ratios.windows(2).all(|w| w[1] < w[0]);
    ConstantEstimate {
        value,
        exponent,
        ratios,
        decreasing,
    }
}

/// Random forcing state for brute-force checks.
pub fn random_forcing(op: &WavenumberOperator, rng: &mut impl rand::Rng) -> Vec<C64> {
    (0..op.dim())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}
