//! Small dense complex linear-algebra helpers on top of `faer`.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::C64;

pub type CMat = Mat<C64>;

pub fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

pub fn to_complex(a: &Mat<f64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| C64::new(a[(i, j)], 0.0))
}

/// `s * a` for a complex scalar and real matrix.
pub fn scale_real(a: &Mat<f64>, s: C64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| s * a[(i, j)])
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

/// Place `blocks[r][c]` into one matrix; `None` blocks are zero.
pub fn block(blocks: &[Vec<Option<&CMat>>], rows: &[usize], cols: &[usize]) -> CMat {
    let nr: usize = rows.iter().sum();
    let nc: usize = cols.iter().sum();
    let mut out = Mat::<C64>::zeros(nr, nc);
    let mut r0 = 0;
    for (br, row) in blocks.iter().enumerate() {
        let mut c0 = 0;
        for (bc, b) in row.iter().enumerate() {
            if let Some(b) = b {
                assert_eq!((b.nrows(), b.ncols()), (rows[br], cols[bc]));
                for i in 0..b.nrows() {
                    for j in 0..b.ncols() {
                        out[(r0 + i, c0 + j)] = b[(i, j)];
                    }
                }
            }
            c0 += cols[bc];
        }
        r0 += rows[br];
    }
    out
}

/// `a * x` for a real matrix and complex vector.
pub fn rmatvec(a: &Mat<f64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let mut out = vec![czero(); a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == czero() {
            continue;
        }
        let col = a.col(j);
        for (o, &aij) in out.iter_mut().zip(col.iter()) {
            *o += xj * aij;
        }
    }
    out
}

/// `aᵀ x` for a real matrix and complex vector.
pub fn rmatvec_t(a: &Mat<f64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.nrows(), x.len());
    (0..a.ncols())
        .map(|j| a.col(j).iter().zip(x).fold(czero(), |acc, (&aij, &xi)| acc + xi * aij))
        .collect()
}

pub fn matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let mut out = vec![czero(); a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == czero() {
            continue;
        }
        for (o, &aij) in out.iter_mut().zip(a.col(j).iter()) {
            *o += aij * xj;
        }
    }
    out
}

pub fn col_to_vec(a: &CMat, j: usize) -> Vec<C64> {
    a.col(j).iter().copied().collect()
}

pub fn vec_to_col(x: &[C64]) -> CMat {
    Mat::from_fn(x.len(), 1, |i, _| x[i])
}

/// `xᴴ g y`.
pub fn quad_form(x: &[C64], g: &Mat<f64>, y: &[C64]) -> C64 {
    let gy = rmatvec(g, y);
    x.iter().zip(&gy).map(|(a, b)| a.conj() * b).sum()
}

/// Solve `a x = b` by partial-pivot LU, rejecting singular or
/// non-finite results.
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let x = a.partial_piv_lu().solve(b);
    if x.col_iter()
        .all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    {
        Ok(x)
    } else {
        Err(Error::Numerical("singular linear system".into()))
    }
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(g: &CMat) -> Result<CMat> {
    let llt = g
        .llt(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Cholesky factorization failed: {e:?}")))?;
    Ok(llt.L().to_owned())
}

/// Solve `l x = b` with `l` lower triangular.
pub fn solve_lower(l: &CMat, b: &CMat) -> CMat {
    let mut x = b.clone();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), faer::Par::Seq);
    x
}

/// Solve `lᴴ x = b` with `l` lower triangular.
pub fn solve_lower_adjoint(l: &CMat, b: &CMat) -> CMat {
    let mut x = b.clone();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.adjoint(), x.as_mut(), faer::Par::Seq);
    x
}

pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))
}

/// Largest singular value with its left and right singular vectors.
pub fn top_singular_triple(a: &CMat) -> Result<(f64, Vec<C64>, Vec<C64>)> {
    let svd = a.svd().map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector()[0];
    Ok((
        s.re,
        svd.U().col(0).iter().copied().collect(),
        svd.V().col(0).iter().copied().collect(),
    ))
}

/// `σ_max(m⁻¹) = 1/σ_min(m)` by Lanczos on `m⁻¹ m⁻ᴴ` with full
/// reorthogonalization, reusing one LU factorization. Ritz values approach the
/// answer from below; iteration stops once the largest one is stationary to
/// `rel_tol`.
pub fn inverse_norm(m: &CMat, rel_tol: f64) -> Result<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let lu = m.partial_piv_lu();
    let apply = |x: &CMat| -> Result<CMat> {
        let mut y = x.clone();
        lu.solve_adjoint_in_place(y.as_mut());
        lu.solve_in_place(y.as_mut());
        if y.col(0).iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(y)
        } else {
            Err(Error::Numerical("singular linear system".into()))
        }
    };
    let dot = |a: &CMat, b: &CMat| -> C64 { a.col(0).iter().zip(b.col(0).iter()).map(|(x, y)| x.conj() * y).sum() };
    let nrm = |a: &CMat| dot(a, a).re.sqrt();
    // fixed start vector keeps results reproducible
    let mut q = Mat::from_fn(n, 1, |i, _| {
        let t = i as f64 + 1.0;
        C64::new(1.0 + 0.5 * (1.7 * t).sin(), 0.3 * (2.3 * t).cos())
    });
    let q0n = nrm(&q);
    q = faer::Scale(C64::new(1.0 / q0n, 0.0)) * &q;
    let mut basis: Vec<CMat> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev = 0.0;
    let mut stable = 0;
    for j in 0..n {
        let mut w = apply(&basis[j])?;
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for qv in &basis {
                let c = dot(qv, &w);
                w -= faer::Scale(c) * qv;
            }
        }
        let k = alpha.len();
        let t = Mat::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let ev = t
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numerical(format!("tridiagonal eigensolver failed: {e:?}")))?;
        let top = *ev.last().expect("nonempty tridiagonal");
        let b = nrm(&w);
        if b <= 1e-14 * top.abs() || j + 1 == n {
            return Ok(top.max(0.0).sqrt());
        }
        if (top - prev).abs() <= rel_tol * top {
            stable += 1;
            if stable >= 2 {
                return Ok(top.max(0.0).sqrt());
            }
        } else {
            stable = 0;
        }
        prev = top;
        beta.push(b);
        basis.push(faer::Scale(C64::new(1.0 / b, 0.0)) * &w);
    }
    Ok(prev.max(0.0).sqrt())
}

pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    a.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigenvalue solver failed: {e:?}")))
}

/// Eigenvalues and right eigenvectors (columns).
pub fn eigen(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let evd = a
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigenvalue solver failed: {e:?}")))?;
    let vals = evd.S().column_vector().iter().copied().collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn max_abs(a: &CMat) -> f64 {
    a.col_iter()
        .flat_map(|c| c.iter().map(|v| v.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// Infinity norm (max absolute row sum).
pub fn norm_inf(a: &CMat) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `(exp(z), phi1(z), phi2(z))` by Taylor expansion of `phi2` on a scaled
/// argument followed by repeated doubling.
pub fn phi_functions(z: &CMat) -> (CMat, CMat, CMat) {
    let n = z.nrows();
    let id = identity(n);
    let nrm = norm_inf(z);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while nrm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let zs = faer::Scale(C64::new(scale, 0.0)) * z;
    // phi2 = sum_k zs^k / (k+2)!
    let mut term = identity(n);
    let mut phi2 = faer::Scale(C64::new(0.5, 0.0)) * &id;
    let mut fact = 2.0;
    for k in 1..18 {
        term = &term * &zs;
        fact *= (k + 2) as f64;
        phi2 += faer::Scale(C64::new(1.0 / fact, 0.0)) * &term;
    }
    let mut phi1 = &id + &zs * &phi2;
    let mut e = &id + &zs * &phi1;
    for _ in 0..squarings {
        let p1sq = &phi1 * &phi1;
        let new_phi2 = faer::Scale(C64::new(0.25, 0.0)) * (faer::Scale(C64::new(2.0, 0.0)) * &phi2 + &p1sq);
        let new_phi1 = faer::Scale(C64::new(0.5, 0.0)) * (&phi1 * (&e + &id));
        e = &e * &e;
        phi1 = new_phi1;
        phi2 = new_phi2;
    }
    (e, phi1, phi2)
}
