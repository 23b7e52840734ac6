//! Chebyshev–Gauss–Lobatto machinery on the wall-normal interval [-1, 1].
//!
//! Nodes are ordered from the top wall (`y = 1`, index 0) down to the bottom
//! wall (`y = -1`, index `n - 1`). Everything here is real and exact for
//! polynomials of degree `< n` up to roundoff.

use std::f64::consts::PI;

use faer::Mat;

use crate::error::{Error, Result};

/// Gauss–Lobatto points `cos(j pi / (n - 1))`, descending from 1 to -1.
pub fn chebyshev_nodes(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 Chebyshev points, got {n}")));
    }
    let m = (n - 1) as f64;
    // sin form is exactly antisymmetric and gives an exact 0 at the midpoint
    Ok((0..n).map(|j| (PI * (m - 2.0 * j as f64) / (2.0 * m)).sin()).collect())
}

/// Dense collocation differentiation matrix on the Gauss–Lobatto nodes.
#[derive(Debug, Clone)]
pub struct DiffMatrix {
    pub order: usize,
    pub entries: Mat<f64>,
}

impl DiffMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(f.len(), n);
        (0..n)
            .map(|i| (0..n).map(|j| self.entries[(i, j)] * f[j]).sum())
            .collect()
    }
}

/// First-order matrix with exact off-diagonal node differences and the
/// negative-sum diagonal.
fn first_derivative(n: usize) -> Mat<f64> {
    let m = (n - 1) as f64;
    let mut d = Mat::<f64>::zeros(n, n);
    let c = |i: usize| -> f64 {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        if i == 0 || i == n - 1 {
            2.0 * s
        } else {
            s
        }
    };
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            // x_i - x_j = 2 sin((i+j) pi / 2m) sin((j-i) pi / 2m)
            let diff = 2.0 * ((i + j) as f64 * PI / (2.0 * m)).sin() * ((j as f64 - i as f64) * PI / (2.0 * m)).sin();
            let v = c(i) / c(j) / diff;
            d[(i, j)] = v;
            row_sum += v;
        }
        d[(i, i)] = -row_sum;
    }
    d
}

/// Collocation differentiation matrix of the given order (1 or 2).
pub fn diff_matrix(n: usize, order: usize) -> Result<DiffMatrix> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 Chebyshev points, got {n}")));
    }
    let d1 = first_derivative(n);
    let entries = match order {
        1 => d1,
        2 => &d1 * &d1,
        o => return Err(Error::UnsupportedOrder(o)),
    };
    Ok(DiffMatrix { order, entries })
}

/// Clenshaw–Curtis weights on the Gauss–Lobatto nodes.
pub fn quadrature_weights(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 Chebyshev points, got {n}")));
    }
    let nn = n - 1;
    let mut w = vec![0.0; n];
    if nn == 1 {
        return Ok(vec![1.0, 1.0]);
    }
    let nf = nn as f64;
    let mut v = vec![1.0; nn - 1];
    if nn % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[nn] = w[0];
        for (idx, vi) in v.iter_mut().enumerate() {
            let theta = PI * (idx + 1) as f64 / nf;
            for k in 1..nn / 2 {
                let kf = k as f64;
                *vi -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
            *vi -= (nf * theta).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[nn] = w[0];
        for (idx, vi) in v.iter_mut().enumerate() {
            let theta = PI * (idx + 1) as f64 / nf;
            for k in 1..=(nn - 1) / 2 {
                let kf = k as f64;
                *vi -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (idx, vi) in v.iter().enumerate() {
        w[idx + 1] = 2.0 * vi / nf;
    }
    Ok(w)
}

/// Barycentric interpolation matrix from the `n` Gauss–Lobatto nodes to
/// arbitrary target points. Exact for polynomials of degree `< n`.
pub fn interpolation_matrix(n: usize, targets: &[f64]) -> Result<Mat<f64>> {
    let nodes = chebyshev_nodes(n)?;
    let bw: Vec<f64> = (0..n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let mut p = Mat::<f64>::zeros(targets.len(), n);
    for (i, &x) in targets.iter().enumerate() {
        if let Some(j) = nodes.iter().position(|&xj| (x - xj).abs() < 1e-15) {
            p[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..n).map(|j| bw[j] / (x - nodes[j])).collect();
        let denom: f64 = terms.iter().sum();
        for j in 0..n {
            p[(i, j)] = terms[j] / denom;
        }
    }
    Ok(p)
}

/// Values `T_k(x)` for `k = 0..degree_count`.
pub fn chebyshev_t(x: f64, degree_count: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(degree_count);
    for k in 0..degree_count {
        let v = match k {
            0 => 1.0,
            1 => x,
            _ => 2.0 * x * t[k - 1] - t[k - 2],
        };
        t.push(v);
    }
    t
}

/// Exact L2 Gram matrix `int p q dy` for nodal polynomials of degree `< n`,
/// computed with Clenshaw–Curtis on `2n` points.
pub fn mass_matrix(n: usize) -> Result<Mat<f64>> {
    let nf = 2 * n;
    let fine = chebyshev_nodes(nf)?;
    let wf = quadrature_weights(nf)?;
    let interp = interpolation_matrix(n, &fine)?;
    Ok(Mat::from_fn(n, n, |i, j| {
        (0..nf).map(|q| wf[q] * interp[(q, i)] * interp[(q, j)]).sum()
    }))
}

/// Nodal values of the clamped basis `T_j - 2(j+2)/(j+3) T_{j+2} + (j+1)/(j+3) T_{j+4}`,
/// `j = 0..count`. Each function and its first derivative vanish at both walls.
pub fn clamped_basis(n: usize, count: usize) -> Result<Mat<f64>> {
    if count + 4 > n {
        return Err(Error::Resolution(format!(
            "clamped basis of {count} functions needs at least {} nodes, got {n}",
            count + 4
        )));
    }
    let nodes = chebyshev_nodes(n)?;
    Ok(Mat::from_fn(n, count, |i, j| {
        let t = chebyshev_t(nodes[i], j + 5);
        let jf = j as f64;
        t[j] - 2.0 * (jf + 2.0) / (jf + 3.0) * t[j + 2] + (jf + 1.0) / (jf + 3.0) * t[j + 4]
    }))
}

/// Nodal values of the Dirichlet basis `T_j - T_{j+2}`, `j = 0..count`.
pub fn dirichlet_basis(n: usize, count: usize) -> Result<Mat<f64>> {
    if count + 2 > n {
        return Err(Error::Resolution(format!(
            "Dirichlet basis of {count} functions needs at least {} nodes, got {n}",
            count + 2
        )));
    }
    let nodes = chebyshev_nodes(n)?;
    Ok(Mat::from_fn(n, count, |i, j| {
        let t = chebyshev_t(nodes[i], j + 3);
        t[j] - t[j + 2]
    }))
}

/// Chebyshev coefficients of nodal data (discrete cosine transform on the
/// Gauss–Lobatto grid).
pub fn chebyshev_coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| {
            let mut s = 0.0;
            for (j, &v) in values.iter().enumerate() {
                let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                s += w * v * (PI * (k * j) as f64 / m).cos();
            }
            let scale = if k == 0 || k == n - 1 { 1.0 / m } else { 2.0 / m };
            s * scale
        })
        .collect()
}
