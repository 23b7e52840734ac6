use super::{CheckReport, Witness};
use crate::error::{Error, Result};
use crate::field::{random_solenoidal, RandomFieldSpec, VelocityField};
use crate::norms::{grad_sq, inner, l2_norm};
use crate::operator::apply_l;
use crate::sim::{convective_inner, cross_l2, nonlinear_term};
use crate::spectral::Grid;

/// Residual of `Re⟨f, Lf⟩ + (1/R) Σ‖∂f/∂x_k‖² + Re⟨f1, f2⟩ = 0` and the sum
/// of the magnitudes of the three terms.
pub fn dissipation_residual(f: &VelocityField, reynolds: f64) -> Result<(f64, f64)> {
    let lf = apply_l(f, reynolds)?;
    let a = inner(f, &lf)?.re;
    let b = grad_sq(f, None)? / reynolds;
    let c = cross_l2(f, 0, 1)?;
    Ok((a + b + c, a.abs() + b + c.abs()))
}

fn audit(f: &VelocityField, solenoidal: bool) -> Result<()> {
    let wall = f.max_wall_value();
    let div = if solenoidal { f.max_divergence()? } else { 0.0 };
    if wall > 1e-12 || div > 1e-12 {
        return Err(Error::Numerical(format!(
            "random input failed its audit: wall {wall:.2e}, divergence {div:.2e}"
        )));
    }
    Ok(())
}

/// Random fields whose wall-normal degree leaves room for the `x2` factor of
/// the base-flow term.
pub(crate) fn identity_field(grid: &Grid, seed: u64) -> Result<VelocityField> {
    let spec = RandomFieldSpec {
        max_degree: Some(grid.n2 - 2),
        ..RandomFieldSpec::seeded(seed)
    };
    let f = random_solenoidal(grid, &spec)?;
    audit(&f, true)?;
    Ok(f)
}

/// Energy identity on `trials` random no-slip fields; relative tolerance
/// `1e-10`.
pub fn check_dissipation_identity(trials: usize, grid: &Grid, reynolds: f64, seed0: u64) -> Result<CheckReport> {
    let seeds: Vec<u64> = (0..trials as u64).map(|i| seed0 + i).collect();
    let rows = crate::par::map(&seeds, |&seed| -> Result<Witness> {
        let f = identity_field(grid, seed)?;
        let (res, scale) = dissipation_residual(&f, reynolds)?;
        Ok(Witness {
            trial: (seed - seed0) as usize,
            seed: Some(seed),
            label: format!("R = {reynolds}"),
            lhs: res.abs(),
            rhs: scale,
            ratio: res.abs() / scale,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_witnesses(
        "dissipation-identity",
        Some(*grid),
        1e-10,
        rows,
    ))
}

/// `|⟨G(v), v⟩| / (‖v‖ ‖G(v)‖)` on random solenoidal fields; tolerance `1e-8`.
pub fn check_skew_symmetry(trials: usize, grid: &Grid, seed0: u64) -> Result<CheckReport> {
    let seeds: Vec<u64> = (0..trials as u64).map(|i| seed0 + i).collect();
    let rows = crate::par::map(&seeds, |&seed| -> Result<Witness> {
        let v = random_solenoidal(grid, &RandomFieldSpec::seeded(seed))?;
        audit(&v, true)?;
        let g = nonlinear_term(&v)?;
        let lhs = convective_inner(&v, &v)?.abs();
        let rhs = l2_norm(&v)? * l2_norm(&g)?;
        Ok(Witness {
            trial: (seed - seed0) as usize,
            seed: Some(seed),
            label: String::new(),
            lhs,
            rhs,
            ratio: lhs / rhs,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_witnesses("skew-symmetry", Some(*grid), 1e-8, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::czero;
    use crate::C64;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(8, 17, 8, 4.0 * PI, 2.0 * PI).unwrap()
    }

    #[test]
    fn identity_holds_for_random_fields() {
        for r in [1.0, 100.0, 1000.0] {
            let rep = check_dissipation_identity(10, &grid(), r, 40).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn identity_with_one_component_removed() {
        let g = grid();
        let mut f = identity_field(&g, 3).unwrap();
        // zeroing one component leaves a non-solenoidal but still no-slip
        // field, and the identity holds without solenoidality
        f.comps[1].iter_mut().for_each(|v| *v = czero());
        let (res, scale) = dissipation_residual(&f, 50.0).unwrap();
        assert!(res.abs() < 1e-10 * scale);
        assert_eq!(cross_l2(&f, 0, 1).unwrap(), 0.0);
        let mut h = identity_field(&g, 4).unwrap();
        h.comps[0].iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        let (res, scale) = dissipation_residual(&h, 50.0).unwrap();
        assert!(res.abs() < 1e-10 * scale);
    }

    #[test]
    fn skew_symmetry_battery() {
        let rep = check_skew_symmetry(6, &grid(), 0).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
