use super::bounds::audited;
use super::identity::identity_field;
use crate::error::{Error, Result};
use crate::field::{random_solenoidal, RandomFieldSpec, VelocityField};
use crate::spectral::Grid;

/// Regenerate the random inputs behind a seeded witness of `check`.
///
/// The nonlinearity checks return `[w, w_t]`, the others a single field.
pub fn witness_fields(check: &str, grid: &Grid, seed: u64) -> Result<Vec<VelocityField>> {
    match check {
        "dissipation-identity" => Ok(vec![identity_field(grid, seed)?]),
        "skew-symmetry" => Ok(vec![random_solenoidal(grid, &RandomFieldSpec::seeded(seed))?]),
        "sobolev-embedding" => Ok(vec![audited(grid, seed)?]),
        "nonlinearity-l2" | "nonlinearity-m" | "nonlinearity-time-derivative" => {
            Ok(vec![audited(grid, seed)?, audited(grid, seed + 1)?])
        }
        other => Err(Error::InvalidInput(format!(
            "check '{other}' has no seeded field inputs"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::{check_nonlinearity_bounds, nonlinearity_ratios};
    use std::f64::consts::PI;

    #[test]
    fn regenerated_inputs_reproduce_the_witness_ratio() {
        let g = Grid::new(4, 13, 4, 2.0 * PI, PI).unwrap();
        let reps = check_nonlinearity_bounds(3, &g, 10.0, 5).unwrap();
        let w = &reps[0].witnesses[0];
        let f = witness_fields(&reps[0].check, &g, w.seed.unwrap()).unwrap();
        assert_eq!(f.len(), 2);
        let b = nonlinearity_ratios(&f[0], &f[1], 10.0).unwrap();
        assert_eq!(b.ratios()[0], w.ratio);
        assert!(witness_fields("decay-sobolev", &g, 0).is_err());
    }
}
