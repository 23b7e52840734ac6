use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{random_solenoidal, RandomFieldSpec, VelocityField};
use crate::linalg::czero;
use crate::norms::hk_norm;
use crate::spectral::{dealias_mask, wavenumbers, Grid, WallBasis};
use crate::C64;

/// Initial perturbation shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `x1`-independent roll: `v2 = (1 - x2²)² cos(k3 x3)`, `v1 = 0`, at the
    /// lowest spanwise wavenumber.
    StreamwiseVortex,
    /// Two oblique waves at `(k1, k3) = (1, ±1)` with `v2 = (1 - x2²)²` and no
    /// normal vorticity.
    ObliquePair,
    /// Seeded random solenoidal field.
    RandomNoise { seed: u64 },
}

pub const FAMILY_NAMES: [&str; 3] = ["streamwise-vortex", "oblique-pair", "random-noise(seed)"];

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::StreamwiseVortex => write!(f, "streamwise-vortex"),
            Family::ObliquePair => write!(f, "oblique-pair"),
            Family::RandomNoise { seed } => write!(f, "random-noise({seed})"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "streamwise-vortex" => return Ok(Family::StreamwiseVortex),
            "oblique-pair" => return Ok(Family::ObliquePair),
            "random-noise" => return Ok(Family::RandomNoise { seed: 0 }),
            _ => {}
        }
        if let Some(rest) = t.strip_prefix("random-noise") {
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .or_else(|| rest.strip_prefix(':'));
            if let Some(seed) = inner.and_then(|x| x.trim().parse().ok()) {
                return Ok(Family::RandomNoise { seed });
            }
        }
        Err(Error::UnknownFamily {
            name: s.to_string(),
            available: FAMILY_NAMES.join(", "),
        })
    }
}

fn clamped_bump(b: &WallBasis) -> Vec<C64> {
    let nodal: Vec<C64> = b.nodes.iter().map(|y| C64::new((1.0 - y * y).powi(2), 0.0)).collect();
    crate::linalg::rmatvec(&b.proj_psi, &nodal)
}

fn put_mode(f: &mut VelocityField, b: &WallBasis, i1: usize, i3: usize, k1: f64, k3: f64, av: &[C64]) {
    let mut state = av.to_vec();
    state.extend(std::iter::repeat_n(czero(), b.ne()));
    let u = b.lift(k1, k3, &state);
    f.set_mode(i1, i3, &u);
}

fn slot_of(grid: &Grid, m: i64, n: i64) -> Result<(usize, usize)> {
    let w = wavenumbers(grid);
    let mask = dealias_mask(grid);
    w.iter()
        .zip(&mask)
        .find(|(x, _)| x.m == m && x.n == n)
        .filter(|(_, keep)| **keep)
        .map(|(x, _)| (x.i1, x.i3))
        .ok_or_else(|| Error::Resolution(format!("mode (m, n) = ({m}, {n}) is not resolved by {grid:?}")))
}

/// Divergence-free, no-slip field of unit `H⁴` norm for a family.
pub fn perturbation_family(family: Family, grid: &Grid) -> Result<VelocityField> {
    grid.validate()?;
    let b = WallBasis::get(grid.n2)?;
    let mut f = VelocityField::zeros(grid);
    match family {
        Family::StreamwiseVortex => {
            let av = clamped_bump(&b);
            for n in [1i64, -1] {
                let (i1, i3) = slot_of(grid, 0, n)?;
                let k3 = 2.0 * PI * n as f64 / grid.l3;
                put_mode(&mut f, &b, i1, i3, 0.0, k3, &av);
            }
        }
        Family::ObliquePair => {
            let m = grid.l1 / (2.0 * PI);
            let n = grid.l3 / (2.0 * PI);
            if (m - m.round()).abs() > 1e-9 || (n - n.round()).abs() > 1e-9 {
                return Err(Error::Resolution(format!(
                    "unit wavenumbers need box lengths that are multiples of 2π, got {} x {}",
                    grid.l1, grid.l3
                )));
            }
            let (m, n) = (m.round() as i64, n.round() as i64);
            let av = clamped_bump(&b);
            for (sm, sn) in [(1i64, 1i64), (1, -1), (-1, -1), (-1, 1)] {
                let (i1, i3) = slot_of(grid, sm * m, sn * n)?;
                put_mode(&mut f, &b, i1, i3, sm as f64, sn as f64, &av);
            }
        }
        Family::RandomNoise { seed } => {
            f = random_solenoidal(grid, &RandomFieldSpec::seeded(seed))?;
        }
    }
    let h4 = hk_norm(&f, 4, None)?;
    Ok(f.scaled(1.0 / h4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(16, 24, 16, 4.0 * PI, 2.0 * PI).unwrap()
    }

    #[test]
    fn contract_for_every_family() {
        let g = grid();
        for fam in [
            Family::StreamwiseVortex,
            Family::ObliquePair,
            Family::RandomNoise { seed: 4 },
        ] {
            let f = perturbation_family(fam, &g).unwrap();
            assert!(f.max_divergence().unwrap() < 1e-12, "{fam}");
            assert!(f.max_wall_value() < 1e-12, "{fam}");
            assert!((hk_norm(&f, 4, None).unwrap() - 1.0).abs() < 1e-10);
            assert!(f.hermitian_defect() < 1e-14);
            assert_eq!(f, perturbation_family(fam, &g).unwrap());
        }
    }

    #[test]
    fn streamwise_vortex_has_no_streak_or_k1_content() {
        let g = grid();
        let f = perturbation_family(Family::StreamwiseVortex, &g).unwrap();
        assert_eq!(f.comps[0].iter().map(|v| v.norm()).fold(0.0, f64::max), 0.0);
        let slots: Vec<(usize, usize)> = (0..g.n3).map(|i3| (0, i3)).collect();
        assert!((f.energy_fraction(&slots) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oblique_pair_energy_at_unit_wavenumbers() {
        let g = grid();
        let f = perturbation_family(Family::ObliquePair, &g).unwrap();
        let slots: Vec<(usize, usize)> = wavenumbers(&g)
            .iter()
            .filter(|w| (w.k1.abs() - 1.0).abs() < 1e-12 && (w.k3.abs() - 1.0).abs() < 1e-12)
            .map(|w| (w.i1, w.i3))
            .collect();
        assert_eq!(slots.len(), 4);
        assert!(f.energy_fraction(&slots) > 0.99);
    }

    #[test]
    fn parsing() {
        assert_eq!("oblique-pair".parse::<Family>().unwrap(), Family::ObliquePair);
        assert_eq!(
            "random-noise(7)".parse::<Family>().unwrap(),
            Family::RandomNoise { seed: 7 }
        );
        assert_eq!(
            "random-noise:7".parse::<Family>().unwrap(),
            Family::RandomNoise { seed: 7 }
        );
        match "hairpin".parse::<Family>() {
            Err(Error::UnknownFamily { available, .. }) => assert!(available.contains("streamwise-vortex")),
            other => panic!("{other:?}"),
        }
        for f in [Family::StreamwiseVortex, Family::RandomNoise { seed: 3 }] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
    }
}
