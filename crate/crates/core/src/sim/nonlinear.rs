//! The quadratic term `G(v) = (v · ∇) v`.

use crate::error::Result;
use crate::field::{Repr, VelocityField};
use crate::physical::{exact_sampling, sample_physical, PhysicalSamples};
use crate::spectral::dealias_mask;
use crate::C64;

/// `G(v)` evaluated pseudo-spectrally at the collocation nodes and truncated
/// to the dealiasing set.
pub fn nonlinear_term(v: &VelocityField) -> Result<VelocityField> {
    let g = v.grid;
    let s = sample_physical(v, g.n1, g.n3, g.n2, true)?;
    let adv = PhysicalSamples::advect(&s, &s)?;
    let phys = VelocityField {
        grid: g,
        repr: Repr::Physical,
        comps: adv.map(|c| c.into_iter().map(|x| C64::new(x, 0.0)).collect()),
    };
    let mut out = phys.to_spectral();
    let mask = dealias_mask(&g);
    let plane = g.n1 * g.n3;
    for comp in out.comps.iter_mut() {
        for chunk in comp.chunks_mut(plane) {
            for (v, keep) in chunk.iter_mut().zip(&mask) {
                if !keep {
                    *v = C64::new(0.0, 0.0);
                }
            }
        }
    }
    Ok(out)
}

/// `⟨(a · ∇) b, c⟩` by quadrature exact for dealiased polynomial fields.
pub fn trilinear(a: &VelocityField, b: &VelocityField, c: &VelocityField) -> Result<f64> {
    if a.grid != b.grid || a.grid != c.grid {
        return Err(crate::Error::GridMismatch("trilinear form needs one grid".into()));
    }
    let sa = exact_sampling(a, 3, false)?;
    let sb = exact_sampling(b, 3, true)?;
    let sc = exact_sampling(c, 3, false)?;
    let adv = PhysicalSamples::advect(&sa, &sb)?;
    Ok(sc.inner(&adv, &sc.u))
}

/// `⟨G(v), w⟩`.
pub fn convective_inner(v: &VelocityField, w: &VelocityField) -> Result<f64> {
    trilinear(v, v, w)
}
