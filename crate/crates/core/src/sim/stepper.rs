//! Exponential time differencing (ETDRK2) on the modal Galerkin states.
//!
//! Each retained wavenumber evolves `E x' = A x + b(t)` where `A` is the
//! linear operator block and `b` the weak projection of `-G(v)` plus any
//! forcing. The linear part, including the base-flow advection, is
//! integrated exactly with precomputed `exp(hE⁻¹A)` and `φ`-functions, so the
//! only stability limit is the explicit quadratic term.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::Mat;

use super::config::SimConfig;
use crate::error::{Error, Result};
use crate::field::VelocityField;
use crate::linalg::{self, czero, matvec, rmatvec, CMat};
use crate::operator::{build_operator, weak_project};
use crate::spectral::{
    chebyshev_nodes, dealias_mask, interpolation_matrix, quadrature_weights, wavenumbers, RealPlaneFft, WallBasis,
};
use crate::C64;

/// One evolved wavenumber. Only `n >= 0` (and `m >= 0` when `n = 0`) is
/// stored; the conjugate partner is implied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSlot {
    pub i1: usize,
    pub i3: usize,
    pub m: i64,
    pub n: i64,
    pub k1: f64,
    pub k3: f64,
    pub partner: (usize, usize),
}

impl ModeSlot {
    pub fn is_mean(&self) -> bool {
        self.m == 0 && self.n == 0
    }
}

/// Evolved slots for a grid.
pub fn mode_slots(cfg: &SimConfig) -> Vec<ModeSlot> {
    let g = cfg.grid;
    let mask = dealias_mask(&g);
    wavenumbers(&g)
        .into_iter()
        .zip(mask)
        .filter(|(w, keep)| {
            let nyq = (g.n1 > 1 && 2 * w.i1 == g.n1) || (g.n3 > 1 && 2 * w.i3 == g.n3);
            (*keep || !cfg.dealias) && !nyq && (w.n > 0 || (w.n == 0 && w.m >= 0))
        })
        .map(|(w, _)| ModeSlot {
            i1: w.i1,
            i3: w.i3,
            m: w.m,
            n: w.n,
            k1: w.k1,
            k3: w.k3,
            partner: w.partner,
        })
        .collect()
}

/// Modal state at time `t`, one coefficient vector per [`ModeSlot`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub coeffs: Vec<Vec<C64>>,
}

#[derive(Debug, Clone)]
struct Propagator {
    e: CMat,
    p1: CMat,
    p2: CMat,
    /// `E⁻¹ A` and `E⁻¹` for evaluating time derivatives.
    gen: CMat,
    einv: CMat,
}

/// Wall-normal matrices on the product grid of `3 n2 - 2` points.
#[derive(Debug)]
struct FineOps {
    m: usize,
    psi: Mat<f64>,
    dpsi: Mat<f64>,
    d2psi: Mat<f64>,
    phi: Mat<f64>,
    dphi: Mat<f64>,
    /// Quadrature-weighted transposes for the weak projection.
    w_psi: Mat<f64>,
    w_dpsi: Mat<f64>,
    w_phi: Mat<f64>,
    /// Local wall-normal spacing used by the CFL estimate.
    dy: Vec<f64>,
}

impl FineOps {
    fn get(n2: usize) -> Result<Arc<FineOps>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FineOps>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(f) = cache.lock().expect("fine-grid cache poisoned").get(&n2) {
            return Ok(f.clone());
        }
        let b = WallBasis::get(n2)?;
        let m = 3 * n2 - 2;
        let nodes = chebyshev_nodes(m)?;
        let w = quadrature_weights(m)?;
        let it = interpolation_matrix(n2, &nodes)?;
        let psi = &it * &b.psi;
        let dpsi = &it * &b.dpsi;
        let d2psi = &it * &b.d2psi;
        let phi = &it * &b.phi;
        let dphi = &it * &b.dphi;
        let weighted = |a: &Mat<f64>| Mat::from_fn(a.ncols(), m, |i, q| a[(q, i)] * w[q]);
        let h = std::f64::consts::PI / (n2 - 1) as f64;
        let floor = 1.0 - h.cos();
        let dy = nodes
            .iter()
            .map(|y| (h * (1.0 - y * y).max(0.0).sqrt()).max(floor))
            .collect();
        let ops = Arc::new(FineOps {
            m,
            w_psi: weighted(&psi),
            w_dpsi: weighted(&dpsi),
            w_phi: weighted(&phi),
            psi,
            dpsi,
            d2psi,
            phi,
            dphi,
            dy,
        });
        let mut guard = cache.lock().expect("fine-grid cache poisoned");
        Ok(guard.entry(n2).or_insert(ops).clone())
    }
}

/// Diagnostics of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub cfl: f64,
    /// Largest velocity magnitude on the product grid at the start of the step.
    pub sup: f64,
}

/// Time-dependent forcing `f(·, t)` as a velocity field.
pub type Forcing<'a> = &'a (dyn Fn(f64) -> Result<VelocityField> + Sync);

/// Precomputed propagators for one configuration.
pub struct Stepper {
    pub cfg: SimConfig,
    pub slots: Vec<ModeSlot>,
    basis: Arc<WallBasis>,
    props: Vec<Propagator>,
    fine: Arc<FineOps>,
    fft: RealPlaneFft,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("cfg", &self.cfg)
            .field("modes", &self.slots.len())
            .finish()
    }
}

impl Stepper {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let slots = mode_slots(cfg);
        let n2 = cfg.grid.n2;
        let h = cfg.dt;
        let props: Vec<Result<Propagator>> = crate::par::map(&slots, |s| {
            let op = build_operator(s.k1, s.k3, cfg.reynolds, n2)?;
            let gen = op.generator()?;
            let z = faer::Scale(C64::new(h, 0.0)) * &gen;
            let (e, phi1, phi2) = linalg::phi_functions(&z);
            let einv = linalg::solve(&op.e, &linalg::identity(op.dim()))?;
            let hs = faer::Scale(C64::new(h, 0.0));
            Ok(Propagator {
                e,
                p1: hs * (&phi1 * &einv),
                p2: hs * (&phi2 * &einv),
                gen,
                einv,
            })
        });
        Ok(Stepper {
            cfg: *cfg,
            slots,
            basis: WallBasis::get(n2)?,
            props: props.into_iter().collect::<Result<_>>()?,
            fine: FineOps::get(n2)?,
            fft: RealPlaneFft::new(cfg.grid.n1, cfg.grid.n3),
        })
    }

    /// Modal state of a solenoidal no-slip field; content outside the evolved
    /// set is dropped.
    pub fn state_from_field(&self, v: &VelocityField, t: f64) -> Result<SimState> {
        if v.grid != self.cfg.grid {
            return Err(Error::GridMismatch(format!(
                "field grid {:?} differs from configuration grid {:?}",
                v.grid, self.cfg.grid
            )));
        }
        let v = v.to_spectral();
        let scale = v.max_abs().max(f64::MIN_POSITIVE);
        let div = v.max_divergence()?;
        let wall = v.max_wall_value();
        if div > 1e-8 * scale * (1.0 + self.kmax()) || wall > 1e-8 * scale {
            return Err(Error::InvalidInput(format!(
                "initial field must be solenoidal and no-slip (divergence {div:.2e}, wall {wall:.2e})"
            )));
        }
        let coeffs = self
            .slots
            .iter()
            .map(|s| self.basis.extract(s.k1, s.k3, &v.mode(s.i1, s.i3)))
            .collect();
        Ok(SimState { t, coeffs })
    }

    fn kmax(&self) -> f64 {
        self.slots.iter().map(|s| s.k1.abs() + s.k3.abs()).fold(0.0, f64::max)
            + (self.cfg.grid.n2 * self.cfg.grid.n2) as f64
    }

    /// Nodal velocity field of a state.
    pub fn field(&self, st: &SimState) -> VelocityField {
        let mut f = VelocityField::zeros(&self.cfg.grid);
        for (s, x) in self.slots.iter().zip(&st.coeffs) {
            let u = self.basis.lift(s.k1, s.k3, x);
            f.set_mode(s.i1, s.i3, &u);
            if (s.i1, s.i3) != s.partner {
                let c = u.map(|p| p.iter().map(|v| v.conj()).collect::<Vec<_>>());
                f.set_mode(s.partner.0, s.partner.1, &c);
            }
        }
        f
    }

    pub fn zero_state(&self, t: f64) -> SimState {
        SimState {
            t,
            coeffs: self
                .slots
                .iter()
                .map(|s| vec![czero(); self.basis.state_len(s.k1, s.k3)])
                .collect(),
        }
    }

    /// Weak projections of a nodal field onto every evolved slot.
    pub fn project(&self, f: &VelocityField) -> Vec<Vec<C64>> {
        let f = f.to_spectral();
        self.slots
            .iter()
            .map(|s| weak_project(&self.basis, s.k1, s.k3, &f.mode(s.i1, s.i3)))
            .collect()
    }

    /// Weak projection of `v × ω = -(v·∇)v + ∇(|v|²/2)` per slot, with the CFL
    /// number and the largest sampled speed.
    fn quadratic(&self, coeffs: &[Vec<C64>]) -> (Vec<Vec<C64>>, f64, f64) {
        let g = self.cfg.grid;
        let fo = &self.fine;
        let (n1, n3, m) = (g.n1, g.n3, fo.m);
        let h = self.fft.half();
        let sp = n1 * h;
        let nv = self.basis.nv();
        // six fields on the product grid: u1, u2, u3, w1, w2, w3
        let profiles: Vec<[Vec<C64>; 6]> =
            crate::par::map(&self.slots.iter().zip(coeffs).collect::<Vec<_>>(), |(s, x)| {
                let i = |a: f64| C64::new(0.0, a);
                if s.is_mean() {
                    let ne = self.basis.ne();
                    let u1 = rmatvec(&fo.phi, &x[..ne]);
                    let u3 = rmatvec(&fo.phi, &x[ne..]);
                    let du1 = rmatvec(&fo.dphi, &x[..ne]);
                    let du3 = rmatvec(&fo.dphi, &x[ne..]);
                    let z = vec![czero(); m];
                    let w3 = du1.iter().map(|v| -v).collect();
                    return [u1, z.clone(), u3, du3, z, w3];
                }
                let k2 = s.k1 * s.k1 + s.k3 * s.k3;
                let (av, ae) = x.split_at(nv);
                let u2 = rmatvec(&fo.psi, av);
                let du2 = rmatvec(&fo.dpsi, av);
                let d2u2 = rmatvec(&fo.d2psi, av);
                let eta = rmatvec(&fo.phi, ae);
                let deta = rmatvec(&fo.dphi, ae);
                let (a1, a3) = (i(s.k1 / k2), i(s.k3 / k2));
                let mut u1 = vec![czero(); m];
                let mut u3 = vec![czero(); m];
                let mut w1 = vec![czero(); m];
                let mut w3 = vec![czero(); m];
                for q in 0..m {
                    u1[q] = a1 * du2[q] - a3 * eta[q];
                    u3[q] = a3 * du2[q] + a1 * eta[q];
                    let du1 = a1 * d2u2[q] - a3 * deta[q];
                    let du3 = a3 * d2u2[q] + a1 * deta[q];
                    w1[q] = du3 - i(s.k3) * u2[q];
                    w3[q] = i(s.k1) * u2[q] - du1;
                }
                [u1, u2, u3, w1, eta, w3]
            });
        let mut spec: Vec<Vec<C64>> = (0..6).map(|_| vec![czero(); m * sp]).collect();
        for (s, prof) in self.slots.iter().zip(&profiles) {
            let conj_slot = (s.n == 0 && s.m > 0).then(|| (n1 - s.i1) * h);
            for (f, p) in prof.iter().enumerate() {
                for q in 0..m {
                    spec[f][q * sp + s.i1 * h + s.i3] = p[q];
                    if let Some(c) = conj_slot {
                        spec[f][q * sp + c] = p[q].conj();
                    }
                }
            }
        }
        let (dx1, dx3) = (g.l1 / n1 as f64, g.l3 / n3 as f64);
        let plane = n1 * n3;
        let planes: Vec<([Vec<C64>; 3], f64, f64)> = crate::par::map(&(0..m).collect::<Vec<_>>(), |&q| {
            let mut phys: Vec<Vec<f64>> = vec![vec![0.0; plane]; 6];
            for f in 0..6 {
                let mut buf = spec[f][q * sp..(q + 1) * sp].to_vec();
                self.fft.inverse(&mut buf, &mut phys[f]);
            }
            let mut out: [Vec<f64>; 3] = [vec![0.0; plane], vec![0.0; plane], vec![0.0; plane]];
            let mut cfl: f64 = 0.0;
            let mut sup: f64 = 0.0;
            for p in 0..plane {
                let (u1, u2, u3) = (phys[0][p], phys[1][p], phys[2][p]);
                let (w1, w2, w3) = (phys[3][p], phys[4][p], phys[5][p]);
                out[0][p] = u2 * w3 - u3 * w2;
                out[1][p] = u3 * w1 - u1 * w3;
                out[2][p] = u1 * w2 - u2 * w1;
                let mut c = u2.abs() / fo.dy[q];
                if n1 > 1 {
                    c += u1.abs() / dx1;
                }
                if n3 > 1 {
                    c += u3.abs() / dx3;
                }
                cfl = cfl.max(c);
                sup = sup.max(u1.abs()).max(u2.abs()).max(u3.abs());
            }
            let res = out.map(|mut o| {
                let mut s = vec![czero(); sp];
                self.fft.forward(&mut o, &mut s);
                s
            });
            (res, cfl, sup)
        });
        let mut cfl: f64 = 0.0;
        let mut sup: f64 = 0.0;
        for p in &planes {
            cfl = cfl.max(p.1);
            sup = sup.max(p.2);
        }
        let proj = crate::par::map(&self.slots, |s| {
            let at = s.i1 * h + s.i3;
            let gcol = |c: usize| -> Vec<C64> { (0..m).map(|q| planes[q].0[c][at]).collect() };
            let (g1, g2, g3) = (gcol(0), gcol(1), gcol(2));
            if s.is_mean() {
                let mut r = rmatvec(&fo.w_phi, &g1);
                r.extend(rmatvec(&fo.w_phi, &g3));
                return r;
            }
            let k2 = s.k1 * s.k1 + s.k3 * s.k3;
            let (c1, c3) = (C64::new(0.0, -s.k1 / k2), C64::new(0.0, -s.k3 / k2));
            let d1 = rmatvec(&fo.w_dpsi, &g1);
            let p2 = rmatvec(&fo.w_psi, &g2);
            let d3 = rmatvec(&fo.w_dpsi, &g3);
            let mut r: Vec<C64> = (0..nv).map(|i| c1 * d1[i] + p2[i] + c3 * d3[i]).collect();
            let e1 = rmatvec(&fo.w_phi, &g1);
            let e3 = rmatvec(&fo.w_phi, &g3);
            r.extend(e1.iter().zip(&e3).map(|(a, b)| -c3 * a + c1 * b));
            r
        });
        (proj, cfl * self.cfg.dt, sup)
    }

    fn rhs(&self, coeffs: &[Vec<C64>], t: f64, forcing: Option<Forcing>) -> Result<(Option<Vec<Vec<C64>>>, StepInfo)> {
        let mut info = StepInfo { cfl: 0.0, sup: 0.0 };
        let mut total: Option<Vec<Vec<C64>>> = None;
        if self.cfg.nonlinear {
            let (q, cfl, sup) = self.quadratic(coeffs);
            info = StepInfo { cfl, sup };
            total = Some(q);
        }
        if let Some(f) = forcing {
            let fp = self.project(&f(t)?);
            total = Some(match total {
                None => fp,
                Some(mut q) => {
                    for (a, b) in q.iter_mut().zip(&fp) {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                    }
                    q
                }
            });
        }
        Ok((total, info))
    }

    /// Modal time derivative `E⁻¹(A x + b)` of a state, where `b` holds the
    /// quadratic term (when enabled) and the forcing.
    pub fn rate(&self, st: &SimState, forcing: Option<Forcing>) -> Result<Vec<Vec<C64>>> {
        let (b, _) = self.rhs(&st.coeffs, st.t, forcing)?;
        Ok(st
            .coeffs
            .iter()
            .zip(&self.props)
            .enumerate()
            .map(|(i, (x, p))| {
                let mut y = matvec(&p.gen, x);
                if let Some(b) = &b {
                    for (yi, zi) in y.iter_mut().zip(matvec(&p.einv, &b[i])) {
                        *yi += zi;
                    }
                }
                y
            })
            .collect())
    }

    /// Advance one step of size `dt`.
    pub fn step(&self, st: &mut SimState, forcing: Option<Forcing>) -> Result<StepInfo> {
        let (n0, info) = self.rhs(&st.coeffs, st.t, forcing)?;
        if info.cfl > self.cfg.cfl_max {
            return Err(Error::Cfl {
                cfl: info.cfl,
                suggested_dt: 0.9 * self.cfg.dt * self.cfg.cfl_max / info.cfl,
            });
        }
        let Some(n0) = n0 else {
            for (x, p) in st.coeffs.iter_mut().zip(&self.props) {
                *x = matvec(&p.e, x);
            }
            st.t += self.cfg.dt;
            return self.check_finite(st, info);
        };
        let a: Vec<Vec<C64>> = st
            .coeffs
            .iter()
            .zip(&self.props)
            .zip(&n0)
            .map(|((x, p), nx)| {
                let mut y = matvec(&p.e, x);
                for (yi, zi) in y.iter_mut().zip(matvec(&p.p1, nx)) {
                    *yi += zi;
                }
                y
            })
            .collect();
        let (n1, _) = self.rhs(&a, st.t + self.cfg.dt, forcing)?;
        let n1 = n1.expect("nonlinear or forced right-hand side");
        for (((x, ai), p), (b0, b1)) in st.coeffs.iter_mut().zip(a).zip(&self.props).zip(n0.iter().zip(&n1)) {
            let diff: Vec<C64> = b1.iter().zip(b0).map(|(u, v)| u - v).collect();
            let corr = matvec(&p.p2, &diff);
            *x = ai.iter().zip(corr).map(|(u, v)| u + v).collect();
        }
        st.t += self.cfg.dt;
        self.check_finite(st, info)
    }

    fn check_finite(&self, st: &SimState, info: StepInfo) -> Result<StepInfo> {
        if st.coeffs.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(info)
        } else {
            Err(Error::Numerical(format!("non-finite state at t = {}", st.t)))
        }
    }
}

/// One step from a nodal field (builds the propagators on every call; use
/// [`Stepper`] for repeated steps).
pub fn step(v: &VelocityField, cfg: &SimConfig) -> Result<VelocityField> {
    let s = Stepper::new(cfg)?;
    let mut st = s.state_from_field(v, 0.0)?;
    s.step(&mut st, None)?;
    Ok(s.field(&st))
}
