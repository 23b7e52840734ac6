//! Horizontal (x1, x3) Fourier transforms on single wall-parallel planes.
//!
//! Plane data is stored row-major as `[i1][i3]`. Forward transforms map
//! physical samples to coefficients and divide by `n1 * n3`; inverse
//! transforms are unnormalized, so `inverse(forward(f)) == f`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

/// Complex-to-complex 2-D transform.
#[derive(Clone)]
pub struct PlaneFft {
    n1: usize,
    n3: usize,
    f1: Arc<dyn Fft<f64>>,
    i1: Arc<dyn Fft<f64>>,
    f3: Arc<dyn Fft<f64>>,
    i3: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PlaneFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PlaneFft({} x {})", self.n1, self.n3)
    }
}

impl PlaneFft {
    pub fn new(n1: usize, n3: usize) -> Self {
        let mut p = FftPlanner::new();
        PlaneFft {
            n1,
            n3,
            f1: p.plan_fft_forward(n1),
            i1: p.plan_fft_inverse(n1),
            f3: p.plan_fft_forward(n3),
            i3: p.plan_fft_inverse(n3),
        }
    }

    fn run(&self, data: &mut [C64], along3: &Arc<dyn Fft<f64>>, along1: &Arc<dyn Fft<f64>>) {
        let (n1, n3) = (self.n1, self.n3);
        assert_eq!(data.len(), n1 * n3);
        if n3 > 1 {
            along3.process(data);
        }
        if n1 > 1 {
            let mut col = vec![C64::new(0.0, 0.0); n1];
            for i3 in 0..n3 {
                for i1 in 0..n1 {
                    col[i1] = data[i1 * n3 + i3];
                }
                along1.process(&mut col);
                for i1 in 0..n1 {
                    data[i1 * n3 + i3] = col[i1];
                }
            }
        }
    }

    /// Physical samples to coefficients, in place.
    pub fn forward(&self, data: &mut [C64]) {
        self.run(data, &self.f3, &self.f1);
        let s = 1.0 / (self.n1 * self.n3) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Coefficients to physical samples, in place.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(data, &self.i3, &self.i1);
    }
}

/// Real-to-half-spectrum 2-D transform. Spectral planes hold `n1 x (n3/2 + 1)`
/// coefficients, the nonnegative spanwise half of the Hermitian spectrum.
#[derive(Clone)]
pub struct RealPlaneFft {
    n1: usize,
    n3: usize,
    h: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    f1: Arc<dyn Fft<f64>>,
    i1: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RealPlaneFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RealPlaneFft({} x {})", self.n1, self.n3)
    }
}

impl RealPlaneFft {
    pub fn new(n1: usize, n3: usize) -> Self {
        let mut rp = RealFftPlanner::<f64>::new();
        let mut p = FftPlanner::new();
        RealPlaneFft {
            n1,
            n3,
            h: n3 / 2 + 1,
            r2c: rp.plan_fft_forward(n3),
            c2r: rp.plan_fft_inverse(n3),
            f1: p.plan_fft_forward(n1),
            i1: p.plan_fft_inverse(n1),
        }
    }

    /// Spanwise length of a half-spectrum plane.
    pub fn half(&self) -> usize {
        self.h
    }

    fn columns(&self, spec: &mut [C64], fft: &Arc<dyn Fft<f64>>, col: &mut [C64]) {
        if self.n1 == 1 {
            return;
        }
        let h = self.h;
        for i3 in 0..h {
            for i1 in 0..self.n1 {
                col[i1] = spec[i1 * h + i3];
            }
            fft.process(col);
            for i1 in 0..self.n1 {
                spec[i1 * h + i3] = col[i1];
            }
        }
    }

    /// `phys` (length `n1*n3`, clobbered) to `spec` (length `n1*h`).
    pub fn forward(&self, phys: &mut [f64], spec: &mut [C64]) {
        let (n1, n3, h) = (self.n1, self.n3, self.h);
        assert_eq!(phys.len(), n1 * n3);
        assert_eq!(spec.len(), n1 * h);
        for i1 in 0..n1 {
            let row = &mut phys[i1 * n3..(i1 + 1) * n3];
            let out = &mut spec[i1 * h..(i1 + 1) * h];
            self.r2c
                .process(row, out)
                .expect("real FFT buffer sizes are fixed by construction");
        }
        let mut col = vec![C64::new(0.0, 0.0); n1];
        self.columns(spec, &self.f1, &mut col);
        let s = 1.0 / (n1 * n3) as f64;
        spec.iter_mut().for_each(|v| *v *= s);
    }

    /// `spec` (clobbered) to `phys`.
    pub fn inverse(&self, spec: &mut [C64], phys: &mut [f64]) {
        let (n1, n3, h) = (self.n1, self.n3, self.h);
        assert_eq!(phys.len(), n1 * n3);
        assert_eq!(spec.len(), n1 * h);
        let mut col = vec![C64::new(0.0, 0.0); n1];
        self.columns(spec, &self.i1, &mut col);
        for i1 in 0..n1 {
            let row = &mut spec[i1 * h..(i1 + 1) * h];
            row[0].im = 0.0;
            if n3 % 2 == 0 {
                row[h - 1].im = 0.0;
            }
            let out = &mut phys[i1 * n3..(i1 + 1) * n3];
            // imaginary parts of the self-conjugate slots were cleared above
            let _ = self.c2r.process(row, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complex_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n1, n3) in [(1, 1), (4, 1), (1, 6), (8, 6), (12, 16)] {
            let fft = PlaneFft::new(n1, n3);
            let orig: Vec<C64> = (0..n1 * n3)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let mut d = orig.clone();
            fft.forward(&mut d);
            fft.inverse(&mut d);
            let scale: f64 = orig.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in d.iter().zip(&orig) {
                assert!((a - b).norm() < 1e-13 * scale);
            }
        }
    }

    #[test]
    fn single_mode_lands_in_its_slot() {
        let (n1, n3) = (8, 4);
        let fft = PlaneFft::new(n1, n3);
        let mut d = vec![C64::new(0.0, 0.0); n1 * n3];
        for i1 in 0..n1 {
            for i3 in 0..n3 {
                let x1 = 2.0 * std::f64::consts::PI * i1 as f64 / n1 as f64;
                let x3 = 2.0 * std::f64::consts::PI * i3 as f64 / n3 as f64;
                d[i1 * n3 + i3] = C64::from_polar(1.0, -2.0 * x1 + x3);
            }
        }
        fft.forward(&mut d);
        for (idx, v) in d.iter().enumerate() {
            let expect = if idx == 6 * n3 + 1 { 1.0 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn real_matches_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n1, n3) in [(1, 1), (1, 8), (6, 1), (8, 6), (16, 16)] {
            let rf = RealPlaneFft::new(n1, n3);
            let cf = PlaneFft::new(n1, n3);
            let phys: Vec<f64> = (0..n1 * n3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut full: Vec<C64> = phys.iter().map(|&x| C64::new(x, 0.0)).collect();
            cf.forward(&mut full);
            let h = rf.half();
            let mut spec = vec![C64::new(0.0, 0.0); n1 * h];
            rf.forward(&mut phys.clone(), &mut spec);
            for i1 in 0..n1 {
                for i3 in 0..h {
                    assert!((spec[i1 * h + i3] - full[i1 * n3 + i3]).norm() < 1e-14);
                }
            }
            let mut back = vec![0.0; n1 * n3];
            rf.inverse(&mut spec, &mut back);
            for (a, b) in back.iter().zip(&phys) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
