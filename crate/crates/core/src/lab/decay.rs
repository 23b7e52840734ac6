use serde::{Deserialize, Serialize};

use super::functionals::simpson;
use super::{CheckReport, Witness};
use crate::error::{Error, Result};

/// Densely sampled `f` and `f'` on a uniform grid, with bounds on what lies
/// beyond the last sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayInput {
    pub label: String,
    pub t0: f64,
    pub dt: f64,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    /// Upper bound on `∫ (f² + f'²)` past the last sample.
    pub tail_integral: f64,
    /// Upper bound on `f²` past the last sample.
    pub tail_sup_sq: f64,
}

impl DecayInput {
    pub fn validate(&self) -> Result<()> {
        let n = self.f.len();
        if n < 3 || n % 2 == 0 || self.df.len() != n {
            return Err(Error::InvalidInput(
                "f and f' need the same odd number (>= 3) of samples".into(),
            ));
        }
        if !(self.dt > 0.0) || !self.tail_integral.is_finite() || !self.tail_sup_sq.is_finite() {
            return Err(Error::Domain(format!(
                "{}: the tail integral must be finite",
                self.label
            )));
        }
        if self.f.iter().chain(&self.df).any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("{}: non-finite samples", self.label)));
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.f.len() - 1) as f64
    }
}

/// Analytic test functions with known decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `a e^{-λt}`.
    Exp { amplitude: f64, rate: f64 },
    /// `e^{-λt} sin(ωt)`.
    DampedSine { rate: f64, omega: f64 },
    /// `e^{-λt} cos(ωt + φ)`.
    DampedCosine { rate: f64, omega: f64, phase: f64 },
    /// `(1 + t)^{-p}`, `p > 1/2`.
    Algebraic { power: f64 },
    /// `e^{-(t - c)²/(2s²)}`.
    Gaussian { center: f64, width: f64 },
    /// `e^{-λt} (1 + t)`.
    ExpLinear { rate: f64 },
    /// `1 / cosh(λt)`.
    Sech { rate: f64 },
}

impl TestFunction {
    pub fn label(&self) -> String {
        match *self {
            TestFunction::Exp { amplitude, rate } => format!("{amplitude} exp(-{rate} t)"),
            TestFunction::DampedSine { rate, omega } => format!("exp(-{rate} t) sin({omega} t)"),
            TestFunction::DampedCosine { rate, omega, phase } => {
                format!("exp(-{rate} t) cos({omega} t + {phase})")
            }
            TestFunction::Algebraic { power } => format!("(1 + t)^-{power}"),
            TestFunction::Gaussian { center, width } => format!("gaussian({center}, {width})"),
            TestFunction::ExpLinear { rate } => format!("exp(-{rate} t) (1 + t)"),
            TestFunction::Sech { rate } => format!("sech({rate} t)"),
        }
    }

    pub fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            TestFunction::Exp { amplitude, rate } => {
                let e = amplitude * (-rate * t).exp();
                (e, -rate * e)
            }
            TestFunction::DampedSine { rate, omega } => {
                let e = (-rate * t).exp();
                let (s, c) = (omega * t).sin_cos();
                (e * s, e * (omega * c - rate * s))
            }
            TestFunction::DampedCosine { rate, omega, phase } => {
                let e = (-rate * t).exp();
                let (s, c) = (omega * t + phase).sin_cos();
                (e * c, -e * (omega * s + rate * c))
            }
            TestFunction::Algebraic { power } => {
                let b = 1.0 + t;
                (b.powf(-power), -power * b.powf(-power - 1.0))
            }
            TestFunction::Gaussian { center, width } => {
                let z = (t - center) / width;
                let g = (-0.5 * z * z).exp();
                (g, -z / width * g)
            }
            TestFunction::ExpLinear { rate } => {
                let e = (-rate * t).exp();
                (e * (1.0 + t), e * (1.0 - rate * (1.0 + t)))
            }
            TestFunction::Sech { rate } => {
                let c = (rate * t).cosh();
                (1.0 / c, -rate * (rate * t).tanh() / c)
            }
        }
    }

    /// `∫_T^∞ (f² + f'²)` in closed form where one is cheap.
    pub fn tail_integral(&self, t: f64) -> Option<f64> {
        match *self {
            TestFunction::Exp { amplitude, rate } => {
                Some(amplitude * amplitude * (1.0 + rate * rate) * (-2.0 * rate * t).exp() / (2.0 * rate))
            }
            TestFunction::Algebraic { power: p } => {
                let b = 1.0 + t;
                Some(b.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0) + p * p * b.powf(-2.0 * p - 1.0) / (2.0 * p + 1.0))
            }
            _ => None,
        }
    }

    /// Envelope `K e^{-μ t}` of `|f| + |f'|`, or the algebraic equivalent,
    /// used to bound the tail past a sampling horizon.
    fn tail_bounds(&self, t: f64) -> Result<(f64, f64)> {
        let exp_tail = |k: f64, mu: f64| {
            (
                k * k * (-2.0 * mu * t).exp() / (2.0 * mu),
                k * k * (-2.0 * mu * t).exp(),
            )
        };
        match *self {
            TestFunction::Exp { rate, .. } | TestFunction::DampedSine { rate, .. } if rate <= 0.0 => {
                Err(Error::Domain(format!("{}: rate must be positive", self.label())))
            }
            TestFunction::DampedCosine { rate, .. }
            | TestFunction::ExpLinear { rate }
            | TestFunction::Sech { rate }
                if rate <= 0.0 =>
            {
                Err(Error::Domain(format!("{}: rate must be positive", self.label())))
            }
            TestFunction::Algebraic { power } if power <= 0.5 => {
                Err(Error::Domain(format!("{}: ∫ f² diverges for p <= 1/2", self.label())))
            }
            TestFunction::Gaussian { width, .. } if width <= 0.0 => {
                Err(Error::Domain("gaussian width must be positive".into()))
            }
            TestFunction::Exp { amplitude, rate } => Ok(exp_tail(amplitude.abs() * (1.0 + rate), rate)),
            TestFunction::DampedSine { rate, omega } | TestFunction::DampedCosine { rate, omega, .. } => {
                Ok(exp_tail(1.0 + rate + omega.abs(), rate))
            }
            TestFunction::ExpLinear { rate } => {
                // (1 + t) e^{-λt/2} <= (2/λ) e^{λ/2}
                let k = (1.0 + rate) * (2.0 / rate) * (0.5 * rate).exp() + 1.0;
                Ok(exp_tail(k, 0.5 * rate))
            }
            TestFunction::Sech { rate } => Ok(exp_tail(2.0 * (1.0 + rate), rate)),
            TestFunction::Algebraic { power } => {
                let i = self.tail_integral(t).expect("closed form");
                Ok((i, (1.0 + t).powf(-2.0 * power) * (1.0 + power * power)))
            }
            TestFunction::Gaussian { center, width } => {
                let a = (t - center) / width;
                if a < 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "{}: horizon must lie a width past the center",
                        self.label()
                    )));
                }
                // (1 + z²/s²) <= (1 + 1/s²) z³ for z >= 1
                let e = (-a * a).exp();
                Ok((width * (1.0 + 1.0 / (width * width)) * (a * a + 1.0) * e, e))
            }
        }
    }

    /// Sample `[0, horizon]` with `steps` (even) intervals.
    pub fn sample(&self, horizon: f64, steps: usize) -> Result<DecayInput> {
        let steps = steps + steps % 2;
        let dt = horizon / steps as f64;
        let (f, df): (Vec<f64>, Vec<f64>) = (0..=steps).map(|i| self.eval(i as f64 * dt)).unzip();
        let (tail_integral, tail_sup_sq) = self.tail_bounds(horizon)?;
        let d = DecayInput {
            label: self.label(),
            t0: 0.0,
            dt,
            f,
            df,
            tail_integral,
            tail_sup_sq,
        };
        d.validate()?;
        Ok(d)
    }
}

/// Ten inputs with different decay shapes.
pub fn decay_battery() -> Vec<TestFunction> {
    vec![
        TestFunction::Exp {
            amplitude: 1.0,
            rate: 1.0,
        },
        TestFunction::Exp {
            amplitude: 3.0,
            rate: 0.2,
        },
        TestFunction::DampedSine { rate: 1.0, omega: 10.0 },
        TestFunction::DampedSine { rate: 0.1, omega: 2.0 },
        TestFunction::DampedCosine {
            rate: 0.5,
            omega: 1.0,
            phase: 0.3,
        },
        TestFunction::Algebraic { power: 1.0 },
        TestFunction::Algebraic { power: 3.0 },
        TestFunction::Gaussian {
            center: 3.0,
            width: 0.7,
        },
        TestFunction::ExpLinear { rate: 0.5 },
        TestFunction::Sech { rate: 2.0 },
    ]
}

/// One row per start time: `(T, sup_{t≥T} f², ∫_T^∞ (f² + f'²), ratio)`.
pub fn decay_ratios(input: &DecayInput, starts: &[f64]) -> Result<Vec<(f64, f64, f64, f64)>> {
    input.validate()?;
    let n = input.f.len();
    let g: Vec<f64> = input.f.iter().zip(&input.df).map(|(a, b)| a * a + b * b).collect();
    starts
        .iter()
        .map(|&t| {
            let pos = (t - input.t0) / input.dt;
            let i = pos.round();
            if (pos - i).abs() > 1e-9 || i < 0.0 || i as usize + 2 >= n {
                return Err(Error::InvalidInput(format!(
                    "start time {t} is not an interior sample of {}",
                    input.label
                )));
            }
            let mut i = i as usize;
            let sup = input.f[i..].iter().map(|v| v * v).fold(input.tail_sup_sq, f64::max);
            // Simpson needs an even number of intervals; the odd one out is
            // integrated with the trapezoid rule
            let mut head = 0.0;
            if (n - 1 - i) % 2 == 1 {
                head = 0.5 * input.dt * (g[i] + g[i + 1]);
                i += 1;
            }
            let integral = head + simpson(&g[i..], input.dt)? + input.tail_integral;
            Ok((t, sup, integral, if sup == 0.0 { 0.0 } else { sup / integral }))
        })
        .collect()
}

/// Relative quadrature allowance on top of the sharp constant `1`.
pub const DECAY_QUADRATURE_TOL: f64 = 1e-6;

/// `sup_{t≥T} f² ≤ C ∫_T^∞ (f² + f'²)` with the sharp `C = 1` over a battery of
/// inputs and start times.
pub fn check_decay_theorem(inputs: &[DecayInput], starts: &[f64]) -> Result<CheckReport> {
    let mut rows = Vec::new();
    for input in inputs {
        for (t, sup, integral, r) in decay_ratios(input, starts)? {
            rows.push(Witness {
                trial: rows.len(),
                seed: None,
                label: format!("{} at T = {t}", input.label),
                lhs: sup,
                rhs: integral,
                ratio: r,
            });
        }
    }
    Ok(CheckReport::from_witnesses(
        "decay-sobolev",
        None,
        1.0 + DECAY_QUADRATURE_TOL,
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const STARTS: [f64; 4] = [0.0, 1.0, 2.0, 4.0];

    fn sampled(f: TestFunction) -> DecayInput {
        f.sample(60.0, 120_000).unwrap()
    }

    #[test]
    fn exponential_attains_equality() {
        let rows = decay_ratios(
            &sampled(TestFunction::Exp {
                amplitude: 1.0,
                rate: 1.0,
            }),
            &STARTS,
        )
        .unwrap();
        for (t, sup, integral, r) in rows {
            assert!((sup - (-2.0 * t).exp()).abs() < 1e-15);
            assert!((integral - (-2.0 * t).exp()).abs() < 1e-12, "{integral}");
            assert!((r - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for f in [
            TestFunction::Exp {
                amplitude: 3.0,
                rate: 0.2,
            },
            TestFunction::Algebraic { power: 1.0 },
            TestFunction::Algebraic { power: 3.0 },
        ] {
            let d = f.sample(400.0, 400_000).unwrap();
            for (t, _, integral, _) in decay_ratios(&d, &STARTS).unwrap() {
                let exact = f.tail_integral(t).unwrap();
                assert!(
                    (integral - exact).abs() < 1e-8 * exact,
                    "{}: {integral} vs {exact}",
                    f.label()
                );
            }
        }
    }

    #[test]
    fn damped_sine_within_two() {
        let rows = decay_ratios(&sampled(TestFunction::DampedSine { rate: 1.0, omega: 10.0 }), &STARTS).unwrap();
        for (_, _, _, r) in rows {
            assert!(r <= 2.0 && r > 0.0);
        }
    }

    #[test]
    fn battery_passes_with_sharp_constant() {
        let inputs: Vec<_> = decay_battery()
            .into_iter()
            .map(|f| f.sample(400.0, 400_000).unwrap())
            .collect();
        let rep = check_decay_theorem(&inputs, &STARTS).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.trials, 40);
    }

    #[test]
    fn sup_tends_to_zero_along_the_start_list() {
        let starts = [0.0, 5.0, 10.0, 20.0, 40.0];
        for f in decay_battery() {
            let rows = decay_ratios(&f.sample(400.0, 400_000).unwrap(), &starts).unwrap();
            for w in rows.windows(2) {
                assert!(w[1].1 <= w[0].1 && w[1].2 <= w[0].2);
            }
            let last = rows.last().unwrap();
            assert!(
                last.1 <= last.2 * (1.0 + 1e-6) && last.2 < 0.05 * rows[0].2,
                "{}",
                f.label()
            );
        }
    }

    #[test]
    fn divergent_inputs_are_rejected() {
        assert!(TestFunction::Algebraic { power: 0.5 }.sample(10.0, 100).is_err());
        assert!(TestFunction::Exp {
            amplitude: 1.0,
            rate: 0.0
        }
        .sample(10.0, 100)
        .is_err());
        let mut d = sampled(TestFunction::Sech { rate: 1.0 });
        d.tail_integral = f64::INFINITY;
        assert!(decay_ratios(&d, &[0.0]).is_err());
    }
}
