use couette::lab::{dissipation_residual, evaluate_functionals, CheckReport, FunctionalSamples, TestFunction, Witness};
use couette::norms::{component_l2_sq, h_tilde_norms, l2_norm, m_norm, norm};
use couette::operator::{build_operator, eigenvalues};
use couette::resolvent::{random_forcing, resolvent_norm, ResolventContext, ResolventNorm};
use couette::sim::{threshold_search_with, Classification, Probe, SimConfig, Stepper};
use couette::spectral::{chebyshev_nodes, diff_matrix, quadrature_weights, PlaneFft};
use couette::{random_solenoidal, Grid, NormKind, RandomFieldSpec, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_grid() -> Grid {
    Grid::new(4, 13, 4, 2.0 * std::f64::consts::PI, std::f64::consts::PI).unwrap()
}

fn field(seed: u64) -> couette::VelocityField {
    random_solenoidal(&small_grid(), &RandomFieldSpec::seeded(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn differentiation_is_exact_on_low_degree_polynomials(
        n in 6usize..40,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..6),
    ) {
        let x = chebyshev_nodes(n).unwrap();
        let p: Vec<f64> = x.iter().map(|&t| coeffs.iter().rev().fold(0.0, |a, c| a * t + c)).collect();
        let dp: Vec<f64> = x
            .iter()
            .map(|&t| {
                coeffs.iter().enumerate().skip(1).rev().fold(0.0, |a, (k, c)| a * t + k as f64 * c)
            })
            .collect();
        let got = diff_matrix(n, 1).unwrap().apply(&p);
        for (g, e) in got.iter().zip(&dp) {
            prop_assert!((g - e).abs() < 1e-10 * (1.0 + n as f64 * n as f64));
        }
        let ones = diff_matrix(n, 1).unwrap().apply(&vec![1.0; n]);
        prop_assert!(ones.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn quadrature_is_positive_and_exact(n in 3usize..64, k in 0usize..64) {
        let w = quadrature_weights(n).unwrap();
        prop_assert!(w.iter().all(|&v| v > 0.0));
        prop_assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        let k = k % n;
        let x = chebyshev_nodes(n).unwrap();
        let q: f64 = w.iter().zip(&x).map(|(wi, xi)| wi * xi.powi(k as i32)).sum();
        let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
        prop_assert!((q - exact).abs() < 1e-13);
    }

    #[test]
    fn plane_fft_round_trip(n1 in 1usize..13, n3 in 1usize..13, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<C64> = (0..n1 * n3).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let fft = PlaneFft::new(n1, n3);
        let mut work = data.clone();
        fft.forward(&mut work);
        fft.inverse(&mut work);
        let scale = data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in work.iter().zip(&data) {
            prop_assert!((a - b).norm() < 1e-13 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn norms_are_homogeneous_and_subadditive(s1 in 0u64..1000, s2 in 0u64..1000, a in -5.0f64..5.0, r in 1.0f64..2000.0) {
        let (f, g) = (field(s1), field(s2));
        let kinds = [
            NormKind::L2,
            NormKind::M { reynolds: r },
            NormKind::Hk { k: 2 },
            NormKind::Htilde1 { reynolds: r },
            NormKind::Htilde2,
            NormKind::J2,
        ];
        let sum = f.axpy(1.0, &g).unwrap();
        for kind in kinds {
            let nf = norm(&f, kind).unwrap();
            let scaled = norm(&f.scaled(a), kind).unwrap();
            prop_assert!((scaled - a.abs() * nf).abs() <= 1e-12 * nf.max(1e-300) * (1.0 + a.abs()), "{kind:?}");
            let ns = norm(&sum, kind).unwrap();
            prop_assert!(ns <= (nf + norm(&g, kind).unwrap()) * (1.0 + 1e-12), "{kind:?}");
        }
    }

    #[test]
    fn norm_ordering_chain(seed in 0u64..10_000, r in 1.0f64..5000.0) {
        let f = field(seed);
        let l2 = l2_norm(&f).unwrap();
        let m = m_norm(&f, r).unwrap();
        let (h1, h2) = h_tilde_norms(&f, r).unwrap();
        prop_assert!(l2 <= m * (1.0 + 1e-14));
        prop_assert!(h2 <= h1 * (1.0 + 1e-14));
        prop_assert!(l2 <= h2 * (1.0 + 1e-14));
        let c = component_l2_sq(&f).unwrap();
        let lhs = m * m - l2 * l2;
        let rhs = (r * r - 1.0) * c[1];
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (m * m));
    }

    #[test]
    fn dissipation_identity_at_roundoff(seed in 0u64..10_000, r in 1.0f64..2000.0) {
        let (res, scale) = dissipation_residual(&field(seed), r).unwrap();
        prop_assert!(res.abs() < 1e-10 * scale);
    }

    #[test]
    fn spectrum_lies_in_the_left_half_plane(k1 in 0.0f64..2.0, k3 in 0.0f64..2.0, r in 10.0f64..3000.0) {
        let op = build_operator(k1, k3, r, 24).unwrap();
        let top = eigenvalues(&op).unwrap().rightmost().unwrap();
        prop_assert!(top.re < 0.0, "{top}");
    }

    #[test]
    fn m_norm_at_unit_reynolds_is_the_energy_norm(k1 in 0.0f64..2.0, k3 in 0.0f64..2.0, omega in -3.0f64..3.0) {
        let op = build_operator(k1, k3, 1.0, 16).unwrap();
        let s = C64::new(0.0, omega);
        let e = resolvent_norm(&op, s, NormKind::L2).unwrap();
        let m = resolvent_norm(&op, s, NormKind::M { reynolds: 1.0 }).unwrap();
        prop_assert!((e - m).abs() <= 1e-12 * e);
    }

    #[test]
    fn sampled_ratios_never_exceed_the_operator_norm(
        k1 in 0.0f64..1.5,
        k3 in 0.0f64..1.5,
        r in 10.0f64..1000.0,
        omega in -1.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let op = build_operator(k1, k3, r, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for norm in [ResolventNorm::Energy, ResolventNorm::Modified, ResolventNorm::Htilde1] {
            let ctx = ResolventContext::new(op.clone(), norm).unwrap();
            let s = C64::new(0.0, omega);
            let v = ctx.value_svd(s).unwrap();
            for _ in 0..4 {
                let z = random_forcing(&op, &mut rng);
                prop_assert!(ctx.forcing_ratio(s, &z).unwrap() <= v * (1.0 + 1e-10));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn nonlinear_steps_stay_solenoidal_and_no_slip(seed in 0u64..1000, amp in 0.01f64..0.5) {
        let grid = Grid::new(8, 17, 8, 2.0 * std::f64::consts::PI, std::f64::consts::PI).unwrap();
        let cfg = SimConfig { dt: 0.02, t_end: 0.2, ..SimConfig::new(grid, 500.0) };
        let stepper = Stepper::new(&cfg).unwrap();
        let v0 = random_solenoidal(&grid, &RandomFieldSpec::seeded(seed)).unwrap().scaled(amp);
        let mut st = stepper.state_from_field(&v0, 0.0).unwrap();
        for _ in 0..5 {
            stepper.step(&mut st, None).unwrap();
            let v = stepper.field(&st);
            prop_assert!(v.max_divergence().unwrap() < 1e-10);
            prop_assert!(v.max_wall_value() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponential_decay_inputs_meet_the_sharp_constant(amplitude in 0.1f64..10.0, rate in 0.2f64..5.0) {
        let input = TestFunction::Exp { amplitude, rate }.sample(40.0 / rate, 4000).unwrap();
        let rows = couette::lab::decay_ratios(&input, &[0.0, 0.5 / rate, 2.0 / rate]).unwrap();
        for (_, _, _, ratio) in rows {
            prop_assert!(ratio <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn n_is_nondecreasing_for_nonnegative_integrands(
        w in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0), 3..40),
        dt in 0.01f64..1.0,
    ) {
        let n = if w.len() % 2 == 0 { w.len() - 1 } else { w.len() };
        let mut s = FunctionalSamples {
            t: (0..n).map(|k| k as f64 * dt).collect(),
            ..Default::default()
        };
        s.w_htilde1 = w[..n].iter().map(|x| x.0).collect();
        s.wt_htilde1 = w[..n].iter().map(|x| x.1).collect();
        // constant H̃₂ keeps N monotone whatever the integrand
        s.w_htilde2 = vec![w[0].2; n];
        for v in [&mut s.f_l2, &mut s.f_m, &mut s.ft_m] {
            *v = vec![0.0; n];
        }
        let b = evaluate_functionals(&s, 10.0).unwrap();
        prop_assert!(b.n_value >= 0.0 && b.m_value >= 0.0 && b.m0_value >= 0.0);
        prop_assert!(b.n_is_nondecreasing(1e-14));
    }

    #[test]
    fn report_passes_iff_worst_ratio_within_constant(
        ratios in prop::collection::vec(0.0f64..2.0, 1..30),
        constant in 0.0f64..2.0,
    ) {
        let ws: Vec<Witness> = ratios
            .iter()
            .enumerate()
            .map(|(i, &r)| Witness { trial: i, seed: Some(i as u64), label: String::new(), lhs: r, rhs: 1.0, ratio: r })
            .collect();
        let rep = CheckReport::from_witnesses("p", None, constant, ws);
        let worst = ratios.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(rep.worst_ratio, worst);
        prop_assert_eq!(rep.pass, worst <= constant);
        prop_assert!(!rep.witnesses.is_empty());
    }

    #[test]
    fn bisection_brackets_a_monotone_cut(cut in 0.01f64..50.0, lo in 0.01f64..5.0, width in 1.5f64..20.0, tol in 0.001f64..0.1) {
        let classify = |a: f64| {
            Ok(Probe::bare(a, if a < cut { Classification::Decayed } else { Classification::Transitioned }))
        };
        let (b, probes) = threshold_search_with(classify, (lo, lo * width), tol, 12, 3.0).unwrap();
        prop_assert!(b.lo < cut && cut <= b.hi);
        prop_assert!(b.width() <= tol * b.mid());
        for p in &probes {
            prop_assert_eq!(p.classification == Classification::Decayed, p.alpha < cut);
        }
    }

    #[test]
    fn plot_data_round_trips(points in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 0..20)) {
        let text = couette::io::plot_data("x", "y", &points);
        let back: Vec<(f64, f64)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let mut it = l.split_whitespace().map(|v| v.parse::<f64>().unwrap());
                (it.next().unwrap(), it.next().unwrap())
            })
            .collect();
        prop_assert_eq!(back, points);
    }
}
