use std::f64::consts::PI;

use super::*;
use crate::field::{random_solenoidal, RandomFieldSpec};
use crate::linalg::{col_to_vec, eigen};
use crate::operator::build_operator;
use crate::spectral::{chebyshev_nodes, Grid};
use crate::C64;

fn small_grid() -> Grid {
    Grid::new(8, 17, 8, 4.0 * PI, 2.0 * PI).unwrap()
}

fn cfg(grid: Grid, r: f64, dt: f64, t_end: f64) -> SimConfig {
    SimConfig {
        dt,
        t_end,
        cadence: 1,
        ..SimConfig::new(grid, r)
    }
}

#[test]
fn zero_stays_zero() {
    let g = small_grid();
    let rec = simulate(&VelocityField::zeros(&g), &cfg(g, 300.0, 0.1, 1.0)).unwrap();
    assert_eq!(rec.status, RunStatus::Completed);
    assert_eq!(rec.steps, 10);
    assert!(rec.samples.iter().all(|s| s.l2 == 0.0 && s.sup == 0.0));
}

#[test]
fn mean_mode_heat_decay() {
    let g = Grid::new(4, 17, 4, 2.0 * PI, PI).unwrap();
    let r = 100.0;
    let nodes = chebyshev_nodes(g.n2).unwrap();
    let eps = 1e-8;
    let prof: Vec<C64> = nodes
        .iter()
        .map(|y| C64::new(eps * (PI * y / 2.0).cos(), 0.0))
        .collect();
    let mut v = VelocityField::zeros(&g);
    v.set_profile(2, 0, 0, &prof);
    let c = SimConfig {
        cadence: 10,
        ..cfg(g, r, 0.05, r / 10.0)
    };
    let rec = simulate(&v, &c).unwrap();
    let l0 = rec.first().l2;
    for s in &rec.samples {
        let exact = l0 * (-PI * PI * s.t / (4.0 * r)).exp();
        assert!((s.l2 - exact).abs() < 1e-4 * exact, "t = {}: {} vs {exact}", s.t, s.l2);
    }
    assert!((rec.last().t - 10.0).abs() < 1e-9);
}

#[test]
fn linear_run_follows_eigenvector() {
    let g = Grid::new(8, 33, 8, 4.0 * PI, 2.0 * PI).unwrap();
    let r = 500.0;
    let c = SimConfig {
        nonlinear: false,
        ..cfg(g, r, 0.1, 1.0)
    };
    let stepper = Stepper::new(&c).unwrap();
    let idx = stepper.slots.iter().position(|s| s.m == 1 && s.n == 1).unwrap();
    let slot = stepper.slots[idx];
    let op = build_operator(slot.k1, slot.k3, r, g.n2).unwrap();
    let (vals, vecs) = eigen(&op.generator().unwrap()).unwrap();
    let j = (0..vals.len())
        .max_by(|&a, &b| vals[a].re.total_cmp(&vals[b].re))
        .unwrap();
    let x: Vec<C64> = col_to_vec(&vecs, j).iter().map(|z| z * 1e-3).collect();
    let mut st = stepper.zero_state(0.0);
    st.coeffs[idx] = x.clone();
    let v0 = stepper.field(&st);
    let rec = run(&stepper, st, 1.0, None).unwrap();
    let growth = vals[j].exp();
    let got = &rec.final_state.coeffs[idx];
    let err: f64 = got
        .iter()
        .zip(&x)
        .map(|(a, b)| (a - growth * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let size: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * growth.norm();
    assert!(err < 1e-6 * size, "{}", err / size);
    let l2_0 = crate::norms::l2_norm(&v0).unwrap();
    assert!((rec.last().l2 - l2_0 * growth.norm()).abs() < 1e-6 * l2_0);
}

/// Fourth-order central difference of `½ l2²` against production minus
/// dissipation.
#[test]
fn energy_budget() {
    let g = small_grid();
    let spec = RandomFieldSpec {
        max_degree: Some(8),
        ..RandomFieldSpec::seeded(3)
    };
    let v = random_solenoidal(&g, &spec).unwrap().scaled(0.05);
    let rec = simulate(&v, &cfg(g, 200.0, 2e-3, 0.02)).unwrap();
    let e: Vec<f64> = rec.samples.iter().map(|s| 0.5 * s.l2 * s.l2).collect();
    let h = rec.config.dt;
    for i in 2..e.len() - 2 {
        let de = (e[i - 2] - 8.0 * e[i - 1] + 8.0 * e[i + 1] - e[i + 2]) / (12.0 * h);
        let s = &rec.samples[i];
        let rhs = s.production - s.dissipation;
        assert!(
            (de - rhs).abs() < 1e-6 * s.dissipation.abs().max(s.production.abs()),
            "{de} vs {rhs}"
        );
    }
}

#[test]
fn constraints_hold_along_nonlinear_run() {
    let g = small_grid();
    let v = random_solenoidal(&g, &RandomFieldSpec::seeded(5)).unwrap();
    let v = v.scaled(0.3 / crate::norms::sup_norm(&v).unwrap());
    let rec = simulate(
        &v,
        &SimConfig {
            cadence: 5,
            ..cfg(g, 400.0, 0.02, 1.0)
        },
    )
    .unwrap();
    assert_eq!(rec.status, RunStatus::Completed);
    assert!(rec.max_div_residual() < 1e-10, "{}", rec.max_div_residual());
    assert!(rec.max_wall_residual() < 1e-10);
    for s in &rec.samples {
        assert!(s.l2 >= 0.0 && s.m_norm >= 0.0 && s.htilde1 >= 0.0 && s.htilde2 >= 0.0 && s.sup >= 0.0);
    }
    let csv = rec.csv();
    assert!(csv.starts_with(TRAJECTORY_CSV_HEADER));
    assert_eq!(csv.lines().count(), rec.samples.len() + 1);
}

#[test]
fn tiny_perturbations_decay() {
    let g = small_grid();
    for fam in [
        Family::StreamwiseVortex,
        Family::ObliquePair,
        Family::RandomNoise { seed: 2 },
    ] {
        let v = perturbation_family(fam, &g).unwrap().scaled(1e-8);
        let rec = simulate(
            &v,
            &SimConfig {
                cadence: 20,
                ..cfg(g, 50.0, 0.25, 150.0)
            },
        )
        .unwrap();
        assert!(rec.last().l2 < rec.first().l2, "{fam}");
    }
}

#[test]
fn lift_up_transient() {
    let g = small_grid();
    let v = perturbation_family(Family::StreamwiseVortex, &g).unwrap().scaled(1e-6);
    let rec = simulate(
        &v,
        &SimConfig {
            cadence: 10,
            ..cfg(g, 1000.0, 0.25, 60.0)
        },
    )
    .unwrap();
    let peak = rec.samples.iter().map(|s| s.l2).fold(0.0, f64::max);
    assert!(peak > rec.first().l2);
}

#[test]
fn cfl_violation_is_rejected_with_suggestion() {
    let g = small_grid();
    let v = random_solenoidal(&g, &RandomFieldSpec::seeded(1)).unwrap();
    let v = v.scaled(50.0 / crate::norms::sup_norm(&v).unwrap());
    match simulate(&v, &cfg(g, 100.0, 0.5, 1.0)) {
        Err(crate::Error::Cfl { cfl, suggested_dt }) => {
            assert!(cfl > 1.0 && suggested_dt < 0.5);
        }
        other => panic!("{:?}", other.map(|r| r.status)),
    }
}

#[test]
fn non_solenoidal_input_is_rejected() {
    let g = small_grid();
    let mut v = VelocityField::zeros(&g);
    let nodes = chebyshev_nodes(g.n2).unwrap();
    let p: Vec<C64> = nodes.iter().map(|y| C64::new(1.0 - y * y, 0.0)).collect();
    v.set_profile(0, 1, 0, &p);
    v.set_profile(0, g.n1 - 1, 0, &p);
    assert!(simulate(&v, &cfg(g, 100.0, 0.1, 1.0)).is_err());
}

#[test]
fn tiny_probe_is_classified_decayed() {
    let g = small_grid();
    let sim = SimConfig {
        cadence: 10,
        growth_window: 10.0,
        ..cfg(g, 100.0, 0.1, 60.0)
    };
    let tc = ThresholdConfig::new(sim);
    let stepper = Stepper::new(&sim).unwrap();
    let shape = probe_shape(Family::RandomNoise { seed: 9 }, &tc).unwrap();
    let p = run_probe(&stepper, &shape, 1e-8, &tc).unwrap();
    assert_eq!(p.classification, Classification::Decayed, "{p:?}");
}
