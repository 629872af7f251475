mod common;

use front_lab::evolve::*;
use front_lab::field::{Field, TransverseGrid, UniformGrid};
use front_lab::linalg::DiffOrder;
use front_lab::model::ReactionSystem;
use front_lab::projection::PerturbationState;

fn sim_config(front_len: usize, half_length: f64, t_end: f64) -> SimConfig {
    SimConfig {
        d: 2,
        nz: front_len,
        half_length,
        ny: vec![32],
        ly: vec![32.0],
        dt: 0.05,
        t_end,
        output_stride: 10,
        k: None,
        delta: 1.0,
        order: DiffOrder::Fourth,
        snapshot_every: None,
    }
}

/// `exp(-(z^2 + y^2) / (4 (1 + t))) / (1 + t)`, the heat kernel started at time 1.
fn kernel(t: f64, z: f64, y: f64) -> f64 {
    (-(z * z + y * y) / (4.0 * (1.0 + t))).exp() / (1.0 + t)
}

fn run_linear(a: f64, c: f64, t: f64) -> (Field, Field) {
    let sys = ReactionSystem::linear(vec![vec![a]]).unwrap();
    let zg = UniformGrid::centered(25.0, 501);
    let yg = TransverseGrid::line(64, 50.0);
    let dt = 0.01;
    let mut stepper = ImexStepper::new(&sys, None, c, zg, &yg, dt, DiffOrder::Fourth).unwrap();
    let mut u = Field::from_fn(1, zg, yg.clone(), |_, z, y| kernel(0.0, z, y[0]));
    for _ in 0..(t / dt).round() as usize {
        stepper.step(&mut u).unwrap();
    }
    let exact = Field::from_fn(1, zg, yg, |_, z, y| (a * t).exp() * kernel(t, z + c * t, y[0]));
    (u, exact)
}

#[test]
fn heat_equation_oracle() {
    let (u, exact) = run_linear(0.0, 0.0, 2.0);
    let err = u.max_abs_diff(&exact);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn drift_transports_to_the_left() {
    let (u, exact) = run_linear(0.0, 0.5, 2.0);
    let err = u.max_abs_diff(&exact);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn linear_decay_oracle() {
    let (u, exact) = run_linear(-1.0, 0.0, 2.0);
    let err = u.max_abs_diff(&exact);
    assert!(err < 1e-4 * (-2.0f64).exp() * 10.0, "{err}");
}

#[test]
fn front_is_stationary() {
    let s = common::bistable();
    let zg = s.front.grid;
    let yg = TransverseGrid::line(8, 8.0);
    let mut stepper = ImexStepper::new(&s.sys, Some(&s.front), s.front.c, zg, &yg, 0.05, DiffOrder::Fourth).unwrap();
    let mut u = Field::zeros(2, zg, yg);
    for _ in 0..100 {
        stepper.step(&mut u).unwrap();
    }
    assert!(u.max_abs() < 1e-6, "{}", u.max_abs());
}

#[test]
fn zero_perturbation_stays_zero() {
    let s = common::combustion();
    let cfg = sim_config(s.front.n_nodes(), s.front.grid.half_length(), 5.0);
    let yg = cfg.ygrid().unwrap();
    let init = PerturbationState::zero(s.front.dim(), s.front.grid, yg);
    let out = simulate_perturbed_front(&s.sys, &s.front, &s.alpha, InitialPerturbation::State(init), &cfg, &s.e).unwrap();
    for rec in &out.series.records {
        assert!(rec.v_hk < 1e-8 && rec.q_hk < 1e-8 && rec.w_hk < 1e-8, "{rec:?}");
    }
    assert!(out.series.t_exit.is_none());
}

#[test]
fn constant_shift_is_preserved() {
    let s = common::combustion();
    let cfg = sim_config(s.front.n_nodes(), s.front.grid.half_length(), 5.0);
    let yg = cfg.ygrid().unwrap();
    let mut init = PerturbationState::zero(s.front.dim(), s.front.grid, yg);
    init.q = vec![0.05; 32];
    let out = simulate_perturbed_front(&s.sys, &s.front, &s.alpha, InitialPerturbation::State(init), &cfg, &s.e).unwrap();
    for (t, q) in &out.shifts {
        assert!(q.iter().all(|x| (x - 0.05).abs() < 1e-3), "t = {t}");
    }
    assert!(out.max_pi_v < 1e-6);
}

#[test]
fn mismatched_grid_is_rejected() {
    let s = common::combustion();
    let cfg = sim_config(s.front.n_nodes() + 2, s.front.grid.half_length(), 1.0);
    let yg = cfg.ygrid().unwrap();
    let init = PerturbationState::zero(s.front.dim(), s.front.grid, yg);
    assert!(simulate_perturbed_front(&s.sys, &s.front, &s.alpha, InitialPerturbation::State(init), &cfg, &s.e).is_err());
}

#[test]
fn heat_propagation_matches_kernel() {
    let yg = TransverseGrid::line(128, 60.0);
    let q = yg.sample(|y| (-y[0] * y[0] / 4.0).exp());
    let out = heat_propagate(&q, &yg, 3.0);
    let exact = yg.sample(|y| (-y[0] * y[0] / 16.0).exp() / 2.0);
    assert!(common::max_diff(&out, &exact) < 1e-10);
}
