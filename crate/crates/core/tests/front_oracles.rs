mod common;

use front_lab::front::*;
use front_lab::linalg::DiffOrder;
use front_lab::model::ReactionSystem;
use nalgebra::DMatrix;

use common::max_diff;

#[test]
fn bistable_speed_and_profile() {
    let front = &common::bistable().front;
    assert!((front.c - 0.2 * std::f64::consts::SQRT_2).abs() < 1e-6);
    let exact = FrontProfile::bistable_exact(0.7, front.grid).unwrap();
    assert!(max_diff(front.values(), exact.values()) < 1e-6);
}

#[test]
fn shifted_guess_returns_the_same_front() {
    let s = common::bistable();
    let solver = FrontSolver {
        half_length: Some(30.0),
        spacing: 0.1,
        ..Default::default()
    };
    let guess = FrontProfile::bistable_exact(0.7, s.front.grid)
        .unwrap()
        .translated(3.0)
        .unwrap();
    let again = solver.solve(&s.sys, &guess).unwrap();
    let h = s.front.grid.spacing;
    let l2 = (h * s.front.values().iter().zip(again.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt();
    assert!(l2 < 1e-6, "{l2}");
}

#[test]
fn combustion_converges_at_second_order() {
    let sys = ReactionSystem::combustion(0.0, 1.0).unwrap();
    let speeds: Vec<f64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&h| {
            let solver = FrontSolver {
                half_length: Some(40.0),
                spacing: h,
                order: DiffOrder::Second,
                ..Default::default()
            };
            solve_model_front(&sys, &solver).unwrap().c
        })
        .collect();
    let ratio = (speeds[0] - speeds[1]) / (speeds[1] - speeds[2]);
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, speeds {speeds:?}");
}

#[test]
fn combustion_rest_states_are_equilibria() {
    let sys = ReactionSystem::combustion(0.0, 0.5).unwrap();
    let front = &common::combustion().front;
    for rest in [&front.phi_minus, &front.phi_plus] {
        let f = sys.eval_f(rest).unwrap();
        assert!(f.iter().all(|x| x.abs() < 1e-10));
    }
    assert!(front.omega_minus.unwrap() < 0.0 && front.omega_plus.unwrap() > 0.0);
    assert!(max_residual(&sys, front, DiffOrder::Fourth) < 1e-8);
}

#[test]
fn tails_decay_exponentially() {
    let front = &common::combustion().front;
    for side in [Side::Minus, Side::Plus] {
        let fit = front.tail_fit(side).unwrap();
        assert!(fit.r_squared > 0.99, "{side:?} {fit:?}");
    }
}

#[test]
fn companion_roots_match_quadratic_formula() {
    let a = DMatrix::from_row_slice(2, 2, &[-0.7, 0.0, 0.0, -0.3]);
    let c = 0.9;
    let r = companion_roots(&a, &[1.0, 1.0], c);
    let mut got: Vec<f64> = r.roots.iter().map(|z| z.re).collect();
    got.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut want = Vec::new();
    for k in [0.7, 0.3] {
        let disc: f64 = c * c + 4.0 * k;
        want.push((-c + disc.sqrt()) / 2.0);
        want.push((-c - disc.sqrt()) / 2.0);
    }
    want.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert!(max_diff(&got, &want) < 1e-10);
    let flat = companion_roots(&DMatrix::zeros(1, 1), &[1.0], 1.0);
    assert!(flat.marginal);
    let mut re: Vec<f64> = flat.roots.iter().map(|z| z.re).collect();
    re.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert!(max_diff(&re, &[-1.0, 0.0]) < 1e-12);
}

#[test]
fn derivative_is_a_discrete_nullvector() {
    let s = common::combustion();
    let a = linearization(&s.sys, &s.front, None, DiffOrder::Fourth);
    let dphi = s.front.derivative();
    let n = s.front.dim();
    let inner = &dphi[n..dphi.len() - n];
    let l = a.matvec(inner);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let h = s.front.grid.spacing;
    assert!(norm(&l) / norm(inner) < 10.0 * h * h, "{}", norm(&l) / norm(inner));
}
