mod common;

use front_lab::field::{Field, TransverseGrid};
use front_lab::front::{centered_grid, FrontProfile};
use front_lab::linalg::DiffOrder;
use front_lab::model::ReactionSystem;
use front_lab::norms::{WeightFunction, WeightSpec};
use front_lab::projection::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::max_diff;

/// `e^{cz} phi' / int e^{cz} phi'^2` for the exact bistable front.
fn closed_form_adjoint(front: &FrontProfile) -> Vec<f64> {
    let c = front.c;
    let s2 = std::f64::consts::SQRT_2;
    let z = front.grid.nodes();
    let dphi: Vec<f64> = z
        .iter()
        .map(|&z| {
            let e = (-z / s2).exp();
            e / (s2 * (1.0 + e) * (1.0 + e))
        })
        .collect();
    let raw: Vec<f64> = z.iter().zip(&dphi).map(|(z, d)| (c * z).exp() * d).collect();
    let h = front.grid.spacing;
    let norm: f64 = h * raw.iter().zip(&dphi).map(|(a, b)| a * b).sum::<f64>();
    raw.iter().map(|x| x / norm).collect()
}

fn adjoint_error(h: f64, order: DiffOrder) -> f64 {
    let sys = ReactionSystem::bistable(0.7).unwrap();
    let mut front = FrontProfile::bistable_exact(0.7, centered_grid(40.0, h)).unwrap();
    front.compute_tail_rates(&sys).unwrap();
    let loose = SimplicityTest {
        zero_tol: 1e-3,
        ..Default::default()
    };
    let e = compute_adjoint_with(&front, &sys, &WeightSpec::unweighted(), order, loose).unwrap();
    assert!(e.normalization_residual < 1e-8);
    max_diff(&e.values, &closed_form_adjoint(&front))
}

#[test]
fn adjoint_matches_symmetrized_kernel() {
    let err = adjoint_error(0.1, DiffOrder::Fourth);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn adjoint_converges_at_second_order() {
    let coarse = adjoint_error(0.2, DiffOrder::Second);
    let fine = adjoint_error(0.1, DiffOrder::Second);
    let ratio = coarse / fine;
    assert!((3.0..=5.0).contains(&ratio), "{coarse} {fine} {ratio}");
}

#[test]
fn weighted_adjoint_decays_at_both_ends() {
    let s = common::combustion();
    let w = WeightFunction::new(s.alpha);
    let plain = s.e.unweighted(&w);
    let n = s.e.n;
    let len = s.e.grid.len;
    let comp = s.front.phase_component();
    let mag = |i: usize| plain[i * n + comp].abs();
    let peak = (0..len).map(mag).fold(0.0, f64::max);
    assert!(mag(len / 10) < 1e-3 * peak);
    assert!(mag(len - 1 - len / 10) < 1e-3 * peak);
}

fn random_field(rng: &mut ChaCha8Rng, front: &FrontProfile, yg: &TransverseGrid) -> Field {
    let (a, z0, y0): (f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-5.0..5.0), rng.gen_range(-3.0..3.0));
    Field::from_fn(front.dim(), front.grid, yg.clone(), |c, z, y| {
        a * (1.0 + c as f64) * (-(z - z0).powi(2) / 4.0 - (y[0] - y0).powi(2) / 8.0).exp()
    })
}

#[test]
fn projector_algebra() {
    let s = common::combustion();
    let p = Projector::new(&s.front, &s.e).unwrap();
    let yg = TransverseGrid::line(16, 16.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let u = random_field(&mut rng, &s.front, &yg);
        let (pu, qu) = p.project(&u).unwrap();
        assert!(p.project(&pu).unwrap().0.max_abs_diff(&pu) < 1e-9);
        assert!(p.pi(&qu).unwrap().iter().all(|x| x.abs() < 1e-7));
        assert!(p.project(&qu).unwrap().0.max_abs() < 1e-7);
    }
    let h = yg.sample(|y| (y[0] / 3.0).cos());
    let lifted = p.lift(&h, &yg);
    assert!(max_diff(&p.pi(&lifted).unwrap(), &h) < 1e-8);
    assert!(p.project(&lifted).unwrap().0.max_abs_diff(&lifted) < 1e-9);
    let zero = Field::zeros(s.front.dim(), s.front.grid, yg.clone());
    assert!(p.pi(&zero).unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn projector_norm_is_stable_under_refinement() {
    let sys = ReactionSystem::bistable(0.7).unwrap();
    let yg = TransverseGrid::line(4, 4.0);
    let estimate = |h: f64| {
        let mut front = FrontProfile::bistable_exact(0.7, centered_grid(25.0, h)).unwrap();
        front.compute_tail_rates(&sys).unwrap();
        let e = compute_adjoint(&front, &sys, &WeightSpec::new(0.2, 0.2), DiffOrder::Fourth).unwrap();
        let p = Projector::new(&front, &e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        (0..20)
            .map(|_| {
                let u = random_field(&mut rng, &front, &yg);
                let pu = p.project(&u).unwrap().0;
                let l2 = |f: &Field| f.data.iter().map(|x| x * x).sum::<f64>().sqrt();
                l2(&pu) / l2(&u)
            })
            .fold(0.0, f64::max)
    };
    let (a, b) = (estimate(0.2), estimate(0.1));
    assert!(a.is_finite() && (a - b).abs() < 0.05 * a.max(b), "{a} {b}");
}

#[test]
fn constant_translation_is_recovered() {
    let s = common::combustion();
    let d = Decomposer::new(&s.front, &s.e).unwrap();
    let yg = TransverseGrid::line(8, 8.0);
    let mut state = PerturbationState::zero(s.front.dim(), s.front.grid, yg);
    state.q = vec![0.1; 8];
    let u = d.recompose(&state).unwrap();
    let back = d.decompose(&u).unwrap();
    assert!(back.q.iter().all(|q| (q - 0.1).abs() < 1e-8));
    assert!(back.v.max_abs() < 1e-8);
}

#[test]
fn translation_matches_closed_form_profile() {
    let sys = ReactionSystem::bistable(0.7).unwrap();
    let mut front = FrontProfile::bistable_exact(0.7, centered_grid(25.0, 0.05)).unwrap();
    front.compute_tail_rates(&sys).unwrap();
    let e = compute_adjoint(&front, &sys, &WeightSpec::new(0.2, 0.2), DiffOrder::Fourth).unwrap();
    let d = Decomposer::new(&front, &e).unwrap();
    let (pq, _, _) = d.shifted_profile(0.1);
    let exact = FrontProfile::bistable_exact(0.7, front.grid).unwrap().translated(0.1).unwrap();
    let f = |z: f64| 1.0 / (1.0 + (-(z - 0.1) / std::f64::consts::SQRT_2).exp());
    let direct: Vec<f64> = front.grid.nodes().iter().map(|&z| f(z)).collect();
    assert!(max_diff(&pq, &direct) < 1e-6);
    assert!(max_diff(exact.values(), &direct) < 1e-6);
}

#[test]
fn random_roundtrips() {
    let s = common::combustion();
    let d = Decomposer::new(&s.front, &s.e).unwrap();
    let p = d.projector();
    let yg = TransverseGrid::line(16, 16.0);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let raw = random_field(&mut rng, &s.front, &yg).scaled(0.02);
        let v = p.apply_q(&raw).unwrap();
        let q0: f64 = rng.gen_range(-0.1..0.1);
        let q = yg.sample(|y| q0 * (-y[0] * y[0] / 8.0).exp());
        let u = d.recompose(&PerturbationState::new(v, q).unwrap()).unwrap();
        let back = d.decompose(&u).unwrap();
        assert!(d.recompose(&back).unwrap().max_abs_diff(&u) < 1e-8);
        assert!(p.pi(&back.v).unwrap().iter().all(|x| x.abs() < 1e-7));
    }
}
