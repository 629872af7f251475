mod common;

use front_lab::field::UniformGrid;
use front_lab::front::FrontProfile;
use front_lab::model::ReactionSystem;
use front_lab::norms::WeightSpec;
use front_lab::spectrum::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn theta() -> Vec<f64> {
    default_theta_grid(1.0, 1024)
}

#[test]
fn marginal_curve_touches_zero() {
    let curve = dispersion_curves(&DMatrix::zeros(2, 2), 1.0, 0.0, &theta());
    let (re, at) = curve.max_real();
    assert_eq!(re, 0.0);
    assert_eq!(at, 0.0);
}

#[test]
fn weight_shifts_the_curve() {
    let curve = dispersion_curves(&DMatrix::zeros(2, 2), 1.0, 0.4, &theta());
    assert!((curve.max_real().0 + 0.24).abs() < 1e-14);
    let a = DMatrix::from_row_slice(2, 2, &[-0.7, 0.0, 0.0, -0.3]);
    let curve = dispersion_curves(&a, 1.0, 0.0, &theta());
    assert!((curve.max_real().0 + 0.3).abs() < 1e-14);
}

#[test]
fn grid_maximum_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let a = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..0.5));
        let c: f64 = rng.gen_range(0.1..2.0);
        let alpha: f64 = rng.gen_range(0.0..1.0);
        let sampled = dispersion_curves(&a, c, alpha, &default_theta_grid(c, 1024)).max_real().0;
        assert!((sampled - side_abscissa(&a, c, alpha)).abs() < 1e-12);
    }
}

#[test]
fn combustion_is_marginal_without_weight() {
    let s = common::combustion();
    let bare = essential_abscissa(&s.front, &s.sys, &WeightSpec::unweighted()).unwrap();
    assert!(bare.value.abs() < 1e-12);
    assert!((bare.value - bare.sampled).abs() < 1e-12);
    let adm = weight_admissibility(&s.front, &s.sys, &WeightSpec::unweighted(), s.nu, None).unwrap();
    assert!(!adm.clause3.pass);
}

#[test]
fn weighted_abscissa_is_quadratic_in_alpha() {
    let s = common::combustion();
    let c = s.front.c;
    let a = WeightSpec::new(0.3, 0.3);
    let abs = essential_abscissa(&s.front, &s.sys, &a).unwrap();
    assert!((abs.plus - (0.09 - 0.3 * c)).abs() < 1e-12);
    assert!(abs.value < -s.nu);
    assert!((abs.value - abs.sampled).abs() < 1e-12);
}

#[test]
fn weight_search_targets_half_speed() {
    let s = common::combustion();
    let c = s.front.c;
    let res = find_weight(&s.front, &s.sys, s.nu, &WeightSearch::default()).unwrap();
    let alpha = res.alpha().unwrap();
    let step = -s.front.omega_minus.unwrap() / 64.0;
    assert!((alpha.alpha_minus - c / 2.0).abs() < step);
    assert!((alpha.alpha_plus - c / 2.0).abs() < s.front.omega_plus.unwrap() / 64.0);
    let none = find_weight(&s.front, &s.sys, c * c / 4.0 + 0.01, &WeightSearch::default()).unwrap();
    assert!(matches!(none, WeightSearchResult::NotFound { .. }));
    let first = find_weight(
        &s.front,
        &s.sys,
        s.nu,
        &WeightSearch {
            strategy: SearchStrategy::FirstAdmissible,
            resolution: 64,
        },
    )
    .unwrap();
    let a = first.alpha().unwrap();
    assert!(essential_abscissa(&s.front, &s.sys, &a).unwrap().value < -s.nu);
}

#[test]
fn bistable_needs_a_positive_left_exponent() {
    let s = common::bistable();
    let adm = weight_admissibility(&s.front, &s.sys, &WeightSpec::unweighted(), 0.1, None).unwrap();
    assert!(!adm.clause1.pass);
    assert!(adm.clause2.pass && adm.clause3.pass);
    let adm = weight_admissibility(&s.front, &s.sys, &WeightSpec::new(0.05, 0.0), 0.1, None).unwrap();
    assert!(adm.admissible());
}

#[test]
fn missing_tail_rates_are_a_precondition_error() {
    let sys = ReactionSystem::bistable(0.7).unwrap();
    let front = FrontProfile::bistable_exact(0.7, UniformGrid::centered(10.0, 101)).unwrap();
    let r = weight_admissibility(&front, &sys, &WeightSpec::new(0.1, 0.1), 0.01, None);
    assert!(matches!(r, Err(front_lab::LabError::Precondition(_))));
}

#[test]
fn translational_eigenvalue_is_simple() {
    let s = common::combustion();
    let spec = discrete_spectrum_1d(&s.front, &s.sys, &s.alpha, &EigenSettings::default()).unwrap();
    let i = spec.nearest_zero();
    assert!(spec.eigenvalues[i].norm() < 1e-5);
    let weight = front_lab::norms::WeightFunction::new(s.alpha);
    let n = s.front.dim();
    let dphi = s.front.derivative();
    let mode: Vec<f64> = (n..dphi.len() - n)
        .map(|k| weight.apply(s.front.grid.node(k / n), dphi[k]))
        .collect();
    assert!(cosine_similarity(&spec.eigenvectors[i], &mode) > 0.999);
    for (j, z) in spec.eigenvalues.iter().enumerate() {
        if j != i {
            assert!(z.re < -s.nu, "{z}");
        }
    }
    let adm = weight_admissibility(&s.front, &s.sys, &s.alpha, s.nu, Some(&EigenSettings::default())).unwrap();
    assert!(adm.admissible());
}

#[test]
fn constant_coefficient_spectrum_is_the_dirichlet_parabola() {
    // u'' - u on [-L, L] with Dirichlet ends: -1 - (k pi / 2L)^2
    let sys = ReactionSystem::linear(vec![vec![-1.0]]).unwrap();
    let l = 10.0;
    let grid = UniformGrid::centered(l, 401);
    let front = FrontProfile::from_fn(grid, 0.0, vec![0.0], vec![0.0], |_| vec![0.0]).unwrap();
    let spec = discrete_spectrum_1d(&front, &sys, &WeightSpec::unweighted(), &EigenSettings::default()).unwrap();
    let h = grid.spacing;
    for k in 1..=4 {
        let exact = -1.0 - (k as f64 * std::f64::consts::PI / (2.0 * l)).powi(2);
        let got = spec.eigenvalues[k - 1];
        assert!((got.re - exact).abs() < h * h && got.im.abs() < 1e-10, "{k}: {got} vs {exact}");
    }
}

#[test]
fn transverse_half_lines() {
    let set = multidim_essential_set(&[Complex64::new(0.0, 0.0), Complex64::new(-0.25, 0.0)]);
    assert_eq!(set[0].re_max, 0.0);
    assert!(set[0].contains(Complex64::new(-3.0, 0.0), 0.0));
    assert!(!set[0].contains(Complex64::new(0.1, 0.0), 0.0));
    assert!(set[1].contains(Complex64::new(-0.25, 0.0), 0.0));
    assert!(!set[1].contains(Complex64::new(-1.0, 0.5), 1e-9));
    for s in [-0.1, -1.0, -100.0] {
        assert!(set[1].contains(Complex64::new(-0.25 + s, 0.0), 0.0));
    }
}
