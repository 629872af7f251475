#![allow(dead_code)]

use std::sync::OnceLock;

use front_lab::front::{solve_model_front, FrontProfile, FrontSolver};
use front_lab::linalg::DiffOrder;
use front_lab::model::ReactionSystem;
use front_lab::norms::WeightSpec;
use front_lab::projection::{compute_adjoint, AdjointNullvector};
use front_lab::spectrum::{find_weight, WeightSearch};

pub struct Setup {
    pub sys: ReactionSystem,
    pub front: FrontProfile,
    pub alpha: WeightSpec,
    pub nu: f64,
    pub e: AdjointNullvector,
}

/// Combustion front with kappa = 0.5 on [-40, 40], h = 0.2, and its weight.
pub fn combustion() -> &'static Setup {
    static CELL: OnceLock<Setup> = OnceLock::new();
    CELL.get_or_init(|| {
        let sys = ReactionSystem::combustion(0.0, 0.5).unwrap();
        let solver = FrontSolver {
            half_length: Some(40.0),
            spacing: 0.2,
            ..Default::default()
        };
        let front = solve_model_front(&sys, &solver).unwrap();
        let nu = 0.1 * front.c * front.c;
        let alpha = find_weight(&front, &sys, nu, &WeightSearch::default())
            .unwrap()
            .alpha()
            .unwrap();
        let e = compute_adjoint(&front, &sys, &alpha, DiffOrder::Fourth).unwrap();
        Setup { sys, front, alpha, nu, e }
    })
}

/// Solved bistable front, a = 0.7, with the symmetric weight (0.2, 0.2).
pub fn bistable() -> &'static Setup {
    static CELL: OnceLock<Setup> = OnceLock::new();
    CELL.get_or_init(|| {
        let sys = ReactionSystem::bistable(0.7).unwrap();
        let solver = FrontSolver {
            half_length: Some(30.0),
            spacing: 0.1,
            ..Default::default()
        };
        let front = solve_model_front(&sys, &solver).unwrap();
        let alpha = WeightSpec::new(0.2, 0.2);
        let e = compute_adjoint(&front, &sys, &alpha, DiffOrder::Fourth).unwrap();
        Setup {
            sys,
            nu: 0.1 * front.c * front.c,
            front,
            alpha,
            e,
        }
    })
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
