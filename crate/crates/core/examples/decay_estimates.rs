//! The linear and nonlinear estimates behind the decay result: heat-flow
//! rates, the integral inequalities and quadratic scaling of the
//! nonlinearities.
//!
//! cargo run --release --example decay_estimates

use front_lab::analysis::fit::FitWindow;
use front_lab::analysis::integrals::{default_controls, default_triples, verify_integral_inequalities};
use front_lab::analysis::nonlinear::{random_direction, verify_nonlinear_bounds, NonlinearEvaluator};
use front_lab::analysis::semigroup::{heat_decay, stable_block_rate};
use front_lab::analysis::AnalysisConfig;
use front_lab::field::TransverseGrid;
use front_lab::front::{solve_model_front, FrontSolver};
use front_lab::linalg::DiffOrder;
use front_lab::model::ReactionSystem;
use front_lab::projection::compute_adjoint;
use front_lab::spectrum::{find_weight, WeightSearch};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> front_lab::error::Result<()> {
    let cfg = AnalysisConfig::default();
    for dims in [1, 2] {
        let h = heat_decay(dims, 2, 1.0, FitWindow::new(5.0, 200.0), &cfg)?;
        println!(
            "heat flow, {dims} transverse dims: L2 exponent {:.4} (expect {:.2}), gradient {:.4} (expect {:.2})",
            h.exponent, h.expected, h.gradient_exponent, h.gradient_expected
        );
    }

    let report = verify_integral_inequalities(&default_triples(), &default_controls(), 1e3, 31, 0.1)?;
    for clause in 1..=3 {
        println!(
            "integral clause {clause}: {} triples, bounded = {}",
            report.count(clause),
            report.clause_bounded(clause)
        );
    }
    println!("negative controls diverge: {}", report.controls_diverge());

    let sys = ReactionSystem::combustion(0.0, 0.5)?;
    let front = solve_model_front(
        &sys,
        &FrontSolver {
            half_length: Some(40.0),
            spacing: 0.2,
            ..Default::default()
        },
    )?;
    println!("\nstable block rate: {:.4}", stable_block_rate(&sys, &front)?);
    let alpha = find_weight(&front, &sys, 0.1 * front.c * front.c, &WeightSearch::default())?
        .alpha()
        .expect("an admissible weight");
    let e = compute_adjoint(&front, &sys, &alpha, DiffOrder::Fourth)?;
    let ev = NonlinearEvaluator::new(&sys, &front, &e)?;
    let yg = TransverseGrid::line(32, 16.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = (0..20)
        .map(|_| random_direction(&mut rng, &ev, &yg, 0.05))
        .collect::<front_lab::error::Result<Vec<_>>>()?;
    let r = verify_nonlinear_bounds(&samples, &ev, &alpha, 2, &[1.0, 0.5, 0.25])?;
    println!("homogeneity degrees over {} directions:", r.samples);
    for d in &r.degrees {
        println!("  {:<24} [{:.3}, {:.3}]", d.name, d.min, d.max);
    }
    println!("identity residual: {:.2e}", r.identity_residual);
    Ok(())
}
