//! Solves the bistable and combustion fronts and prints speeds, rest states
//! and fitted tail rates.
//!
//! cargo run --release --example front_profiles

use front_lab::front::{max_residual, solve_model_front, FrontSolver, Side};
use front_lab::linalg::DiffOrder;
use front_lab::model::ReactionSystem;

fn main() -> front_lab::error::Result<()> {
    let bistable = ReactionSystem::bistable(0.7)?;
    let solver = FrontSolver {
        half_length: Some(30.0),
        spacing: 0.1,
        ..Default::default()
    };
    let front = solve_model_front(&bistable, &solver)?;
    println!("bistable a = 0.7");
    println!("  c        = {:.10}", front.c);
    println!("  exact    = {:.10}", std::f64::consts::SQRT_2 * 0.2);
    println!("  residual = {:.2e}", max_residual(&bistable, &front, DiffOrder::Fourth));

    println!("\ncombustion fronts");
    println!("  {:>6} {:>10} {:>10} {:>10}", "kappa", "c", "tail-", "tail+");
    for kappa in [0.2, 0.5, 1.0] {
        let sys = ReactionSystem::combustion(0.0, kappa)?;
        let solver = FrontSolver {
            half_length: Some(40.0),
            spacing: 0.2,
            ..Default::default()
        };
        let front = solve_model_front(&sys, &solver)?;
        let slope = |side| front.tail_fit(side).map_or(f64::NAN, |f| f.slope);
        println!(
            "  {kappa:>6} {:>10.5} {:>10.4} {:>10.4}",
            front.c,
            slope(Side::Minus),
            slope(Side::Plus)
        );
    }
    Ok(())
}
