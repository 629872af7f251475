//! Splits a perturbed front into a transverse shift and a remainder in the
//! range of Q, and puts it back together.
//!
//! cargo run --release --example modulation_decomposition

use front_lab::field::{Field, TransverseGrid};
use front_lab::front::{solve_model_front, FrontSolver};
use front_lab::linalg::DiffOrder;
use front_lab::model::ReactionSystem;
use front_lab::projection::{compute_adjoint, Decomposer, PerturbationState};
use front_lab::spectrum::{find_weight, WeightSearch};

fn main() -> front_lab::error::Result<()> {
    let sys = ReactionSystem::combustion(0.0, 0.5)?;
    let solver = FrontSolver {
        half_length: Some(40.0),
        spacing: 0.2,
        ..Default::default()
    };
    let front = solve_model_front(&sys, &solver)?;
    let nu = 0.1 * front.c * front.c;
    let alpha = find_weight(&front, &sys, nu, &WeightSearch::default())?
        .alpha()
        .expect("an admissible weight");
    let e = compute_adjoint(&front, &sys, &alpha, DiffOrder::Fourth)?;
    println!("normalization residual of the adjoint: {:.2e}", e.normalization_residual);

    let d = Decomposer::new(&front, &e)?;
    let yg = TransverseGrid::line(32, 32.0);

    // A front bent by q(y) plus a localized bump.
    let q = yg.sample(|y| 0.3 * (-y[0] * y[0] / 18.0).exp());
    let raw = Field::from_fn(front.dim(), front.grid, yg.clone(), |c, z, y| {
        0.02 * (1.0 + c as f64) * (-(z - 1.0).powi(2) - y[0] * y[0] / 8.0).exp()
    });
    let v = d.projector().apply_q(&raw)?;
    let u = d.recompose(&PerturbationState::new(v, q.clone())?)?;

    let back = d.decompose(&u)?;
    let q_err = back.q.iter().zip(&q).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let u_err = d.recompose(&back)?.max_abs_diff(&u);
    let pi_v = d.projector().pi(&back.v)?.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    println!("max |q - q_recovered|  = {q_err:.2e}");
    println!("max |u - recompose(u)| = {u_err:.2e}");
    println!("max |pi(v)|            = {pi_v:.2e}");
    println!("\n   y        q(y)      w(y)");
    for i in (0..32).step_by(4) {
        println!("{:>6.2} {:>10.5} {:>10.5}", yg.points()[i][0], back.q[i], back.w[0][i]);
    }
    Ok(())
}
