//! Evolves a perturbed combustion front in d = 2 and prints the norms of the
//! modulation decomposition along the way.
//!
//! cargo run --release --example perturbed_front

use front_lab::config::RunConfig;
use front_lab::evolve::{simulate_perturbed_front, InitialPerturbation};
use front_lab::front::solve_model_front;
use front_lab::projection::{compute_adjoint, Decomposer};
use front_lab::pipeline::initial_state;
use front_lab::spectrum::{find_weight, WeightSearch};

fn main() -> front_lab::error::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/smoke.json");
    let cfg = RunConfig::load(std::path::Path::new(path))?;
    let front = solve_model_front(&cfg.model, &cfg.front_solver())?;
    let nu = cfg.nu_for(front.c);
    let alpha = find_weight(&front, &cfg.model, nu, &WeightSearch::default())?
        .alpha()
        .expect("an admissible weight");
    let e = compute_adjoint(&front, &cfg.model, &alpha, cfg.simulation.order)?;
    let init = initial_state(&cfg, &Decomposer::new(&front, &e)?)?;

    let out = simulate_perturbed_front(&cfg.model, &front, &alpha, InitialPerturbation::State(init), &cfg.simulation, &e)?;
    let s = &out.series;
    println!("E_k = {:.4e}, k = {}, T_exit = {:?}", s.e_k, s.k, s.t_exit);
    println!("{:>6} {:>11} {:>11} {:>11} {:>11} {:>11}", "t", "|v|_Hk", "|v|_Hk,a", "|v1|_Hk", "|q|_Hk", "|w|_Hk");
    for r in s.records.iter().step_by(6) {
        println!(
            "{:>6.1} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e}",
            r.t, r.v_hk, r.v_hka, r.v1_hk, r.q_hk, r.w_hk
        );
    }
    println!("max |pi(v)| = {:.2e}", out.max_pi_v);
    Ok(())
}
