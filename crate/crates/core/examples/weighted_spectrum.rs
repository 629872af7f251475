//! Essential spectrum of the combustion front with and without an exponential
//! weight, the weight search, and the translational eigenvalue.
//!
//! cargo run --release --example weighted_spectrum

use front_lab::front::{solve_model_front, FrontSolver};
use front_lab::model::ReactionSystem;
use front_lab::norms::WeightSpec;
use front_lab::spectrum::{
    discrete_spectrum_1d, essential_abscissa, find_weight, weight_admissibility, EigenSettings, WeightSearch,
};

fn main() -> front_lab::error::Result<()> {
    let sys = ReactionSystem::combustion(0.0, 0.5)?;
    let solver = FrontSolver {
        half_length: Some(40.0),
        spacing: 0.2,
        ..Default::default()
    };
    let front = solve_model_front(&sys, &solver)?;
    let c = front.c;
    let nu = 0.1 * c * c;
    println!("c = {c:.5}, nu = {nu:.5}");

    let bare = essential_abscissa(&front, &sys, &WeightSpec::unweighted())?;
    println!("unweighted essential abscissa: {:.3e} (minus {:.4}, plus {:.4})", bare.value, bare.minus, bare.plus);

    println!("\nalpha_+   abscissa   alpha^2 - c alpha");
    for a in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let abs = essential_abscissa(&front, &sys, &WeightSpec::new(a, a))?;
        println!("{a:>7}   {:>8.4}   {:>8.4}", abs.plus, a * a - c * a);
    }

    let found = find_weight(&front, &sys, nu, &WeightSearch::default())?;
    let alpha = found.alpha().expect("an admissible weight");
    println!("\nselected weight: alpha_- = {:.4}, alpha_+ = {:.4}", alpha.alpha_minus, alpha.alpha_plus);
    let adm = weight_admissibility(&front, &sys, &alpha, nu, Some(&EigenSettings::default()))?;
    println!("admissible: {}", adm.admissible());

    let spec = discrete_spectrum_1d(&front, &sys, &alpha, &EigenSettings::default())?;
    let mut eig = spec.eigenvalues.clone();
    eig.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
    println!("\nrightmost eigenvalues of the weighted linearization:");
    for z in eig.iter().take(6) {
        println!("  {:>12.4e} {:+.4e}i", z.re, z.im);
    }
    Ok(())
}
