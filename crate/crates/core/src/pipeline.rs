//! Stage orchestration: front, spectrum, weight, simulate, verify.
//!
//! Every stage reads its inputs from the output directory and writes its
//! artifacts there, so stages can be rerun one at a time.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::fit::{bound_check, boundedness_check, fit_decay_exponent, theorem_rates};
use crate::analysis::integrals::{default_controls, default_triples, verify_integral_inequalities};
use crate::analysis::nonlinear::{pure_shear_check, random_direction, verify_nonlinear_bounds, NonlinearEvaluator};
use crate::analysis::report::{Claim, VerificationReport};
use crate::analysis::semigroup::verify_semigroup_bounds;
use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::evolve::{simulate_perturbed_front, InitialPerturbation, SimConfig};
use crate::field::{Field, TransverseGrid};
use crate::front::{max_residual, solve_model_front, FrontProfile};
use crate::model::{ModelKind, ReactionSystem};
use crate::norms::{NormSeries, WeightFunction, WeightSpec};
use crate::projection::{compute_adjoint, AdjointNullvector, Decomposer, PerturbationState};
use crate::spectrum::{
    cosine_similarity, default_theta_grid, discrete_spectrum_1d, essential_abscissa, find_weight,
    rest_state_curves, weight_admissibility, AbscissaReport, AdmissibilityReport, EigenSettings,
    WeightSearchResult,
};

pub const SPECTRUM_SCHEMA: &str = "spectrum/1";
pub const WEIGHT_SCHEMA: &str = "weight/1";
pub const SIMULATION_SCHEMA: &str = "simulation/1";

/// Largest modulus accepted for the discrete translational eigenvalue.
pub const TRANSLATIONAL_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Front,
    Spectrum,
    Weight,
    Simulate,
    Verify,
    All,
}

impl Stage {
    pub const NAMES: [&'static str; 6] = ["front", "spectrum", "weight", "simulate", "verify", "all"];

    fn expand(self) -> Vec<Stage> {
        match self {
            Stage::All => vec![Stage::Front, Stage::Spectrum, Stage::Weight, Stage::Simulate, Stage::Verify],
            s => vec![s],
        }
    }
}

impl FromStr for Stage {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "front" => Stage::Front,
            "spectrum" => Stage::Spectrum,
            "weight" => Stage::Weight,
            "simulate" => Stage::Simulate,
            "verify" => Stage::Verify,
            "all" => Stage::All,
            other => {
                return Err(LabError::Config(format!(
                    "unknown stage `{other}`; expected one of {}",
                    Stage::NAMES.join(", ")
                )))
            }
        })
    }
}

/// Essential spectrum of the unweighted linearization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumArtifact {
    pub schema: String,
    pub c: f64,
    pub essential_abscissa: f64,
    pub sampled: f64,
    pub minus: f64,
    pub plus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightArtifact {
    pub schema: String,
    pub found: bool,
    pub alpha: Option<WeightSpec>,
    pub nu: f64,
    pub search: WeightSearchResult,
    pub abscissa: Option<AbscissaReport>,
    pub admissibility: Option<AdmissibilityReport>,
    /// Rightmost eigenvalues of the weighted linearization as `[re, im]`.
    pub leading_eigenvalues: Vec<[f64; 2]>,
    pub translational_eigenvalue: Option<[f64; 2]>,
    /// Cosine similarity of its eigenvector with `gamma phi'`.
    pub translational_similarity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationArtifact {
    pub schema: String,
    pub d: usize,
    pub k: usize,
    pub e_k: f64,
    pub delta: f64,
    pub t_exit: Option<f64>,
    pub breakdown_time: Option<f64>,
    pub max_pi_v: f64,
    pub seam_mass: f64,
    pub alpha: WeightSpec,
}

/// Result of a pipeline run; `report` is set when the verify stage ran.
#[derive(Clone, Debug, Default)]
pub struct PipelineOutcome {
    pub artifacts: Vec<PathBuf>,
    pub report: Option<VerificationReport>,
}

impl PipelineOutcome {
    pub fn exit_code(&self) -> i32 {
        match &self.report {
            Some(r) if !r.passed() => 1,
            _ => 0,
        }
    }
}

/// Exit status for an error: 2 for configuration and I/O, 3 for numerics.
pub fn exit_code(err: &LabError) -> i32 {
    match err {
        LabError::Config(_)
        | LabError::Io(_)
        | LabError::Json(_)
        | LabError::Csv(_)
        | LabError::MissingArtifact { .. } => 2,
        _ => 3,
    }
}

pub fn run_pipeline(cfg: &RunConfig, stage: Stage) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut out = PipelineOutcome::default();
    for s in stage.expand() {
        log::info!("stage {s:?}");
        match s {
            Stage::Front => out.artifacts.extend(front_stage(cfg, &dir)?),
            Stage::Spectrum => out.artifacts.extend(spectrum_stage(cfg, &dir)?),
            Stage::Weight => out.artifacts.extend(weight_stage(cfg, &dir)?),
            Stage::Simulate => out.artifacts.extend(simulate_stage(cfg, &dir)?),
            Stage::Verify => {
                let report = verify_stage(cfg, &dir)?;
                report.write(&dir)?;
                out.artifacts
                    .extend(["report.json", "report.csv", "summary.txt"].map(|f| dir.join(f)));
                out.report = Some(report);
            }
            Stage::All => unreachable!(),
        }
    }
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let value = serde_json::to_value(value)?;
    std::fs::write(path, serde_json::to_string_pretty(&value)? + "\n")?;
    Ok(path.to_path_buf())
}

fn read_artifact(dir: &Path, name: &str, stage: &'static str) -> Result<String> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(LabError::MissingArtifact { path, stage });
    }
    Ok(std::fs::read_to_string(path)?)
}

pub fn load_front(dir: &Path) -> Result<FrontProfile> {
    FrontProfile::from_json(&read_artifact(dir, "front.json", "front")?)
}

pub fn load_weight(dir: &Path) -> Result<WeightArtifact> {
    Ok(serde_json::from_str(&read_artifact(dir, "weight.json", "weight")?)?)
}

pub fn load_series(dir: &Path) -> Result<NormSeries> {
    let meta: SimulationArtifact = serde_json::from_str(&read_artifact(dir, "simulation.json", "simulate")?)?;
    let csv = read_artifact(dir, "norms.csv", "simulate")?;
    Ok(NormSeries {
        d: meta.d,
        k: meta.k,
        e_k: meta.e_k,
        delta: meta.delta,
        t_exit: meta.t_exit,
        breakdown_time: meta.breakdown_time,
        records: NormSeries::read_csv(csv.as_bytes())?,
    })
}

fn weight_alpha(dir: &Path) -> Result<WeightSpec> {
    load_weight(dir)?
        .alpha
        .ok_or_else(|| LabError::Precondition("no admissible weight was found".into()))
}

fn front_stage(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let front = solve_model_front(&cfg.model, &cfg.front_solver())?;
    log::info!("front speed c = {:.8}", front.c);
    let path = dir.join("front.json");
    std::fs::write(&path, front.to_json()? + "\n")?;
    Ok(vec![path])
}

fn write_curves(
    front: &FrontProfile,
    sys: &ReactionSystem,
    alpha: &WeightSpec,
    dir: &Path,
    tag: &str,
) -> Result<Vec<PathBuf>> {
    let theta = default_theta_grid(front.c, 1024);
    let (minus, plus) = rest_state_curves(front, sys, alpha, &theta)?;
    let mut paths = Vec::new();
    for (curve, side) in [(minus, "minus"), (plus, "plus")] {
        let path = dir.join(format!("dispersion_{tag}_{side}.csv"));
        curve.write_csv(BufWriter::new(File::create(&path)?))?;
        paths.push(path);
    }
    Ok(paths)
}

fn spectrum_stage(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let front = load_front(dir)?;
    let zero = WeightSpec::unweighted();
    let abs = essential_abscissa(&front, &cfg.model, &zero)?;
    let artifact = SpectrumArtifact {
        schema: SPECTRUM_SCHEMA.into(),
        c: front.c,
        essential_abscissa: abs.value,
        sampled: abs.sampled,
        minus: abs.minus,
        plus: abs.plus,
    };
    let mut paths = vec![write_json(&dir.join("spectrum.json"), &artifact)?];
    paths.extend(write_curves(&front, &cfg.model, &zero, dir, "alpha0")?);
    Ok(paths)
}

/// `gamma phi'` on the interior nodes, node-major.
fn weighted_mode(front: &FrontProfile, alpha: &WeightSpec) -> Vec<f64> {
    let weight = WeightFunction::new(*alpha);
    let n = front.dim();
    let dphi = front.derivative();
    (1..front.n_nodes() - 1)
        .flat_map(|i| {
            let z = front.grid.node(i);
            let dphi = &dphi;
            let weight = &weight;
            (0..n).map(move |j| weight.apply(z, dphi[i * n + j]))
        })
        .collect()
}

fn weight_stage(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut front = load_front(dir)?;
    if front.omega_minus.is_none() || front.omega_plus.is_none() {
        front.compute_tail_rates(&cfg.model)?;
    }
    let sys = &cfg.model;
    let nu = cfg.nu_for(front.c);
    let search = match cfg.weight.fixed {
        Some(alpha) => {
            let abscissa = essential_abscissa(&front, sys, &alpha)?.value;
            WeightSearchResult::Found {
                alpha,
                abscissa,
                margin: -abscissa - nu,
            }
        }
        None => find_weight(&front, sys, nu, &cfg.weight.search)?,
    };
    let alpha = search.alpha();
    let mut artifact = WeightArtifact {
        schema: WEIGHT_SCHEMA.into(),
        found: alpha.is_some(),
        alpha,
        nu,
        search,
        abscissa: None,
        admissibility: None,
        leading_eigenvalues: Vec::new(),
        translational_eigenvalue: None,
        translational_similarity: None,
    };
    let mut paths = Vec::new();
    if let Some(alpha) = alpha {
        let settings = EigenSettings {
            order: cfg.front.order,
            zero_tol: TRANSLATIONAL_TOL,
            ..Default::default()
        };
        artifact.abscissa = Some(essential_abscissa(&front, sys, &alpha)?);
        artifact.admissibility = Some(weight_admissibility(&front, sys, &alpha, nu, Some(&settings))?);
        let spec = discrete_spectrum_1d(&front, sys, &alpha, &settings)?;
        artifact.leading_eigenvalues = spec.eigenvalues.iter().take(8).map(|z| [z.re, z.im]).collect();
        let i = spec.nearest_zero();
        if let Some(&lambda) = spec.eigenvalues.get(i) {
            artifact.translational_eigenvalue = Some([lambda.re, lambda.im]);
        }
        if let Some(vec) = spec.eigenvectors.get(i) {
            artifact.translational_similarity = Some(cosine_similarity(vec, &weighted_mode(&front, &alpha)));
        }
        paths.extend(write_curves(&front, sys, &alpha, dir, "weighted")?);
    }
    paths.insert(0, write_json(&dir.join("weight.json"), &artifact)?);
    Ok(paths)
}

/// Gaussian shift and a localized bump in `v`, projected onto ran Q.
pub fn initial_state(cfg: &RunConfig, decomposer: &Decomposer) -> Result<PerturbationState> {
    let init = &cfg.initial;
    let front = decomposer.front();
    let ygrid = cfg.simulation.ygrid()?;
    let bump = Field::from_fn(front.dim(), front.grid, ygrid.clone(), |c, z, y| {
        let r2: f64 = y.iter().map(|x| x * x).sum();
        init.v_amplitude / (1.0 + c as f64)
            * (-z * z / (2.0 * init.v_width * init.v_width) - r2 / (2.0 * init.v_transverse_variance)).exp()
    });
    let v = decomposer.projector().apply_q(&bump)?;
    let q = ygrid.sample(|y| {
        let r2: f64 = y.iter().map(|x| x * x).sum();
        init.q_amplitude * (-r2 / (2.0 * init.q_variance)).exp()
    });
    PerturbationState::new(v, q)
}

fn sim_config(cfg: &RunConfig) -> SimConfig {
    let mut sim = cfg.simulation.clone();
    sim.delta = cfg.analysis.delta;
    sim
}

struct Prepared {
    front: FrontProfile,
    alpha: WeightSpec,
    e: AdjointNullvector,
}

fn prepare(cfg: &RunConfig, dir: &Path) -> Result<Prepared> {
    let front = load_front(dir)?;
    let alpha = weight_alpha(dir)?;
    let e = compute_adjoint(&front, &cfg.model, &alpha, cfg.front.order)?;
    Ok(Prepared { front, alpha, e })
}

fn simulate_stage(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let p = prepare(cfg, dir)?;
    let decomposer = Decomposer::new(&p.front, &p.e)?;
    let state = initial_state(cfg, &decomposer)?;
    let sim = sim_config(cfg);
    let out = simulate_perturbed_front(&cfg.model, &p.front, &p.alpha, InitialPerturbation::State(state), &sim, &p.e)?;
    let series = &out.series;
    log::info!(
        "E_k = {:.4e}, t_exit = {:?}, breakdown = {:?}",
        series.e_k,
        series.t_exit,
        series.breakdown_time
    );
    let norms = dir.join("norms.csv");
    series.write_csv(BufWriter::new(File::create(&norms)?))?;
    let meta = SimulationArtifact {
        schema: SIMULATION_SCHEMA.into(),
        d: series.d,
        k: series.k,
        e_k: series.e_k,
        delta: series.delta,
        t_exit: series.t_exit,
        breakdown_time: series.breakdown_time,
        max_pi_v: out.max_pi_v,
        seam_mass: out.seam_mass,
        alpha: out.weight,
    };
    Ok(vec![norms, write_json(&dir.join("simulation.json"), &meta)?])
}

fn sample_grid(cfg: &RunConfig) -> Result<TransverseGrid> {
    let axes = cfg.simulation.d - 1;
    let n = cfg.analysis.sample_ny;
    TransverseGrid::new(vec![n; axes], vec![n as f64 / 2.0; axes])
}

fn verify_stage(cfg: &RunConfig, dir: &Path) -> Result<VerificationReport> {
    let p = prepare(cfg, dir)?;
    let weight = load_weight(dir)?;
    let series = load_series(dir)?;
    let meta: SimulationArtifact = serde_json::from_str(&read_artifact(dir, "simulation.json", "simulate")?)?;
    let sys = &cfg.model;
    let tol = &cfg.analysis.tolerances;
    let d = cfg.simulation.d;
    let k = cfg.order_k();
    let nu = weight.nu;
    let mut report = VerificationReport::new();

    report.push(front_claim(sys, &p.front, cfg));
    report.push(spectrum_claim(sys, &p.front, &p.alpha, nu)?);
    report.push(translational_claim(&weight));

    let decomposer = Decomposer::new(&p.front, &p.e)?;
    let evaluator = NonlinearEvaluator::new(sys, &p.front, &p.e)?.with_quadrature(cfg.analysis.quad_order);
    let ygrid = sample_grid(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let directions = (0..cfg.analysis.samples)
        .map(|_| random_direction(&mut rng, &evaluator, &ygrid, cfg.analysis.sample_amplitude))
        .collect::<Result<Vec<_>>>()?;

    report.push(projection_claim(&decomposer, &directions, meta.max_pi_v)?);
    report.push(decomposition_claim(&decomposer, &directions)?);

    let semigroup = verify_semigroup_bounds(&p.front, sys, &p.alpha, &cfg.analysis, d, k)?;
    let a = &semigroup.abscissa;
    report.push(
        Claim::new("semigroup_weighted_q", a.pass)
            .value("abscissa", a.abscissa)
            .value("nu", a.nu)
            .value("translational_re", a.translational.0)
            .tolerance(tol.abscissa),
    );
    match &semigroup.bounded_block {
        Some(b) => report.push(
            Claim::new("semigroup_bounded_block", b.pass)
                .value("constant", b.constant)
                .value("fitted_rate", b.fitted_rate),
        ),
        None => report.push(skipped("semigroup_bounded_block")),
    }
    match &semigroup.decaying_block {
        Some(b) => report.push(
            Claim::new("semigroup_stable_block", b.pass)
                .value("constant", b.constant)
                .value("fitted_rate", b.fitted_rate)
                .value("required_rate", b.required_rate),
        ),
        None => report.push(skipped("semigroup_stable_block")),
    }
    let h = &semigroup.heat;
    report.push(
        Claim::new("heat_decay", h.pass)
            .value("exponent", h.exponent)
            .value("expected", h.expected)
            .value("gradient_exponent", h.gradient_exponent)
            .value("gradient_expected", h.gradient_expected)
            .value("hk_constant", h.hk_constant)
            .tolerance(tol.heat_exponent),
    );

    let integrals = verify_integral_inequalities(&default_triples(), &default_controls(), 1e3, 40, tol.bounded_slope)?;
    let mut claim = Claim::new(
        "integral_inequalities",
        (1..=3).all(|c| integrals.clause_bounded(c) && integrals.count(c) >= 10) && integrals.controls_diverge(),
    )
    .tolerance(tol.bounded_slope);
    for c in 1..=3 {
        let worst = integrals
            .results
            .iter()
            .filter(|r| r.triple.kernel.clause() == c)
            .fold(0.0f64, |m, r| m.max(r.sup_ratio));
        claim = claim
            .value(&format!("clause{c}_count"), integrals.count(c) as f64)
            .value(&format!("clause{c}_max_constant"), worst);
    }
    let min_control = integrals.controls.iter().fold(f64::INFINITY, |m, r| m.min(r.tail_slope));
    report.push(claim.value("control_min_slope", min_control));

    let nonlinear = verify_nonlinear_bounds(&directions, &evaluator, &p.alpha, k, &cfg.analysis.scales)?;
    let shear = {
        let w: Vec<Vec<f64>> = (0..ygrid.axes())
            .map(|a| ygrid.sample(|y| 0.1 * (-y[a] * y[a] / 8.0).exp()))
            .collect();
        pure_shear_check(&evaluator, w, &ygrid, k)?
    };
    let degrees_ok = nonlinear
        .degrees
        .iter()
        .all(|g| (g.min - 2.0).abs() <= tol.degree && (g.max - 2.0).abs() <= tol.degree);
    let mut claim = Claim::new("nonlinear_quadratic", degrees_ok && shear.direct_mismatch < tol.identity)
        .tolerance(tol.degree)
        .value("pure_shear_ratio", shear.ratio)
        .value("pure_shear_mismatch", shear.direct_mismatch);
    for g in &nonlinear.degrees {
        claim = claim
            .value(&format!("{}_degree_min", g.name), g.min)
            .value(&format!("{}_degree_max", g.name), g.max);
    }
    report.push(claim);
    let mut claim = Claim::new(
        "nonlinear_triangular",
        nonlinear.ratios.iter().all(|r| r.max.is_finite() && r.growth < 4.0),
    );
    for r in &nonlinear.ratios {
        claim = claim
            .value(&format!("{}_constant", r.name), r.max)
            .value(&format!("{}_growth", r.name), r.growth);
    }
    report.push(claim);
    report.push(
        Claim::new("nonlinear_identity", nonlinear.identity_residual < tol.identity)
            .value("residual", nonlinear.identity_residual)
            .tolerance(tol.identity),
    );
    let (lo, hi) = nonlinear.pi_derivative_range;
    report.push(
        Claim::new(
            "pi_derivative_bounds",
            lo >= tol.pi_floor && nonlinear.pi_derivative_constant.is_finite(),
        )
        .value("min", lo)
        .value("max", hi)
        .value("constant", nonlinear.pi_derivative_constant)
        .value("q_sup", nonlinear.q_sup)
        .tolerance(tol.pi_floor),
    );

    for claim in theorem_claims(cfg, &series)? {
        report.push(claim);
    }
    report.push(contrast_claim(cfg, &series)?);
    report.push(continuity_claim(cfg, &p)?);
    Ok(report)
}

fn skipped(id: &str) -> Claim {
    let mut c = Claim::new(id, true);
    c.status = crate::analysis::ClaimStatus::Skipped;
    c
}

fn front_claim(sys: &ReactionSystem, front: &FrontProfile, cfg: &RunConfig) -> Claim {
    let residual = max_residual(sys, front, cfg.front.order);
    let mut claim = Claim::new("front_speed", residual < 1e-6)
        .value("c", front.c)
        .value("residual", residual)
        .tolerance(1e-6);
    if let ModelKind::Bistable(b) = &sys.kind {
        let exact = std::f64::consts::SQRT_2 * (b.a - 0.5);
        claim = claim.value("c_exact", exact);
        if (front.c - exact).abs() >= 1e-6 {
            claim.status = crate::analysis::ClaimStatus::Fail;
        }
    }
    claim
}

fn spectrum_claim(sys: &ReactionSystem, front: &FrontProfile, alpha: &WeightSpec, nu: f64) -> Result<Claim> {
    let bare = essential_abscissa(front, sys, &WeightSpec::unweighted())?;
    let weighted = essential_abscissa(front, sys, alpha)?;
    let agreement = (bare.value - bare.sampled).abs().max((weighted.value - weighted.sampled).abs());
    Ok(Claim::new("essential_spectrum", weighted.value < -nu && agreement < 1e-12)
        .value("abscissa_unweighted", bare.value)
        .value("abscissa_weighted", weighted.value)
        .value("nu", nu)
        .value("grid_agreement", agreement)
        .tolerance(1e-12))
}

fn translational_claim(weight: &WeightArtifact) -> Claim {
    let simple = weight
        .admissibility
        .as_ref()
        .and_then(|a| a.clause4.as_ref())
        .is_some_and(|c| c.pass && c.value < TRANSLATIONAL_TOL);
    let sim = weight.translational_similarity.unwrap_or(0.0);
    let lambda = weight.translational_eigenvalue.unwrap_or([f64::NAN; 2]);
    Claim::new("translational_eigenvalue", simple && sim > 0.999)
        .value("lambda_re", lambda[0])
        .value("lambda_im", lambda[1])
        .value("cosine_similarity", sim)
        .tolerance(TRANSLATIONAL_TOL)
}

fn projection_claim(decomposer: &Decomposer, directions: &[PerturbationState], max_pi_v: f64) -> Result<Claim> {
    let proj = decomposer.projector();
    let mut idempotence: f64 = 0.0;
    let mut pq: f64 = 0.0;
    let mut lift: f64 = 0.0;
    for s in directions.iter().take(10) {
        let mut u = s.v.clone();
        u.axpy(1.0, &proj.lift(&s.q, &s.v.ygrid));
        let (p, q) = proj.project(&u)?;
        idempotence = idempotence.max(proj.project(&p)?.0.max_abs_diff(&p));
        pq = pq.max(proj.project(&q)?.0.max_abs());
        let h = proj.pi(&proj.lift(&s.q, &s.v.ygrid))?;
        lift = h.iter().zip(&s.q).fold(lift, |m, (a, b)| m.max((a - b).abs()));
    }
    let tol = 1e-7;
    Ok(Claim::new(
        "projection_identities",
        idempotence < tol && pq < tol && lift < tol && max_pi_v < 1e-6,
    )
    .value("idempotence", idempotence)
    .value("pq", pq)
    .value("lift", lift)
    .value("max_pi_v", max_pi_v)
    .tolerance(tol))
}

fn decomposition_claim(decomposer: &Decomposer, directions: &[PerturbationState]) -> Result<Claim> {
    let mut roundtrip: f64 = 0.0;
    let mut shift: f64 = 0.0;
    for s in directions.iter().take(50) {
        let u = decomposer.recompose(s)?;
        let back = decomposer.decompose(&u)?;
        roundtrip = roundtrip.max(decomposer.recompose(&back)?.max_abs_diff(&u));
        let pure = PerturbationState::new(
            Field::zeros(s.v.ncomp, s.v.zgrid, s.v.ygrid.clone()),
            s.q.clone(),
        )?;
        let got = decomposer.decompose(&decomposer.recompose(&pure)?)?;
        shift = got.q.iter().zip(&s.q).fold(shift, |m, (a, b)| m.max((a - b).abs()));
    }
    Ok(Claim::new("decomposition", roundtrip < 1e-8 && shift < 1e-8)
        .value("roundtrip", roundtrip)
        .value("pure_translation", shift)
        .tolerance(1e-8))
}

/// Items (2)-(7) of the main decay theorem on the finite horizon.
fn theorem_claims(cfg: &RunConfig, series: &NormSeries) -> Result<Vec<Claim>> {
    let tol = &cfg.analysis.tolerances;
    let exploratory = series.d == 3;
    let t0 = cfg.analysis.fit_window.t_min;
    let mut claims = Vec::new();
    let sup = series
        .records
        .iter()
        .fold(0.0f64, |m, r| m.max(r.v_h + r.q_hk + r.w_hk));
    claims.push(
        Claim::new("theorem_main_item2", series.t_exit.is_none() && series.breakdown_time.is_none())
            .value("sup_norm", sup)
            .value("delta", series.delta)
            .value("e_k", series.e_k),
    );
    let items = ["theorem_main_item3", "theorem_main_item4", "theorem_main_item5", "theorem_main_item7"];
    for (id, (column, rate)) in items.iter().zip(theorem_rates(series.d)) {
        let b = bound_check(series, column, rate, t0, tol.bound_slack)?;
        let mut claim = Claim::new(id, b.pass && series.t_exit.is_none())
            .value("rate", rate)
            .value("constant", b.constant)
            .value("worst_ratio", b.worst_ratio)
            .value("worst_time", b.worst_time)
            .tolerance(tol.bound_slack);
        if let Ok(fit) = fit_decay_exponent(series, column, cfg.analysis.fit_window) {
            claim = claim.value("fitted_exponent", fit.exponent);
        }
        claims.push(claim);
    }
    let (n1, _) = cfg.model.split();
    if n1 > 0 {
        let b = boundedness_check(series, "v1_hk", t0, 2.0)?;
        claims.push(
            Claim::new("theorem_main_item6", b.pass)
                .value("reference_max", b.reference_max)
                .value("overall_max", b.overall_max)
                .value("constant", b.overall_max / series.e_k)
                .tolerance(b.factor),
        );
    } else {
        claims.push(skipped("theorem_main_item6"));
    }
    if exploratory {
        claims = claims.into_iter().map(|c| c.exploratory()).collect();
    }
    claims.sort_by(|a, b| a.claim_id.cmp(&b.claim_id));
    Ok(claims)
}

fn contrast_claim(cfg: &RunConfig, series: &NormSeries) -> Result<Claim> {
    let (n1, _) = cfg.model.split();
    if n1 == 0 {
        return Ok(skipped("convective_contrast"));
    }
    let window = cfg.analysis.fit_window;
    let weighted = fit_decay_exponent(series, "v_hka", window)?;
    let plain = fit_decay_exponent(series, "v_hk", window)?;
    let gap = plain.exponent - weighted.exponent;
    let claim = Claim::new("convective_contrast", gap >= cfg.analysis.tolerances.weight_contrast)
        .value("weighted_exponent", weighted.exponent)
        .value("unweighted_exponent", plain.exponent)
        .value("gap", gap)
        .tolerance(cfg.analysis.tolerances.weight_contrast);
    Ok(if series.d == 3 { claim.exploratory() } else { claim })
}

/// Two runs from initial data a relative `1e-2` apart on a short horizon:
/// `sup_t |u1 - u2|_inf / |u1(0) - u2(0)|_inf` must stay moderate.
fn continuity_claim(cfg: &RunConfig, p: &Prepared) -> Result<Claim> {
    let eps = 1e-2;
    let mut sim = sim_config(cfg);
    sim.t_end = sim.t_end.min(10.0);
    sim.snapshot_every = Some(1);
    let decomposer = Decomposer::new(&p.front, &p.e)?;
    let base = initial_state(cfg, &decomposer)?;
    let run = |s: PerturbationState| {
        simulate_perturbed_front(&cfg.model, &p.front, &p.alpha, InitialPerturbation::State(s), &sim, &p.e)
    };
    let a = run(base.clone())?;
    let b = run(base.scaled(1.0 + eps))?;
    let initial = a.snapshots[0].u_tilde.max_abs_diff(&b.snapshots[0].u_tilde);
    let worst = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .fold(0.0f64, |m, (x, y)| m.max(x.u_tilde.max_abs_diff(&y.u_tilde)));
    let lipschitz = if initial > 0.0 { worst / initial } else { f64::INFINITY };
    let bound = 10.0;
    Ok(Claim::new("continuity_initial_data", lipschitz.is_finite() && lipschitz <= bound)
        .value("initial_difference", initial)
        .value("max_difference", worst)
        .value("lipschitz", lipschitz)
        .value("horizon", sim.t_end)
        .tolerance(bound))
}
