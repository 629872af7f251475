//! The modulation nonlinearities `G`, `F1`, `F2` and sampled estimates of
//! their quadratic bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{Field, TransverseGrid};
use crate::front::{linear_fit, FrontProfile};
use crate::model::{NQuadrature, ReactionSystem};
use crate::norms::{l1_norm_y, sobolev_norm, sobolev_norm_y, WeightFunction, WeightSpec};
use crate::projection::{AdjointNullvector, Decomposer, PerturbationState};

/// Nonlinear terms of the modulation system at one state.
#[derive(Clone, Debug)]
pub struct NonlinearEval {
    pub g: Field,
    pub f1: Field,
    pub f2: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    /// Components of `F1 + (df(phi) - df(phi_-)) v` in the first block.
    pub h1: Field,
    pub h2: Field,
    /// `(df(phi_q) - df(phi)) v`.
    pub shift_part: Field,
    /// `N(phi_q, v) v`.
    pub quadratic_part: Field,
    /// `(df(phi) - df(phi_-)) v`.
    pub tail_part: Field,
    /// `pi(phi'_q)` per transverse point.
    pub pi_derivative: Vec<f64>,
    /// Largest of `|pi(F1)|` and the mismatch between the quadrature form of
    /// `G` and `f(phi_q + v) - f(phi_q) - df(phi) v`.
    pub identity_residual: f64,
}

/// Evaluates the nonlinearities for a fixed front, adjoint and model.
#[derive(Clone, Debug)]
pub struct NonlinearEvaluator {
    sys: ReactionSystem,
    decomposer: Decomposer,
    quad: NQuadrature,
    jac_phi: Vec<f64>,
    jac_minus: Vec<f64>,
    pub pi_floor: f64,
    /// Bound on `|q|` inside which the evaluation is attempted.
    pub delta0: f64,
}

impl NonlinearEvaluator {
    pub fn new(sys: &ReactionSystem, front: &FrontProfile, e: &AdjointNullvector) -> Result<Self> {
        let n = front.dim();
        let len = front.n_nodes();
        let mut jac_phi = vec![0.0; len * n * n];
        for i in 0..len {
            sys.jacobian_into(front.node(i), &mut jac_phi[i * n * n..(i + 1) * n * n]);
        }
        let mut jac_minus = vec![0.0; n * n];
        sys.jacobian_into(&front.phi_minus, &mut jac_minus);
        Ok(Self {
            sys: sys.clone(),
            decomposer: Decomposer::new(front, e)?,
            quad: NQuadrature::new(8),
            jac_phi,
            jac_minus,
            pi_floor: 0.5,
            delta0: front.grid.half_length() / 4.0,
        })
    }

    pub fn with_quadrature(mut self, order: usize) -> Self {
        self.quad = NQuadrature::new(order);
        self
    }

    pub fn decomposer(&self) -> &Decomposer {
        &self.decomposer
    }

    pub fn eval(&self, state: &PerturbationState) -> Result<NonlinearEval> {
        let v = &state.v;
        let front = self.decomposer.front();
        if !v.zgrid.same_as(&front.grid) || v.ncomp != front.dim() {
            return Err(LabError::Shape("state does not live on the front's grid".into()));
        }
        let ny = v.ny();
        if state.q.len() != ny || state.w.iter().any(|w| w.len() != ny) {
            return Err(LabError::Shape("q or w does not match the transverse grid".into()));
        }
        let q_sup = state.q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(q_sup < self.delta0) {
            return Err(LabError::Precondition(format!(
                "|q| = {q_sup:.3e} outside the admissible radius {:.3e}",
                self.delta0
            )));
        }
        let n = v.ncomp;
        let nz = v.nz();
        let (n1, _) = self.sys.split();
        let projector = self.decomposer.projector();

        struct Column {
            g: Vec<f64>,
            f1: Vec<f64>,
            h: Vec<f64>,
            shift: Vec<f64>,
            quad: Vec<f64>,
            tail: Vec<f64>,
            f2: f64,
            k1: f64,
            k2: f64,
            pi_d: f64,
            residual: f64,
        }

        let columns: Vec<Result<Column>> = (0..ny)
            .into_par_iter()
            .map(|iy| {
                let q = state.q[iy];
                let (pq, dq, ddq) = self.decomposer.shifted_profile(q);
                let pi_d = projector.pi_profile(&dq);
                if pi_d.abs() < self.pi_floor {
                    return Err(LabError::DivisionGuard {
                        value: pi_d,
                        floor: self.pi_floor,
                    });
                }
                let pi_dd = projector.pi_profile(&ddq);
                let k1 = -pi_dd / pi_d;
                let k2 = -1.0 / pi_d;
                let ww: f64 = state.w.iter().map(|w| w[iy] * w[iy]).sum();

                let mut shift = vec![0.0; nz * n];
                let mut quad = vec![0.0; nz * n];
                let mut tail = vec![0.0; nz * n];
                let mut residual: f64 = 0.0;
                let mut jq = vec![0.0; n * n];
                let mut nm = vec![0.0; n * n];
                let mut vn = vec![0.0; n];
                let mut fa = vec![0.0; n];
                let mut fb = vec![0.0; n];
                let mut sum = vec![0.0; n];
                for iz in 0..nz {
                    for c in 0..n {
                        vn[c] = v.get(c, iz, iy);
                    }
                    let base = &pq[iz * n..(iz + 1) * n];
                    let jp = &self.jac_phi[iz * n * n..(iz + 1) * n * n];
                    self.sys.jacobian_into(base, &mut jq);
                    self.quad.apply(&self.sys, base, &vn, &mut nm);
                    for i in 0..n {
                        let mut s = 0.0;
                        let mut qd = 0.0;
                        let mut t = 0.0;
                        for j in 0..n {
                            s += (jq[i * n + j] - jp[i * n + j]) * vn[j];
                            qd += nm[i * n + j] * vn[j];
                            t += (jp[i * n + j] - self.jac_minus[i * n + j]) * vn[j];
                        }
                        shift[iz * n + i] = s;
                        quad[iz * n + i] = qd;
                        tail[iz * n + i] = t;
                    }
                    // direct form of G
                    for c in 0..n {
                        sum[c] = base[c] + vn[c];
                    }
                    self.sys.f_into(&sum, &mut fa);
                    self.sys.f_into(base, &mut fb);
                    for i in 0..n {
                        let lin: f64 = (0..n).map(|j| jp[i * n + j] * vn[j]).sum();
                        let direct = fa[i] - fb[i] - lin;
                        let g = shift[iz * n + i] + quad[iz * n + i];
                        residual = residual.max((direct - g).abs());
                    }
                }
                let g: Vec<f64> = shift.iter().zip(&quad).map(|(a, b)| a + b).collect();
                let f2 = k1 * ww + k2 * projector.pi_profile(&g);
                let f1: Vec<f64> = (0..nz * n)
                    .map(|k| g[k] + f2 * dq[k] + ww * ddq[k])
                    .collect();
                residual = residual.max(projector.pi_profile(&f1).abs());
                let h: Vec<f64> = f1.iter().zip(&tail).map(|(a, b)| a + b).collect();
                Ok(Column {
                    g,
                    f1,
                    h,
                    shift,
                    quad,
                    tail,
                    f2,
                    k1,
                    k2,
                    pi_d,
                    residual,
                })
            })
            .collect();

        let zgrid = v.zgrid;
        let ygrid = v.ygrid.clone();
        let blank = Field::zeros(n, zgrid, ygrid.clone());
        let mut g = blank.clone();
        let mut f1 = blank.clone();
        let mut h = blank.clone();
        let mut shift = blank.clone();
        let mut quad = blank.clone();
        let mut tail = blank;
        let mut f2 = vec![0.0; ny];
        let mut k1 = vec![0.0; ny];
        let mut k2 = vec![0.0; ny];
        let mut pi_derivative = vec![0.0; ny];
        let mut identity_residual: f64 = 0.0;
        for (iy, col) in columns.into_iter().enumerate() {
            let col = col?;
            for iz in 0..nz {
                for c in 0..n {
                    let idx = g.index(c, iz, iy);
                    let k = iz * n + c;
                    g.data[idx] = col.g[k];
                    f1.data[idx] = col.f1[k];
                    h.data[idx] = col.h[k];
                    shift.data[idx] = col.shift[k];
                    quad.data[idx] = col.quad[k];
                    tail.data[idx] = col.tail[k];
                }
            }
            f2[iy] = col.f2;
            k1[iy] = col.k1;
            k2[iy] = col.k2;
            pi_derivative[iy] = col.pi_d;
            identity_residual = identity_residual.max(col.residual);
        }
        Ok(NonlinearEval {
            g,
            f1,
            f2,
            k1,
            k2,
            h1: h.components(0..n1),
            h2: h.components(n1..n),
            shift_part: shift,
            quadratic_part: quad,
            tail_part: tail,
            pi_derivative,
            identity_residual,
        })
    }
}

/// One-shot evaluation with the default quadrature and guards.
pub fn eval_modulation_nonlinearities(
    state: &PerturbationState,
    front: &FrontProfile,
    e: &AdjointNullvector,
    sys: &ReactionSystem,
) -> Result<NonlinearEval> {
    NonlinearEvaluator::new(sys, front, e)?.eval(state)
}

/// Random smooth direction: two Gaussian bumps per component of `v`
/// (projected onto ran Q) and a Gaussian shift with `w = grad q`.
pub fn random_direction<R: Rng>(
    rng: &mut R,
    evaluator: &NonlinearEvaluator,
    ygrid: &TransverseGrid,
    amplitude: f64,
) -> Result<PerturbationState> {
    let front = evaluator.decomposer().front();
    let n = front.dim();
    let axes = ygrid.axes();
    let zgrid = front.grid;
    let mut bumps = Vec::new();
    for c in 0..n {
        for _ in 0..2 {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let z0: f64 = rng.gen_range(-5.0..5.0);
            let sz: f64 = rng.gen_range(1.0..2.5);
            let centre: Vec<f64> = ygrid
                .lengths
                .iter()
                .map(|l| rng.gen_range(-l / 6.0..l / 6.0))
                .collect();
            let sy: f64 = rng.gen_range(2.0..4.0);
            bumps.push((c, a, z0, sz, centre, sy));
        }
    }
    let raw = Field::from_fn(n, zgrid, ygrid.clone(), |c, z, y| {
        bumps
            .iter()
            .filter(|b| b.0 == c)
            .map(|(_, a, z0, sz, centre, sy)| {
                let r2: f64 = y.iter().zip(centre).map(|(p, q)| (p - q) * (p - q)).sum();
                a * (-(z - z0) * (z - z0) / (2.0 * sz * sz) - r2 / (2.0 * sy * sy)).exp()
            })
            .sum()
    });
    let v = evaluator.decomposer().projector().apply_q(&raw)?;
    let vmax = v.max_abs().max(f64::MIN_POSITIVE);
    let v = v.scaled(amplitude / vmax);
    let aq: f64 = rng.gen_range(-1.0..1.0);
    let centre: Vec<f64> = ygrid
        .lengths
        .iter()
        .map(|l| rng.gen_range(-l / 8.0..l / 8.0))
        .collect();
    let sq: f64 = rng.gen_range(2.0..4.0);
    let q = ygrid.sample(|y| {
        let r2: f64 = y.iter().zip(&centre).map(|(p, c)| (p - c) * (p - c)).sum();
        amplitude * aq * (-r2 / (2.0 * sq * sq)).exp()
    });
    let state = PerturbationState::new(v, q)?;
    debug_assert_eq!(state.w.len(), axes);
    Ok(state)
}

/// Norms entering the estimates, for one evaluated state.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub v_hk: f64,
    pub v_hka: f64,
    pub v2_hk: f64,
    pub q_hk: f64,
    pub w_hk: f64,
    pub g_hka: f64,
    pub f1_hka: f64,
    pub f1_hk: f64,
    pub f2_hk: f64,
    pub f2_l1: f64,
    pub shift_hk: f64,
    pub quadratic_hk: f64,
    pub tail_hk: f64,
}

impl NormSample {
    fn compute(
        state: &PerturbationState,
        eval: &NonlinearEval,
        n1: usize,
        k: usize,
        weight: &WeightFunction,
    ) -> Result<Self> {
        let ygrid = &state.v.ygrid;
        let n = state.v.ncomp;
        let w_refs: Vec<&[f64]> = state.w.iter().map(|w| w.as_slice()).collect();
        Ok(Self {
            v_hk: sobolev_norm(&state.v, None, k, None)?,
            v_hka: sobolev_norm(&state.v, None, k, Some(weight))?,
            v2_hk: sobolev_norm(&state.v, Some(n1..n), k, None)?,
            q_hk: sobolev_norm_y(&[&state.q], ygrid, k)?,
            w_hk: sobolev_norm_y(&w_refs, ygrid, k)?,
            g_hka: sobolev_norm(&eval.g, None, k, Some(weight))?,
            f1_hka: sobolev_norm(&eval.f1, None, k, Some(weight))?,
            f1_hk: sobolev_norm(&eval.f1, None, k, None)?,
            f2_hk: sobolev_norm_y(&[&eval.f2], ygrid, k)?,
            f2_l1: l1_norm_y(&eval.f2, ygrid),
            shift_hk: sobolev_norm(&eval.shift_part, None, k, None)?,
            quadratic_hk: sobolev_norm(&eval.quadratic_part, None, k, None)?,
            tail_hk: sobolev_norm(&eval.tail_part, None, k, None)?,
        })
    }

    /// Named ratios of a bounded quantity over its bound; 0 when the bound vanishes.
    pub fn ratios(&self) -> Vec<(&'static str, f64)> {
        let r = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        let composite = self.v_hk * self.v_hka + self.q_hk * self.v_hka + self.w_hk * self.w_hk;
        vec![
            ("g_weighted", r(self.g_hka, (self.v_hk + self.q_hk) * self.v_hka)),
            ("f1_weighted", r(self.f1_hka, composite)),
            ("f1_unweighted", r(self.f1_hk, composite + self.v_hk * self.v2_hk)),
            ("f2_hk", r(self.f2_hk, composite)),
            ("f2_l1", r(self.f2_l1, composite)),
            ("tail_linear", r(self.tail_hk, self.v_hka)),
            ("shift_bilinear", r(self.shift_hk, self.q_hk * self.v_hka)),
            ("quadratic", r(self.quadratic_hk, self.v_hk * (self.v_hka + self.v2_hk))),
        ]
    }

    /// Quantities expected to scale quadratically with the input.
    pub fn quadratic_quantities(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("f2_hk", self.f2_hk),
            ("g_weighted", self.g_hka),
            ("f1_weighted", self.f1_hka),
            ("f1_unweighted", self.f1_hk),
            ("quadratic", self.quadratic_hk),
            ("shift_bilinear", self.shift_hk),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub name: String,
    /// Empirical constant: the largest ratio over samples and scales.
    pub max: f64,
    pub mean: f64,
    /// Largest `ratio(s) / ratio(s_max)` over samples; stays O(1) when bounded.
    pub growth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Directions where the quantity vanished identically.
    pub vanishing: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearBoundReport {
    pub k: usize,
    pub samples: usize,
    pub scales: Vec<f64>,
    pub ratios: Vec<RatioSummary>,
    pub degrees: Vec<DegreeSummary>,
    pub identity_residual: f64,
    pub k1_sup: f64,
    pub q_sup: f64,
    /// Range of `pi(phi'_q)` over all samples.
    pub pi_derivative_range: (f64, f64),
    /// Largest `|pi(phi'_q) - 1| / |q|_inf` over samples with `q != 0`.
    pub pi_derivative_constant: f64,
}

impl NonlinearBoundReport {
    pub fn degree(&self, name: &str) -> Option<&DegreeSummary> {
        self.degrees.iter().find(|d| d.name == name)
    }

    pub fn ratio(&self, name: &str) -> Option<&RatioSummary> {
        self.ratios.iter().find(|d| d.name == name)
    }

    /// Every degree within `tol` of 2 and every ratio free of growth.
    pub fn passes(&self, degree_tol: f64, identity_tol: f64) -> bool {
        self.degrees
            .iter()
            .all(|d| (d.min - 2.0).abs() <= degree_tol && (d.max - 2.0).abs() <= degree_tol)
            && self.identity_residual < identity_tol
            && self.ratios.iter().all(|r| r.max.is_finite() && r.growth < 4.0)
    }
}

/// Evaluates every direction at each scale and summarises the bound ratios
/// and the fitted homogeneity degrees.
pub fn verify_nonlinear_bounds(
    samples: &[PerturbationState],
    evaluator: &NonlinearEvaluator,
    alpha: &WeightSpec,
    k: usize,
    scales: &[f64],
) -> Result<NonlinearBoundReport> {
    if scales.len() < 2 {
        return Err(LabError::Precondition("need at least two scales".into()));
    }
    let weight = WeightFunction::new(*alpha);
    let n1 = evaluator.sys.split().0;
    let s_max = scales.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let per_sample: Vec<Result<Vec<(f64, NormSample, NonlinearEval)>>> = samples
        .par_iter()
        .map(|dir| {
            scales
                .iter()
                .map(|&s| {
                    let st = dir.scaled(s);
                    let ev = evaluator.eval(&st)?;
                    let ns = NormSample::compute(&st, &ev, n1, k, &weight)?;
                    Ok((s, ns, ev))
                })
                .collect()
        })
        .collect();

    let mut identity_residual: f64 = 0.0;
    let mut k1_sup: f64 = 0.0;
    let mut q_sup: f64 = 0.0;
    let mut pi_lo = f64::INFINITY;
    let mut pi_hi = f64::NEG_INFINITY;
    let mut pi_const: f64 = 0.0;
    let mut ratio_values: Vec<Vec<f64>> = Vec::new();
    let mut ratio_growth: Vec<f64> = Vec::new();
    let mut ratio_names: Vec<&'static str> = Vec::new();
    let mut degree_values: Vec<Vec<f64>> = Vec::new();
    let mut degree_vanishing: Vec<usize> = Vec::new();
    let mut degree_names: Vec<&'static str> = Vec::new();

    for (dir, runs) in samples.iter().zip(per_sample) {
        let runs = runs?;
        let top = runs
            .iter()
            .find(|r| r.0 == s_max)
            .map(|r| r.1.ratios())
            .unwrap_or_default();
        for (s, ns, ev) in &runs {
            identity_residual = identity_residual.max(ev.identity_residual);
            k1_sup = ev.k1.iter().fold(k1_sup, |m, x| m.max(x.abs()));
            let qs = dir.q.iter().fold(0.0f64, |m, x| m.max(x.abs())) * s;
            q_sup = q_sup.max(qs);
            for &p in &ev.pi_derivative {
                pi_lo = pi_lo.min(p);
                pi_hi = pi_hi.max(p);
                if qs > 0.0 {
                    pi_const = pi_const.max((p - 1.0).abs() / qs);
                }
            }
            let ratios = ns.ratios();
            if ratio_names.is_empty() {
                ratio_names = ratios.iter().map(|r| r.0).collect();
                ratio_values = vec![Vec::new(); ratios.len()];
                ratio_growth = vec![0.0; ratios.len()];
            }
            for (i, (_, r)) in ratios.iter().enumerate() {
                ratio_values[i].push(*r);
                if let Some((_, t)) = top.get(i) {
                    if *t > 0.0 {
                        ratio_growth[i] = ratio_growth[i].max(r / t);
                    }
                }
            }
        }
        // homogeneity degree per quantity
        let quantities: Vec<Vec<(&'static str, f64)>> =
            runs.iter().map(|r| r.1.quadratic_quantities()).collect();
        if degree_names.is_empty() {
            degree_names = quantities[0].iter().map(|q| q.0).collect();
            degree_values = vec![Vec::new(); degree_names.len()];
            degree_vanishing = vec![0; degree_names.len()];
        }
        for i in 0..degree_names.len() {
            let vals: Vec<f64> = quantities.iter().map(|q| q[i].1).collect();
            if vals.iter().any(|v| !(*v > 0.0)) {
                degree_vanishing[i] += 1;
                continue;
            }
            let xs: Vec<f64> = runs.iter().map(|r| r.0.ln()).collect();
            let ys: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
            if let Some((slope, _, _)) = linear_fit(&xs, &ys) {
                degree_values[i].push(slope);
            }
        }
    }

    let summarize = |v: &[f64]| {
        if v.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (min, max, v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    let ratios = ratio_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let (_, max, mean) = summarize(&ratio_values[i]);
            RatioSummary {
                name: name.to_string(),
                max,
                mean,
                growth: ratio_growth[i],
            }
        })
        .collect();
    let degrees = degree_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let (min, max, mean) = summarize(&degree_values[i]);
            DegreeSummary {
                name: name.to_string(),
                min,
                max,
                mean,
                vanishing: degree_vanishing[i],
            }
        })
        .collect();
    Ok(NonlinearBoundReport {
        k,
        samples: samples.len(),
        scales: scales.to_vec(),
        ratios,
        degrees,
        identity_residual,
        k1_sup,
        q_sup,
        pi_derivative_range: if pi_lo.is_finite() { (pi_lo, pi_hi) } else { (1.0, 1.0) },
        pi_derivative_constant: pi_const,
    })
}

/// `F2` for `v = 0`, `q = 0` and a prescribed `w`, against `K1(0) (w.w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureShearCheck {
    pub f2_hk: f64,
    pub w_hk: f64,
    pub k1: f64,
    /// `|F2 - K1(0) (w.w)|_inf`.
    pub direct_mismatch: f64,
    pub ratio: f64,
}

pub fn pure_shear_check(
    evaluator: &NonlinearEvaluator,
    w: Vec<Vec<f64>>,
    ygrid: &TransverseGrid,
    k: usize,
) -> Result<PureShearCheck> {
    let front = evaluator.decomposer().front();
    let mut state = PerturbationState::zero(front.dim(), front.grid, ygrid.clone());
    if w.len() != ygrid.axes() {
        return Err(LabError::Shape("one w component per transverse axis".into()));
    }
    state.w = w;
    let ev = evaluator.eval(&state)?;
    let ww: Vec<f64> = (0..ygrid.total())
        .map(|i| state.w.iter().map(|c| c[i] * c[i]).sum())
        .collect();
    let k1 = ev.k1[0];
    let direct_mismatch = ev
        .f2
        .iter()
        .zip(&ww)
        .fold(0.0f64, |m, (a, b)| m.max((a - k1 * b).abs()));
    let w_refs: Vec<&[f64]> = state.w.iter().map(|x| x.as_slice()).collect();
    let f2_hk = sobolev_norm_y(&[&ev.f2], ygrid, k)?;
    let w_hk = sobolev_norm_y(&w_refs, ygrid, k)?;
    Ok(PureShearCheck {
        f2_hk,
        w_hk,
        k1,
        direct_mismatch,
        ratio: if w_hk > 0.0 { f2_hk / (w_hk * w_hk) } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::centered_grid;
    use crate::linalg::DiffOrder;
    use crate::projection::compute_adjoint;

    fn evaluator() -> NonlinearEvaluator {
        let sys = ReactionSystem::bistable(0.7).unwrap();
        let mut front = FrontProfile::bistable_exact(0.7, centered_grid(20.0, 0.1)).unwrap();
        front.compute_tail_rates(&sys).unwrap();
        let e = compute_adjoint(&front, &sys, &WeightSpec::new(0.2, 0.2), DiffOrder::Fourth).unwrap();
        NonlinearEvaluator::new(&sys, &front, &e).unwrap()
    }

    #[test]
    fn pure_shift_has_no_nonlinearity() {
        let ev = evaluator();
        let front = ev.decomposer().front().clone();
        let yg = TransverseGrid::line(8, 8.0);
        let mut s = PerturbationState::zero(1, front.grid, yg);
        s.q = vec![0.05; 8];
        let out = ev.eval(&s).unwrap();
        assert!(out.g.max_abs() < 1e-14);
        assert!(out.f1.max_abs() < 1e-14);
        assert!(out.f2.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn unshifted_coefficients() {
        let ev = evaluator();
        let front = ev.decomposer().front().clone();
        let yg = TransverseGrid::line(4, 4.0);
        let s = PerturbationState::zero(1, front.grid, yg);
        let out = ev.eval(&s).unwrap();
        let p = ev.decomposer().projector();
        let pi2 = p.pi_profile(&front.second_derivative());
        for (k1, k2) in out.k1.iter().zip(&out.k2) {
            assert!((k2 + 1.0).abs() < 1e-8);
            assert!((k1 + pi2).abs() < 1e-8);
        }
    }

    #[test]
    fn guard_fires_far_from_the_front() {
        let mut ev = evaluator();
        ev.pi_floor = 2.0;
        let front = ev.decomposer().front().clone();
        let s = PerturbationState::zero(1, front.grid, TransverseGrid::line(4, 4.0));
        assert!(matches!(ev.eval(&s), Err(LabError::DivisionGuard { .. })));
    }
}
