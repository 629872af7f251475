//! Essential spectra under exponential weights, weight selection and the
//! discretized spectrum of the linearization about a front.

use nalgebra::{DMatrix, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::front::{linearization, FrontProfile, Side};
use crate::linalg::{shift_invert_arnoldi, BandedMatrix, DiffOrder};
use crate::model::ReactionSystem;
use crate::norms::{WeightFunction, WeightSpec};

/// Eigenvalue branches of the weighted constant-coefficient symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct DispersionCurve {
    pub side: Option<Side>,
    pub alpha: f64,
    pub c: f64,
    pub theta: Vec<f64>,
    /// `branches[t][j]` is branch `j` at `theta[t]`.
    pub branches: Vec<Vec<Complex64>>,
    /// Index of the branch whose values at `-theta` are the conjugates.
    pub partner: Vec<usize>,
}

impl DispersionCurve {
    pub fn max_real(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (t, row) in self.theta.iter().zip(&self.branches) {
            for z in row {
                if z.re > best.0 {
                    best = (z.re, *t);
                }
            }
        }
        best
    }

    /// CSV with columns theta, branch_index, re_lambda, im_lambda.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "branch_index", "re_lambda", "im_lambda"])?;
        for (t, row) in self.theta.iter().zip(&self.branches) {
            for (j, z) in row.iter().enumerate() {
                w.write_record(&[t.to_string(), j.to_string(), z.re.to_string(), z.im.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `n` points symmetric about 0 on `[-20 max(c,1), 20 max(c,1)]`; `n` is
/// forced odd so that theta = 0 is sampled.
pub fn default_theta_grid(c: f64, n: usize) -> Vec<f64> {
    let n = if n.is_multiple_of(2) { n + 1 } else { n };
    let half = 20.0 * c.abs().max(1.0);
    (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

/// `lambda_j(theta) = mu_j(A) + (-theta^2 + alpha^2 - c alpha) + i theta (c - 2 alpha)`.
pub fn dispersion_curves(a: &DMatrix<f64>, c: f64, alpha: f64, theta: &[f64]) -> DispersionCurve {
    let mu: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
    let partner = conjugate_partners(&mu);
    let branches = theta
        .iter()
        .map(|&t| {
            let shift = Complex64::new(-t * t + alpha * alpha - c * alpha, t * (c - 2.0 * alpha));
            mu.iter().map(|m| m + shift).collect()
        })
        .collect();
    DispersionCurve {
        side: None,
        alpha,
        c,
        theta: theta.to_vec(),
        branches,
        partner,
    }
}

/// Branches of `det(D (i theta - alpha)^2 + c (i theta - alpha) + A - lambda) = 0`
/// for a diagonal diffusion matrix.
pub fn dispersion_curves_diffusive(
    a: &DMatrix<f64>,
    diffusion: &[f64],
    c: f64,
    alpha: f64,
    theta: &[f64],
) -> DispersionCurve {
    if diffusion.iter().all(|&d| d == 1.0) {
        return dispersion_curves(a, c, alpha, theta);
    }
    let n = a.nrows();
    let branches: Vec<Vec<Complex64>> = theta
        .iter()
        .map(|&t| {
            let k = Complex64::new(-alpha, t);
            let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
                let mut v = Complex64::new(a[(i, j)], 0.0);
                if i == j {
                    v += diffusion[i] * k * k + c * k;
                }
                v
            });
            let mut ev: Vec<Complex64> = m
                .schur()
                .eigenvalues()
                .map(|e| e.iter().copied().collect())
                .unwrap_or_default();
            ev.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap());
            ev
        })
        .collect();
    DispersionCurve {
        side: None,
        alpha,
        c,
        theta: theta.to_vec(),
        branches,
        partner: (0..n).collect(),
    }
}

fn conjugate_partners(mu: &[Complex64]) -> Vec<usize> {
    mu.iter()
        .map(|m| {
            let target = m.conj();
            (0..mu.len())
                .min_by(|&i, &j| {
                    (mu[i] - target)
                        .norm()
                        .partial_cmp(&(mu[j] - target).norm())
                        .unwrap()
                })
                .unwrap()
        })
        .collect()
}

/// Rightmost point of the essential spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbscissaReport {
    /// Closed form at theta = 0.
    pub value: f64,
    /// Maximum over the sampled theta grid.
    pub sampled: f64,
    pub minus: f64,
    pub plus: f64,
}

/// Curves at both rest states for a given weight.
pub fn rest_state_curves(
    front: &FrontProfile,
    sys: &ReactionSystem,
    alpha: &WeightSpec,
    theta: &[f64],
) -> Result<(DispersionCurve, DispersionCurve)> {
    let d = sys.diffusion();
    let am = sys.eval_jacobian(&front.phi_minus)?;
    let ap = sys.eval_jacobian(&front.phi_plus)?;
    let mut minus = dispersion_curves_diffusive(&am, &d, front.c, alpha.alpha_minus, theta);
    let mut plus = dispersion_curves_diffusive(&ap, &d, front.c, alpha.alpha_plus, theta);
    minus.side = Some(Side::Minus);
    plus.side = Some(Side::Plus);
    Ok((minus, plus))
}

pub fn side_abscissa(a: &DMatrix<f64>, c: f64, alpha: f64) -> f64 {
    let top = a
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    top + alpha * alpha - c * alpha
}

pub fn essential_abscissa(
    front: &FrontProfile,
    sys: &ReactionSystem,
    alpha: &WeightSpec,
) -> Result<AbscissaReport> {
    let am = sys.eval_jacobian(&front.phi_minus)?;
    let ap = sys.eval_jacobian(&front.phi_plus)?;
    let theta = default_theta_grid(front.c, 1024);
    let (cm, cp) = rest_state_curves(front, sys, alpha, &theta)?;
    let sampled = cm.max_real().0.max(cp.max_real().0);
    if !sys.has_identity_diffusion() {
        return Ok(AbscissaReport {
            value: sampled,
            sampled,
            minus: cm.max_real().0,
            plus: cp.max_real().0,
        });
    }
    let minus = side_abscissa(&am, front.c, alpha.alpha_minus);
    let plus = side_abscissa(&ap, front.c, alpha.alpha_plus);
    Ok(AbscissaReport {
        value: minus.max(plus),
        sampled,
        minus,
        plus,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub pass: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub alpha: WeightSpec,
    pub nu: f64,
    pub clause1: Clause,
    pub clause2: Clause,
    pub clause3: Clause,
    pub clause4: Option<Clause>,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.clause1.pass
            && self.clause2.pass
            && self.clause3.pass
            && self.clause4.as_ref().is_none_or(|c| c.pass)
    }
}

fn rates(front: &FrontProfile) -> Result<(f64, f64)> {
    match (front.omega_minus, front.omega_plus) {
        (Some(m), Some(p)) => Ok((m, p)),
        _ => Err(LabError::Precondition("front has no tail-rate data".into())),
    }
}

/// Checks the four admissibility clauses; the eigenvalue clause runs only
/// when `eigen` is given.
pub fn weight_admissibility(
    front: &FrontProfile,
    sys: &ReactionSystem,
    alpha: &WeightSpec,
    nu: f64,
    eigen: Option<&EigenSettings>,
) -> Result<AdmissibilityReport> {
    if !(nu > 0.0) {
        return Err(LabError::Precondition(format!("margin nu = {nu} must be positive")));
    }
    let (wm, wp) = rates(front)?;
    let am = alpha.alpha_minus;
    let ap = alpha.alpha_plus;
    let clause1 = Clause {
        pass: am > 0.0 && am < -wm,
        value: am,
        detail: format!("0 < {am} < {}", -wm),
    };
    let clause2 = Clause {
        pass: ap >= 0.0 && ap < wp,
        value: ap,
        detail: format!("0 <= {ap} < {wp}"),
    };
    let abs = essential_abscissa(front, sys, alpha)?;
    let clause3 = Clause {
        pass: abs.value < -nu,
        value: abs.value,
        detail: format!("abscissa {} < {}", abs.value, -nu),
    };
    let clause4 = match eigen {
        None => None,
        Some(settings) => {
            let spec = discrete_spectrum_1d(front, sys, alpha, settings)?;
            let right: Vec<Complex64> = spec
                .eigenvalues
                .iter()
                .copied()
                .filter(|z| z.re >= -nu / 2.0)
                .collect();
            let nearest = right.first().map_or(f64::INFINITY, |z| z.norm());
            Some(Clause {
                pass: right.len() == 1 && nearest < settings.zero_tol,
                value: nearest,
                detail: format!(
                    "{} eigenvalue(s) with Re >= {}; |lambda| = {nearest:.3e}",
                    right.len(),
                    -nu / 2.0
                ),
            })
        }
    };
    Ok(AdmissibilityReport {
        alpha: *alpha,
        nu,
        clause1,
        clause2,
        clause3,
        clause4,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Largest margin `-abscissa - nu` on the grid.
    #[default]
    MaxMargin,
    /// Smallest exponents, scanning alpha_+ from 0 and alpha_- upward.
    FirstAdmissible,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSearch {
    #[serde(default)]
    pub strategy: SearchStrategy,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    64
}

impl Default for WeightSearch {
    fn default() -> Self {
        Self {
            strategy: SearchStrategy::MaxMargin,
            resolution: default_resolution(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WeightSearchResult {
    Found { alpha: WeightSpec, abscissa: f64, margin: f64 },
    NotFound { best_abscissa: f64 },
}

impl WeightSearchResult {
    pub fn alpha(&self) -> Option<WeightSpec> {
        match self {
            Self::Found { alpha, .. } => Some(*alpha),
            Self::NotFound { .. } => None,
        }
    }
}

/// Grid search over `(0, -omega_-) x [0, omega_+)`.
pub fn find_weight(
    front: &FrontProfile,
    sys: &ReactionSystem,
    nu_target: f64,
    search: &WeightSearch,
) -> Result<WeightSearchResult> {
    if !(nu_target > 0.0) {
        return Err(LabError::Precondition("nu_target must be positive".into()));
    }
    let (wm, wp) = rates(front)?;
    let m = search.resolution.max(2);
    let am = sys.eval_jacobian(&front.phi_minus)?;
    let ap = sys.eval_jacobian(&front.phi_plus)?;
    let minus: Vec<(f64, f64)> = (1..=m)
        .map(|k| {
            let a = -wm * k as f64 / (m + 1) as f64;
            (a, side_abscissa(&am, front.c, a))
        })
        .collect();
    let plus: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let a = wp * k as f64 / m as f64;
            (a, side_abscissa(&ap, front.c, a))
        })
        .collect();
    let mut best: Option<(f64, f64, f64)> = None;
    for &(bp, sp) in &plus {
        for &(bm, sm) in &minus {
            let abscissa = sm.max(sp);
            if search.strategy == SearchStrategy::FirstAdmissible && abscissa < -nu_target {
                return Ok(WeightSearchResult::Found {
                    alpha: WeightSpec::new(bm, bp),
                    abscissa,
                    margin: -abscissa - nu_target,
                });
            }
            if best.is_none_or(|b| abscissa < b.2) {
                best = Some((bm, bp, abscissa));
            }
        }
    }
    let (bm, bp, abscissa) = best.expect("nonempty search grid");
    if abscissa < -nu_target && search.strategy == SearchStrategy::MaxMargin {
        Ok(WeightSearchResult::Found {
            alpha: WeightSpec::new(bm, bp),
            abscissa,
            margin: -abscissa - nu_target,
        })
    } else {
        Ok(WeightSearchResult::NotFound {
            best_abscissa: abscissa,
        })
    }
}

/// Eigensolver settings for the discretized linearization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSettings {
    #[serde(default)]
    pub order: DiffOrder,
    /// Largest matrix handled by the dense solver.
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
    /// Eigenpairs requested from the iterative solver and eigenvectors kept.
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
}

fn default_dense_limit() -> usize {
    2000
}

fn default_count() -> usize {
    6
}

fn default_zero_tol() -> f64 {
    1e-5
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self {
            order: DiffOrder::Fourth,
            dense_limit: default_dense_limit(),
            count: default_count(),
            zero_tol: default_zero_tol(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum1d {
    /// Sorted by decreasing real part.
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvectors (node-major over interior nodes) of the leading entries.
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// Whether the full spectrum was computed.
    pub dense: bool,
}

impl Spectrum1d {
    /// Index of the eigenvalue closest to 0.
    pub fn nearest_zero(&self) -> usize {
        (0..self.eigenvalues.len())
            .min_by(|&a, &b| {
                self.eigenvalues[a]
                    .norm()
                    .partial_cmp(&self.eigenvalues[b].norm())
                    .unwrap()
            })
            .unwrap_or(0)
    }
}

/// Spectrum of `gamma L_1 gamma^{-1}` on the front's grid.
pub fn discrete_spectrum_1d(
    front: &FrontProfile,
    sys: &ReactionSystem,
    alpha: &WeightSpec,
    settings: &EigenSettings,
) -> Result<Spectrum1d> {
    let weight = WeightFunction::new(*alpha);
    let a = linearization(sys, front, Some(&weight), settings.order);
    spectrum_of(&a, front.grid.spacing, settings)
}

pub(crate) fn spectrum_of(
    a: &BandedMatrix<f64>,
    spacing: f64,
    settings: &EigenSettings,
) -> Result<Spectrum1d> {
    let size = a.dim();
    let eig_err = |reason: &str| LabError::Eigen {
        size,
        spacing,
        reason: reason.to_string(),
    };
    let count = settings.count.min(size);
    if size <= settings.dense_limit {
        let dense = DMatrix::<f64>::from_fn_generic(Dyn(size), Dyn(size), |i, j| a.get(i, j));
        let mut ev: Vec<Complex64> = dense.complex_eigenvalues().iter().copied().collect();
        if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(eig_err("non-finite eigenvalues"));
        }
        ev.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
        let vectors = ev
            .iter()
            .take(count)
            .map(|&l| inverse_iteration(a, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Spectrum1d {
            eigenvalues: ev,
            eigenvectors: vectors,
            dense: true,
        })
    } else {
        let ca = a.map(|x| Complex64::new(x, 0.0));
        let shift = Complex64::new(1e-3, 0.0);
        let lu = ca.shifted(shift).factor()?;
        let mut pairs = shift_invert_arnoldi(size, shift, count, 80.min(size), |b| lu.solve(b));
        if pairs.is_empty() {
            return Err(eig_err("Arnoldi produced no Ritz values"));
        }
        pairs.sort_by(|x, y| y.0.re.partial_cmp(&x.0.re).unwrap());
        let mut values = Vec::new();
        let mut vectors = Vec::new();
        for (l, _) in pairs {
            let v = inverse_iteration(a, l)?;
            let av = ca.matvec(&v);
            let rq: Complex64 = crate::linalg::dot(&v, &av);
            values.push(rq);
            vectors.push(v);
        }
        Ok(Spectrum1d {
            eigenvalues: values,
            eigenvectors: vectors,
            dense: false,
        })
    }
}

/// Eigenvector for an eigenvalue estimate by shifted inverse iteration.
pub fn inverse_iteration(a: &BandedMatrix<f64>, lambda: Complex64) -> Result<Vec<Complex64>> {
    let n = a.dim();
    let scale = lambda.norm().max(1.0);
    let shift = lambda + Complex64::new(1e-10 * scale, 1e-10 * scale);
    let lu = a.map(|x| Complex64::new(x, 0.0)).shifted(shift).factor()?;
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.1 * ((i * 31) % 7) as f64, 0.0))
        .collect();
    crate::linalg::normalize(&mut v);
    for _ in 0..4 {
        lu.solve(&mut v);
        crate::linalg::normalize(&mut v);
    }
    // fix the phase so the largest entry is real and positive
    let (_, big) = v
        .iter()
        .enumerate()
        .fold((0, Complex64::new(0.0, 0.0)), |acc, (i, z)| {
            if z.norm() > acc.1.norm() {
                (i, *z)
            } else {
                acc
            }
        });
    if big.norm() > 0.0 {
        let phase = big.conj() / big.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
    Ok(v)
}

/// `|<a, b>| / (|a| |b|)` for a complex vector against a real one.
pub fn cosine_similarity(a: &[Complex64], b: &[f64]) -> f64 {
    let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot.norm() / (na * nb)
}

/// `{Re lambda <= re_max, Im lambda = im}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfLine {
    pub re_max: f64,
    pub im: f64,
}

impl HalfLine {
    pub fn contains(&self, lambda: Complex64, tol: f64) -> bool {
        (lambda.im - self.im).abs() <= tol && lambda.re <= self.re_max + tol
    }
}

/// Each point of the one-dimensional spectrum generates a horizontal
/// half-line of essential spectrum in the transverse directions.
pub fn multidim_essential_set(eta: &[Complex64]) -> Vec<HalfLine> {
    eta.iter()
        .map(|z| HalfLine {
            re_max: z.re,
            im: z.im,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn marginal_and_weighted_symbols() {
        let a = DMatrix::<f64>::zeros(2, 2);
        let theta = default_theta_grid(1.0, 1024);
        let (m, t) = dispersion_curves(&a, 1.0, 0.0, &theta).max_real();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-15);
        assert_eq!(t, 0.0);
        let (m, _) = dispersion_curves(&a, 1.0, 0.4, &theta).max_real();
        assert_abs_diff_eq!(m, -0.24, epsilon = 1e-14);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-0.7, -0.3]));
        let (m, _) = dispersion_curves(&d, 1.0, 0.0, &theta).max_real();
        assert_abs_diff_eq!(m, -0.3, epsilon = 1e-14);
    }

    #[test]
    fn branches_are_conjugate_symmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -3.0, 0.5]);
        let theta = default_theta_grid(0.7, 64);
        let curve = dispersion_curves(&a, 0.7, 0.2, &theta);
        let n = theta.len();
        for t in 0..n {
            for j in 0..2 {
                let mirrored = curve.branches[n - 1 - t][curve.partner[j]];
                assert!((mirrored - curve.branches[t][j].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn half_lines() {
        let set = multidim_essential_set(&[Complex64::new(0.0, 0.0), Complex64::new(-0.25, 0.0)]);
        assert!(set[0].contains(Complex64::new(-3.0, 0.0), 0.0));
        assert!(!set[0].contains(Complex64::new(0.1, 0.0), 0.0));
        assert!(set[1].contains(Complex64::new(-0.25, 0.0), 0.0));
        assert!(!set[1].contains(Complex64::new(-0.2, 0.0), 0.0));
        for s in [0.0, -0.5, -10.0] {
            assert!(set[1].contains(Complex64::new(-0.25 + s, 0.0), 0.0));
        }
    }
}
