//! Semigroup estimates: spectral abscissa on ran Q, the triangular blocks at
//! the rest state behind the front, and algebraic decay of the heat flow.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fit::{fit_power_law, FitWindow};
use super::AnalysisConfig;
use crate::error::{LabError, Result};
use crate::evolve::heat_propagate;
use crate::field::{TransverseFft, TransverseGrid};
use crate::front::{linear_fit, FrontProfile};
use crate::linalg::{DiffOrder, Stencil};
use crate::model::ReactionSystem;
use crate::norms::{l1_norm_y, sobolev_norm_y, WeightSpec};
use crate::spectrum::{discrete_spectrum_1d, EigenSettings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbscissaCheck {
    pub nu: f64,
    /// Eigenvalue removed as the translational one.
    pub translational: (f64, f64),
    /// Largest real part among the remaining eigenvalues.
    pub abscissa: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCheck {
    pub components: (usize, usize),
    pub times: Vec<f64>,
    /// Spectral norms of the matrix exponential at `times`.
    pub norms: Vec<f64>,
    /// `sup_t |e^{tL}| e^{rate t}`.
    pub constant: f64,
    /// Fitted exponential rate over the second half of the samples.
    pub fitted_rate: f64,
    /// Rate the block is required to decay with (0 for boundedness).
    pub required_rate: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatCheck {
    pub transverse_dims: usize,
    pub window: FitWindow,
    pub exponent: f64,
    pub expected: f64,
    pub gradient_exponent: f64,
    pub gradient_expected: f64,
    /// Fitted constant in `|S(t)u|_{H^k} <= C (1+t)^r |u|_{L1} + C e^{-bt} |u|_{H^k}`.
    pub hk_constant: f64,
    pub gradient_hk_constant: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupReport {
    pub abscissa: AbscissaCheck,
    pub bounded_block: Option<BlockCheck>,
    pub decaying_block: Option<BlockCheck>,
    pub heat: HeatCheck,
}

/// Spectral abscissa of the conjugated linearization after removing the
/// eigenvalue nearest 0.
pub fn q_restricted_abscissa(
    front: &FrontProfile,
    sys: &ReactionSystem,
    alpha: &WeightSpec,
    nu: f64,
    tol: f64,
    settings: &EigenSettings,
) -> Result<AbscissaCheck> {
    let spec = discrete_spectrum_1d(front, sys, alpha, settings)?;
    let zero = spec.nearest_zero();
    let abscissa = spec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != zero)
        .map(|(_, z)| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let t = spec.eigenvalues[zero];
    Ok(AbscissaCheck {
        nu,
        translational: (t.re, t.im),
        abscissa,
        pass: abscissa <= -nu + tol,
    })
}

/// `D d_zz + c d_z + A` on the components `comps`, Dirichlet closure,
/// node-major dense matrix.
fn block_operator(
    sys: &ReactionSystem,
    front: &FrontProfile,
    comps: std::ops::Range<usize>,
    a: &DMatrix<f64>,
    order: DiffOrder,
) -> DMatrix<f64> {
    let len = front.grid.len;
    let h = front.grid.spacing;
    let m = len - 2;
    let nb = comps.len();
    let d = sys.diffusion();
    let mut out = DMatrix::zeros(m * nb, m * nb);
    for i in 1..len - 1 {
        let st = Stencil::at(order, i, len, h);
        for (lj, j) in comps.clone().enumerate() {
            let row = (i - 1) * nb + lj;
            for o in 0..5 {
                let k = i as isize + o as isize - 2;
                if k < 1 || k > (len - 2) as isize {
                    continue;
                }
                out[(row, (k as usize - 1) * nb + lj)] += d[j] * st.d2[o] + front.c * st.d1[o];
            }
            for (ll, l) in comps.clone().enumerate() {
                out[(row, (i - 1) * nb + ll)] += a[(j, l)];
            }
        }
    }
    out
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

fn block_check(
    sys: &ReactionSystem,
    front: &FrontProfile,
    comps: std::ops::Range<usize>,
    required_rate: f64,
    order: DiffOrder,
    slack: f64,
) -> Result<BlockCheck> {
    let jac = sys.eval_jacobian(&front.phi_minus)?;
    let op = block_operator(sys, front, comps.clone(), &jac, order);
    let times = vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0];
    let norms: Vec<f64> = times.iter().map(|&t| spectral_norm(&(op.clone() * t).exp())).collect();
    let constant = times
        .iter()
        .zip(&norms)
        .map(|(t, n)| n * (required_rate * t).exp())
        .fold(0.0, f64::max);
    let half = times.len() / 2;
    let (xs, ys): (Vec<f64>, Vec<f64>) = times[half..]
        .iter()
        .zip(&norms[half..])
        .map(|(t, n)| (*t, n.max(f64::MIN_POSITIVE).ln()))
        .unzip();
    let fitted_rate = linear_fit(&xs, &ys).map_or(f64::NAN, |f| -f.0);
    let early = norms[..half].iter().cloned().fold(0.0, f64::max);
    let late = *norms.last().unwrap();
    let pass = if required_rate > 0.0 {
        fitted_rate >= required_rate * (1.0 - slack)
    } else {
        late <= early * (1.0 + slack)
    };
    Ok(BlockCheck {
        components: (comps.start, comps.end),
        times,
        norms,
        constant,
        fitted_rate,
        required_rate,
        pass,
    })
}

/// Decay rate of the stable block: minus the largest real part of the
/// eigenvalues of its reaction matrix at the rest state behind the front.
pub fn stable_block_rate(sys: &ReactionSystem, front: &FrontProfile) -> Result<f64> {
    let (n1, _) = sys.split();
    let n = sys.dim();
    let jac = sys.eval_jacobian(&front.phi_minus)?;
    let block = jac.view((n1, n1), (n - n1, n - n1)).into_owned();
    Ok(-block
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Transverse grid used for the heat-flow fits.
fn heat_grid(dims: usize) -> Result<(TransverseGrid, f64)> {
    match dims {
        1 => Ok((TransverseGrid::new(vec![4096], vec![2000.0])?, 1000.0)),
        2 => Ok((TransverseGrid::new(vec![512, 512], vec![400.0, 400.0])?, 200.0)),
        _ => Err(LabError::Precondition(format!("{dims} transverse dimensions"))),
    }
}

/// Heat-flow decay from L1-normalized data: the heat kernel at time 1, so
/// that `|S(t)u|_{L2}` is exactly proportional to `(1+t)^{-dims/4}`.
pub fn heat_decay(dims: usize, k: usize, beta: f64, window: FitWindow, cfg: &AnalysisConfig) -> Result<HeatCheck> {
    let (grid, t_max) = heat_grid(dims)?;
    let norm = (4.0 * std::f64::consts::PI).powf(dims as f64 / 2.0);
    let u0 = grid.sample(|y| (-y.iter().map(|x| x * x).sum::<f64>() / 4.0).exp() / norm);
    let l1 = l1_norm_y(&u0, &grid);
    let hk0 = sobolev_norm_y(&[&u0], &grid, k)?;
    let fft = TransverseFft::new(&grid);
    let times: Vec<f64> = (0..40)
        .map(|i| t_max.powf(i as f64 / 39.0))
        .chain(std::iter::once(0.0))
        .collect();
    let mut l2 = Vec::new();
    let mut grad_l2 = Vec::new();
    let mut hk_const: f64 = 0.0;
    let mut grad_const: f64 = 0.0;
    let r = dims as f64 / 4.0;
    for &t in &times {
        let u = heat_propagate(&u0, &grid, t);
        let g = fft.gradient(&u);
        let g_refs: Vec<&[f64]> = g.iter().map(|x| x.as_slice()).collect();
        l2.push(sobolev_norm_y(&[&u], &grid, 0)?);
        grad_l2.push(sobolev_norm_y(&g_refs, &grid, 0)?);
        let hk = sobolev_norm_y(&[&u], &grid, k)?;
        let ghk = sobolev_norm_y(&g_refs, &grid, k)?;
        hk_const = hk_const.max(hk / ((1.0 + t).powf(-r) * l1 + (-beta * t).exp() * hk0));
        if t > 0.0 {
            grad_const = grad_const.max(
                ghk / ((1.0 + t).powf(-r - 0.5) * l1 + t.powf(-0.5) * (-beta * t).exp() * hk0),
            );
        }
    }
    let fit = fit_power_law(&times, &l2, window)?;
    let gfit = fit_power_law(&times, &grad_l2, window)?;
    let expected = -r;
    let gradient_expected = -(dims as f64 + 2.0) / 4.0;
    let tol = &cfg.tolerances;
    Ok(HeatCheck {
        transverse_dims: dims,
        window,
        exponent: fit.exponent,
        expected,
        gradient_exponent: gfit.exponent,
        gradient_expected,
        hk_constant: hk_const,
        gradient_hk_constant: grad_const,
        pass: (fit.exponent - expected).abs() <= tol.heat_exponent
            && (gfit.exponent - gradient_expected).abs() <= tol.heat_gradient_exponent
            && hk_const.is_finite()
            && grad_const.is_finite(),
    })
}

/// Runs the three semigroup checks for a front in dimension `d`.
pub fn verify_semigroup_bounds(
    front: &FrontProfile,
    sys: &ReactionSystem,
    alpha: &WeightSpec,
    cfg: &AnalysisConfig,
    d: usize,
    k: usize,
) -> Result<SemigroupReport> {
    let nu = cfg.nu_for(front.c);
    let settings = EigenSettings::default();
    let abscissa = q_restricted_abscissa(front, sys, alpha, nu, cfg.tolerances.abscissa, &settings)?;
    let (n1, n2) = sys.split();
    let slack = cfg.tolerances.bound_slack;
    let bounded_block = if n1 > 0 {
        Some(block_check(sys, front, 0..n1, 0.0, settings.order, slack)?)
    } else {
        None
    };
    let decaying_block = if n2 > 0 {
        let rho = match cfg.rho {
            Some(r) => r,
            None => stable_block_rate(sys, front)?,
        };
        Some(block_check(sys, front, n1..n1 + n2, rho, settings.order, slack)?)
    } else {
        None
    };
    let window = FitWindow {
        t_min: cfg.fit_window.t_min,
        t_max: None,
    };
    let heat = heat_decay(d - 1, k, cfg.beta_or_default(), window, cfg)?;
    Ok(SemigroupReport {
        abscissa,
        bounded_block,
        decaying_block,
        heat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_rates_one_dimension() {
        let cfg = AnalysisConfig::default();
        let h = heat_decay(1, 2, 1.0, FitWindow::default(), &cfg).unwrap();
        assert!((h.exponent + 0.25).abs() < 0.03, "{}", h.exponent);
        assert!((h.gradient_exponent + 0.75).abs() < 0.05, "{}", h.gradient_exponent);
        assert!(h.pass);
    }
}
