//! Traveling-wave profiles: Newton collocation for `phi'' + c phi' + f(phi) = 0`
//! and the exponential tail rates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, LabError, Result};
use crate::field::UniformGrid;
use crate::linalg::{BandedMatrix, DiffOrder, Stencil};
use crate::model::{ModelKind, ReactionSystem};
use crate::norms::WeightFunction;
use crate::spline::ClampedSpline;

pub const FRONT_SCHEMA: &str = "front/1";

/// Affine change of variables applied to present the state behind the front
/// at the origin: `stored = presented + shift`, with `z -> -z` if reflected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontTransform {
    pub shift: Vec<f64>,
    pub reflected: bool,
}

/// Roots of `det(D mu^2 + c mu + A) = 0` at a rest state.
#[derive(Clone, Debug, PartialEq)]
pub struct RateSet {
    pub roots: Vec<Complex64>,
    /// A root lies on the imaginary axis (non-hyperbolic rest state).
    pub marginal: bool,
}

impl RateSet {
    pub fn positive(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.roots.iter().map(|z| z.re).filter(|&r| r > MARGINAL).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    pub fn negative(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.roots.iter().map(|z| z.re).filter(|&r| r < -MARGINAL).collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    }
}

const MARGINAL: f64 = 1e-9;

pub fn asymptotic_rates(sys: &ReactionSystem, c: f64, rest: &[f64]) -> Result<RateSet> {
    let a = sys.eval_jacobian(rest)?;
    let d = sys.diffusion();
    Ok(companion_roots(&a, &d, c))
}

/// Eigenvalues of the companion linearization of `D mu^2 + c mu + A`.
pub fn companion_roots(a: &DMatrix<f64>, diffusion: &[f64], c: f64) -> RateSet {
    let n = a.nrows();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = 1.0;
        for j in 0..n {
            m[(n + i, j)] = -a[(i, j)] / diffusion[i];
        }
        m[(n + i, n + i)] = -c / diffusion[i];
    }
    let roots: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    let marginal = roots.iter().any(|z| z.re.abs() < MARGINAL);
    RateSet { roots, marginal }
}

/// Log-linear fit of `|phi - rest|` over one tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Fitted exponent: `|phi - rest| ~ K exp(slope * z)`.
    pub slope: f64,
    pub log_k: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Clone, Debug)]
pub struct FrontProfile {
    pub grid: UniformGrid,
    n: usize,
    values: Vec<f64>,
    pub c: f64,
    pub phi_minus: Vec<f64>,
    pub phi_plus: Vec<f64>,
    pub omega_minus: Option<f64>,
    pub omega_plus: Option<f64>,
    pub transform: FrontTransform,
    splines: Vec<ClampedSpline>,
}

#[derive(Serialize, Deserialize)]
struct FrontFile {
    schema: String,
    grid: GridFile,
    values: Vec<Vec<f64>>,
    c: f64,
    phi_minus: Vec<f64>,
    phi_plus: Vec<f64>,
    omega: OmegaFile,
    transform: FrontTransform,
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct GridFile {
    L: f64,
    h: f64,
    n_nodes: usize,
}

#[derive(Serialize, Deserialize)]
struct OmegaFile {
    minus: Option<f64>,
    plus: Option<f64>,
}

impl FrontProfile {
    /// Builds a profile from node-major values (`values[i * n + j]`).
    pub fn new(
        grid: UniformGrid,
        n: usize,
        values: Vec<f64>,
        c: f64,
        phi_minus: Vec<f64>,
        phi_plus: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != grid.len * n || phi_minus.len() != n || phi_plus.len() != n {
            return Err(LabError::Shape(format!(
                "{} values for {} nodes of dimension {n}",
                values.len(),
                grid.len
            )));
        }
        ensure_finite(&values, "front profile")?;
        let splines = (0..n)
            .map(|j| {
                let y: Vec<f64> = (0..grid.len).map(|i| values[i * n + j]).collect();
                ClampedSpline::new(grid.start, grid.spacing, y)
            })
            .collect();
        let shift = phi_minus.clone();
        Ok(Self {
            grid,
            n,
            values,
            c,
            phi_minus,
            phi_plus,
            omega_minus: None,
            omega_plus: None,
            transform: FrontTransform {
                shift,
                reflected: false,
            },
            splines,
        })
    }

    /// Profile sampled from `f(z)` on `grid`.
    pub fn from_fn(
        grid: UniformGrid,
        c: f64,
        phi_minus: Vec<f64>,
        phi_plus: Vec<f64>,
        f: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self> {
        let n = phi_minus.len();
        let mut values = Vec::with_capacity(grid.len * n);
        for i in 0..grid.len {
            let v = f(grid.node(i));
            if v.len() != n {
                return Err(LabError::Shape("profile sample of wrong dimension".into()));
            }
            values.extend(v);
        }
        Self::new(grid, n, values, c, phi_minus, phi_plus)
    }

    /// `phi_- + (phi_+ - phi_-) (1 + tanh(z / width)) / 2`.
    pub fn tanh_seed(
        grid: UniformGrid,
        phi_minus: Vec<f64>,
        phi_plus: Vec<f64>,
        c: f64,
        width: f64,
    ) -> Result<Self> {
        let (a, b) = (phi_minus.clone(), phi_plus.clone());
        Self::from_fn(grid, c, phi_minus, phi_plus, move |z| {
            let s = 0.5 * (1.0 + (z / width).tanh());
            a.iter().zip(&b).map(|(x, y)| x + (y - x) * s).collect()
        })
    }

    /// Closed-form front of the bistable cubic, `1 / (1 + exp(-z / sqrt 2))`.
    pub fn bistable_exact(a: f64, grid: UniformGrid) -> Result<Self> {
        let c = std::f64::consts::SQRT_2 * (a - 0.5);
        Self::from_fn(grid, c, vec![0.0], vec![1.0], |z| {
            vec![1.0 / (1.0 + (-z / std::f64::consts::SQRT_2).exp())]
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.len
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn component(&self, j: usize) -> Vec<f64> {
        (0..self.grid.len).map(|i| self.values[i * self.n + j]).collect()
    }

    /// Values with the recorded shift removed (state behind the front at 0).
    pub fn presented_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| v - self.transform.shift[k % self.n])
            .collect()
    }

    /// phi, phi', phi'' at an arbitrary point from the profile splines.
    pub fn eval(&self, z: f64, value: &mut [f64], d1: &mut [f64], d2: &mut [f64]) {
        for (j, s) in self.splines.iter().enumerate() {
            let (v, d, dd) = s.eval_all(z);
            value[j] = v;
            d1[j] = d;
            d2[j] = dd;
        }
    }

    /// Spline derivative at the nodes, node-major.
    pub fn derivative(&self) -> Vec<f64> {
        self.sampled(|s, z| s.eval_all(z).1)
    }

    pub fn second_derivative(&self) -> Vec<f64> {
        self.sampled(|s, z| s.eval_all(z).2)
    }

    fn sampled(&self, f: impl Fn(&ClampedSpline, f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        for i in 0..self.grid.len {
            let z = self.grid.node(i);
            for (j, s) in self.splines.iter().enumerate() {
                out[i * self.n + j] = f(s, z);
            }
        }
        out
    }

    /// Profile re-sampled on another grid.
    pub fn resample(&self, grid: UniformGrid) -> Result<Self> {
        let mut out = Self::from_fn(
            grid,
            self.c,
            self.phi_minus.clone(),
            self.phi_plus.clone(),
            |z| self.splines.iter().map(|s| s.eval(z)).collect(),
        )?;
        out.omega_minus = self.omega_minus;
        out.omega_plus = self.omega_plus;
        out.transform = self.transform.clone();
        Ok(out)
    }

    /// The same front translated so that it sits at `z + shift`.
    pub fn translated(&self, shift: f64) -> Result<Self> {
        let mut out = Self::from_fn(
            self.grid,
            self.c,
            self.phi_minus.clone(),
            self.phi_plus.clone(),
            |z| self.splines.iter().map(|s| s.eval(z - shift)).collect(),
        )?;
        out.omega_minus = self.omega_minus;
        out.omega_plus = self.omega_plus;
        Ok(out)
    }

    /// Mirror image `z -> -z`; the speed changes sign and the rest states swap.
    pub fn reflected(&self) -> Result<Self> {
        let mut values = Vec::with_capacity(self.values.len());
        for i in (0..self.grid.len).rev() {
            values.extend_from_slice(self.node(i));
        }
        let mut out = Self::new(
            self.grid,
            self.n,
            values,
            -self.c,
            self.phi_plus.clone(),
            self.phi_minus.clone(),
        )?;
        out.omega_minus = self.omega_plus.map(|w| -w);
        out.omega_plus = self.omega_minus.map(|w| -w);
        out.transform = FrontTransform {
            shift: out.phi_minus.clone(),
            reflected: !self.transform.reflected,
        };
        Ok(out)
    }

    /// Component with the largest jump between the rest states (first on ties).
    pub fn phase_component(&self) -> usize {
        phase_component(&self.phi_minus, &self.phi_plus)
    }

    pub fn tail_fit(&self, side: Side) -> Option<TailFit> {
        let l = self.grid.half_length();
        let (rest, lo, hi) = match side {
            Side::Minus => (&self.phi_minus, -0.9 * l, -0.5 * l),
            Side::Plus => (&self.phi_plus, 0.5 * l, 0.9 * l),
        };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..self.grid.len {
            let z = self.grid.node(i);
            if z < lo || z > hi {
                continue;
            }
            let d = self
                .node(i)
                .iter()
                .zip(rest.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d > 1e-12 {
                xs.push(z);
                ys.push(d.ln());
            }
        }
        linear_fit(&xs, &ys).map(|(slope, log_k, r_squared)| TailFit {
            slope,
            log_k,
            r_squared,
            points: xs.len(),
        })
    }

    /// Fills `omega_minus` / `omega_plus` from the linearization at the rest
    /// states, picking the root that matches the profile's own tail.
    pub fn compute_tail_rates(&mut self, sys: &ReactionSystem) -> Result<()> {
        let minus = asymptotic_rates(sys, self.c, &self.phi_minus)?;
        let plus = asymptotic_rates(sys, self.c, &self.phi_plus)?;
        let pick = |cands: Vec<f64>, fit: Option<TailFit>| -> Option<f64> {
            match fit {
                Some(f) if f.r_squared > 0.9 => cands
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - f.slope).abs().partial_cmp(&(b - f.slope).abs()).unwrap()),
                _ => cands.first().copied(),
            }
        };
        self.omega_minus = pick(minus.positive(), self.tail_fit(Side::Minus)).map(|r| -r);
        self.omega_plus = pick(plus.negative(), self.tail_fit(Side::Plus)).map(|r| -r);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = FrontFile {
            schema: FRONT_SCHEMA.to_string(),
            grid: GridFile {
                L: self.grid.half_length(),
                h: self.grid.spacing,
                n_nodes: self.grid.len,
            },
            values: (0..self.grid.len).map(|i| self.node(i).to_vec()).collect(),
            c: self.c,
            phi_minus: self.phi_minus.clone(),
            phi_plus: self.phi_plus.clone(),
            omega: OmegaFile {
                minus: self.omega_minus,
                plus: self.omega_plus,
            },
            transform: self.transform.clone(),
        };
        let value = serde_json::to_value(&file)?;
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FrontFile = serde_json::from_str(text)?;
        if file.schema != FRONT_SCHEMA {
            return Err(LabError::Config(format!("unsupported front schema `{}`", file.schema)));
        }
        let n = file.phi_minus.len();
        let grid = UniformGrid::centered(file.grid.L, file.grid.n_nodes);
        let values: Vec<f64> = file.values.into_iter().flatten().collect();
        let mut out = Self::new(grid, n, values, file.c, file.phi_minus, file.phi_plus)?;
        out.omega_minus = file.omega.minus;
        out.omega_plus = file.omega.plus;
        out.transform = file.transform;
        Ok(out)
    }
}

pub(crate) fn phase_component(minus: &[f64], plus: &[f64]) -> usize {
    let mut best = 0;
    let mut jump = -1.0;
    for (j, (a, b)) in minus.iter().zip(plus).enumerate() {
        let d = (b - a).abs();
        if d > jump + 1e-14 {
            best = j;
            jump = d;
        }
    }
    best
}

/// Least squares `y = a x + b`; returns (a, b, R^2).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 3 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, my - slope * mx, r2))
}

/// Pointwise residual `D phi'' + c phi' + f(phi)` at interior nodes.
pub fn residual(sys: &ReactionSystem, front: &FrontProfile, order: DiffOrder) -> Vec<f64> {
    let n = front.n;
    let len = front.grid.len;
    let h = front.grid.spacing;
    let d = sys.diffusion();
    let mut out = vec![0.0; (len - 2) * n];
    let mut fv = vec![0.0; n];
    for i in 1..len - 1 {
        let st = Stencil::at(order, i, len, h);
        sys.f_into(front.node(i), &mut fv);
        for j in 0..n {
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            for o in 0..5 {
                let k = i as isize + o as isize - 2;
                if k < 0 || k >= len as isize {
                    continue;
                }
                let v = front.values[k as usize * n + j];
                d1 += st.d1[o] * v;
                d2 += st.d2[o] * v;
            }
            out[(i - 1) * n + j] = d[j] * d2 + front.c * d1 + fv[j];
        }
    }
    out
}

pub fn max_residual(sys: &ReactionSystem, front: &FrontProfile, order: DiffOrder) -> f64 {
    residual(sys, front, order).iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Discretization of the conjugated operator
/// `gamma (D d_zz + c d_z + df(phi)) gamma^{-1}` on interior nodes with
/// homogeneous Dirichlet closure; unknowns are ordered node-major.
pub fn linearization(
    sys: &ReactionSystem,
    front: &FrontProfile,
    weight: Option<&WeightFunction>,
    order: DiffOrder,
) -> BandedMatrix<f64> {
    let n = front.n;
    let len = front.grid.len;
    let h = front.grid.spacing;
    let m = len - 2;
    let d = sys.diffusion();
    let band = 3 * n - 1;
    let mut a = BandedMatrix::zeros(m * n, band, band);
    let mut jac = vec![0.0; n * n];
    for i in 1..len - 1 {
        let st = Stencil::at(order, i, len, h);
        let z = front.grid.node(i);
        let (s1, s2) = match weight {
            Some(w) => {
                let (_, s1, s2) = w.sigma_all(z);
                (s1, s2)
            }
            None => (0.0, 0.0),
        };
        sys.jacobian_into(front.node(i), &mut jac);
        let row0 = (i - 1) * n;
        for j in 0..n {
            let drift = front.c - 2.0 * d[j] * s1;
            let potential = d[j] * (s1 * s1 - s2) - front.c * s1;
            for o in 0..5 {
                let k = i as isize + o as isize - 2;
                if k < 1 || k > (len - 2) as isize {
                    continue;
                }
                let w = d[j] * st.d2[o] + drift * st.d1[o];
                if w != 0.0 {
                    a.add(row0 + j, (k as usize - 1) * n + j, w);
                }
            }
            a.add(row0 + j, row0 + j, potential);
            for l in 0..n {
                let v = jac[j * n + l];
                if v != 0.0 {
                    a.add(row0 + j, row0 + l, v);
                }
            }
        }
    }
    a
}

/// Newton-collocation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontSolver {
    /// Half-length of the domain; `None` picks `40 / min(|omega_-|, omega_+)`.
    #[serde(default)]
    pub half_length: Option<f64>,
    pub spacing: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub order: DiffOrder,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    50
}

impl Default for FrontSolver {
    fn default() -> Self {
        Self {
            half_length: None,
            spacing: 0.05,
            tol: default_tol(),
            max_iter: default_max_iter(),
            order: DiffOrder::Fourth,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Default truncation `40 / min(|omega_-|, omega_+)`, from the rates of the
/// linearization at the guess's speed.
pub fn default_half_length(sys: &ReactionSystem, guess: &FrontProfile) -> Result<f64> {
    let minus = asymptotic_rates(sys, guess.c, &guess.phi_minus)?;
    let plus = asymptotic_rates(sys, guess.c, &guess.phi_plus)?;
    let wm = minus.positive().first().copied();
    let wp = plus.negative().first().map(|r| -r);
    match (wm, wp) {
        (Some(a), Some(b)) => Ok(40.0 / a.min(b)),
        _ => Err(LabError::Precondition(
            "rest states have no exponential approach directions".into(),
        )),
    }
}

/// Odd node count so that z = 0 is a node, with spacing at most `h`.
pub fn centered_grid(half_length: f64, h: f64) -> UniformGrid {
    let mut n = (2.0 * half_length / h).ceil() as usize + 1;
    if n.is_multiple_of(2) {
        n += 1;
    }
    UniformGrid::centered(half_length, n.max(5))
}

impl FrontSolver {
    pub fn solve(&self, sys: &ReactionSystem, guess: &FrontProfile) -> Result<FrontProfile> {
        self.solve_with_stats(sys, guess).map(|(p, _)| p)
    }

    pub fn solve_with_stats(
        &self,
        sys: &ReactionSystem,
        guess: &FrontProfile,
    ) -> Result<(FrontProfile, SolveStats)> {
        if guess.dim() != sys.dim() {
            return Err(LabError::Shape("guess dimension differs from the system".into()));
        }
        let jump: f64 = guess
            .phi_minus
            .iter()
            .zip(&guess.phi_plus)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if jump < 1e-12 {
            return Err(LabError::DegenerateFront);
        }
        for rest in [&guess.phi_minus, &guess.phi_plus] {
            let f = sys.eval_f(rest)?;
            let r = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if r >= 1e-10 {
                return Err(LabError::NotAnEquilibrium(r));
            }
        }
        let half_length = match self.half_length {
            Some(l) => l,
            None => default_half_length(sys, guess)?,
        };
        let grid = centered_grid(half_length, self.spacing);
        let start = if guess.grid.same_as(&grid) {
            guess.clone()
        } else {
            guess.resample(grid)?
        };
        let (mut front, stats) = newton(sys, start, self)?;
        if front.c < 0.0 {
            front = front.reflected()?;
        }
        front.compute_tail_rates(sys)?;
        Ok((front, stats))
    }
}

fn newton(
    sys: &ReactionSystem,
    mut front: FrontProfile,
    cfg: &FrontSolver,
) -> Result<(FrontProfile, SolveStats)> {
    let n = front.n;
    let len = front.grid.len;
    let interior = len - 2;
    let m = n + 1;
    let mid = (len - 1) / 2 - 1;
    let jp = front.phase_component();
    let target = 0.5 * (front.phi_minus[jp] + front.phi_plus[jp]);
    // Dirichlet closure at the rest states.
    front.values[..n].copy_from_slice(&front.phi_minus.clone());
    let last = (len - 1) * n;
    front.values[last..].copy_from_slice(&front.phi_plus.clone());

    let mut x = vec![0.0; interior * m];
    for k in 0..interior {
        x[k * m..k * m + n].copy_from_slice(front.node(k + 1));
        x[k * m + n] = front.c;
    }
    let h = front.grid.spacing;
    let d = sys.diffusion();
    let full = |x: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; len * n];
        v[..n].copy_from_slice(&front.phi_minus);
        v[last..].copy_from_slice(&front.phi_plus);
        for k in 0..interior {
            v[(k + 1) * n..(k + 2) * n].copy_from_slice(&x[k * m..k * m + n]);
        }
        v
    };
    let eval = |x: &[f64]| -> Vec<f64> {
        let v = full(x);
        let mut r = vec![0.0; interior * m];
        let mut fv = vec![0.0; n];
        for k in 0..interior {
            let i = k + 1;
            let st = Stencil::at(cfg.order, i, len, h);
            let c = x[k * m + n];
            sys.f_into(&v[i * n..(i + 1) * n], &mut fv);
            for j in 0..n {
                let (mut d1, mut d2) = (0.0, 0.0);
                for o in 0..5 {
                    let q = i as isize + o as isize - 2;
                    if q < 0 || q >= len as isize {
                        continue;
                    }
                    let val = v[q as usize * n + j];
                    d1 += st.d1[o] * val;
                    d2 += st.d2[o] * val;
                }
                r[k * m + j] = d[j] * d2 + c * d1 + fv[j];
            }
            r[k * m + n] = match k.cmp(&mid) {
                std::cmp::Ordering::Less => c - x[(k + 1) * m + n],
                std::cmp::Ordering::Equal => x[k * m + jp] - target,
                std::cmp::Ordering::Greater => c - x[(k - 1) * m + n],
            };
        }
        r
    };
    let inf = |r: &[f64]| r.iter().fold(0.0f64, |a, b| a.max(b.abs()));

    let mut r = eval(&x);
    let mut res = inf(&r);
    let mut it = 0;
    while res >= cfg.tol {
        if it >= cfg.max_iter || !res.is_finite() {
            return Err(LabError::Solver {
                iterations: it,
                residual: res,
            });
        }
        it += 1;
        let v = full(&x);
        let mut jmat = BandedMatrix::<f64>::zeros(interior * m, 2 * m, 2 * m);
        let mut jac = vec![0.0; n * n];
        for k in 0..interior {
            let i = k + 1;
            let st = Stencil::at(cfg.order, i, len, h);
            let c = x[k * m + n];
            sys.jacobian_into(&v[i * n..(i + 1) * n], &mut jac);
            for j in 0..n {
                let row = k * m + j;
                let mut dc = 0.0;
                for o in 0..5 {
                    let q = i as isize + o as isize - 2;
                    if q < 0 || q >= len as isize {
                        continue;
                    }
                    dc += st.d1[o] * v[q as usize * n + j];
                    if q >= 1 && q <= interior as isize {
                        let w = d[j] * st.d2[o] + c * st.d1[o];
                        if w != 0.0 {
                            jmat.add(row, (q as usize - 1) * m + j, w);
                        }
                    }
                }
                for l in 0..n {
                    jmat.add(row, k * m + l, jac[j * n + l]);
                }
                jmat.add(row, k * m + n, dc);
            }
            let row = k * m + n;
            match k.cmp(&mid) {
                std::cmp::Ordering::Less => {
                    jmat.add(row, row, 1.0);
                    jmat.add(row, (k + 1) * m + n, -1.0);
                }
                std::cmp::Ordering::Equal => jmat.add(row, k * m + jp, 1.0),
                std::cmp::Ordering::Greater => {
                    jmat.add(row, row, 1.0);
                    jmat.add(row, (k - 1) * m + n, -1.0);
                }
            }
        }
        let lu = jmat.factor()?;
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        lu.solve(&mut delta);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + lambda * b).collect();
            let rt = eval(&trial);
            let rn = inf(&rt);
            if rn.is_finite() && (rn < res * (1.0 - 1e-4 * lambda) || lambda < 1.0 / 512.0) {
                x = trial;
                r = rt;
                res = rn;
                break;
            }
            lambda *= 0.5;
        }
        log::debug!("front newton step {it}: residual {res:.3e}, damping {lambda}");
    }
    let v = full(&x);
    let c = x[mid * m + n];
    let mut out = FrontProfile::new(
        front.grid,
        n,
        v,
        c,
        front.phi_minus.clone(),
        front.phi_plus.clone(),
    )?;
    out.transform = front.transform.clone();
    Ok((
        out,
        SolveStats {
            iterations: it,
            residual: res,
        },
    ))
}

/// Combustion front at `kappa` by continuation from a tanh seed at kappa = 1.
pub fn combustion_front(sys: &ReactionSystem, solver: &FrontSolver) -> Result<FrontProfile> {
    let (epsilon, kappa) = match &sys.kind {
        ModelKind::Combustion(p) => (p.epsilon, p.kappa),
        _ => return Err(LabError::Precondition("continuation needs the combustion model".into())),
    };
    let seed_half = solver.half_length.unwrap_or(40.0).min(60.0);
    let seed_grid = centered_grid(seed_half, solver.spacing.max(0.1));
    let start = ReactionSystem::combustion(epsilon, 1.0)?.with_mode(sys.mode);
    let seed = FrontProfile::tanh_seed(seed_grid, vec![1.0, 0.0], vec![0.0, 1.0], 0.5, 2.0)?;
    let coarse = FrontSolver {
        half_length: Some(seed_half),
        spacing: seed_grid.spacing,
        ..*solver
    };
    let mut front = coarse.solve(&start, &seed)?;
    let steps = ((kappa.ln()).abs() / 1.3f64.ln()).ceil() as usize;
    let mut k_prev = 1.0;
    for s in 1..=steps {
        let k = (kappa.ln() * s as f64 / steps as f64).exp();
        front = rescale_kappa(&front, k_prev, k)?;
        let step_sys = ReactionSystem::combustion(epsilon, k)?.with_mode(sys.mode);
        front = coarse.solve(&step_sys, &front)?;
        k_prev = k;
    }
    solver.solve(sys, &front)
}

fn rescale_kappa(front: &FrontProfile, from: f64, to: f64) -> Result<FrontProfile> {
    let ratio = from / to;
    let mut values = front.values().to_vec();
    for i in 0..front.n_nodes() {
        values[i * 2] *= ratio;
    }
    FrontProfile::new(
        front.grid,
        2,
        values,
        front.c,
        vec![1.0 / to, 0.0],
        vec![0.0, 1.0],
    )
}

/// Solves the built-in front of a model: exact seed for the bistable cubic,
/// continuation for combustion.
pub fn solve_model_front(sys: &ReactionSystem, solver: &FrontSolver) -> Result<FrontProfile> {
    match &sys.kind {
        ModelKind::Combustion(_) => combustion_front(sys, solver),
        ModelKind::Bistable(p) => {
            let grid = centered_grid(solver.half_length.unwrap_or(40.0), solver.spacing);
            let seed = FrontProfile::tanh_seed(grid, vec![0.0], vec![1.0], 0.25 + 0.1 * p.a, 2.5)?;
            solver.solve(sys, &seed)
        }
        ModelKind::Linear(_) => Err(LabError::Precondition("linear models carry no front".into())),
    }
}
