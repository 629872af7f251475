//! Reaction terms with the product-triangular structure
//! `f(u1, u2) = (A1 u1 + f1(u) u2, f2(u) u2)` and the built-in models.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, LabError, Result};
use crate::linalg::gauss_legendre;

/// Below this temperature the Arrhenius factor is treated as exactly zero;
/// `exp(-1/u)` underflows just under it anyway.
pub const ARRHENIUS_CUTOFF: f64 = 1.0 / 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombustionParams {
    pub epsilon: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BistableParams {
    pub a: f64,
}

/// Linear reaction `f(u) = M u`; used for closed-form checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearParams {
    /// Row-major n x n matrix.
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Combustion(CombustionParams),
    Bistable(BistableParams),
    Linear(LinearParams),
}

/// Theory mode uses identity diffusion. Exploration mode keeps the model's
/// own diagonal diffusion and carries no decay guarantees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionMode {
    #[default]
    Theory,
    Exploration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionSystem {
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(default)]
    pub mode: DiffusionMode,
}

/// Arrhenius factor g(u) = exp(-1/u) and its first two derivatives.
pub fn arrhenius(u: f64) -> (f64, f64, f64) {
    if u <= ARRHENIUS_CUTOFF {
        return (0.0, 0.0, 0.0);
    }
    let g = (-1.0 / u).exp();
    let u2 = u * u;
    (g, g / u2, g * (1.0 - 2.0 * u) / (u2 * u2))
}

impl ReactionSystem {
    pub fn combustion(epsilon: f64, kappa: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(LabError::Config(format!("epsilon {epsilon} outside [0, 1)")));
        }
        if !(kappa > 0.0) {
            return Err(LabError::Config(format!("kappa {kappa} must be positive")));
        }
        Ok(Self {
            kind: ModelKind::Combustion(CombustionParams { epsilon, kappa }),
            mode: DiffusionMode::Theory,
        })
    }

    pub fn bistable(a: f64) -> Result<Self> {
        if !(a > 0.5 && a < 1.0) {
            return Err(LabError::Config(format!("bistable threshold {a} outside (1/2, 1)")));
        }
        Ok(Self {
            kind: ModelKind::Bistable(BistableParams { a }),
            mode: DiffusionMode::Theory,
        })
    }

    pub fn linear(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|r| r.len() != n) {
            return Err(LabError::Config("linear model needs a square matrix".into()));
        }
        Ok(Self {
            kind: ModelKind::Linear(LinearParams { matrix }),
            mode: DiffusionMode::Theory,
        })
    }

    pub fn with_mode(mut self, mode: DiffusionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ModelKind::Combustion(p) => Self::combustion(p.epsilon, p.kappa).map(|_| ()),
            ModelKind::Bistable(p) => Self::bistable(p.a).map(|_| ()),
            ModelKind::Linear(p) => Self::linear(p.matrix.clone()).map(|_| ()),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ModelKind::Combustion(_) => 2,
            ModelKind::Bistable(_) => 1,
            ModelKind::Linear(p) => p.matrix.len(),
        }
    }

    /// Sizes `(n1, n2)` of the triangular split.
    pub fn split(&self) -> (usize, usize) {
        match &self.kind {
            ModelKind::Combustion(_) => (1, 1),
            ModelKind::Bistable(_) => (0, 1),
            ModelKind::Linear(p) => (p.matrix.len(), 0),
        }
    }

    /// The constant block `A1`.
    pub fn a1(&self) -> DMatrix<f64> {
        match &self.kind {
            ModelKind::Combustion(_) => DMatrix::zeros(1, 1),
            ModelKind::Bistable(_) => DMatrix::zeros(0, 0),
            ModelKind::Linear(p) => {
                let n = p.matrix.len();
                DMatrix::from_fn(n, n, |i, j| p.matrix[i][j])
            }
        }
    }

    /// Diagonal of the diffusion matrix in effect.
    pub fn diffusion(&self) -> Vec<f64> {
        match (&self.kind, self.mode) {
            (ModelKind::Combustion(p), DiffusionMode::Exploration) => vec![1.0, p.epsilon],
            _ => vec![1.0; self.dim()],
        }
    }

    pub fn has_identity_diffusion(&self) -> bool {
        self.diffusion().iter().all(|&d| d == 1.0)
    }

    /// Rest states `(behind, ahead)` of the model's natural front.
    pub fn rest_states(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            ModelKind::Combustion(p) => Some((vec![1.0 / p.kappa, 0.0], vec![0.0, 1.0])),
            ModelKind::Bistable(_) => Some((vec![0.0], vec![1.0])),
            ModelKind::Linear(_) => None,
        }
    }

    /// Writes f(u) into `out` without checks.
    #[inline]
    pub fn f_into(&self, u: &[f64], out: &mut [f64]) {
        match &self.kind {
            ModelKind::Combustion(p) => {
                let (g, _, _) = arrhenius(u[0]);
                let r = u[1] * g;
                out[0] = r;
                out[1] = -p.kappa * r;
            }
            ModelKind::Bistable(p) => {
                let x = u[0];
                out[0] = x * (1.0 - x) * (x - p.a);
            }
            ModelKind::Linear(p) => {
                for (o, row) in out.iter_mut().zip(&p.matrix) {
                    *o = row.iter().zip(u).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// Writes the row-major Jacobian at `u` into `out`.
    #[inline]
    pub fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        match &self.kind {
            ModelKind::Combustion(p) => {
                let (g, dg, _) = arrhenius(u[0]);
                out[0] = u[1] * dg;
                out[1] = g;
                out[2] = -p.kappa * u[1] * dg;
                out[3] = -p.kappa * g;
            }
            ModelKind::Bistable(p) => {
                let x = u[0];
                out[0] = -3.0 * x * x + 2.0 * (1.0 + p.a) * x - p.a;
            }
            ModelKind::Linear(p) => {
                let n = p.matrix.len();
                for i in 0..n {
                    out[i * n..(i + 1) * n].copy_from_slice(&p.matrix[i]);
                }
            }
        }
    }

    /// Second derivatives `d2f[i][j][k] = d^2 f_i / du_j du_k`, flattened.
    pub fn hessian_into(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        match &self.kind {
            ModelKind::Combustion(p) => {
                let (_, dg, d2g) = arrhenius(u[0]);
                // f1 = u2 g(u1)
                out[0] = u[1] * d2g;
                out[1] = dg;
                out[2] = dg;
                out[4] = -p.kappa * u[1] * d2g;
                out[5] = -p.kappa * dg;
                out[6] = -p.kappa * dg;
            }
            ModelKind::Bistable(p) => {
                out[0] = -6.0 * u[0] + 2.0 * (1.0 + p.a);
            }
            ModelKind::Linear(_) => {}
        }
    }

    pub fn eval_f(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_state(u)?;
        let mut out = vec![0.0; self.dim()];
        self.f_into(u, &mut out);
        Ok(out)
    }

    pub fn eval_jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        self.check_state(u)?;
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        self.jacobian_into(u, &mut out);
        Ok(DMatrix::from_row_slice(n, n, &out))
    }

    pub fn eval_hessian(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_state(u)?;
        let n = self.dim();
        let mut out = vec![0.0; n * n * n];
        self.hessian_into(u, &mut out);
        Ok(out)
    }

    /// `N(u, v) = int_0^1 [df(u + s v) - df(u)] ds` by Gauss-Legendre.
    pub fn eval_n(&self, u: &[f64], v: &[f64], quad_order: usize) -> Result<DMatrix<f64>> {
        if quad_order < 2 {
            return Err(LabError::Precondition(format!("quadrature order {quad_order} < 2")));
        }
        self.check_state(u)?;
        self.check_state(v)?;
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        NQuadrature::new(quad_order).apply(self, u, v, &mut out);
        Ok(DMatrix::from_row_slice(n, n, &out))
    }

    fn check_state(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(LabError::Shape(format!(
                "state of length {} for a system of dimension {}",
                u.len(),
                self.dim()
            )));
        }
        ensure_finite(u, "reaction state")
    }
}

/// Reusable Gauss-Legendre rule for `N(u, v)`.
#[derive(Clone, Debug)]
pub struct NQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl NQuadrature {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    /// Writes the row-major `N(u, v)` into `out`.
    pub fn apply(&self, sys: &ReactionSystem, u: &[f64], v: &[f64], out: &mut [f64]) {
        let n = u.len();
        let mut base = vec![0.0; n * n];
        let mut jac = vec![0.0; n * n];
        let mut point = vec![0.0; n];
        sys.jacobian_into(u, &mut base);
        out.iter_mut().for_each(|x| *x = 0.0);
        for (s, w) in self.nodes.iter().zip(&self.weights) {
            for k in 0..n {
                point[k] = u[k] + s * v[k];
            }
            sys.jacobian_into(&point, &mut jac);
            for k in 0..n * n {
                out[k] += w * (jac[k] - base[k]);
            }
        }
    }
}
