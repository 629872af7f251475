//! Adjoint nullvector, the rank-one projections onto the translational mode
//! and the (v, q) modulation decomposition.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::field::{Field, TransverseFft, TransverseGrid, UniformGrid};
use crate::front::{linearization, FrontProfile};
use crate::linalg::{shift_invert_arnoldi, DiffOrder};
use crate::model::ReactionSystem;
use crate::norms::{WeightFunction, WeightSpec};

#[derive(Clone, Debug)]
pub struct AdjointNullvector {
    pub grid: UniformGrid,
    pub n: usize,
    /// Node-major values on the full grid (zero at the end nodes).
    pub values: Vec<f64>,
    pub normalization_residual: f64,
    /// The two eigenvalues of the discretization closest to 0.
    pub nearest: [Complex64; 2],
}

impl AdjointNullvector {
    pub fn component(&self, j: usize) -> Vec<f64> {
        (0..self.grid.len).map(|i| self.values[i * self.n + j]).collect()
    }

    /// `e / gamma` on the nodes.
    pub fn unweighted(&self, weight: &WeightFunction) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| weight.remove(self.grid.node(k / self.n), v))
            .collect()
    }
}

/// Thresholds for declaring the translational eigenvalue simple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplicityTest {
    /// Largest admissible |lambda| for the kernel eigenvalue.
    pub zero_tol: f64,
    /// Smallest admissible |lambda| for the next eigenvalue.
    pub gap: f64,
}

impl Default for SimplicityTest {
    fn default() -> Self {
        Self {
            zero_tol: 1e-4,
            gap: 1e-3,
        }
    }
}

/// Kernel of the transposed conjugated discretization, mapped back through
/// the weight and normalized against `phi'`.
pub fn compute_adjoint(
    front: &FrontProfile,
    sys: &ReactionSystem,
    alpha: &WeightSpec,
    order: DiffOrder,
) -> Result<AdjointNullvector> {
    compute_adjoint_with(front, sys, alpha, order, SimplicityTest::default())
}

pub fn compute_adjoint_with(
    front: &FrontProfile,
    sys: &ReactionSystem,
    alpha: &WeightSpec,
    order: DiffOrder,
    test: SimplicityTest,
) -> Result<AdjointNullvector> {
    let weight = WeightFunction::new(*alpha);
    let mt = linearization(sys, front, Some(&weight), order).transpose();
    let size = mt.dim();
    let n = front.dim();

    let cmt = mt.map(|x| Complex64::new(x, 0.0));
    let shift = Complex64::new(1e-3, 0.0);
    let clu = cmt.shifted(shift).factor()?;
    let mut pairs = shift_invert_arnoldi(size, shift, 2, 40.min(size), |b| clu.solve(b));
    pairs.sort_by(|a, b| a.0.norm().partial_cmp(&b.0.norm()).unwrap());
    if pairs.len() < 2 {
        return Err(LabError::Eigen {
            size,
            spacing: front.grid.spacing,
            reason: "could not isolate two eigenvalues near 0".into(),
        });
    }
    let nearest = [pairs[0].0, pairs[1].0];
    if nearest[0].norm() > test.zero_tol || nearest[1].norm() < test.gap {
        return Err(LabError::Simplicity {
            first: nearest[0].norm(),
            second: nearest[1].norm(),
        });
    }

    let lu = match mt.clone().factor() {
        Ok(lu) => lu,
        Err(_) => mt.shifted(1e-12).factor()?,
    };
    let mut e: Vec<f64> = (0..size).map(|i| 1.0 + 0.1 * ((i * 17) % 5) as f64).collect();
    for _ in 0..4 {
        lu.solve(&mut e);
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        e.iter_mut().for_each(|x| *x /= norm);
    }
    let mut values = vec![0.0; front.n_nodes() * n];
    for k in 0..size {
        let i = k / n + 1;
        values[i * n + k % n] = weight.apply(front.grid.node(i), e[k]);
    }
    let dphi = front.derivative();
    let h = front.grid.spacing;
    let s: f64 = h * values.iter().zip(&dphi).map(|(a, b)| a * b).sum::<f64>();
    values.iter_mut().for_each(|x| *x /= s);
    let check: f64 = h * values.iter().zip(&dphi).map(|(a, b)| a * b).sum::<f64>();
    Ok(AdjointNullvector {
        grid: front.grid,
        n,
        values,
        normalization_residual: (check - 1.0).abs(),
        nearest,
    })
}

/// The projections `pi`, `P = pi(.) phi'` and `Q = I - P`.
#[derive(Clone, Debug)]
pub struct Projector {
    grid: UniformGrid,
    n: usize,
    e: Vec<f64>,
    dphi: Vec<f64>,
}

impl Projector {
    pub fn new(front: &FrontProfile, e: &AdjointNullvector) -> Result<Self> {
        if !front.grid.same_as(&e.grid) || front.dim() != e.n {
            return Err(LabError::Shape("adjoint and front live on different grids".into()));
        }
        Ok(Self {
            grid: front.grid,
            n: e.n,
            e: e.values.clone(),
            dphi: front.derivative(),
        })
    }

    pub fn translational_mode(&self) -> &[f64] {
        &self.dphi
    }

    pub fn adjoint(&self) -> &[f64] {
        &self.e
    }

    fn check(&self, u: &Field) -> Result<()> {
        if !u.zgrid.same_as(&self.grid) || u.ncomp != self.n {
            return Err(LabError::Shape(format!(
                "field on {} z-nodes with {} components, projector on {} with {}",
                u.nz(),
                u.ncomp,
                self.grid.len,
                self.n
            )));
        }
        Ok(())
    }

    /// `pi(U)(y) = int (e(s), U(s, y)) ds`.
    pub fn pi(&self, u: &Field) -> Result<Vec<f64>> {
        self.check(u)?;
        let ny = u.ny();
        let h = self.grid.spacing;
        let mut out = vec![0.0; ny];
        for c in 0..self.n {
            for iz in 0..self.grid.len {
                let w = h * self.e[iz * self.n + c];
                if w == 0.0 {
                    continue;
                }
                for (o, x) in out.iter_mut().zip(u.line(c, iz)) {
                    *o += w * x;
                }
            }
        }
        Ok(out)
    }

    /// `pi` of a single z-profile, node-major.
    pub fn pi_profile(&self, u: &[f64]) -> f64 {
        self.grid.spacing * self.e.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `h(y) phi'(z)`.
    pub fn lift(&self, h: &[f64], ygrid: &TransverseGrid) -> Field {
        let mut out = Field::zeros(self.n, self.grid, ygrid.clone());
        let ny = out.ny();
        for c in 0..self.n {
            for iz in 0..self.grid.len {
                let d = self.dphi[iz * self.n + c];
                let s = out.index(c, iz, 0);
                for (o, x) in out.data[s..s + ny].iter_mut().zip(h) {
                    *o = d * x;
                }
            }
        }
        out
    }

    /// `(P U, Q U)`.
    pub fn project(&self, u: &Field) -> Result<(Field, Field)> {
        let p = self.lift(&self.pi(u)?, &u.ygrid);
        let mut q = u.clone();
        q.axpy(-1.0, &p);
        Ok((p, q))
    }

    pub fn apply_q(&self, u: &Field) -> Result<Field> {
        Ok(self.project(u)?.1)
    }
}

pub fn pi_alpha(u: &Field, front: &FrontProfile, e: &AdjointNullvector) -> Result<Vec<f64>> {
    Projector::new(front, e)?.pi(u)
}

pub fn project(u: &Field, front: &FrontProfile, e: &AdjointNullvector) -> Result<(Field, Field)> {
    Projector::new(front, e)?.project(u)
}

/// Normal component, shift and transverse gradient of the shift.
#[derive(Clone, Debug)]
pub struct PerturbationState {
    pub v: Field,
    pub q: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

impl PerturbationState {
    /// State with `w = grad q` computed spectrally.
    pub fn new(v: Field, q: Vec<f64>) -> Result<Self> {
        if q.len() != v.ny() {
            return Err(LabError::Shape("shift does not match the transverse grid".into()));
        }
        let w = TransverseFft::new(&v.ygrid).gradient(&q);
        Ok(Self { v, q, w })
    }

    pub fn zero(ncomp: usize, zgrid: UniformGrid, ygrid: TransverseGrid) -> Self {
        let ny = ygrid.total();
        let axes = ygrid.axes();
        Self {
            v: Field::zeros(ncomp, zgrid, ygrid),
            q: vec![0.0; ny],
            w: vec![vec![0.0; ny]; axes],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            v: self.v.scaled(s),
            q: self.q.iter().map(|x| x * s).collect(),
            w: self
                .w
                .iter()
                .map(|g| g.iter().map(|x| x * s).collect())
                .collect(),
        }
    }
}

/// Newton-based splitting `u~ = phi(z - q) - phi(z) + v` with `pi(v) = 0`.
#[derive(Clone, Debug)]
pub struct Decomposer {
    projector: Projector,
    front: FrontProfile,
    /// Newton tolerance on the scalar equation.
    pub tol: f64,
    pub max_iter: usize,
    /// Lower bound for `|pi(phi'_q)|`.
    pub min_pi_derivative: f64,
}

impl Decomposer {
    pub fn new(front: &FrontProfile, e: &AdjointNullvector) -> Result<Self> {
        Ok(Self {
            projector: Projector::new(front, e)?,
            front: front.clone(),
            tol: 1e-13,
            max_iter: 30,
            min_pi_derivative: 0.5,
        })
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn front(&self) -> &FrontProfile {
        &self.front
    }

    /// Largest shift the spline interpolation is trusted for.
    pub fn max_shift(&self) -> f64 {
        self.front.grid.half_length() / 4.0
    }

    /// `phi(z - q)` and `phi'(z - q)` at all nodes, node-major.
    pub fn shifted_profile(&self, q: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.front.dim();
        let len = self.front.n_nodes();
        let mut v = vec![0.0; len * n];
        let mut d = vec![0.0; len * n];
        let mut dd = vec![0.0; len * n];
        for i in 0..len {
            let z = self.front.grid.node(i) - q;
            let r = i * n..(i + 1) * n;
            self.front.eval(z, &mut v[r.clone()], &mut d[r.clone()], &mut dd[r]);
        }
        (v, d, dd)
    }

    fn solve_column(&self, column: &[f64]) -> Result<(f64, Vec<f64>)> {
        let phi = self.front.values();
        let pv = self.projector.pi_profile(column);
        let mut q = -pv;
        let mut last = f64::INFINITY;
        for _ in 0..=self.max_iter {
            if q.abs() > self.max_shift() || !q.is_finite() {
                break;
            }
            let (pq, dq, _) = self.shifted_profile(q);
            let diff: Vec<f64> = phi.iter().zip(&pq).map(|(a, b)| a - b).collect();
            let g = pv + self.projector.pi_profile(&diff);
            let dg = self.projector.pi_profile(&dq);
            if dg.abs() < self.min_pi_derivative {
                return Err(LabError::DecompositionOutOfRange(format!(
                    "|pi(phi'_q)| = {:.3e} below {:.3e} at q = {q:.3e}",
                    dg.abs(),
                    self.min_pi_derivative
                )));
            }
            last = g.abs();
            if last < self.tol {
                let v: Vec<f64> = column.iter().zip(&diff).map(|(a, b)| a + b).collect();
                return Ok((q, v));
            }
            q -= g / dg;
        }
        Err(LabError::DecompositionOutOfRange(format!(
            "shift Newton failed (q = {q:.3e}, residual {last:.3e})"
        )))
    }

    pub fn decompose(&self, u_tilde: &Field) -> Result<PerturbationState> {
        self.projector.check(u_tilde)?;
        let n = u_tilde.ncomp;
        let nz = u_tilde.nz();
        let ny = u_tilde.ny();
        let cols: Vec<Result<(f64, Vec<f64>)>> = (0..ny)
            .into_par_iter()
            .map(|iy| {
                let mut col = vec![0.0; nz * n];
                for iz in 0..nz {
                    for c in 0..n {
                        col[iz * n + c] = u_tilde.get(c, iz, iy);
                    }
                }
                self.solve_column(&col)
            })
            .collect();
        let mut shifted = Field::zeros(n, u_tilde.zgrid, u_tilde.ygrid.clone());
        let mut q = vec![0.0; ny];
        for (iy, r) in cols.into_iter().enumerate() {
            let (qy, col) = r?;
            q[iy] = qy;
            for iz in 0..nz {
                for c in 0..n {
                    let idx = shifted.index(c, iz, iy);
                    shifted.data[idx] = col[iz * n + c];
                }
            }
        }
        let v = self.projector.apply_q(&shifted)?;
        PerturbationState::new(v, q)
    }

    /// `phi(z - q(y)) - phi(z) + v(z, y)`.
    pub fn recompose(&self, state: &PerturbationState) -> Result<Field> {
        let limit = self.max_shift();
        if let Some(bad) = state.q.iter().find(|q| q.abs() > limit || !q.is_finite()) {
            return Err(LabError::Range(format!("shift {bad} beyond +-{limit}")));
        }
        let mut out = state.v.clone();
        let n = out.ncomp;
        let phi = self.front.values();
        for (iy, &qy) in state.q.iter().enumerate() {
            if qy == 0.0 {
                continue;
            }
            let (pq, _, _) = self.shifted_profile(qy);
            for iz in 0..out.nz() {
                for c in 0..n {
                    let idx = out.index(c, iz, iy);
                    out.data[idx] += pq[iz * n + c] - phi[iz * n + c];
                }
            }
        }
        Ok(out)
    }
}

pub fn decompose(
    u_tilde: &Field,
    front: &FrontProfile,
    e: &AdjointNullvector,
) -> Result<PerturbationState> {
    Decomposer::new(front, e)?.decompose(u_tilde)
}

pub fn recompose(
    state: &PerturbationState,
    front: &FrontProfile,
    e: &AdjointNullvector,
) -> Result<Field> {
    Decomposer::new(front, e)?.recompose(state)
}
