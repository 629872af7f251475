//! Small numerical kernels: banded LU, Gauss-Legendre rules, finite-difference
//! stencils and a shift-invert Arnoldi driver.

use std::ops::{AddAssign, Div, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Scalars the banded solver works over.
pub trait Scalar:
    Copy
    + Default
    + PartialEq
    + std::fmt::Debug
    + AddAssign
    + SubAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn magnitude(self) -> f64;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored densely over columns `i - kl ..= i + ku + kl`; the extra
/// `kl` slots absorb fill-in from row interchanges during factorization.
#[derive(Clone, Debug)]
pub struct BandedMatrix<T: Scalar> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::default(); n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            T::default()
        }
    }

    /// Adds `value` at `(i, j)`. Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = value;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                let mut acc = T::default();
                for j in lo..=hi {
                    acc += self.data[self.slot(i, j)] * x[j];
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Returns `self - shift * I`.
    pub fn shifted(&self, shift: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            let s = m.slot(i, i);
            m.data[s] -= shift;
        }
        m
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> BandedMatrix<U> {
        BandedMatrix {
            n: self.n,
            kl: self.kl,
            ku: self.ku,
            width: self.width,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandedLu<T>> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + self.kl;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].magnitude();
            for i in k + 1..=last_row {
                let m = self.data[self.slot(i, k)].magnitude();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LabError::Singular(k));
            }
            pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let s = self.slot(i, k);
                let l = self.data[s] / pivot;
                self.data[s] = l;
                if l == T::default() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.data[self.slot(k, j)];
                    let ij = self.slot(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Ok(BandedLu {
            lu: self,
            pivots,
        })
    }
}

/// Factored band matrix.
#[derive(Clone, Debug)]
pub struct BandedLu<T: Scalar> {
    lu: BandedMatrix<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn dim(&self) -> usize {
        self.lu.n
    }

    pub fn solve(&self, b: &mut [T]) {
        self.solve_rows(b, 1);
    }

    /// Solves for `nrhs` right-hand sides stored row-interleaved:
    /// `b[i * nrhs + r]` is row `i` of system `r`.
    pub fn solve_rows<U>(&self, b: &mut [U], nrhs: usize)
    where
        U: Copy + SubAssign + Mul<T, Output = U> + Div<T, Output = U>,
    {
        let a = &self.lu;
        let n = a.n;
        assert_eq!(b.len(), n * nrhs);
        let reach = a.ku + a.kl;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                for r in 0..nrhs {
                    b.swap(k * nrhs + r, p * nrhs + r);
                }
            }
            let last_row = (k + a.kl).min(n - 1);
            for i in k + 1..=last_row {
                let l = a.data[a.slot(i, k)];
                if l == T::default() {
                    continue;
                }
                for r in 0..nrhs {
                    let bk = b[k * nrhs + r];
                    b[i * nrhs + r] -= bk * l;
                }
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            for j in k + 1..=last_col {
                let u = a.data[a.slot(k, j)];
                if u == T::default() {
                    continue;
                }
                for r in 0..nrhs {
                    let bj = b[j * nrhs + r];
                    b[k * nrhs + r] -= bj * u;
                }
            }
            let d = a.data[a.slot(k, k)];
            for r in 0..nrhs {
                b[k * nrhs + r] = b[k * nrhs + r] / d;
            }
        }
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Accuracy of the central-difference stencils.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffOrder {
    Second,
    #[default]
    Fourth,
}

/// Stencil weights for offsets -2..=2, already scaled by the spacing.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub d1: [f64; 5],
    pub d2: [f64; 5],
}

impl Stencil {
    /// Stencil at node `i` of an `n`-node grid. Nodes next to the boundary
    /// fall back to the three-point formulas.
    pub fn at(order: DiffOrder, i: usize, n: usize, h: f64) -> Stencil {
        let wide = order == DiffOrder::Fourth && i >= 2 && i + 2 < n;
        if wide {
            Stencil {
                d1: [
                    1.0 / (12.0 * h),
                    -8.0 / (12.0 * h),
                    0.0,
                    8.0 / (12.0 * h),
                    -1.0 / (12.0 * h),
                ],
                d2: [
                    -1.0 / (12.0 * h * h),
                    16.0 / (12.0 * h * h),
                    -30.0 / (12.0 * h * h),
                    16.0 / (12.0 * h * h),
                    -1.0 / (12.0 * h * h),
                ],
            }
        } else {
            Stencil {
                d1: [0.0, -0.5 / h, 0.0, 0.5 / h, 0.0],
                d2: [0.0, 1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h), 0.0],
            }
        }
    }
}

/// Applies a derivative stencil to a sampled function, treating values beyond
/// the ends as zero. `which` selects 1 (first) or 2 (second derivative).
pub fn apply_stencil(order: DiffOrder, values: &[f64], h: f64, which: u8, out: &mut [f64]) {
    let n = values.len();
    let st = Stencil::at_padded(order, h);
    let w = if which == 1 { st.d1 } else { st.d2 };
    for i in 0..n {
        let mut acc = 0.0;
        for (o, wk) in w.iter().enumerate() {
            let j = i as isize + o as isize - 2;
            if j >= 0 && (j as usize) < n {
                acc += wk * values[j as usize];
            }
        }
        out[i] = acc;
    }
}

impl Stencil {
    /// Stencil used with zero padding: always the full-width formula.
    pub fn at_padded(order: DiffOrder, h: f64) -> Stencil {
        match order {
            DiffOrder::Fourth => Stencil::at(order, 2, 5, h),
            DiffOrder::Second => Stencil::at(order, 1, 3, h),
        }
    }
}

/// Eigenpairs of a large operator near a shift, from an Arnoldi process on
/// `(A - shift)^{-1}`. `apply_inverse` overwrites its argument with the
/// solution of `(A - shift) x = b`.
pub fn shift_invert_arnoldi(
    n: usize,
    shift: Complex64,
    count: usize,
    krylov: usize,
    mut apply_inverse: impl FnMut(&mut [Complex64]),
) -> Vec<(Complex64, Vec<Complex64>)> {
    let m = krylov.min(n).max(count + 1);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut h = DMatrix::<Complex64>::zeros(m + 1, m);
    let mut v0: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + ((i * 7919) % 13) as f64 * 0.01, 0.0))
        .collect();
    normalize(&mut v0);
    basis.push(v0);
    let mut steps = m;
    for j in 0..m {
        let mut w = basis[j].clone();
        apply_inverse(&mut w);
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let proj = dot(b, &w);
                h[(i, j)] += proj;
                for (wk, bk) in w.iter_mut().zip(b) {
                    *wk -= proj * bk;
                }
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        h[(j + 1, j)] = Complex64::new(norm, 0.0);
        if norm < 1e-14 {
            steps = j + 1;
            break;
        }
        for z in w.iter_mut() {
            *z /= norm;
        }
        basis.push(w);
    }
    let hm = h.view((0, 0), (steps, steps)).into_owned();
    let theta = match hm.clone().schur().eigenvalues() {
        Some(t) => t,
        None => return Vec::new(),
    };
    let mut ritz: Vec<Complex64> = theta.iter().copied().collect();
    ritz.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    ritz.truncate(count);
    ritz.into_iter()
        .map(|t| {
            let y = small_eigenvector(&hm, t);
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            for (k, yk) in y.iter().enumerate() {
                for (xi, bi) in x.iter_mut().zip(&basis[k]) {
                    *xi += yk * bi;
                }
            }
            normalize(&mut x);
            (shift + 1.0 / t, x)
        })
        .collect()
}

fn small_eigenvector(h: &DMatrix<Complex64>, theta: Complex64) -> Vec<Complex64> {
    let k = h.nrows();
    let eps = 1e-10 * theta.norm().max(1e-300);
    let mut shifted = h.clone();
    for i in 0..k {
        shifted[(i, i)] -= theta + eps;
    }
    let lu = shifted.lu();
    let mut y = DVector::<Complex64>::from_element(k, Complex64::new(1.0, 0.0));
    for _ in 0..3 {
        if let Some(next) = lu.solve(&y) {
            let norm = next.norm();
            if norm.is_finite() && norm > 0.0 {
                y = next / Complex64::new(norm, 0.0);
            }
        }
    }
    y.iter().copied().collect()
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn banded_solve_matches_dense() {
        let n = 9;
        let mut m = BandedMatrix::<f64>::zeros(n, 2, 1);
        for i in 0..n {
            m.add(i, i, 0.1 + i as f64 * 0.01);
            if i >= 1 {
                m.add(i, i - 1, 3.0);
            }
            if i >= 2 {
                m.add(i, i - 2, -1.0 + 0.2 * i as f64);
            }
            if i + 1 < n {
                m.add(i, i + 1, 0.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let b = m.matvec(&x);
        let lu = m.clone().factor().unwrap();
        let mut y = b.clone();
        lu.solve(&mut y);
        for (a, e) in y.iter().zip(&x) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-10);
        }
        let mt = m.transpose();
        let bt = mt.matvec(&x);
        let mut yt = bt.clone();
        mt.factor().unwrap().solve(&mut yt);
        for (a, e) in yt.iter().zip(&x) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn complex_rhs_rows() {
        let n = 6;
        let mut m = BandedMatrix::<f64>::zeros(n, 1, 1);
        for i in 0..n {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
                m.add(i - 1, i, -1.0);
            }
        }
        let lu = m.factor().unwrap();
        let mut b: Vec<Complex64> = (0..2 * n)
            .map(|k| Complex64::new(k as f64, -(k as f64)))
            .collect();
        let orig = b.clone();
        lu.solve_rows(&mut b, 2);
        for r in 0..2 {
            for i in 0..n {
                let mut acc = 2.0 * b[i * 2 + r];
                if i > 0 {
                    acc -= b[(i - 1) * 2 + r];
                }
                if i + 1 < n {
                    acc -= b[(i + 1) * 2 + r];
                }
                assert!((acc - orig[i * 2 + r]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for p in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert_abs_diff_eq!(q, 1.0 / (p as f64 + 1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn arnoldi_finds_nearest_eigenvalues() {
        let n = 50;
        let mut m = BandedMatrix::<Complex64>::zeros(n, 1, 1);
        for i in 0..n {
            m.add(i, i, Complex64::new(-(i as f64) - 0.5, 0.0));
            if i + 1 < n {
                m.add(i, i + 1, Complex64::new(0.1, 0.0));
            }
        }
        let lu = m.clone().factor().unwrap();
        let pairs = shift_invert_arnoldi(n, Complex64::new(0.0, 0.0), 2, 30, |b| lu.solve(b));
        assert!((pairs[0].0.re + 0.5).abs() < 1e-8);
        assert!((pairs[1].0.re + 1.5).abs() < 1e-8);
    }
}
