//! Grids, fields on the (z, y) cylinder and transverse FFT helpers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Uniform nodes `start + i * spacing`, `i < len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub spacing: f64,
    pub len: usize,
}

impl UniformGrid {
    /// `n` nodes on `[-half_length, half_length]`.
    pub fn centered(half_length: f64, n: usize) -> Self {
        assert!(n >= 2);
        Self {
            start: -half_length,
            spacing: 2.0 * half_length / (n - 1) as f64,
            len: n,
        }
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.node(i)).collect()
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.spacing * (self.len - 1) as f64
    }

    pub fn same_as(&self, other: &UniformGrid) -> bool {
        self.len == other.len
            && (self.start - other.start).abs() < 1e-12 * self.start.abs().max(1.0)
            && (self.spacing - other.spacing).abs() < 1e-12 * self.spacing
    }
}

/// Periodic box `[-L_i/2, L_i/2)` in each transverse direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransverseGrid {
    pub sizes: Vec<usize>,
    pub lengths: Vec<f64>,
}

impl TransverseGrid {
    pub fn new(sizes: Vec<usize>, lengths: Vec<f64>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() != lengths.len() {
            return Err(LabError::Shape("transverse grid needs one length per axis".into()));
        }
        if sizes.contains(&0) || lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(LabError::Shape("empty transverse axis".into()));
        }
        Ok(Self { sizes, lengths })
    }

    pub fn line(n: usize, length: f64) -> Self {
        Self {
            sizes: vec![n],
            lengths: vec![length],
        }
    }

    pub fn axes(&self) -> usize {
        self.sizes.len()
    }

    /// Spatial dimension of the full problem.
    pub fn dimension(&self) -> usize {
        self.sizes.len() + 1
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.sizes[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.axes()).map(|a| self.spacing(a)).product()
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        -0.5 * self.lengths[axis] + i as f64 * self.spacing(axis)
    }

    /// Coordinates of the flat (row-major) index `idx`.
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes()];
        for a in (0..self.axes()).rev() {
            let i = idx % self.sizes[a];
            idx /= self.sizes[a];
            out[a] = self.coordinate(a, i);
        }
        out
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.total()).map(|i| self.point(i)).collect()
    }

    /// Samples `f` at every transverse node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.total()).map(|i| f(&self.point(i))).collect()
    }
}

/// Angular wavenumbers in FFT order; the Nyquist entry is reported positive.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / length;
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            base * m
        })
        .collect()
}

/// FFTs over all transverse axes of one z-line.
pub struct TransverseFft {
    grid: TransverseGrid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    k: Vec<Vec<f64>>,
    k2: Vec<f64>,
}

impl Clone for TransverseFft {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            forward: self.forward.clone(),
            inverse: self.inverse.clone(),
            k: self.k.clone(),
            k2: self.k2.clone(),
        }
    }
}

impl TransverseFft {
    pub fn new(grid: &TransverseGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.sizes.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = grid.sizes.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let k: Vec<Vec<f64>> = grid
            .sizes
            .iter()
            .zip(&grid.lengths)
            .map(|(&n, &l)| wavenumbers(n, l))
            .collect();
        let total = grid.total();
        let mut k2 = vec![0.0; total];
        for (idx, slot) in k2.iter_mut().enumerate() {
            *slot = Self::mode_of(grid, idx)
                .iter()
                .enumerate()
                .map(|(a, &m)| k[a][m] * k[a][m])
                .sum();
        }
        Self {
            grid: grid.clone(),
            forward,
            inverse,
            k,
            k2,
        }
    }

    fn mode_of(grid: &TransverseGrid, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; grid.axes()];
        for a in (0..grid.axes()).rev() {
            out[a] = idx % grid.sizes[a];
            idx /= grid.sizes[a];
        }
        out
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    /// |k|^2 per flat mode index.
    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    fn run(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let sizes = &self.grid.sizes;
        let total = buf.len();
        debug_assert_eq!(total, self.grid.total());
        let mut stride = total;
        for (a, plan) in plans.iter().enumerate() {
            let n = sizes[a];
            stride /= n;
            if stride == 1 {
                plan.process(buf);
                continue;
            }
            let mut scratch = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for outer in 0..total / block {
                for inner in 0..stride {
                    let base = outer * block + inner;
                    for (i, s) in scratch.iter_mut().enumerate() {
                        *s = buf[base + i * stride];
                    }
                    plan.process(&mut scratch);
                    for (i, s) in scratch.iter().enumerate() {
                        buf[base + i * stride] = *s;
                    }
                }
            }
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.forward);
    }

    /// Inverse transform including the 1/N normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inverse);
        let scale = 1.0 / buf.len() as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// Fourier multiplier `(i k)^orders` at flat mode `idx`. Odd derivatives
    /// drop the Nyquist mode.
    pub fn derivative_symbol(&self, idx: usize, orders: &[usize]) -> Complex64 {
        let modes = Self::mode_of(&self.grid, idx);
        let mut sym = Complex64::new(1.0, 0.0);
        for (a, &p) in orders.iter().enumerate() {
            if p == 0 {
                continue;
            }
            let n = self.grid.sizes[a];
            if p % 2 == 1 && n.is_multiple_of(2) && modes[a] == n / 2 {
                return Complex64::new(0.0, 0.0);
            }
            sym *= Complex64::new(0.0, self.k[a][modes[a]]).powu(p as u32);
        }
        sym
    }

    /// Spectral derivative of a real periodic function.
    pub fn derivative(&self, values: &[f64], orders: &[usize]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        for (idx, z) in buf.iter_mut().enumerate() {
            *z *= self.derivative_symbol(idx, orders);
        }
        self.inverse(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Transverse gradient, one vector per axis.
    pub fn gradient(&self, values: &[f64]) -> Vec<Vec<f64>> {
        (0..self.grid.axes())
            .map(|a| {
                let mut orders = vec![0; self.grid.axes()];
                orders[a] = 1;
                self.derivative(values, &orders)
            })
            .collect()
    }
}

/// Vector field on the (z, y) grid with layout `[(comp * nz + iz) * ny + iy]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub zgrid: UniformGrid,
    pub ygrid: TransverseGrid,
    pub ncomp: usize,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(ncomp: usize, zgrid: UniformGrid, ygrid: TransverseGrid) -> Self {
        let len = ncomp * zgrid.len * ygrid.total();
        Self {
            zgrid,
            ygrid,
            ncomp,
            data: vec![0.0; len],
        }
    }

    /// Samples `f(comp, z, y)`.
    pub fn from_fn(
        ncomp: usize,
        zgrid: UniformGrid,
        ygrid: TransverseGrid,
        f: impl Fn(usize, f64, &[f64]) -> f64,
    ) -> Self {
        let mut out = Self::zeros(ncomp, zgrid, ygrid);
        let points = out.ygrid.points();
        let ny = out.ny();
        for c in 0..ncomp {
            for iz in 0..zgrid.len {
                let z = zgrid.node(iz);
                for (iy, p) in points.iter().enumerate() {
                    out.data[(c * zgrid.len + iz) * ny + iy] = f(c, z, p);
                }
            }
        }
        out
    }

    #[inline]
    pub fn nz(&self) -> usize {
        self.zgrid.len
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ygrid.total()
    }

    #[inline]
    pub fn index(&self, comp: usize, iz: usize, iy: usize) -> usize {
        (comp * self.zgrid.len + iz) * self.ny() + iy
    }

    #[inline]
    pub fn get(&self, comp: usize, iz: usize, iy: usize) -> f64 {
        self.data[self.index(comp, iz, iy)]
    }

    pub fn line(&self, comp: usize, iz: usize) -> &[f64] {
        let ny = self.ny();
        let s = (comp * self.zgrid.len + iz) * ny;
        &self.data[s..s + ny]
    }

    /// Values of component `comp` along z at transverse node `iy`.
    pub fn column(&self, comp: usize, iy: usize) -> Vec<f64> {
        (0..self.nz()).map(|iz| self.get(comp, iz, iy)).collect()
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.ncomp == other.ncomp
            && self.zgrid.same_as(&other.zgrid)
            && self.ygrid == other.ygrid
    }

    pub fn check_shape(&self, other: &Field) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(LabError::Shape(format!(
                "fields with {}x{}x{} and {}x{}x{} nodes",
                self.ncomp,
                self.nz(),
                self.ny(),
                other.ncomp,
                other.nz(),
                other.ny()
            )))
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= s);
        out
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Field) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Copies components `range` into a new field.
    pub fn components(&self, range: std::ops::Range<usize>) -> Field {
        let block = self.nz() * self.ny();
        Field {
            zgrid: self.zgrid,
            ygrid: self.ygrid.clone(),
            ncomp: range.len(),
            data: self.data[range.start * block..range.end * block].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}
