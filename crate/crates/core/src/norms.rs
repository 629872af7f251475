//! Exponential weights and discrete Sobolev norms.

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{Field, TransverseFft, TransverseGrid};
use crate::linalg::{apply_stencil, DiffOrder};

const LOG_GUARD: f64 = 700.0;

/// Two-sided exponential weight exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    /// Half-width of the interval on which the two exponentials are blended.
    #[serde(default = "default_bridge")]
    pub bridge_half_width: f64,
}

fn default_bridge() -> f64 {
    1.0
}

impl WeightSpec {
    pub fn new(alpha_minus: f64, alpha_plus: f64) -> Self {
        Self {
            alpha_minus,
            alpha_plus,
            bridge_half_width: 1.0,
        }
    }

    pub fn unweighted() -> Self {
        Self::new(0.0, 0.0)
    }
}

/// `gamma(z) = exp(sigma(z))`, linear exponent outside the bridge and a
/// quintic Hermite blend inside.
#[derive(Clone, Debug)]
pub struct WeightFunction {
    pub alpha: WeightSpec,
    coeffs: [f64; 6],
    offset: f64,
}

impl WeightFunction {
    pub fn new(alpha: WeightSpec) -> Self {
        let w = alpha.bridge_half_width;
        assert!(w > 0.0, "bridge half-width must be positive");
        let (am, ap) = (alpha.alpha_minus, alpha.alpha_plus);
        let row = |z: f64, der: usize| -> [f64; 6] {
            let mut r = [0.0; 6];
            for (p, slot) in r.iter_mut().enumerate() {
                *slot = match der {
                    0 => z.powi(p as i32),
                    1 if p >= 1 => p as f64 * z.powi(p as i32 - 1),
                    2 if p >= 2 => (p * (p - 1)) as f64 * z.powi(p as i32 - 2),
                    _ => 0.0,
                };
            }
            r
        };
        let rows = [
            row(-w, 0),
            row(-w, 1),
            row(-w, 2),
            row(w, 0),
            row(w, 1),
            row(w, 2),
        ];
        let m = Matrix6::from_fn(|i, j| rows[i][j]);
        let rhs = Vector6::new(-am * w, am, 0.0, ap * w, ap, 0.0);
        let c = m.lu().solve(&rhs).expect("Hermite system is regular");
        let mut coeffs = [0.0; 6];
        coeffs.copy_from_slice(c.as_slice());
        if am == ap {
            coeffs = [0.0, am, 0.0, 0.0, 0.0, 0.0];
        }
        Self {
            alpha,
            coeffs,
            offset: 0.0,
        }
    }

    /// Same weight multiplied by `exp(offset)`.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// sigma, sigma', sigma''.
    pub fn sigma_all(&self, z: f64) -> (f64, f64, f64) {
        let w = self.alpha.bridge_half_width;
        let (s, d, dd) = if z <= -w {
            (self.alpha.alpha_minus * z, self.alpha.alpha_minus, 0.0)
        } else if z >= w {
            (self.alpha.alpha_plus * z, self.alpha.alpha_plus, 0.0)
        } else {
            let c = &self.coeffs;
            let s = c[0] + z * (c[1] + z * (c[2] + z * (c[3] + z * (c[4] + z * c[5]))));
            let d = c[1] + z * (2.0 * c[2] + z * (3.0 * c[3] + z * (4.0 * c[4] + z * 5.0 * c[5])));
            let dd = 2.0 * c[2] + z * (6.0 * c[3] + z * (12.0 * c[4] + z * 20.0 * c[5]));
            (s, d, dd)
        };
        (s + self.offset, d, dd)
    }

    pub fn sigma(&self, z: f64) -> f64 {
        self.sigma_all(z).0
    }

    /// gamma(z); saturates instead of overflowing.
    pub fn eval(&self, z: f64) -> f64 {
        let s = self.sigma(z);
        if s > LOG_GUARD {
            f64::MAX
        } else {
            s.exp()
        }
    }

    /// gamma(z) * u evaluated through logarithms when the weight is extreme.
    pub fn apply(&self, z: f64, u: f64) -> f64 {
        let s = self.sigma(z);
        if s.abs() <= LOG_GUARD {
            s.exp() * u
        } else if u == 0.0 {
            0.0
        } else {
            u.signum() * (s + u.abs().ln()).exp()
        }
    }

    /// u / gamma(z).
    pub fn remove(&self, z: f64, u: f64) -> f64 {
        let s = -self.sigma(z);
        if s.abs() <= LOG_GUARD {
            s.exp() * u
        } else if u == 0.0 {
            0.0
        } else {
            u.signum() * (s + u.abs().ln()).exp()
        }
    }

    /// gamma * u for a whole field.
    pub fn weigh(&self, field: &Field) -> Field {
        let mut out = field.clone();
        let ny = field.ny();
        for c in 0..field.ncomp {
            for iz in 0..field.nz() {
                let z = field.zgrid.node(iz);
                let s = (c * field.nz() + iz) * ny;
                for x in &mut out.data[s..s + ny] {
                    *x = self.apply(z, *x);
                }
            }
        }
        out
    }
}

/// All multi-indices over `axes` variables with total order at most `k`.
pub fn multi_indices(axes: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; axes];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for p in 0..=left {
            cur[pos] = p;
            rec(pos + 1, left - p, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, k, &mut cur, &mut out);
    out
}

/// m-th z-derivative by repeated 4th-order stencils, zero beyond the ends.
fn z_derivative(values: &[f64], h: f64, m: usize) -> Vec<f64> {
    let mut cur = values.to_vec();
    let mut tmp = vec![0.0; values.len()];
    let mut left = m;
    while left > 0 {
        let which = if left >= 2 { 2 } else { 1 };
        apply_stencil(DiffOrder::Fourth, &cur, h, which, &mut tmp);
        std::mem::swap(&mut cur, &mut tmp);
        left -= which as usize;
    }
    cur
}

fn trapezoid_weight(i: usize, n: usize, h: f64) -> f64 {
    if i == 0 || i + 1 == n {
        0.5 * h
    } else {
        h
    }
}

/// Sum over |a| <= k of the L2 norms of the distinct derivatives, optionally
/// of `gamma * u`. `comps` restricts to a block of components.
pub fn sobolev_norm(
    field: &Field,
    comps: Option<std::ops::Range<usize>>,
    k: usize,
    weight: Option<&WeightFunction>,
) -> Result<f64> {
    let nz = field.nz();
    if nz < 2 * k + 1 || field.ygrid.sizes.iter().any(|&n| n < 2 * k + 1) {
        return Err(LabError::Resolution {
            order: k,
            nodes: nz.min(*field.ygrid.sizes.iter().min().unwrap()),
        });
    }
    let comps = comps.unwrap_or(0..field.ncomp);
    if comps.is_empty() {
        return Ok(0.0);
    }
    let owned;
    let source = match weight {
        Some(w) => {
            owned = w.weigh(field);
            &owned
        }
        None => field,
    };
    let ny = field.ny();
    let axes = field.ygrid.axes();
    let fft = TransverseFft::new(&field.ygrid);
    let h = field.zgrid.spacing;
    let vol = field.ygrid.cell_volume();
    let y_indices: Vec<Vec<Vec<usize>>> = (0..=k).map(|m| multi_indices(axes, m)).collect();
    let symbols: Vec<Vec<Vec<f64>>> = y_indices
        .iter()
        .map(|set| {
            set.iter()
                .map(|b| (0..ny).map(|idx| fft.derivative_symbol(idx, b).norm_sqr()).collect())
                .collect()
        })
        .collect();
    // accum[az][b] = squared L2 norm of d_z^az d_y^b over the selected block
    let mut accum: Vec<Vec<f64>> = (0..=k)
        .map(|az| vec![0.0; y_indices[k - az].len()])
        .collect();
    let mut column = vec![0.0; nz];
    let mut spectra = vec![Complex64::new(0.0, 0.0); nz * ny];
    for c in comps {
        for az in 0..=k {
            // z-derivative of every column, then one FFT per z-line
            let mut deriv = vec![0.0; nz * ny];
            for iy in 0..ny {
                for (iz, slot) in column.iter_mut().enumerate() {
                    *slot = source.get(c, iz, iy);
                }
                let d = z_derivative(&column, h, az);
                for iz in 0..nz {
                    deriv[iz * ny + iy] = d[iz];
                }
            }
            for iz in 0..nz {
                let line = &mut spectra[iz * ny..(iz + 1) * ny];
                for (s, &x) in line.iter_mut().zip(&deriv[iz * ny..(iz + 1) * ny]) {
                    *s = Complex64::new(x, 0.0);
                }
                fft.forward(line);
            }
            for (bi, sym) in symbols[k - az].iter().enumerate() {
                let mut total = 0.0;
                for iz in 0..nz {
                    let line = &spectra[iz * ny..(iz + 1) * ny];
                    let s: f64 = line.iter().zip(sym).map(|(a, m)| a.norm_sqr() * m).sum();
                    total += trapezoid_weight(iz, nz, h) * s;
                }
                accum[az][bi] += total * vol / ny as f64;
            }
        }
    }
    Ok(accum.iter().flatten().map(|x| x.sqrt()).sum())
}

/// Sobolev norm of one or more functions on the transverse grid; several
/// functions are treated as the components of a vector.
pub fn sobolev_norm_y(values: &[&[f64]], grid: &TransverseGrid, k: usize) -> Result<f64> {
    if grid.sizes.iter().any(|&n| n < 2 * k + 1) {
        return Err(LabError::Resolution {
            order: k,
            nodes: *grid.sizes.iter().min().unwrap(),
        });
    }
    let fft = TransverseFft::new(grid);
    let ny = grid.total();
    let vol = grid.cell_volume();
    let spectra: Vec<Vec<Complex64>> = values
        .iter()
        .map(|v| {
            let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            fft.forward(&mut buf);
            buf
        })
        .collect();
    let mut total = 0.0;
    for b in multi_indices(grid.axes(), k) {
        let mut sq = 0.0;
        for s in &spectra {
            for (idx, z) in s.iter().enumerate() {
                sq += z.norm_sqr() * fft.derivative_symbol(idx, &b).norm_sqr();
            }
        }
        total += (sq * vol / ny as f64).sqrt();
    }
    Ok(total)
}

pub fn l1_norm_y(values: &[f64], grid: &TransverseGrid) -> f64 {
    grid.cell_volume() * values.iter().map(|x| x.abs()).sum::<f64>()
}

/// `||q||_{L1} + sum_i ||d_i q||_{L1}`.
pub fn w11_norm_y(values: &[f64], grid: &TransverseGrid) -> f64 {
    let fft = TransverseFft::new(grid);
    l1_norm_y(values, grid)
        + fft
            .gradient(values)
            .iter()
            .map(|g| l1_norm_y(g, grid))
            .sum::<f64>()
}

/// Sobolev norm of a scalar function of z alone on `start + i h`.
pub fn sobolev_norm_1d(
    values: &[f64],
    start: f64,
    h: f64,
    k: usize,
    weight: Option<&WeightFunction>,
) -> Result<f64> {
    let n = values.len();
    if n < 2 * k + 1 {
        return Err(LabError::Resolution { order: k, nodes: n });
    }
    let u: Vec<f64> = match weight {
        Some(w) => values
            .iter()
            .enumerate()
            .map(|(i, &x)| w.apply(start + i as f64 * h, x))
            .collect(),
        None => values.to_vec(),
    };
    let mut total = 0.0;
    for m in 0..=k {
        let d = z_derivative(&u, h, m);
        let sq: f64 = d
            .iter()
            .enumerate()
            .map(|(i, x)| trapezoid_weight(i, n, h) * x * x)
            .sum();
        total += sq.sqrt();
    }
    Ok(total)
}

/// max(H^k, H^k_alpha) norm.
pub fn intersection_norm(
    field: &Field,
    comps: Option<std::ops::Range<usize>>,
    k: usize,
    weight: &WeightFunction,
) -> Result<f64> {
    let plain = sobolev_norm(field, comps.clone(), k, None)?;
    let weighted = sobolev_norm(field, comps, k, Some(weight))?;
    Ok(plain.max(weighted))
}

/// `E_k = ||v0||_H + ||q0||_{H^{k+1}} + ||q0||_{W^{1,1}}`.
pub fn initial_energy(v0: &Field, q0: &[f64], k: usize, weight: &WeightFunction) -> Result<f64> {
    if q0.len() != v0.ny() {
        return Err(LabError::Shape("q0 does not live on the field's transverse grid".into()));
    }
    Ok(intersection_norm(v0, None, k, weight)?
        + sobolev_norm_y(&[q0], &v0.ygrid, k + 1)?
        + w11_norm_y(q0, &v0.ygrid))
}

/// Default Sobolev order `ceil((d+1)/2)`.
pub fn default_order(d: usize) -> usize {
    (d + 2) / 2
}

/// One row of a norm time series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub t: f64,
    pub v_hk: f64,
    pub v_hka: f64,
    #[serde(rename = "v_H")]
    pub v_h: f64,
    pub v1_hk: f64,
    pub v2_hk: f64,
    pub q_hk: f64,
    pub q_l1: f64,
    pub w_hk: f64,
}

impl NormRecord {
    pub fn get(&self, column: &str) -> Option<f64> {
        Some(match column {
            "t" => self.t,
            "v_hk" => self.v_hk,
            "v_hka" => self.v_hka,
            "v_H" => self.v_h,
            "v1_hk" => self.v1_hk,
            "v2_hk" => self.v2_hk,
            "q_hk" => self.q_hk,
            "q_l1" => self.q_l1,
            "w_hk" => self.w_hk,
            _ => return None,
        })
    }
}

pub const NORM_COLUMNS: [&str; 9] = [
    "t", "v_hk", "v_hka", "v_H", "v1_hk", "v2_hk", "q_hk", "q_l1", "w_hk",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub d: usize,
    pub k: usize,
    pub e_k: f64,
    pub delta: f64,
    pub t_exit: Option<f64>,
    pub breakdown_time: Option<f64>,
    pub records: Vec<NormRecord>,
}

impl NormSeries {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        self.records
            .iter()
            .map(|r| {
                r.get(name)
                    .ok_or_else(|| LabError::Config(format!("unknown norm column `{name}`")))
            })
            .collect()
    }

    /// Running supremum of a column.
    pub fn running_sup(&self, name: &str) -> Result<Vec<f64>> {
        let mut best = f64::NEG_INFINITY;
        Ok(self
            .column(name)?
            .into_iter()
            .map(|x| {
                best = best.max(x);
                best
            })
            .collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        if self.records.is_empty() {
            w.write_record(NORM_COLUMNS)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<NormRecord>> {
        let mut r = csv::Reader::from_reader(input);
        let mut out = Vec::new();
        for rec in r.deserialize() {
            out.push(rec?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::UniformGrid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weight_branches() {
        let w = WeightFunction::new(WeightSpec::new(0.5, 0.3));
        assert_abs_diff_eq!(w.eval(5.0), 1.5f64.exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.eval(-4.0), (-2.0f64).exp(), epsilon = 1e-14);
        let eq = WeightFunction::new(WeightSpec::new(0.4, 0.4));
        for k in 0..50 {
            let z = -3.0 + 0.12 * k as f64;
            assert_abs_diff_eq!(eq.eval(z), (0.4 * z).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn bridge_is_c2_at_joints() {
        let w = WeightFunction::new(WeightSpec::new(0.7, 0.2));
        for &z in &[-1.0f64, 1.0] {
            let inside = w.sigma_all(z * (1.0 - 1e-15));
            let outside = w.sigma_all(z * (1.0 + 1e-15));
            assert_abs_diff_eq!(inside.0, outside.0, epsilon = 1e-12);
            assert_abs_diff_eq!(inside.1, outside.1, epsilon = 1e-12);
            assert_abs_diff_eq!(inside.2, outside.2, epsilon = 1e-11);
        }
    }

    #[test]
    fn log_space_guard() {
        let w = WeightFunction::new(WeightSpec::new(1.0, 1.0));
        let v = w.apply(710.0, (-705.0f64).exp());
        assert!((v / 5.0f64.exp() - 1.0).abs() < 1e-12);
        assert!(w.eval(800.0).is_finite());
    }

    #[test]
    fn gaussian_norms_1d() {
        let h = 0.01;
        let n = 2001;
        let u: Vec<f64> = (0..n).map(|i| (-(-10.0 + i as f64 * h).powi(2)).exp()).collect();
        let n0 = sobolev_norm_1d(&u, -10.0, h, 0, None).unwrap();
        assert_abs_diff_eq!(n0, (std::f64::consts::PI / 2.0).powf(0.25), epsilon = 1e-8);
        let n1 = sobolev_norm_1d(&u, -10.0, h, 1, None).unwrap();
        let d = (std::f64::consts::PI / 2.0).sqrt().sqrt();
        assert_abs_diff_eq!(n1, n0 + d, epsilon = 1e-6);
    }

    #[test]
    fn field_norm_is_separable() {
        let z = UniformGrid::centered(8.0, 321);
        let y = TransverseGrid::line(64, 16.0);
        let f = Field::from_fn(1, z, y.clone(), |_, z, y| (-z * z).exp() * (-y[0] * y[0]).exp());
        let got = sobolev_norm(&f, None, 0, None).unwrap();
        assert_abs_diff_eq!(got, (std::f64::consts::PI / 2.0).sqrt(), epsilon = 1e-8);
        assert!(matches!(
            sobolev_norm(&Field::zeros(1, UniformGrid::centered(1.0, 3), y), None, 2, None),
            Err(LabError::Resolution { .. })
        ));
    }

    #[test]
    fn series_csv_header() {
        let s = NormSeries {
            records: vec![NormRecord::default()],
            ..Default::default()
        };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,v_hk,v_hka,v_H,v1_hk,v2_hk,q_hk,q_l1,w_hk"));
        assert_eq!(NormSeries::read_csv(text.as_bytes()).unwrap().len(), 1);
    }
}
