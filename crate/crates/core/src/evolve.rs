//! Time integration of the co-moving-frame equation and the transverse heat
//! propagator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{Field, TransverseFft, TransverseGrid, UniformGrid};
use crate::front::{residual, FrontProfile};
use crate::linalg::{BandedLu, BandedMatrix, DiffOrder, Stencil};
use crate::model::ReactionSystem;
use crate::norms::{
    default_order, initial_energy, l1_norm_y, sobolev_norm, sobolev_norm_y, NormRecord,
    NormSeries, WeightFunction, WeightSpec,
};
use crate::projection::{AdjointNullvector, Decomposer, PerturbationState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Spatial dimension, 2 or 3.
    pub d: usize,
    pub nz: usize,
    pub half_length: f64,
    /// Transverse node counts, one per axis.
    pub ny: Vec<usize>,
    /// Transverse box lengths.
    pub ly: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
    #[serde(default)]
    pub k: Option<usize>,
    pub delta: f64,
    #[serde(default)]
    pub order: DiffOrder,
    /// Keep a snapshot every this many outputs.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d == 2 || self.d == 3) {
            return Err(LabError::Config(format!("dimension {} not in {{2, 3}}", self.d)));
        }
        if self.ny.len() != self.d - 1 || self.ly.len() != self.d - 1 {
            return Err(LabError::Config("need one transverse size and length per axis".into()));
        }
        if self.nz < 5 || self.nz.is_multiple_of(2) {
            return Err(LabError::Config("nz must be odd and at least 5".into()));
        }
        if !(self.dt > 0.0 && self.t_end >= 0.0 && self.output_stride > 0 && self.delta > 0.0) {
            return Err(LabError::Config("dt, t_end, output_stride and delta must be positive".into()));
        }
        Ok(())
    }

    pub fn order_k(&self) -> usize {
        self.k.unwrap_or_else(|| default_order(self.d))
    }

    pub fn zgrid(&self) -> UniformGrid {
        UniformGrid::centered(self.half_length, self.nz)
    }

    pub fn ygrid(&self) -> Result<TransverseGrid> {
        TransverseGrid::new(self.ny.clone(), self.ly.clone())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Stability bound for the explicit reaction part, `0.5 / max |df|_inf`
/// over the profile.
pub fn dt_max(sys: &ReactionSystem, front: Option<&FrontProfile>) -> f64 {
    let n = sys.dim();
    let mut jac = vec![0.0; n * n];
    let mut worst: f64 = 0.0;
    let mut visit = |u: &[f64]| {
        sys.jacobian_into(u, &mut jac);
        for i in 0..n {
            let row: f64 = jac[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum();
            worst = worst.max(row);
        }
    };
    match front {
        Some(f) => (0..f.n_nodes()).for_each(|i| visit(f.node(i))),
        None => visit(&vec![0.0; n]),
    }
    if worst == 0.0 {
        f64::INFINITY
    } else {
        0.5 / worst
    }
}

/// Second-order IMEX stepper for the perturbation `u - phi`.
///
/// Transverse diffusion is integrated exactly in Fourier space, `D d_zz + c d_z`
/// by Crank-Nicolson and the reaction by second-order Adams-Bashforth.
pub struct ImexStepper {
    sys: ReactionSystem,
    n: usize,
    zgrid: UniformGrid,
    fft: TransverseFft,
    dt: f64,
    base: Vec<f64>,
    base_f: Vec<f64>,
    residual: Vec<f64>,
    implicit: Vec<BandedLu<f64>>,
    explicit: Vec<BandedMatrix<f64>>,
    decay: Vec<Vec<f64>>,
    previous: Option<Vec<Complex64>>,
    pub time: f64,
}

impl ImexStepper {
    /// `front = None` evolves `u` itself (`phi = 0`, no residual).
    pub fn new(
        sys: &ReactionSystem,
        front: Option<&FrontProfile>,
        c: f64,
        zgrid: UniformGrid,
        ygrid: &TransverseGrid,
        dt: f64,
        order: DiffOrder,
    ) -> Result<Self> {
        let n = sys.dim();
        let limit = dt_max(sys, front);
        if dt > limit {
            return Err(LabError::TimeStep { dt, dt_max: limit });
        }
        let len = zgrid.len;
        let (base, residual_v) = match front {
            Some(f) => {
                if !f.grid.same_as(&zgrid) {
                    return Err(LabError::Shape("front grid differs from the simulation grid".into()));
                }
                let mut r = vec![0.0; len * n];
                r[n..(len - 1) * n].copy_from_slice(&residual(sys, f, order));
                (f.values().to_vec(), r)
            }
            None => (vec![0.0; len * n], vec![0.0; len * n]),
        };
        let mut base_f = vec![0.0; len * n];
        for i in 0..len {
            sys.f_into(&base[i * n..(i + 1) * n], &mut base_f[i * n..(i + 1) * n]);
        }
        let d = sys.diffusion();
        let m = len - 2;
        let h = zgrid.spacing;
        let mut implicit = Vec::with_capacity(n);
        let mut explicit = Vec::with_capacity(n);
        for &dj in &d {
            let mut l0 = BandedMatrix::<f64>::zeros(m, 2, 2);
            for i in 1..len - 1 {
                let st = Stencil::at(order, i, len, h);
                for o in 0..5 {
                    let k = i as isize + o as isize - 2;
                    if k < 1 || k > (len - 2) as isize {
                        continue;
                    }
                    let w = dj * st.d2[o] + c * st.d1[o];
                    if w != 0.0 {
                        l0.add(i - 1, k as usize - 1, w);
                    }
                }
            }
            let mut lhs = BandedMatrix::<f64>::zeros(m, 2, 2);
            let mut rhs = BandedMatrix::<f64>::zeros(m, 2, 2);
            for i in 0..m {
                for j in i.saturating_sub(2)..(i + 3).min(m) {
                    let v = l0.get(i, j);
                    let id = if i == j { 1.0 } else { 0.0 };
                    lhs.set(i, j, id - 0.5 * dt * v);
                    rhs.set(i, j, id + 0.5 * dt * v);
                }
            }
            implicit.push(lhs.factor()?);
            explicit.push(rhs);
        }
        let fft = TransverseFft::new(ygrid);
        let decay = d
            .iter()
            .map(|&dj| fft.k_squared().iter().map(|k2| (-dj * k2 * dt).exp()).collect())
            .collect();
        Ok(Self {
            sys: sys.clone(),
            n,
            zgrid,
            fft,
            dt,
            base,
            base_f,
            residual: residual_v,
            implicit,
            explicit,
            decay,
            previous: None,
            time: 0.0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn nonlinear(&self, u: &Field) -> Vec<Complex64> {
        let n = self.n;
        let nz = self.zgrid.len;
        let ny = u.ny();
        let m = nz - 2;
        let rows: Vec<Vec<Complex64>> = (1..nz - 1)
            .into_par_iter()
            .map(|iz| {
                let mut out = vec![Complex64::new(0.0, 0.0); n * ny];
                let mut s = vec![0.0; n];
                let mut fv = vec![0.0; n];
                let b = &self.base[iz * n..(iz + 1) * n];
                let bf = &self.base_f[iz * n..(iz + 1) * n];
                let r = &self.residual[iz * n..(iz + 1) * n];
                for iy in 0..ny {
                    for c in 0..n {
                        s[c] = b[c] + u.data[(c * nz + iz) * ny + iy];
                    }
                    self.sys.f_into(&s, &mut fv);
                    for c in 0..n {
                        out[c * ny + iy] = Complex64::new(fv[c] - bf[c] + r[c], 0.0);
                    }
                }
                for c in 0..n {
                    self.fft.forward(&mut out[c * ny..(c + 1) * ny]);
                }
                out
            })
            .collect();
        let mut packed = vec![Complex64::new(0.0, 0.0); n * m * ny];
        for (k, row) in rows.into_iter().enumerate() {
            for c in 0..n {
                packed[(c * m + k) * ny..(c * m + k + 1) * ny]
                    .copy_from_slice(&row[c * ny..(c + 1) * ny]);
            }
        }
        packed
    }

    /// Advances the perturbation `u - phi` by one step.
    pub fn step(&mut self, u: &mut Field) -> Result<()> {
        let n = self.n;
        let nz = self.zgrid.len;
        let m = nz - 2;
        let ny = u.ny();
        let dt = self.dt;
        let nl = self.nonlinear(u);
        let mut spec = vec![Complex64::new(0.0, 0.0); n * m * ny];
        spec.par_chunks_mut(ny).enumerate().for_each(|(row, out)| {
            let (c, k) = (row / m, row % m);
            let src = &u.data[(c * nz + k + 1) * ny..(c * nz + k + 2) * ny];
            for (o, &x) in out.iter_mut().zip(src) {
                *o = Complex64::new(x, 0.0);
            }
            self.fft.forward(out);
        });
        let prev = self.previous.as_ref().unwrap_or(&nl);
        for c in 0..n {
            let e = &self.decay[c];
            let block = c * m * ny..(c + 1) * m * ny;
            let s = &spec[block.clone()];
            let nn = &nl[block.clone()];
            let np = &prev[block];
            let mut rhs = vec![Complex64::new(0.0, 0.0); m * ny];
            let ex = &self.explicit[c];
            rhs.par_chunks_mut(ny).enumerate().for_each(|(i, out)| {
                for j in i.saturating_sub(2)..(i + 3).min(m) {
                    let w = ex.get(i, j);
                    if w == 0.0 {
                        continue;
                    }
                    for (o, x) in out.iter_mut().zip(&s[j * ny..(j + 1) * ny]) {
                        *o += x * w;
                    }
                }
                for (mode, o) in out.iter_mut().enumerate() {
                    let em = e[mode];
                    *o = *o * em
                        + (nn[i * ny + mode] * (1.5 * em) - np[i * ny + mode] * (0.5 * em * em)) * dt;
                }
            });
            self.implicit[c].solve_rows(&mut rhs, ny);
            spec[c * m * ny..(c + 1) * m * ny].copy_from_slice(&rhs);
        }
        spec.par_chunks_mut(ny).for_each(|line| self.fft.inverse(line));
        for c in 0..n {
            for k in 0..m {
                let dst = (c * nz + k + 1) * ny;
                for iy in 0..ny {
                    u.data[dst + iy] = spec[(c * m + k) * ny + iy].re;
                }
            }
        }
        if !u.is_finite() {
            return Err(LabError::BlowUp {
                last_valid_time: self.time,
            });
        }
        self.previous = Some(nl);
        self.time += dt;
        Ok(())
    }
}

/// `e^{t Delta} q` on the periodic transverse grid.
pub fn heat_propagate(q: &[f64], grid: &TransverseGrid, t: f64) -> Vec<f64> {
    let fft = TransverseFft::new(grid);
    let mut buf: Vec<Complex64> = q.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.forward(&mut buf);
    for (z, k2) in buf.iter_mut().zip(fft.k_squared()) {
        *z *= (-k2 * t).exp();
    }
    fft.inverse(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

/// `grad e^{t Delta} q`, one component per axis.
pub fn heat_propagate_gradient(q: &[f64], grid: &TransverseGrid, t: f64) -> Vec<Vec<f64>> {
    TransverseFft::new(grid).gradient(&heat_propagate(q, grid, t))
}

/// Initial data for a simulation.
#[derive(Clone, Debug)]
pub enum InitialPerturbation {
    State(PerturbationState),
    Raw(Field),
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    /// The perturbation `u - phi`.
    pub u_tilde: Field,
    pub state: Option<PerturbationState>,
    pub norms: NormRecord,
}

#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub series: NormSeries,
    pub snapshots: Vec<Snapshot>,
    /// Shift at each output time.
    pub shifts: Vec<(f64, Vec<f64>)>,
    /// Largest `|pi(v)|` over all outputs.
    pub max_pi_v: f64,
    /// Largest fraction of `|q|` mass in the outer tenth of the transverse box.
    pub seam_mass: f64,
    pub weight: WeightSpec,
}

/// Integrates `u_t = Delta u + c u_z + f(u)` from `phi + u~(0)` and records
/// the norms of the modulation decomposition at every output time.
pub fn simulate_perturbed_front(
    sys: &ReactionSystem,
    front: &FrontProfile,
    alpha: &WeightSpec,
    init: InitialPerturbation,
    cfg: &SimConfig,
    e: &AdjointNullvector,
) -> Result<SimulationOutput> {
    cfg.validate()?;
    let zgrid = cfg.zgrid();
    if !front.grid.same_as(&zgrid) {
        return Err(LabError::Shape(format!(
            "front on {} nodes over [-{}, {}], simulation on {} over [-{}, {}]",
            front.n_nodes(),
            front.grid.half_length(),
            front.grid.half_length(),
            cfg.nz,
            cfg.half_length,
            cfg.half_length
        )));
    }
    let ygrid = cfg.ygrid()?;
    let k = cfg.order_k();
    let (n1, _) = sys.split();
    let n = sys.dim();
    let weight = WeightFunction::new(*alpha);
    let decomposer = Decomposer::new(front, e)?;
    let (mut u, init_state) = match init {
        InitialPerturbation::State(s) => {
            let u = decomposer.recompose(&s)?;
            (u, s)
        }
        InitialPerturbation::Raw(u) => {
            let s = decomposer.decompose(&u)?;
            (u, s)
        }
    };
    if u.ncomp != n || u.ygrid != ygrid || !u.zgrid.same_as(&zgrid) {
        return Err(LabError::Shape("initial perturbation does not match the grid".into()));
    }
    let e_k = initial_energy(&init_state.v, &init_state.q, k, &weight)?;
    let mut stepper = ImexStepper::new(sys, Some(front), front.c, zgrid, &ygrid, cfg.dt, cfg.order)?;
    let mut series = NormSeries {
        d: cfg.d,
        k,
        e_k,
        delta: cfg.delta,
        ..Default::default()
    };
    let mut out = SimulationOutput {
        series: NormSeries::default(),
        snapshots: Vec::new(),
        shifts: Vec::new(),
        max_pi_v: 0.0,
        seam_mass: 0.0,
        weight: *alpha,
    };
    let seam: Vec<bool> = ygrid
        .points()
        .iter()
        .map(|p| p.iter().zip(&ygrid.lengths).any(|(y, l)| y.abs() > 0.4 * l))
        .collect();
    let steps = cfg.steps();
    let mut output_index = 0;
    let mut record = |t: f64, u: &Field, series: &mut NormSeries, out: &mut SimulationOutput| -> Result<()> {
        let state = match decomposer.decompose(u) {
            Ok(s) => Some(s),
            Err(LabError::DecompositionOutOfRange(msg)) => {
                if series.breakdown_time.is_none() {
                    log::warn!("modulation breakdown at t = {t}: {msg}");
                    series.breakdown_time = Some(t);
                }
                None
            }
            Err(err) => return Err(err),
        };
        let (v, q, w) = match &state {
            Some(s) => (&s.v, s.q.clone(), s.w.clone()),
            None => (u, vec![0.0; u.ny()], vec![vec![0.0; u.ny()]; ygrid.axes()]),
        };
        let v_hk = sobolev_norm(v, None, k, None)?;
        let v_hka = sobolev_norm(v, None, k, Some(&weight))?;
        let w_refs: Vec<&[f64]> = w.iter().map(|x| x.as_slice()).collect();
        let rec = NormRecord {
            t,
            v_hk,
            v_hka,
            v_h: v_hk.max(v_hka),
            v1_hk: sobolev_norm(v, Some(0..n1), k, None)?,
            v2_hk: sobolev_norm(v, Some(n1..n), k, None)?,
            q_hk: sobolev_norm_y(&[&q], &ygrid, k)?,
            q_l1: l1_norm_y(&q, &ygrid),
            w_hk: sobolev_norm_y(&w_refs, &ygrid, k)?,
        };
        if state.is_some() {
            let pv = decomposer.projector().pi(v)?;
            out.max_pi_v = pv.iter().fold(out.max_pi_v, |m, x| m.max(x.abs()));
        }
        let total: f64 = q.iter().map(|x| x.abs()).sum();
        if total > 0.0 {
            let outer: f64 = q.iter().zip(&seam).filter(|(_, s)| **s).map(|(x, _)| x.abs()).sum();
            out.seam_mass = out.seam_mass.max(outer / total);
        }
        if series.t_exit.is_none() && rec.v_h + rec.q_hk + rec.w_hk > cfg.delta {
            series.t_exit = Some(t);
        }
        series.records.push(rec);
        out.shifts.push((t, q));
        if let Some(every) = cfg.snapshot_every {
            if every > 0 && output_index % every == 0 {
                out.snapshots.push(Snapshot {
                    t,
                    u_tilde: u.clone(),
                    state: state.clone(),
                    norms: rec,
                });
            }
        }
        output_index += 1;
        Ok(())
    };
    record(0.0, &u, &mut series, &mut out)?;
    for s in 1..=steps {
        stepper.step(&mut u)?;
        if s % cfg.output_stride == 0 {
            record(s as f64 * cfg.dt, &u, &mut series, &mut out)?;
        }
    }
    out.series = series;
    Ok(out)
}

/// Writes a snapshot as CSV field dumps plus a JSON manifest.
pub fn write_snapshot(dir: &std::path::Path, tag: &str, snap: &Snapshot) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let u = &snap.u_tilde;
    let points = u.ygrid.points();
    let field_name = format!("{tag}_field.csv");
    let mut w = csv::Writer::from_path(dir.join(&field_name))?;
    let mut header = vec!["z".to_string()];
    header.extend((0..u.ygrid.axes()).map(|a| format!("y{}", a + 1)));
    header.extend((0..u.ncomp).map(|c| format!("u{}", c + 1)));
    if snap.state.is_some() {
        header.extend((0..u.ncomp).map(|c| format!("v{}", c + 1)));
    }
    w.write_record(&header)?;
    for iz in 0..u.nz() {
        for (iy, p) in points.iter().enumerate() {
            let mut row = vec![u.zgrid.node(iz).to_string()];
            row.extend(p.iter().map(|x| x.to_string()));
            row.extend((0..u.ncomp).map(|c| u.get(c, iz, iy).to_string()));
            if let Some(s) = &snap.state {
                row.extend((0..u.ncomp).map(|c| s.v.get(c, iz, iy).to_string()));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    let mut files = vec![field_name];
    if let Some(s) = &snap.state {
        let shift_name = format!("{tag}_shift.csv");
        let mut w = csv::Writer::from_path(dir.join(&shift_name))?;
        let mut header: Vec<String> = (0..u.ygrid.axes()).map(|a| format!("y{}", a + 1)).collect();
        header.push("q".into());
        header.extend((0..u.ygrid.axes()).map(|a| format!("w{}", a + 1)));
        w.write_record(&header)?;
        for (iy, p) in points.iter().enumerate() {
            let mut row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            row.push(s.q[iy].to_string());
            row.extend(s.w.iter().map(|g| g[iy].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        files.push(shift_name);
    }
    let manifest = serde_json::json!({
        "schema": "snap/1",
        "t": snap.t,
        "grid": {
            "z": {"L": u.zgrid.half_length(), "n_nodes": u.nz()},
            "y": {"sizes": u.ygrid.sizes, "lengths": u.ygrid.lengths},
        },
        "files": files,
        "norms": snap.norms,
    });
    std::fs::write(
        dir.join(format!("{tag}.json")),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &TransverseGrid, var: f64) -> Vec<f64> {
        grid.sample(|y| (-y[0] * y[0] / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
    }

    #[test]
    fn heat_identity_at_zero() {
        let g = TransverseGrid::line(64, 40.0);
        let q = gaussian(&g, 2.0);
        let out = heat_propagate(&q, &g, 0.0);
        assert!(out.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn heat_spreads_gaussians() {
        let g = TransverseGrid::line(256, 80.0);
        let q = gaussian(&g, 2.0);
        let out = heat_propagate(&q, &g, 3.0);
        let exact = gaussian(&g, 8.0);
        let err = out.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "{err}");
        let mass: f64 = out.iter().sum::<f64>() - q.iter().sum::<f64>();
        assert!(mass.abs() * g.cell_volume() < 1e-12);
    }

    #[test]
    fn config_checks() {
        let cfg = SimConfig {
            d: 2,
            nz: 64,
            half_length: 10.0,
            ny: vec![8],
            ly: vec![8.0],
            dt: 0.1,
            t_end: 1.0,
            output_stride: 1,
            k: None,
            delta: 1.0,
            order: DiffOrder::Fourth,
            snapshot_every: None,
        };
        assert!(cfg.validate().is_err());
        let ok = SimConfig { nz: 65, ..cfg.clone() };
        assert!(ok.validate().is_ok());
        assert_eq!(ok.steps(), 10);
        assert_eq!(ok.order_k(), 2);
        assert!(SimConfig { d: 4, ..ok }.validate().is_err());
    }

    #[test]
    fn step_beyond_stability_bound_is_refused() {
        let sys = ReactionSystem::linear(vec![vec![-10.0]]).unwrap();
        let r = ImexStepper::new(
            &sys,
            None,
            0.0,
            UniformGrid::centered(5.0, 21),
            &TransverseGrid::line(4, 4.0),
            1.0,
            DiffOrder::Fourth,
        );
        assert!(matches!(r, Err(LabError::TimeStep { .. })));
    }
}
