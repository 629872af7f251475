//! Power-law fits and one-sided decay bound checks on norm time series.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::norms::NormSeries;

/// Time window `[t_min, t_max]` of a fit; `t_max = None` runs to the end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    pub t_min: f64,
    #[serde(default)]
    pub t_max: Option<f64>,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            t_min: 5.0,
            t_max: None,
        }
    }
}

impl FitWindow {
    pub fn new(t_min: f64, t_max: f64) -> Self {
        Self {
            t_min,
            t_max: Some(t_max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min >= 0.0) || self.t_max.is_some_and(|t| !(t > self.t_min)) {
            return Err(LabError::Config(format!("bad fit window {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && self.t_max.is_none_or(|m| t <= m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Slope of `log value` against `log(1 + t)`.
    pub exponent: f64,
    pub stderr: f64,
    pub log_prefactor: f64,
    pub points: usize,
}

/// Least-squares exponent `p` in `value ~ A (1 + t)^p` over the window.
pub fn fit_power_law(times: &[f64], values: &[f64], window: FitWindow) -> Result<ExponentFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if !window.contains(t) {
            continue;
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(LabError::Fit(format!("value {v:e} at t = {t} is not positive")));
        }
        xs.push((1.0 + t).ln());
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(LabError::Fit(format!("{n} points inside {window:?}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::Fit("all points at one time".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if n > 2 { (sse / (n - 2) as f64 / sxx).sqrt() } else { 0.0 };
    Ok(ExponentFit {
        exponent: slope,
        stderr,
        log_prefactor: intercept,
        points: n,
    })
}

pub fn fit_decay_exponent(series: &NormSeries, column: &str, window: FitWindow) -> Result<ExponentFit> {
    fit_power_law(&series.times(), &series.column(column)?, window)
}

/// Outcome of `value(t) <= C (1 + t)^(-rate) E_k` with `C` fixed at the
/// calibration time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub column: String,
    pub rate: f64,
    pub calibrated_at: f64,
    pub constant: f64,
    pub e_k: f64,
    /// Largest `value / bound` after calibration; at most `1 + slack` to pass.
    pub worst_ratio: f64,
    pub worst_time: f64,
    pub pass: bool,
}

pub fn bound_check(
    series: &NormSeries,
    column: &str,
    rate: f64,
    calibrate_at: f64,
    slack: f64,
) -> Result<BoundCheck> {
    let times = series.times();
    let values = series.column(column)?;
    let start = times
        .iter()
        .position(|&t| t >= calibrate_at)
        .ok_or_else(|| LabError::Fit(format!("no record at or after t = {calibrate_at}")))?;
    let e_k = series.e_k;
    if !(e_k > 0.0) {
        return Err(LabError::Fit("initial energy must be positive".into()));
    }
    let t0 = times[start];
    let constant = values[start] * (1.0 + t0).powf(rate) / e_k;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_time = t0;
    for (&t, &v) in times.iter().zip(&values).skip(start) {
        let bound = constant * (1.0 + t).powf(-rate) * e_k;
        let r = if bound > 0.0 {
            v / bound
        } else if v == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if r > worst_ratio {
            worst_ratio = r;
            worst_time = t;
        }
    }
    Ok(BoundCheck {
        column: column.to_string(),
        rate,
        calibrated_at: t0,
        constant,
        e_k,
        worst_ratio,
        worst_time,
        pass: worst_ratio <= 1.0 + slack,
    })
}

/// `value(t) <= factor * max_{s <= t_ref} value(s)` for every recorded `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCheck {
    pub column: String,
    pub reference_max: f64,
    pub overall_max: f64,
    pub factor: f64,
    pub pass: bool,
}

pub fn boundedness_check(series: &NormSeries, column: &str, t_ref: f64, factor: f64) -> Result<BoundednessCheck> {
    let times = series.times();
    let values = series.column(column)?;
    let reference_max = times
        .iter()
        .zip(&values)
        .filter(|(t, _)| **t <= t_ref)
        .fold(0.0f64, |m, (_, v)| m.max(*v));
    let overall_max = values.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(BoundednessCheck {
        column: column.to_string(),
        reference_max,
        overall_max,
        factor,
        pass: overall_max <= factor * reference_max,
    })
}

/// Decay rates attached to the norm columns in dimension `d`.
pub fn theorem_rates(d: usize) -> Vec<(&'static str, f64)> {
    let d = d as f64;
    vec![
        ("v_hka", (d + 1.0) / 2.0),
        ("q_hk", (d - 1.0) / 4.0),
        ("w_hk", (d + 1.0) / 4.0),
        ("v2_hk", (d + 1.0) / 2.0),
    ]
}
