//! Convolution integrals of algebraic and exponential kernels against their
//! claimed algebraic bounds.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::front::linear_fit;
use crate::linalg::gauss_legendre;

/// Which of the three convolution integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `int_0^{t/2} (1+t-s)^-b (1+s)^-c ds`
    FirstHalf,
    /// `int_{t/2}^t (1+t-s)^-b (1+s)^-c ds`
    SecondHalf,
    /// `int_0^t e^{-b(t-s)} (1+s)^-c ds`
    Exponential,
}

impl Kernel {
    pub fn clause(&self) -> usize {
        match self {
            Kernel::FirstHalf => 1,
            Kernel::SecondHalf => 2,
            Kernel::Exponential => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralTriple {
    pub kernel: Kernel,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl IntegralTriple {
    pub fn new(kernel: Kernel, a: f64, b: f64, c: f64) -> Self {
        Self { kernel, a, b, c }
    }

    /// Whether the side conditions guaranteeing the bound hold.
    pub fn admissible(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return false;
        }
        match self.kernel {
            Kernel::FirstHalf => (a <= b && a <= b + c - 1.0 && c != 1.0) || (a < b && c == 1.0),
            Kernel::SecondHalf => (a <= c && a <= b + c - 1.0 && b != 1.0) || (a < c && b == 1.0),
            Kernel::Exponential => a <= c,
        }
    }

    pub fn integrand(&self, t: f64, s: f64) -> f64 {
        match self.kernel {
            Kernel::Exponential => (-self.b * (t - s)).exp() * (1.0 + s).powf(-self.c),
            _ => (1.0 + t - s).powf(-self.b) * (1.0 + s).powf(-self.c),
        }
    }

    pub fn integral(&self, t: f64) -> f64 {
        let (lo, hi) = match self.kernel {
            Kernel::FirstHalf => (0.0, 0.5 * t),
            Kernel::SecondHalf => (0.5 * t, t),
            Kernel::Exponential => (0.0, t),
        };
        let scale = match self.kernel {
            Kernel::Exponential => self.b.recip().min(1.0),
            _ => 1.0,
        };
        graded_quadrature(|s| self.integrand(t, s), lo, hi, scale)
    }
}

/// Composite Gauss-Legendre on panels that grow geometrically away from
/// both ends, starting at width `scale`.
fn graded_quadrature(f: impl Fn(f64) -> f64, lo: f64, hi: f64, scale: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mid = 0.5 * (lo + hi);
    let mut edges = vec![lo];
    let mut w = 0.25 * scale;
    let mut x = lo;
    while x + w < mid {
        x += w;
        edges.push(x);
        w *= 1.5;
    }
    let mut right = Vec::new();
    w = 0.25 * scale;
    x = hi;
    while x - w > mid {
        x -= w;
        right.push(x);
        w *= 1.5;
    }
    edges.push(mid);
    edges.extend(right.into_iter().rev());
    edges.push(hi);
    let (nodes, weights) = gauss_legendre(16);
    edges
        .windows(2)
        .map(|p| {
            let len = p[1] - p[0];
            nodes
                .iter()
                .zip(&weights)
                .map(|(s, wt)| wt * f(p[0] + s * len))
                .sum::<f64>()
                * len
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleResult {
    pub triple: IntegralTriple,
    /// Fitted constant `sup_t I(t) (1+t)^a`.
    pub sup_ratio: f64,
    /// Log-log slope of the ratio over the last decade.
    pub tail_slope: f64,
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub times: (f64, f64, usize),
    pub results: Vec<TripleResult>,
    pub controls: Vec<TripleResult>,
}

impl IntegralReport {
    pub fn clause_bounded(&self, clause: usize) -> bool {
        self.results
            .iter()
            .filter(|r| r.triple.kernel.clause() == clause)
            .all(|r| r.bounded)
    }

    pub fn count(&self, clause: usize) -> usize {
        self.results.iter().filter(|r| r.triple.kernel.clause() == clause).count()
    }

    pub fn controls_diverge(&self) -> bool {
        self.controls.iter().all(|r| !r.bounded)
    }
}

fn evaluate(triple: &IntegralTriple, times: &[f64], slope_tol: f64) -> TripleResult {
    let ratios: Vec<f64> = times
        .iter()
        .map(|&t| triple.integral(t) * (1.0 + t).powf(triple.a))
        .collect();
    let t_end = *times.last().unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&ratios)
        .filter(|(t, _)| **t >= 0.1 * t_end)
        .map(|(t, r)| ((1.0 + t).ln(), r.ln()))
        .unzip();
    let tail_slope = linear_fit(&xs, &ys).map_or(f64::NAN, |f| f.0);
    let sup_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    TripleResult {
        triple: *triple,
        sup_ratio,
        tail_slope,
        bounded: sup_ratio.is_finite() && tail_slope <= slope_tol,
    }
}

/// Ratios `I(t) (1+t)^a` on `points` log-spaced times in `[1, t_max]`.
/// Triples must satisfy their side conditions; controls must violate them.
pub fn verify_integral_inequalities(
    triples: &[IntegralTriple],
    controls: &[IntegralTriple],
    t_max: f64,
    points: usize,
    slope_tol: f64,
) -> Result<IntegralReport> {
    if let Some(bad) = triples.iter().find(|t| !t.admissible()) {
        return Err(LabError::Precondition(format!("side conditions fail for {bad:?}")));
    }
    if let Some(bad) = controls.iter().find(|t| t.admissible()) {
        return Err(LabError::Precondition(format!("control {bad:?} satisfies the side conditions")));
    }
    if !(t_max > 1.0) || points < 4 {
        return Err(LabError::Precondition("need t_max > 1 and at least 4 times".into()));
    }
    let times: Vec<f64> = (0..points)
        .map(|i| t_max.powf(i as f64 / (points - 1) as f64))
        .collect();
    Ok(IntegralReport {
        times: (1.0, t_max, points),
        results: triples.iter().map(|t| evaluate(t, &times, slope_tol)).collect(),
        controls: controls.iter().map(|t| evaluate(t, &times, slope_tol)).collect(),
    })
}

/// Parameter triples satisfying the side conditions, twelve or more per clause.
pub fn default_triples() -> Vec<IntegralTriple> {
    let first: [(f64, f64, f64); 13] = [
        (1.0, 1.0, 2.0),
        (0.5, 1.0, 0.5),
        (1.5, 1.5, 2.0),
        (0.25, 0.5, 1.0),
        (0.75, 0.75, 1.5),
        (1.5, 2.0, 0.5),
        (2.0, 2.0, 3.0),
        (0.2, 0.5, 0.75),
        (1.0, 3.0, 0.2),
        (0.1, 0.2, 2.0),
        (1.25, 1.25, 1.5),
        (0.5, 1.5, 1.0),
        (3.0, 3.0, 1.5),
    ];
    let mut out: Vec<IntegralTriple> = first
        .iter()
        .map(|&(a, b, c)| IntegralTriple::new(Kernel::FirstHalf, a, b, c))
        .collect();
    out.extend(
        first
            .iter()
            .map(|&(a, b, c)| IntegralTriple::new(Kernel::SecondHalf, a, c, b)),
    );
    for b in [0.1, 0.5, 1.0, 4.0] {
        for c in [0.25, 1.0, 2.5] {
            out.push(IntegralTriple::new(Kernel::Exponential, c, b, c));
        }
    }
    out
}

/// Triples violating one side condition each; their ratios grow without bound.
pub fn default_controls() -> Vec<IntegralTriple> {
    vec![
        IntegralTriple::new(Kernel::FirstHalf, 1.5, 1.0, 2.0),
        IntegralTriple::new(Kernel::FirstHalf, 2.0, 1.0, 3.0),
        IntegralTriple::new(Kernel::SecondHalf, 1.5, 2.0, 1.0),
        IntegralTriple::new(Kernel::SecondHalf, 2.0, 3.0, 1.0),
        IntegralTriple::new(Kernel::Exponential, 1.5, 1.0, 1.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_closed_form() {
        // b = 0: int_0^t (1+s)^-2 ds = t / (1 + t)
        let tr = IntegralTriple::new(Kernel::Exponential, 1.0, 0.0, 2.0);
        for t in [1.0, 10.0, 1000.0] {
            assert!((tr.integral(t) - t / (1.0 + t)).abs() < 1e-12);
        }
        // b = 1, c = 0: 1 - e^{-t}
        let tr = IntegralTriple::new(Kernel::Exponential, 1.0, 1.0, 0.0);
        assert!((tr.integral(50.0) - (1.0 - (-50.0f64).exp())).abs() < 1e-12);
        // (1+t-s)^-1 (1+s)^-1 on [0, t] splits into logs
        let t = 40.0;
        let a = IntegralTriple::new(Kernel::FirstHalf, 0.5, 1.0, 1.0).integral(t);
        let b = IntegralTriple::new(Kernel::SecondHalf, 0.5, 1.0, 1.0).integral(t);
        let exact = 2.0 * (1.0 + t as f64).ln() / (2.0 + t);
        assert!((a + b - exact).abs() < 1e-12);
    }

    #[test]
    fn side_conditions() {
        assert!(IntegralTriple::new(Kernel::FirstHalf, 1.0, 1.0, 2.0).admissible());
        assert!(!IntegralTriple::new(Kernel::FirstHalf, 1.5, 1.0, 2.0).admissible());
        assert!(!IntegralTriple::new(Kernel::FirstHalf, 1.0, 1.0, 1.0).admissible());
        assert!(IntegralTriple::new(Kernel::SecondHalf, 1.0, 2.0, 1.0).admissible());
        for t in default_triples() {
            assert!(t.admissible(), "{t:?}");
        }
        for t in default_controls() {
            assert!(!t.admissible(), "{t:?}");
        }
    }

    #[test]
    fn precondition_enforced() {
        let bad = [IntegralTriple::new(Kernel::FirstHalf, 2.0, 1.0, 2.0)];
        assert!(verify_integral_inequalities(&bad, &[], 1e3, 20, 0.1).is_err());
    }
}
