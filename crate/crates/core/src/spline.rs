//! Clamped cubic splines on uniform grids.

/// Cubic spline through equally spaced samples with zero end slopes,
/// extended by constants outside the sampled interval.
#[derive(Clone, Debug)]
pub struct ClampedSpline {
    start: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl ClampedSpline {
    pub fn new(start: f64, h: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        assert!(n >= 2, "spline needs at least two samples");
        // Second derivatives M solve the clamped tridiagonal system.
        let mut diag = vec![4.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0;
        diag[n - 1] = 2.0;
        let s = 6.0 / (h * h);
        rhs[0] = s * (y[1] - y[0]);
        rhs[n - 1] = -s * (y[n - 1] - y[n - 2]);
        for i in 1..n - 1 {
            rhs[i] = s * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
        }
        // Thomas algorithm, unit off-diagonals.
        for i in 1..n {
            let w = 1.0 / diag[i - 1];
            diag[i] -= w;
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - m[i + 1]) / diag[i];
        }
        Self { start, h, y, m }
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let n = self.y.len();
        let s = (x - self.start) / self.h;
        if !(s >= 0.0 && s <= (n - 1) as f64) {
            return None;
        }
        let i = (s.floor() as usize).min(n - 2);
        Some((i, s - i as f64))
    }

    /// Value, first and second derivative at `x`.
    pub fn eval_all(&self, x: f64) -> (f64, f64, f64) {
        match self.locate(x) {
            None => {
                let v = if x < self.start {
                    self.y[0]
                } else {
                    *self.y.last().unwrap()
                };
                (v, 0.0, 0.0)
            }
            Some((i, t)) => {
                let h = self.h;
                let (y0, y1) = (self.y[i], self.y[i + 1]);
                let (m0, m1) = (self.m[i], self.m[i + 1]);
                let a = 1.0 - t;
                let v = a * y0
                    + t * y1
                    + h * h / 6.0 * ((a * a * a - a) * m0 + (t * t * t - t) * m1);
                let d = (y1 - y0) / h
                    + h / 6.0 * (-(3.0 * a * a - 1.0) * m0 + (3.0 * t * t - 1.0) * m1);
                let dd = a * m0 + t * m1;
                (v, d, dd)
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_all(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval_all(x).1
    }
}
