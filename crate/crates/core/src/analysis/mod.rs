//! Numerical checks of the decay, semigroup, integral and nonlinear estimates.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub mod fit;
pub mod integrals;
pub mod nonlinear;
pub mod report;
pub mod semigroup;

pub use fit::{bound_check, fit_decay_exponent, BoundCheck, ExponentFit, FitWindow};
pub use integrals::{verify_integral_inequalities, IntegralReport, IntegralTriple};
pub use nonlinear::{
    eval_modulation_nonlinearities, random_direction, verify_nonlinear_bounds, NonlinearBoundReport,
    NonlinearEval, NonlinearEvaluator,
};
pub use report::{Claim, ClaimStatus, VerificationReport};
pub use semigroup::{verify_semigroup_bounds, SemigroupReport};

/// Numerical tolerances used by the pass/fail decisions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed deviation of a fitted homogeneity degree from 2.
    pub degree: f64,
    /// Relative slack of the one-sided decay bound checks.
    pub bound_slack: f64,
    /// Largest accepted residual of the `F1` identity.
    pub identity: f64,
    /// Slack on the spectral abscissa comparison.
    pub abscissa: f64,
    pub heat_exponent: f64,
    pub heat_gradient_exponent: f64,
    /// Largest log-log slope of a ratio still considered bounded.
    pub bounded_slope: f64,
    /// Floor for `|pi(phi'_q)|`.
    pub pi_floor: f64,
    /// Required gap between unweighted and weighted decay exponents.
    pub weight_contrast: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            degree: 0.25,
            bound_slack: 0.05,
            identity: 1e-8,
            abscissa: 1e-8,
            heat_exponent: 0.03,
            heat_gradient_exponent: 0.05,
            bounded_slope: 0.1,
            pi_floor: 0.5,
            weight_contrast: 0.5,
        }
    }
}

/// Margins, smallness radii and sampling settings of the verification stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Spectral margin; `None` selects `0.1 c^2`.
    pub nu: Option<f64>,
    /// Decay rate of the stable block; `None` derives it from the rest state.
    pub rho: Option<f64>,
    /// Exponential rate of the high-frequency heat bound; `None` selects 1.
    pub beta: Option<f64>,
    pub delta: f64,
    pub gamma: f64,
    pub delta0: f64,
    pub fit_window: FitWindow,
    pub tolerances: Tolerances,
    /// Random directions for the nonlinear estimates.
    pub samples: usize,
    /// Amplitude of the unscaled random directions.
    pub sample_amplitude: f64,
    pub scales: Vec<f64>,
    /// Transverse nodes per axis of the nonlinear sample grid.
    pub sample_ny: usize,
    /// Sobolev order; `None` uses the simulation's order.
    pub k: Option<usize>,
    pub quad_order: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            nu: None,
            rho: None,
            beta: None,
            delta: 1.0,
            gamma: 0.9,
            delta0: 2.0,
            fit_window: FitWindow::default(),
            tolerances: Tolerances::default(),
            samples: 100,
            sample_amplitude: 0.05,
            scales: vec![1.0, 0.5, 0.25],
            sample_ny: 64,
            k: None,
            quad_order: 8,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.gamma && self.gamma < self.delta && self.delta < self.delta0) {
            return Err(LabError::Config(format!(
                "need 0 < gamma < delta < delta0, got {} / {} / {}",
                self.gamma, self.delta, self.delta0
            )));
        }
        if self.scales.len() < 2 || self.scales.iter().any(|s| !(*s > 0.0)) {
            return Err(LabError::Config("need at least two positive scales".into()));
        }
        if self.quad_order < 2 {
            return Err(LabError::Config("quadrature order below 2".into()));
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0) {
                return Err(LabError::Config(format!("nu = {nu} must be positive")));
            }
        }
        self.fit_window.validate()
    }

    pub fn nu_for(&self, c: f64) -> f64 {
        self.nu.unwrap_or(0.1 * c * c)
    }

    pub fn beta_or_default(&self) -> f64 {
        self.beta.unwrap_or(1.0)
    }
}
