//! Run configuration for the pipeline.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisConfig;
use crate::error::{LabError, Result};
use crate::evolve::SimConfig;
use crate::front::FrontSolver;
use crate::linalg::DiffOrder;
use crate::model::ReactionSystem;
use crate::norms::WeightSpec;
use crate::spectrum::WeightSearch;

/// Newton settings; the grid is taken from the simulation section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub order: DiffOrder,
}

impl Default for FrontSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            order: DiffOrder::Fourth,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSettings {
    /// Margin target; falls back to the analysis section, then `0.1 c^2`.
    pub nu: Option<f64>,
    pub search: WeightSearch,
    /// Skip the search and use this weight.
    pub fixed: Option<WeightSpec>,
}

/// Gaussian initial data `q0(y) = A exp(-|y|^2 / (2 s2))` and a localized
/// bump in every component of `v0`, projected onto ran Q.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSettings {
    pub q_amplitude: f64,
    pub q_variance: f64,
    pub v_amplitude: f64,
    pub v_width: f64,
    pub v_transverse_variance: f64,
}

impl Default for InitialSettings {
    fn default() -> Self {
        Self {
            q_amplitude: 0.05,
            q_variance: 2.0,
            v_amplitude: 0.02,
            v_width: 1.0,
            v_transverse_variance: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ReactionSystem,
    #[serde(default)]
    pub front: FrontSettings,
    #[serde(default)]
    pub weight: WeightSettings,
    pub simulation: SimConfig,
    #[serde(default)]
    pub initial: InitialSettings,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| LabError::Config(e.to_string()))?;
        self.simulation.validate()?;
        self.analysis.validate()?;
        if self.model.rest_states().is_none() {
            return Err(LabError::Config("the model has no front to analyse".into()));
        }
        let init = &self.initial;
        if !(init.q_variance > 0.0 && init.v_width > 0.0 && init.v_transverse_variance > 0.0) {
            return Err(LabError::Config("initial widths must be positive".into()));
        }
        Ok(())
    }

    /// Front solver on the simulation's z-grid.
    pub fn front_solver(&self) -> FrontSolver {
        let sim = &self.simulation;
        FrontSolver {
            half_length: Some(sim.half_length),
            spacing: 2.0 * sim.half_length / (sim.nz - 1) as f64,
            tol: self.front.tol,
            max_iter: self.front.max_iter,
            order: self.front.order,
        }
    }

    pub fn nu_for(&self, c: f64) -> f64 {
        self.weight.nu.unwrap_or_else(|| self.analysis.nu_for(c))
    }

    /// Analysis settings with the simulation's Sobolev order filled in.
    pub fn order_k(&self) -> usize {
        self.analysis.k.unwrap_or_else(|| self.simulation.order_k())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"kind": "bistable", "a": 0.7},
        "simulation": {"d": 2, "nz": 101, "half_length": 20.0, "ny": [16], "ly": [16.0],
                       "dt": 0.05, "t_end": 1.0, "output_stride": 5, "delta": 1.0}
    }"#;

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.model, ReactionSystem::bistable(0.7).unwrap());
        assert_eq!(cfg.front_solver().spacing, 0.4);
        let again = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replacen("\"a\": 0.7", "\"a\": 0.7, \"b\": 1", 1);
        assert!(matches!(RunConfig::from_json(&bad), Err(LabError::Config(_))));
        let bad = MINIMAL.replacen("\"model\"", "\"extra\": 1, \"model\"", 1);
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let bad = MINIMAL.replacen("0.7", "1.5", 1);
        assert!(matches!(RunConfig::from_json(&bad), Err(LabError::Config(_))));
        let linear = MINIMAL.replacen(
            r#"{"kind": "bistable", "a": 0.7}"#,
            r#"{"kind": "linear", "matrix": [[-1.0]]}"#,
            1,
        );
        assert!(RunConfig::from_json(&linear).is_err());
    }
}
