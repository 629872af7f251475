//! Per-claim verification reports with deterministic JSON and CSV output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const REPORT_SCHEMA: &str = "report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimStatus {
    Pass,
    Fail,
    /// Computed but not part of the pass/fail decision.
    Exploratory,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_id: String,
    /// Anchor phrase of the statement being checked.
    pub paper_ref: String,
    pub status: ClaimStatus,
    pub fitted_values: BTreeMap<String, f64>,
    pub tolerance: Option<f64>,
}

impl Claim {
    pub fn new(claim_id: &str, pass: bool) -> Self {
        Self {
            claim_id: claim_id.to_string(),
            paper_ref: anchor(claim_id).to_string(),
            status: if pass { ClaimStatus::Pass } else { ClaimStatus::Fail },
            fitted_values: BTreeMap::new(),
            tolerance: None,
        }
    }

    pub fn exploratory(mut self) -> Self {
        self.status = ClaimStatus::Exploratory;
        self
    }

    pub fn value(mut self, name: &str, v: f64) -> Self {
        self.fitted_values.insert(name.to_string(), v);
        self
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }
}

/// Anchor phrase for a claim identifier.
pub fn anchor(claim_id: &str) -> &'static str {
    match claim_id {
        "front_speed" => "planar front",
        "essential_spectrum" => "bounded away from the imaginary axis",
        "translational_eigenvalue" => "is a simple eigenvalue",
        "projection_identities" => "decompose solutions",
        "decomposition" => "small enough",
        "semigroup_weighted_q" => "If ν>0 is such that",
        "semigroup_bounded_block" => "generates a bounded semigroup on",
        "semigroup_stable_block" => "located strictly to the left",
        "heat_decay" => "satisfies the following decay estimates",
        "integral_inequalities" => "Suppose a,b,c>0, then",
        "nonlinear_quadratic" => "define locally Lipschitz mappings",
        "nonlinear_triangular" => "there is a constant C_K",
        "nonlinear_identity" => "a relation between",
        "pi_derivative_bounds" => "There are constants",
        "theorem_main_item2" => "Then for all t>0",
        "theorem_main_item3" => "Then for all t>0",
        "theorem_main_item4" => "Then for all t>0",
        "theorem_main_item5" => "Then for all t>0",
        "theorem_main_item6" => "satisfies the estimates",
        "theorem_main_item7" => "Then for all t>0",
        "convective_contrast" => "point-wise decay of the perturbations",
        "continuity_initial_data" => "is continuous with respect to the initial data",
        _ => "",
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub claims: Vec<Claim>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            claims: Vec::new(),
        }
    }

    pub fn push(&mut self, claim: Claim) {
        self.claims.push(claim);
    }

    pub fn failing(&self) -> Vec<&str> {
        self.claims
            .iter()
            .filter(|c| c.status == ClaimStatus::Fail)
            .map(|c| c.claim_id.as_str())
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.failing().is_empty()
    }

    pub fn get(&self, claim_id: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.claim_id == claim_id)
    }

    /// Pretty JSON with object keys in sorted order.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per claim: claim_id, paper_ref, status.
    pub fn summary_table(&self) -> String {
        let w_id = self.claims.iter().map(|c| c.claim_id.len()).max().unwrap_or(0).max(8);
        let w_ref = self.claims.iter().map(|c| c.paper_ref.chars().count()).max().unwrap_or(0).max(6);
        let mut out = format!("{:<w_id$}  {:<w_ref$}  status\n", "claim_id", "anchor");
        for c in &self.claims {
            let pad = w_ref - c.paper_ref.chars().count();
            out += &format!(
                "{:<w_id$}  {}{}  {}\n",
                c.claim_id,
                c.paper_ref,
                " ".repeat(pad),
                serde_json::to_value(c.status).unwrap().as_str().unwrap()
            );
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["claim_id", "status", "quantity", "value"])?;
        for c in &self.claims {
            let status = serde_json::to_value(c.status)?;
            let status = status.as_str().unwrap_or("");
            if c.fitted_values.is_empty() {
                w.write_record([c.claim_id.as_str(), status, "", ""])?;
            }
            for (k, v) in &c.fitted_values {
                w.write_record([c.claim_id.as_str(), status, k.as_str(), &v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `report.json`, `report.csv` and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        self.write_csv(std::fs::File::create(dir.join("report.csv"))?)?;
        std::fs::write(dir.join("summary.txt"), self.summary_table())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_skeleton() {
        let r = VerificationReport::new();
        let text = r.to_json().unwrap();
        let back = VerificationReport::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert!(r.passed());
        assert!(text.contains("report/1"));
    }

    #[test]
    fn sorted_and_stable() {
        let mut r = VerificationReport::new();
        r.push(Claim::new("theorem_main_item3", true).value("z", 1.0).value("a", 2.0));
        r.push(Claim::new("heat_decay", false).tolerance(0.03));
        let a = r.to_json().unwrap();
        assert_eq!(a, r.to_json().unwrap());
        assert!(a.find("\"a\"").unwrap() < a.find("\"z\"").unwrap());
        assert!(a.find("\"claim_id\"").unwrap() < a.find("\"fitted_values\"").unwrap());
        assert_eq!(r.failing(), vec!["heat_decay"]);
        assert_eq!(r.get("theorem_main_item3").unwrap().paper_ref, "Then for all t>0");
        assert!(r.summary_table().contains("theorem_main_item3"));
    }
}
