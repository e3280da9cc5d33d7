use std::fmt::Write as _;
use std::path::Path;

use bvm_core::agreement::AgreementRule;
use bvm_core::engine::{BvmEstimate, Ratio};
use bvm_core::reproduce::{Check, ExampleId};
use serde::{Deserialize, Serialize};

use crate::config::{Format, ScenarioConfig};
use crate::error::{CliError, Result};

/// Everything needed to audit or re-run a command: the resolved configs,
/// the rules that were actually evaluated and the numbers they produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub configs: Vec<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimates: Vec<EstimateRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ratios: Vec<RatioRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub label: String,
    /// The agreement rule B reported alongside P(A | M, D, B).
    pub rule: AgreementRule,
    pub estimate: BvmEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub label: String,
    pub ratio: Ratio,
}

impl RunRecord {
    pub fn new(command: &str) -> Self {
        RunRecord {
            tool: "bvm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            configs: Vec::new(),
            example: None,
            seed: None,
            estimates: Vec::new(),
            ratios: Vec::new(),
            checks: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn estimates_csv(&self) -> String {
        let mut s = String::from("label,p_agree,std_error,n_samples,seed,method\n");
        for e in &self.estimates {
            let est = &e.estimate;
            let seed = est.seed.map(|v| v.to_string()).unwrap_or_default();
            let method = serde_json::to_value(est.method).expect("method serializes");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                e.label,
                est.p_hat,
                est.std_error,
                est.n_samples,
                seed,
                method.as_str().unwrap_or_default()
            );
        }
        s
    }

    pub fn ratios_csv(&self) -> String {
        let mut s = String::from("quantity,value,status\n");
        for r in &self.ratios {
            let value = r.ratio.value().map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{}", r.label, value, r.ratio.status());
        }
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv if !self.ratios.is_empty() => self.ratios_csv(),
            Format::Csv => self.estimates_csv(),
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
