//! Scenario configuration: parsing, schema checks and resolution into an
//! engine [`Scenario`].

use std::path::{Path, PathBuf};

use bvm_core::agreement::AgreementRule;
use bvm_core::comparison::ComparisonFnSpec;
use bvm_core::distributions::{
    path_confidence_band, push_forward, ConfidenceRegion, DiscretizeOptions, Distribution,
    InputGrid, ModelFunction,
};
use bvm_core::engine::{Scenario, SweepEstimator, DEFAULT_DENSITY_BINS};
use bvm_core::reproduce::noisy_instance;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelSection,
    pub data: DataSection,
    /// Comparison function for the density estimator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonFnSpec>,
    pub agreement: AgreementRule,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

/// Either a ready distribution over ẑ, or a model function pushed forward
/// from a parameter prior over an input grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_function: Option<ModelFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<InputGrid>,
    /// Pointwise confidence band of the model paths; fills `epsilon_beta`
    /// rules whose band is left empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    pub level: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<DataGenerator>,
}

/// Truth from a model function, one aleatoric instance drawn from the run
/// seed, and epistemic noise around that instance as the data uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataGenerator {
    pub model_function: ModelFunction,
    pub params: Vec<f64>,
    pub grid: InputGrid,
    pub aleatoric_std: f64,
    pub epistemic_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSection {
    Mc {
        samples: usize,
        seed: u64,
    },
    Grid {
        points_per_dim: usize,
        span: f64,
    },
    /// Histogram of the comparison value, then the rule over bin midpoints.
    Density {
        samples: usize,
        seed: u64,
        #[serde(default = "default_bins")]
        bins: usize,
    },
}

fn default_bins() -> usize {
    DEFAULT_DENSITY_BINS
}

impl Default for EstimatorSection {
    fn default() -> Self {
        EstimatorSection::Mc {
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

impl EstimatorSection {
    pub fn seed(&self) -> Option<u64> {
        match self {
            EstimatorSection::Mc { seed, .. } | EstimatorSection::Density { seed, .. } => Some(*seed),
            EstimatorSection::Grid { .. } => None,
        }
    }

    /// Apply command-line overrides; grids ignore both.
    pub fn with_overrides(mut self, seed: Option<u64>, samples: Option<usize>) -> Self {
        match &mut self {
            EstimatorSection::Mc { samples: k, seed: s }
            | EstimatorSection::Density {
                samples: k, seed: s, ..
            } => {
                if let Some(v) = seed {
                    *s = v;
                }
                if let Some(v) = samples {
                    *k = v;
                }
            }
            EstimatorSection::Grid { .. } => {}
        }
        self
    }

    pub fn sweep_estimator(&self) -> Result<SweepEstimator> {
        match *self {
            EstimatorSection::Mc { samples, seed } => Ok(SweepEstimator::Mc { samples, seed }),
            EstimatorSection::Grid {
                points_per_dim,
                span,
            } => Ok(SweepEstimator::Grid {
                options: DiscretizeOptions {
                    points_per_dim,
                    span,
                },
            }),
            EstimatorSection::Density { .. } => Err(CliError::config(
                "estimator.method",
                "sweeps support the mc and grid estimators",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// Parse a config, reporting the JSON path of the first offending field.
pub fn parse(text: &str, origin: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::Schema {
            path: origin.to_string(),
            field,
            message: e.into_inner().to_string(),
        }
    })
}

pub fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}

pub fn to_json(config: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

fn checked(field: &str, d: Distribution) -> Result<Distribution> {
    d.validate().map_err(|e| CliError::config(field, e.to_string()))?;
    Ok(d)
}

impl ModelSection {
    pub fn resolve(&self) -> Result<Distribution> {
        match (
            &self.distribution,
            &self.model_function,
            &self.prior,
            &self.grid,
        ) {
            (Some(d), None, None, None) => checked("model.distribution", d.clone()),
            (None, Some(f), Some(prior), Some(grid)) => {
                let prior = checked("model.prior", prior.clone())?;
                push_forward(prior, f.clone(), grid.clone())
                    .map_err(|e| CliError::config("model.model_function", e.to_string()))
            }
            (Some(_), ..) => Err(CliError::config(
                "model",
                "give either `distribution` or `model_function` + `prior` + `grid`, not both",
            )),
            _ => Err(CliError::config(
                "model",
                "needs `distribution`, or all of `model_function`, `prior` and `grid`",
            )),
        }
    }
}

impl DataSection {
    pub fn resolve(&self, seed: u64) -> Result<Distribution> {
        match (&self.distribution, &self.generator) {
            (Some(d), None) => checked("data.distribution", d.clone()),
            (None, Some(g)) => noisy_instance(
                &g.model_function,
                &g.params,
                &g.grid,
                g.aleatoric_std,
                g.epistemic_std,
                seed,
            )
            .map(|(_, d)| d)
            .map_err(|e| CliError::config("data.generator", e.to_string())),
            (Some(_), Some(_)) => Err(CliError::config(
                "data",
                "give either `distribution` or `generator`, not both",
            )),
            (None, None) => Err(CliError::config("data", "needs `distribution` or `generator`")),
        }
    }
}

fn needs_band(rule: &AgreementRule) -> bool {
    match rule {
        AgreementRule::EpsilonBeta { band, .. } => band.is_empty(),
        AgreementRule::And { children } | AgreementRule::Or { children } => {
            children.iter().any(needs_band)
        }
        AgreementRule::Not { child } => needs_band(child),
        _ => false,
    }
}

fn fill_band(rule: &mut AgreementRule, with: &[ConfidenceRegion]) {
    match rule {
        AgreementRule::EpsilonBeta { band, .. } if band.is_empty() => *band = with.to_vec(),
        AgreementRule::And { children } | AgreementRule::Or { children } => {
            children.iter_mut().for_each(|c| fill_band(c, with))
        }
        AgreementRule::Not { child } => fill_band(child, with),
        _ => {}
    }
}

impl ScenarioConfig {
    /// Seed used for data instances and bands; grid runs use 0.
    pub fn seed(&self) -> u64 {
        self.estimator.seed().unwrap_or(0)
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let model = self.model.resolve()?;
        let data = self.data.resolve(self.seed())?;
        let mut rule = self.agreement.clone();
        if needs_band(&rule) {
            let spec = self.model.band.ok_or_else(|| {
                CliError::config(
                    "model.band",
                    "an epsilon_beta rule with an empty band needs the model band spec",
                )
            })?;
            let band = path_confidence_band(&model, spec.level, spec.samples, self.seed())
                .map_err(|e| CliError::config("model.band", e.to_string()))?;
            fill_band(&mut rule, &band);
        }
        rule.validate()
            .map_err(|e| CliError::config("agreement", e.to_string()))?;
        if matches!(self.estimator, EstimatorSection::Density { .. }) && self.comparison.is_none() {
            return Err(CliError::config(
                "comparison",
                "the density estimator needs a comparison function",
            ));
        }
        Ok(Scenario::new(model, data, rule))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"distribution": {"type": "normal", "mean": 0, "std": 1}},
        "data": {"distribution": {"type": "dirac", "value": 0}},
        "agreement": {"rule": "threshold", "comparison": "abs_diff", "epsilon": 1.959963984540054}
    }"#;

    #[test]
    fn minimal_config_defaults_to_mc() {
        let c = parse(MINIMAL, "inline").unwrap();
        assert_eq!(c.estimator, EstimatorSection::default());
        assert!(c.resolve().is_ok());
    }

    #[test]
    fn unknown_keys_name_the_field() {
        let bad = MINIMAL.replace("\"mean\": 0", "\"mean\": 0, \"sigma\": 2");
        match parse(&bad, "inline") {
            Err(CliError::Schema { field, .. }) => assert!(field.starts_with("model.distribution"), "{field}"),
            other => panic!("expected schema error, got {other:?}"),
        }
        let bad = MINIMAL.replace("\"agreement\"", "\"extra\": 1, \"agreement\"");
        assert!(matches!(parse(&bad, "inline"), Err(CliError::Schema { .. })));
    }

    #[test]
    fn model_sources_are_exclusive() {
        let mut c = parse(MINIMAL, "inline").unwrap();
        c.model.grid = Some(InputGrid::linspace(0.0, 1.0, 3).unwrap());
        assert!(matches!(c.resolve(), Err(CliError::Config { .. })));
    }

    #[test]
    fn overrides_touch_sampling_estimators_only() {
        let mc = EstimatorSection::default().with_overrides(Some(9), Some(5));
        assert_eq!(mc, EstimatorSection::Mc { samples: 5, seed: 9 });
        let grid = EstimatorSection::Grid {
            points_per_dim: 4,
            span: 2.0,
        };
        assert_eq!(grid.with_overrides(Some(9), Some(5)), grid);
    }

    #[test]
    fn empty_band_needs_band_spec() {
        let text = r#"{
            "model": {"distribution": {"type": "product", "components": [
                {"type": "normal", "mean": 0, "std": 1}, {"type": "normal", "mean": 0, "std": 1}]}},
            "data": {"distribution": {"type": "dirac", "value": [0, 0]}},
            "agreement": {"rule": "epsilon_beta", "mean_epsilon": 1, "band": []}
        }"#;
        let mut c = parse(text, "inline").unwrap();
        assert!(matches!(c.resolve(), Err(CliError::Config { .. })));
        c.model.band = Some(BandSpec {
            level: 0.95,
            samples: 2000,
        });
        let s = c.resolve().unwrap();
        match s.rule {
            AgreementRule::EpsilonBeta { band, .. } => assert_eq!(band.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
