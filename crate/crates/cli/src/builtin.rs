//! Scenario configs for the built-in worked examples.

use bvm_core::agreement::AgreementRule;
use bvm_core::distributions::{Distribution, ModelFunction};
use bvm_core::metrics::{power_rule, statistical_power_bvm, RegionMode};
use bvm_core::reproduce::{
    cosine_data, cosine_grid, oscillator_grid, power_data, ALEATORIC_STD, BAND_LEVEL,
    BAND_SAMPLES, DETERMINISTIC_MEAN_EPSILON, EPISTEMIC_STD, GRID_POINTS, GRID_SPAN,
    MEAN_ERROR_SAMPLES, OSCILLATOR_PARAMS, OSCILLATOR_PARAM_STDS, POWER_ALPHA,
    POWER_JOINT_SAMPLES, POWER_MODEL_STDS, SWEEP_M, TAYLOR_COEFFS, TAYLOR_STDS,
    UNCERTAIN_MEAN_EPSILON,
};
use bvm_core::Result;

use crate::config::{
    BandSpec, DataGenerator, DataSection, EstimatorSection, ModelSection, ScenarioConfig,
};

pub const BUILTIN_SEED: u64 = 1;

fn distribution_model(d: Distribution) -> ModelSection {
    ModelSection {
        distribution: Some(d),
        model_function: None,
        prior: None,
        grid: None,
        band: None,
    }
}

fn power_configs() -> Result<Vec<(String, ScenarioConfig)>> {
    let data = power_data();
    POWER_MODEL_STDS
        .iter()
        .map(|&s| {
            let model = Distribution::normal(0.0, s)?;
            let power =
                statistical_power_bvm(&model, &data, POWER_ALPHA, POWER_ALPHA, RegionMode::Interval)?;
            Ok((
                format!("ex-5.1-sigma-{s}"),
                ScenarioConfig {
                    model: distribution_model(model),
                    data: DataSection {
                        distribution: Some(data.clone()),
                        generator: None,
                    },
                    comparison: None,
                    agreement: power_rule(&power),
                    estimator: EstimatorSection::Mc {
                        samples: POWER_JOINT_SAMPLES,
                        seed: BUILTIN_SEED,
                    },
                    output: None,
                },
            ))
        })
        .collect()
}

fn oscillator_config(uncertain: bool) -> Result<ScenarioConfig> {
    let stds = if uncertain {
        OSCILLATOR_PARAM_STDS
    } else {
        [0.0; 6]
    };
    let mean_epsilon = if uncertain {
        UNCERTAIN_MEAN_EPSILON
    } else {
        DETERMINISTIC_MEAN_EPSILON
    };
    Ok(ScenarioConfig {
        model: ModelSection {
            distribution: None,
            model_function: Some(ModelFunction::DampedOscillator),
            prior: Some(Distribution::independent_normals(&OSCILLATOR_PARAMS, &stds)?),
            grid: Some(oscillator_grid()),
            band: Some(BandSpec {
                level: BAND_LEVEL,
                samples: BAND_SAMPLES,
            }),
        },
        data: DataSection {
            distribution: None,
            generator: Some(DataGenerator {
                model_function: ModelFunction::DampedOscillator,
                params: OSCILLATOR_PARAMS.to_vec(),
                grid: oscillator_grid(),
                aleatoric_std: ALEATORIC_STD,
                epistemic_std: EPISTEMIC_STD,
            }),
        },
        comparison: None,
        agreement: AgreementRule::epsilon_beta(mean_epsilon, Vec::new()),
        estimator: EstimatorSection::Mc {
            samples: MEAN_ERROR_SAMPLES,
            seed: BUILTIN_SEED,
        },
        output: None,
    })
}

/// Taylor model with `terms` coefficients against the cosine data, scored
/// with a representative (γ, ε) rule; sweeps replace γ and ε.
fn taylor_config(terms: usize, uncertain: bool) -> Result<ScenarioConfig> {
    let stds: Vec<f64> = if uncertain {
        TAYLOR_STDS[..terms].to_vec()
    } else {
        vec![0.0; terms]
    };
    Ok(ScenarioConfig {
        model: ModelSection {
            distribution: None,
            model_function: Some(ModelFunction::even_polynomial(terms)),
            prior: Some(Distribution::independent_normals(&TAYLOR_COEFFS[..terms], &stds)?),
            grid: Some(cosine_grid()),
            band: None,
        },
        data: DataSection {
            distribution: Some(cosine_data()),
            generator: None,
        },
        comparison: None,
        agreement: AgreementRule::gamma_epsilon(0.9, 0.1, SWEEP_M),
        estimator: EstimatorSection::Grid {
            points_per_dim: GRID_POINTS,
            span: GRID_SPAN,
        },
        output: None,
    })
}

/// Every built-in scenario, keyed by name.
pub fn builtin_configs() -> Result<Vec<(String, ScenarioConfig)>> {
    let mut out = power_configs()?;
    out.push(("ex-5.2-deterministic".into(), oscillator_config(false)?));
    out.push(("ex-5.2-uncertain".into(), oscillator_config(true)?));
    for (label, uncertain) in [("deterministic", false), ("uncertain", true)] {
        for (model, terms) in [(1, 3), (2, 4)] {
            out.push((
                format!("ex-5.3-{label}-model{model}"),
                taylor_config(terms, uncertain)?,
            ));
        }
    }
    Ok(out)
}
