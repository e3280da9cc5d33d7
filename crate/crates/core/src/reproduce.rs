//! Built-in reproductions of three worked examples: statistical-power model
//! ranking, the mean-error/coverage compound rule on a damped oscillator,
//! and the (γ, ε) sweep comparing two Taylor models of a cosine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agreement::AgreementRule;
use crate::comparison::ComparisonFnSpec;
use crate::distributions::{
    path_confidence_band, push_forward, DiscretizeOptions, Distribution, InputGrid,
    ModelFunction,
};
use crate::engine::{
    averaged_boolean_ratio, estimate_bvm_mc, ratio_of, scaled_axis, sweep, Ratio, Scenario,
    SweepEstimator, SweepGrid,
};
use crate::error::{invalid, BvmError, Result};
use crate::metrics::{power_rule, statistical_power_bvm, PowerResult, RegionMode};
use crate::rng::streams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExampleId {
    #[serde(rename = "ex-5.1")]
    PowerRanking,
    #[serde(rename = "ex-5.2")]
    MeanErrorCoverage,
    #[serde(rename = "ex-5.3")]
    GammaEpsilonRatio,
}

impl ExampleId {
    pub const ALL: [ExampleId; 3] = [
        ExampleId::PowerRanking,
        ExampleId::MeanErrorCoverage,
        ExampleId::GammaEpsilonRatio,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExampleId::PowerRanking => "ex-5.1",
            ExampleId::MeanErrorCoverage => "ex-5.2",
            ExampleId::GammaEpsilonRatio => "ex-5.3",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExampleId {
    type Err = BvmError;

    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| invalid("example", format!("unknown example {s:?}; expected ex-5.1, ex-5.2 or ex-5.3")))
    }
}

/// One reproduced quantity with its published value and acceptance band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub published: Option<f64>,
    pub accept_lo: f64,
    pub accept_hi: f64,
    pub passed: bool,
}

impl Check {
    fn within(name: &str, value: f64, published: Option<f64>, lo: f64, hi: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            published,
            accept_lo: lo,
            accept_hi: hi,
            passed: lo <= value && value <= hi,
        }
    }

    fn flag(name: &str, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Check {
            name: name.to_string(),
            value: v,
            published: None,
            accept_lo: 1.0,
            accept_hi: 1.0,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub example: ExampleId,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// CSV outputs keyed by file stem.
    pub tables: Vec<(String, String)>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run(example: ExampleId, seed: u64) -> Result<Reproduction> {
    match example {
        ExampleId::PowerRanking => power_ranking(seed, POWER_JOINT_SAMPLES).map(|r| r.report(seed)),
        ExampleId::MeanErrorCoverage => {
            mean_error_coverage(seed, MEAN_ERROR_SAMPLES).map(|r| r.report(seed))
        }
        ExampleId::GammaEpsilonRatio => gamma_epsilon_ratio().map(|r| r.report(seed)),
    }
}

// ---- statistical-power ranking ----

pub const POWER_DATA_LOCATION: f64 = 0.0;
pub const POWER_DATA_DOF: f64 = 10.0;
pub const POWER_DATA_SCALE: f64 = 1.75;
pub const POWER_MODEL_STDS: [f64; 3] = [0.5, 2.0, 5.0];
pub const POWER_ALPHA: f64 = 0.05;
pub const POWER_JOINT_SAMPLES: usize = 100_000;

pub fn power_data() -> Distribution {
    Distribution::StudentT {
        location: POWER_DATA_LOCATION,
        dof: POWER_DATA_DOF,
        scale: POWER_DATA_SCALE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub model_std: f64,
    pub power: PowerResult,
    /// Direct MC of the joint indicator ẑ ∈ data region ∧ z ∈ model region.
    pub joint_p: f64,
    pub joint_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRanking {
    pub models: Vec<PowerModel>,
    /// Index of the model with the largest product.
    pub best: usize,
}

pub fn power_ranking(seed: u64, joint_samples: usize) -> Result<PowerRanking> {
    let data = power_data();
    let mut models = Vec::new();
    for &s in &POWER_MODEL_STDS {
        let model = Distribution::normal(0.0, s)?;
        let power = statistical_power_bvm(&model, &data, POWER_ALPHA, POWER_ALPHA, RegionMode::Interval)?;
        let joint = estimate_bvm_mc(
            &Scenario::new(model, data.clone(), power_rule(&power)),
            joint_samples,
            seed,
        )?;
        models.push(PowerModel {
            model_std: s,
            power,
            joint_p: joint.p_hat,
            joint_std_error: joint.std_error,
        });
    }
    let best = (0..models.len())
        .max_by(|&a, &b| {
            models[a]
                .power
                .estimate
                .p_hat
                .total_cmp(&models[b].power.estimate.p_hat)
        })
        .expect("three models");
    Ok(PowerRanking { models, best })
}

impl PowerRanking {
    /// True when the middle-variance model beats both others strictly.
    pub fn middle_wins(&self) -> bool {
        let p: Vec<f64> = self.models.iter().map(|m| m.power.estimate.p_hat).collect();
        p[1] > p[0] && p[1] > p[2]
    }

    pub fn report(&self, seed: u64) -> Reproduction {
        let mut checks = vec![Check::flag("middle-variance model ranked first", self.middle_wins())];
        let mut csv = String::from("model_std,model_power,data_power,p_agree,joint_p,joint_std_error\n");
        for m in &self.models {
            let p = m.power.estimate.p_hat;
            let band = 3.0 * m.joint_std_error;
            checks.push(Check::within(
                &format!("product vs joint MC (sigma={})", m.model_std),
                p,
                None,
                m.joint_p - band,
                m.joint_p + band,
            ));
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m.model_std, m.power.model_power, m.power.data_power, p, m.joint_p, m.joint_std_error
            ));
        }
        Reproduction {
            example: ExampleId::PowerRanking,
            seed,
            checks,
            tables: vec![("power".into(), csv)],
        }
    }
}

// ---- mean error and coverage compound ----

pub const OSCILLATOR_PARAMS: [f64; 6] = [1.0, 1.0, 1.0, 10.0, 1.0, 10.0];
pub const OSCILLATOR_PARAM_STDS: [f64; 6] = [0.35, 0.3, 0.3, 0.3, 0.3, 0.3];
pub const ALEATORIC_STD: f64 = 0.4;
pub const EPISTEMIC_STD: f64 = 0.2;
pub const OSCILLATOR_POINTS: usize = 200;
pub const MEAN_ERROR_SAMPLES: usize = 3000;
pub const BAND_SAMPLES: usize = 10_000;
pub const BAND_LEVEL: f64 = 0.95;
pub const DETERMINISTIC_MEAN_EPSILON: f64 = 0.46;
pub const UNCERTAIN_MEAN_EPSILON: f64 = 0.9;

pub fn oscillator_grid() -> InputGrid {
    InputGrid::linspace(0.0, 1.0, OSCILLATOR_POINTS).expect("valid grid")
}

/// Truth `function(params)` on `grid`, one aleatoric instance Y drawn under
/// `seed`, and the data distribution of independent epistemic noise around Y.
pub fn noisy_instance(
    function: &ModelFunction,
    params: &[f64],
    grid: &InputGrid,
    aleatoric_std: f64,
    epistemic_std: f64,
    seed: u64,
) -> Result<(Vec<f64>, Distribution)> {
    let truth = function.evaluate(params, grid)?;
    let aleatoric = Distribution::independent_normals(&truth, &vec![aleatoric_std; truth.len()])?;
    let y = aleatoric
        .draw(seed, streams::DATA_INSTANCE, 0)
        .as_path()?
        .to_vec();
    let data = Distribution::independent_normals(&y, &vec![epistemic_std; y.len()])?;
    Ok((y, data))
}

pub fn oscillator_data(seed: u64) -> Result<(Vec<f64>, Distribution)> {
    noisy_instance(
        &ModelFunction::DampedOscillator,
        &OSCILLATOR_PARAMS,
        &oscillator_grid(),
        ALEATORIC_STD,
        EPISTEMIC_STD,
        seed,
    )
}

pub fn oscillator_model(uncertain: bool) -> Result<Distribution> {
    let stds = if uncertain {
        OSCILLATOR_PARAM_STDS
    } else {
        [0.0; 6]
    };
    push_forward(
        Distribution::independent_normals(&OSCILLATOR_PARAMS, &stds)?,
        ModelFunction::DampedOscillator,
        oscillator_grid(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanErrorResult {
    pub deterministic_mean_error: f64,
    pub deterministic_compound: f64,
    /// The deterministic compound rule at a very loose ⟨ε⟩.
    pub deterministic_compound_loose: f64,
    pub uncertain_mean_error: f64,
    pub uncertain_compound: f64,
    pub samples: usize,
}

pub fn mean_error_coverage(seed: u64, samples: usize) -> Result<MeanErrorResult> {
    let (_, data) = oscillator_data(seed)?;
    let det = oscillator_model(false)?;
    let unc = oscillator_model(true)?;
    let det_band = path_confidence_band(&det, BAND_LEVEL, BAND_SAMPLES, seed)?;
    let unc_band = path_confidence_band(&unc, BAND_LEVEL, BAND_SAMPLES, seed)?;
    let p = |model: &Distribution, rule: AgreementRule| -> Result<f64> {
        Ok(estimate_bvm_mc(&Scenario::new(model.clone(), data.clone(), rule), samples, seed)?.p_hat)
    };
    let mae = |e| AgreementRule::threshold(ComparisonFnSpec::MeanAbsError, e);
    Ok(MeanErrorResult {
        deterministic_mean_error: p(&det, mae(DETERMINISTIC_MEAN_EPSILON))?,
        deterministic_compound: p(
            &det,
            AgreementRule::epsilon_beta(DETERMINISTIC_MEAN_EPSILON, det_band.clone()),
        )?,
        deterministic_compound_loose: p(&det, AgreementRule::epsilon_beta(1e6, det_band))?,
        uncertain_mean_error: p(&unc, mae(UNCERTAIN_MEAN_EPSILON))?,
        uncertain_compound: p(
            &unc,
            AgreementRule::epsilon_beta(UNCERTAIN_MEAN_EPSILON, unc_band),
        )?,
        samples,
    })
}

impl MeanErrorResult {
    pub fn report(&self, seed: u64) -> Reproduction {
        let checks = vec![
            Check::within(
                "deterministic P(mean error <= 0.46)",
                self.deterministic_mean_error,
                Some(0.99),
                0.95,
                1.0,
            ),
            Check::within(
                "deterministic compound",
                self.deterministic_compound,
                Some(0.0),
                0.0,
                0.0,
            ),
            Check::within(
                "deterministic compound, loose mean error",
                self.deterministic_compound_loose,
                Some(0.0),
                0.0,
                0.0,
            ),
            Check::within(
                "uncertain compound",
                self.uncertain_compound,
                Some(0.93),
                0.85,
                0.98,
            ),
            Check::within(
                "uncertain P(mean error <= 0.9)",
                self.uncertain_mean_error,
                Some(0.96),
                0.90,
                1.0,
            ),
        ];
        let csv = format!(
            "model,mean_epsilon,p_mean_error,p_compound\ndeterministic,{},{},{}\nuncertain,{},{},{}\n",
            DETERMINISTIC_MEAN_EPSILON,
            self.deterministic_mean_error,
            self.deterministic_compound,
            UNCERTAIN_MEAN_EPSILON,
            self.uncertain_mean_error,
            self.uncertain_compound
        );
        Reproduction {
            example: ExampleId::MeanErrorCoverage,
            seed,
            checks,
            tables: vec![("mean_error".into(), csv)],
        }
    }
}

// ---- (γ, ε) sweep and averaged-Boolean ratio ----

pub const COSINE_POINTS: usize = 50;
/// Taylor coefficients of cos x in x⁰, x², x⁴, x⁶.
pub const TAYLOR_COEFFS: [f64; 4] = [1.0, -0.5, 1.0 / 24.0, -1.0 / 720.0];
pub const TAYLOR_STDS: [f64; 4] = [0.1, 0.05, 0.005, 0.0005];
pub const SWEEP_M: f64 = 5.0;
pub const GRID_POINTS: usize = 20;
pub const GRID_SPAN: f64 = 3.0;

pub fn cosine_grid() -> InputGrid {
    InputGrid::linspace(0.0, std::f64::consts::PI, COSINE_POINTS).expect("valid grid")
}

/// γ from 0.75 to 1 and ε from 0 to 1, both in steps of 0.01.
pub fn sweep_axes() -> (Vec<f64>, Vec<f64>) {
    (scaled_axis(75, 100, 1, 100.0), scaled_axis(0, 100, 1, 100.0))
}

/// Noiseless cosine data, treated as known.
pub fn cosine_data() -> Distribution {
    let y: Vec<f64> = cosine_grid().points().iter().map(|x| x.cos()).collect();
    Distribution::dirac(y)
}

/// Taylor model with `terms` even-power coefficients.
pub fn taylor_model(terms: usize, uncertain: bool) -> Result<Distribution> {
    let stds: Vec<f64> = if uncertain {
        TAYLOR_STDS[..terms].to_vec()
    } else {
        vec![0.0; terms]
    };
    push_forward(
        Distribution::independent_normals(&TAYLOR_COEFFS[..terms], &stds)?,
        ModelFunction::even_polynomial(terms),
        cosine_grid(),
    )
}

pub fn taylor_sweep(terms: usize, uncertain: bool) -> Result<SweepGrid> {
    let (gammas, epsilons) = sweep_axes();
    sweep(
        &taylor_model(terms, uncertain)?,
        &cosine_data(),
        &gammas,
        &epsilons,
        SWEEP_M,
        &SweepEstimator::Grid {
            options: DiscretizeOptions {
                points_per_dim: GRID_POINTS,
                span: GRID_SPAN,
            },
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPair {
    pub model1: SweepGrid,
    pub model2: SweepGrid,
    pub ratio: Ratio,
}

impl SweepPair {
    /// Largest finite per-cell ratio, skipping the ε = 0 column; an
    /// infinite cell yields +∞.
    pub fn max_cell_ratio(&self) -> f64 {
        let ne = self.model1.epsilons.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.model1.gammas.len() {
            for j in 0..ne {
                if self.model1.epsilons[j] == 0.0 {
                    continue;
                }
                match ratio_of(self.model1.p(i, j), self.model2.p(i, j)) {
                    Ratio::Finite(v) => worst = worst.max(v),
                    Ratio::Infinite => return f64::INFINITY,
                    Ratio::Indeterminate => {}
                }
            }
        }
        worst
    }

    fn ratio_value(&self) -> f64 {
        self.ratio.value().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEpsilonResult {
    pub deterministic: SweepPair,
    pub uncertain: SweepPair,
}

fn sweep_pair(uncertain: bool) -> Result<SweepPair> {
    let model1 = taylor_sweep(3, uncertain)?;
    let model2 = taylor_sweep(4, uncertain)?;
    let ratio = averaged_boolean_ratio(&model1, &model2)?;
    Ok(SweepPair {
        model1,
        model2,
        ratio,
    })
}

pub fn gamma_epsilon_deterministic() -> Result<SweepPair> {
    sweep_pair(false)
}

pub fn gamma_epsilon_uncertain() -> Result<SweepPair> {
    sweep_pair(true)
}

pub fn gamma_epsilon_ratio() -> Result<GammaEpsilonResult> {
    Ok(GammaEpsilonResult {
        deterministic: gamma_epsilon_deterministic()?,
        uncertain: gamma_epsilon_uncertain()?,
    })
}

impl GammaEpsilonResult {
    pub fn report(&self, seed: u64) -> Reproduction {
        let det = &self.deterministic;
        let binary = det
            .model1
            .cells
            .iter()
            .chain(&det.model2.cells)
            .all(|c| c.p_hat == 0.0 || c.p_hat == 1.0);
        let checks = vec![
            Check::flag("deterministic cells are 0 or 1", binary),
            Check::flag(
                "deterministic model 2 agrees more often",
                det.model2.total() > det.model1.total(),
            ),
            Check::within("deterministic model 1 agreements", det.model1.total(), Some(1108.0), 0.0, f64::INFINITY),
            Check::within("deterministic model 2 agreements", det.model2.total(), Some(2364.0), 0.0, f64::INFINITY),
            Check::within(
                "deterministic averaged ratio",
                det.ratio_value(),
                Some(0.4687),
                0.35,
                0.60,
            ),
            Check::within(
                "uncertain averaged ratio",
                self.uncertain.ratio_value(),
                Some(0.7471),
                0.63,
                0.87,
            ),
            Check::within(
                "uncertain max cell ratio (epsilon > 0)",
                self.uncertain.max_cell_ratio(),
                None,
                0.0,
                1.0,
            ),
        ];
        let mut tables = Vec::new();
        for (label, pair) in [("deterministic", det), ("uncertain", &self.uncertain)] {
            tables.push((format!("{label}_model1"), pair.model1.to_csv()));
            tables.push((format!("{label}_model2"), pair.model2.to_csv()));
            tables.push((
                format!("{label}_ratio"),
                crate::engine::ratio_grid_csv(&pair.model1, &pair.model2).expect("same axes"),
            ));
        }
        Reproduction {
            example: ExampleId::GammaEpsilonRatio,
            seed,
            checks,
            tables,
        }
    }
}
