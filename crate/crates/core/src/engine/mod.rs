//! Estimators for P(A | M, D).
//!
//! Sample `k` of a Monte Carlo run draws ẑ from stream `MODEL` and z from
//! stream `DATA` at index `k`. Kernel values are summed in fixed-size chunks
//! whose partial sums are combined in index order, so estimates are
//! bit-identical for any number of worker threads.

mod ratio;
mod sweep;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agreement::AgreementRule;
use crate::comparison::ComparisonFnSpec;
use crate::distributions::{DiscretizeOptions, Distribution, WeightedValues, WEIGHT_TOLERANCE};
use crate::error::{invalid, BvmError, Result};
use crate::rng::{draw_rng, streams, DrawRng};
use crate::value::{BinnedPdf, Value};

pub use ratio::{averaged_boolean_ratio, bvm_factor, bvm_ratio, ratio_of, Ratio};
pub use sweep::{
    parse_axis, ratio_grid_csv, scaled_axis, sweep, sweep_pairs, SweepEstimator, SweepGrid,
};

/// Samples per work unit. Part of the reproducibility contract.
pub const CHUNK: usize = 1024;

/// Default bin count for comparison densities.
pub const DEFAULT_DENSITY_BINS: usize = 64;

/// Draws a correlated (ẑ, z) pair from a dedicated generator.
pub type JointSampler = Arc<dyn Fn(&mut DrawRng) -> (Value, Value) + Send + Sync>;

#[derive(Clone)]
pub struct Scenario {
    pub model: Distribution,
    pub data: Distribution,
    pub rule: AgreementRule,
    pub joint: Option<JointSampler>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("model", &self.model)
            .field("data", &self.data)
            .field("rule", &self.rule)
            .field("joint", &self.joint.as_ref().map(|_| "<sampler>"))
            .finish()
    }
}

impl Scenario {
    pub fn new(model: Distribution, data: Distribution, rule: AgreementRule) -> Self {
        Scenario {
            model,
            data,
            rule,
            joint: None,
        }
    }

    pub fn with_joint(mut self, sampler: JointSampler) -> Self {
        self.joint = Some(sampler);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.data.validate()?;
        self.rule.validate()
    }

    /// The `k`-th (ẑ, z) pair under `seed`.
    pub fn draw_pair(&self, seed: u64, k: u64) -> (Value, Value) {
        match &self.joint {
            Some(joint) => joint(&mut draw_rng(seed, streams::JOINT, k)),
            None => (
                self.model.draw(seed, streams::MODEL, k),
                self.data.draw(seed, streams::DATA, k),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    Grid,
    ClosedForm,
    /// Comparison-value histogram with the rule at bin midpoints.
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvmEstimate {
    pub p_hat: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: Option<u64>,
    pub method: Method,
}

impl BvmEstimate {
    pub fn exact(p: f64, method: Method) -> Self {
        BvmEstimate {
            p_hat: p.clamp(0.0, 1.0),
            std_error: 0.0,
            n_samples: 0,
            seed: None,
            method,
        }
    }

    pub fn closed_form(p: f64) -> Self {
        Self::exact(p, Method::ClosedForm)
    }
}

/// Running sums of kernel values over a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSums {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl KernelSums {
    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Binomial error for {0, 1} kernels, sample-variance error otherwise.
    pub fn std_error(&self, boolean: bool) -> f64 {
        let n = self.n as f64;
        let p = self.mean();
        if boolean {
            (p * (1.0 - p) / n).max(0.0).sqrt()
        } else if self.n < 2 {
            0.0
        } else {
            let var = ((self.sum_sq - n * p * p) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        }
    }

    pub fn into_estimate(self, boolean: bool, seed: u64) -> BvmEstimate {
        BvmEstimate {
            p_hat: self.mean().clamp(0.0, 1.0),
            std_error: self.std_error(boolean),
            n_samples: self.n as u64,
            seed: Some(seed),
            method: Method::Mc,
        }
    }
}

/// Sum `f(k)` for `k` in `0..n` with the chunked, order-fixed reduction.
pub fn mc_sums<F>(n: usize, f: F) -> Result<KernelSums>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    let partials = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let (mut s, mut s2) = (0.0, 0.0);
            for k in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let v = f(k as u64)?;
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect::<Result<Vec<_>>>()?;
    let (sum, sum_sq) = partials
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
    Ok(KernelSums { n, sum, sum_sq })
}

/// Monte Carlo estimate of E[Θ(B(ẑ, z))] from `samples` pairs.
pub fn estimate_bvm_mc(s: &Scenario, samples: usize, seed: u64) -> Result<BvmEstimate> {
    s.rule.validate()?;
    let sums = mc_sums(samples, |k| {
        let (zhat, z) = s.draw_pair(seed, k);
        s.rule.evaluate_kernel(&zhat, &z)
    })?;
    Ok(sums.into_estimate(s.rule.is_boolean(), seed))
}

fn check_weights(w: &WeightedValues, name: &'static str) -> Result<()> {
    if w.is_empty() || w.values.len() != w.weights.len() {
        return Err(invalid(name, "values and weights must be nonempty and paired"));
    }
    let total: f64 = w.weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE || w.weights.iter().any(|&x| !(x >= 0.0)) {
        return Err(BvmError::WeightNormalization(total));
    }
    Ok(())
}

/// Exact double sum Σ w_ẑ w_z Θ(B(ẑ, z)) over two weighted grids.
pub fn estimate_bvm_grid(
    rule: &AgreementRule,
    model: &WeightedValues,
    data: &WeightedValues,
) -> Result<BvmEstimate> {
    rule.validate()?;
    check_weights(model, "model grid")?;
    check_weights(data, "data grid")?;
    let rows = model
        .values
        .par_iter()
        .zip(model.weights.par_iter())
        .map(|(zhat, &wm)| {
            let mut inner = 0.0;
            for (z, &wd) in data.values.iter().zip(&data.weights) {
                if wd > 0.0 {
                    inner += wd * rule.evaluate_kernel(zhat, z)?;
                }
            }
            Ok(wm * inner)
        })
        .collect::<Result<Vec<f64>>>()?;
    let p: f64 = rows.iter().sum();
    let mut est = BvmEstimate::exact(p, Method::Grid);
    est.n_samples = (model.len() * data.len()) as u64;
    Ok(est)
}

/// Grid estimate with both distributions discretized by `opts`.
pub fn estimate_bvm_discretized(s: &Scenario, opts: &DiscretizeOptions) -> Result<BvmEstimate> {
    if s.joint.is_some() {
        return Err(BvmError::InvalidRule(
            "grid estimation needs independent model and data distributions".into(),
        ));
    }
    estimate_bvm_grid(&s.rule, &s.model.discretize(opts)?, &s.data.discretize(opts)?)
}

/// Histogram estimate of the comparison-value density ρ(f | M, D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDensity {
    pub pdf: BinnedPdf,
    pub n_samples: usize,
}

impl ComparisonDensity {
    pub fn edges(&self) -> &[f64] {
        self.pdf.edges()
    }

    pub fn masses(&self) -> &[f64] {
        self.pdf.masses()
    }
}

/// Histogram of f over `samples` pairs on equal-width bins spanning the
/// observed range (±0.5 around a single observed value).
pub fn comparison_density(
    s: &Scenario,
    f: &ComparisonFnSpec,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<ComparisonDensity> {
    if bins == 0 || samples < bins {
        return Err(invalid(
            "samples",
            format!("{samples} samples cannot fill {bins} bins"),
        ));
    }
    let values = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            (c * CHUNK..((c + 1) * CHUNK).min(samples))
                .map(|k| {
                    let (zhat, z) = s.draw_pair(seed, k as u64);
                    match f.apply(&zhat, &z)? {
                        Value::Scalar(x) if x.is_finite() => Ok(x),
                        Value::Scalar(x) => Err(invalid(
                            "comparison",
                            format!("non-finite comparison value {x} cannot be binned"),
                        )),
                        other => Err(BvmError::NotScalar(other.kind())),
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    Ok(ComparisonDensity {
        pdf: BinnedPdf::from_samples(&values, lo, hi, bins)?,
        n_samples: samples,
    })
}

/// Σ mass × Θ(B(f)) with the kernel evaluated at bin midpoints.
pub fn bvm_from_density(d: &ComparisonDensity, rule: &AgreementRule) -> Result<f64> {
    rule.validate()?;
    let mut p = 0.0;
    for (mass, mid) in d.masses().iter().zip(d.pdf.midpoints()) {
        p += mass * rule.evaluate_statistic(mid)?;
    }
    Ok(p.clamp(0.0, 1.0))
}

/// BVM through the comparison-value density. The standard error covers
/// sampling only, not the midpoint binning.
pub fn estimate_bvm_density(
    s: &Scenario,
    f: &ComparisonFnSpec,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<BvmEstimate> {
    let d = comparison_density(s, f, samples, bins, seed)?;
    let p = bvm_from_density(&d, &s.rule)?;
    let n = samples as f64;
    Ok(BvmEstimate {
        p_hat: p,
        std_error: (p * (1.0 - p) / n).max(0.0).sqrt(),
        n_samples: samples as u64,
        seed: Some(seed),
        method: Method::Density,
    })
}
