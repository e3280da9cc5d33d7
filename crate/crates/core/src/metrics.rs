//! Established validation metrics expressed as BVM special cases.

use rand_distr::{Distribution as _, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agreement::{AgreementRule, Side};
use crate::comparison::{area_metric, divergence, ComparisonFnSpec, DivergenceKind};
use crate::distributions::{
    confidence_interval, confidence_set, ConfidenceRegion, Distribution, InputGrid,
    standard_normal_cdf, ModelFunction, RegionKind, DEFAULT_SET_BINS,
};
use crate::engine::{estimate_bvm_mc, mc_sums, BvmEstimate, Ratio, Scenario};
use crate::error::{invalid, BvmError, Result};
use crate::quadrature::adaptive_simpson;
use crate::rng::{draw_rng, streams, DrawRng};
use crate::value::{BinnedPdf, Ecdf, Value};

/// Absolute tolerance of kernel quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

/// Default bootstrap resamples for the uncertain area metric.
pub const DEFAULT_BOOTSTRAP: usize = 1000;

/// Sample mean, sample standard deviation and count of repeated measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSummary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl DataSummary {
    pub fn new(mean: f64, std: f64, n: usize) -> Result<Self> {
        let s = DataSummary { mean, std, n };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std > 0.0) || !self.std.is_finite() {
            return Err(invalid("std", format!("{} must be positive", self.std)));
        }
        if self.n < 2 {
            return Err(invalid("n", format!("need at least 2 observations, got {}", self.n)));
        }
        if !self.mean.is_finite() {
            return Err(invalid("mean", "must be finite"));
        }
        Ok(())
    }

    /// Student-t uncertainty of the population mean: location ȳ, ν = n − 1,
    /// scale s̄/√n.
    pub fn mean_distribution(&self) -> Distribution {
        Distribution::StudentT {
            location: self.mean,
            dof: (self.n - 1) as f64,
            scale: self.std / (self.n as f64).sqrt(),
        }
    }
}

/// Gaussian measurement model for the evidence: yᵢ ~ N(M(xᵢ; θ), σ²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianLikelihood {
    pub sigma: f64,
    pub data: Vec<f64>,
    pub grid: InputGrid,
}

impl GaussianLikelihood {
    pub fn new(sigma: f64, data: Vec<f64>, grid: InputGrid) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma", format!("{sigma} must be positive")));
        }
        if data.len() != grid.len() {
            return Err(BvmError::LengthMismatch {
                left: data.len(),
                right: grid.len(),
            });
        }
        Ok(GaussianLikelihood { sigma, data, grid })
    }

    /// ln L(Y | θ) including the (2πσ²)^(−N/2) normalizer.
    pub fn log_likelihood(&self, prediction: &[f64]) -> f64 {
        let n = self.data.len() as f64;
        let s2 = self.sigma * self.sigma;
        let sse: f64 = prediction
            .iter()
            .zip(&self.data)
            .map(|(p, y)| (p - y) * (p - y))
            .sum();
        -0.5 * n * (2.0 * std::f64::consts::PI * s2).ln() - sse / (2.0 * s2)
    }
}

fn require_scalar(d: &Distribution) -> Result<()> {
    if d.is_scalar() {
        Ok(())
    } else {
        Err(BvmError::NotScalar(d.name()))
    }
}

fn is_continuous(d: &Distribution) -> bool {
    d.has_closed_form_cdf()
}

fn cdf_at(d: &Distribution, x: f64) -> Result<f64> {
    if x == f64::NEG_INFINITY {
        Ok(0.0)
    } else if x == f64::INFINITY {
        Ok(1.0)
    } else {
        d.cdf(x)
    }
}

/// Values of z where Θ(B(a, z)) may jump, for rules over scalar comparisons.
/// `None` when the rule's structure is not understood.
fn rule_breakpoints(rule: &AgreementRule, a: f64) -> Option<Vec<f64>> {
    fn level_set(f: &ComparisonFnSpec, a: f64, level: f64) -> Option<Vec<f64>> {
        match f {
            ComparisonFnSpec::AbsDiff if level >= 0.0 => Some(vec![a - level, a + level]),
            ComparisonFnSpec::SqDiff if level >= 0.0 => {
                Some(vec![a - level.sqrt(), a + level.sqrt()])
            }
            ComparisonFnSpec::AbsDiff | ComparisonFnSpec::SqDiff => Some(Vec::new()),
            ComparisonFnSpec::Difference => Some(vec![a - level]),
            ComparisonFnSpec::IdentityStatistic => Some(Vec::new()),
            _ => None,
        }
    }
    match rule {
        AgreementRule::AlwaysTrue {} | AgreementRule::AlwaysFalse {} => Some(Vec::new()),
        AgreementRule::Threshold {
            comparison,
            epsilon,
        } => level_set(comparison, a, *epsilon),
        AgreementRule::SoftExponential {
            comparison, shift, ..
        } => level_set(comparison, a, *shift),
        AgreementRule::Interval { comparison, lo, hi } => {
            let mut v = level_set(comparison, a, *lo)?;
            v.extend(level_set(comparison, a, *hi)?);
            Some(v)
        }
        AgreementRule::InRegion { side: Side::Model, .. } => Some(Vec::new()),
        AgreementRule::InRegion {
            region,
            side: Side::Data,
        } => match &region.kind {
            RegionKind::Interval { lo, hi } => Some(vec![*lo, *hi]),
            RegionKind::Set { intervals } => {
                Some(intervals.iter().flat_map(|&(lo, hi)| [lo, hi]).collect())
            }
            RegionKind::Labels { .. } => None,
        },
        AgreementRule::And { children } | AgreementRule::Or { children } => {
            let mut v = Vec::new();
            for c in children {
                v.extend(rule_breakpoints(c, a)?);
            }
            Some(v)
        }
        AgreementRule::Not { child } => rule_breakpoints(child, a),
        _ => None,
    }
}

/// E[k(Z)] for a scalar distribution of Z.
///
/// Continuous laws are split at the kernel's breakpoints. A piecewise
/// constant kernel then integrates exactly through CDF differences; a soft
/// kernel is integrated piecewise by adaptive Simpson in probability space,
/// which keeps heavy tails inside the integration range.
fn expect_kernel<K>(
    d: &Distribution,
    kernel: K,
    breakpoints: Option<Vec<f64>>,
    boolean: bool,
) -> Result<f64>
where
    K: Fn(f64) -> Result<f64>,
{
    require_scalar(d)?;
    match d {
        Distribution::Dirac {
            value: Value::Scalar(x),
        } => return kernel(*x),
        Distribution::Categorical { values, probs } => {
            let mut total = 0.0;
            for (v, p) in values.iter().zip(probs) {
                if *p > 0.0 {
                    total += p * kernel(v.as_scalar()?)?;
                }
            }
            return Ok(total);
        }
        Distribution::Empirical { samples } => {
            let mut total = 0.0;
            for v in samples {
                total += kernel(v.as_scalar()?)?;
            }
            return Ok(total / samples.len() as f64);
        }
        _ if !is_continuous(d) => return Err(BvmError::DensityUnsupported(d.name())),
        _ => {}
    }

    let mut cuts: Vec<f64> = breakpoints
        .unwrap_or_default()
        .into_iter()
        .filter(|x| x.is_finite())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(cuts);
    edges.push(f64::INFINITY);
    let pieces = edges.len() - 1;

    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (cdf_at(d, a)?, cdf_at(d, b)?);
        if fb <= fa {
            continue;
        }
        if boolean && pieces > 1 {
            let rep = match (a.is_finite(), b.is_finite()) {
                (true, true) => 0.5 * (a + b),
                (false, true) => b - 1.0,
                (true, false) => a + 1.0,
                (false, false) => 0.0,
            };
            total += (fb - fa) * kernel(rep)?;
        } else {
            // soft kernel, or no breakpoints known: integrate over u = F(z)
            let splits = if pieces > 1 { 8 } else { 256 };
            let tol = QUADRATURE_TOLERANCE / (pieces * splits) as f64;
            let step = (fb - fa) / splits as f64;
            let err = std::cell::RefCell::new(None);
            for s in 0..splits {
                let lo = fa + s as f64 * step;
                let hi = if s + 1 == splits { fb } else { lo + step };
                total += adaptive_simpson(
                    |u| match d.quantile(u.clamp(0.0, 1.0)).and_then(&kernel) {
                        Ok(k) => k,
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    },
                    lo,
                    hi,
                    tol,
                );
            }
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// P(|ẑ − z| ≤ ε) for scalar ẑ and z.
///
/// Closed form for Normal/Normal, Dirac/Normal and Dirac against any
/// continuous law; Monte Carlo otherwise.
pub fn reliability(
    model: &Distribution,
    data: &Distribution,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<BvmEstimate> {
    require_scalar(model)?;
    require_scalar(data)?;
    if epsilon.is_nan() {
        return Err(invalid("epsilon", "must be a number"));
    }
    let normal_parts = |d: &Distribution| match d {
        Distribution::Normal { mean, std } => Some((*mean, *std)),
        Distribution::Dirac {
            value: Value::Scalar(x),
        } => Some((*x, 0.0)),
        _ => None,
    };
    if let (Some((m1, s1)), Some((m2, s2))) = (normal_parts(model), normal_parts(data)) {
        let mu = m1 - m2;
        let s = s1.hypot(s2);
        let p = if epsilon < 0.0 {
            0.0
        } else if s == 0.0 {
            if mu.abs() <= epsilon { 1.0 } else { 0.0 }
        } else {
            standard_normal_cdf((epsilon - mu) / s) - standard_normal_cdf((-epsilon - mu) / s)
        };
        return Ok(BvmEstimate::closed_form(p));
    }
    let rule = AgreementRule::threshold(ComparisonFnSpec::AbsDiff, epsilon);
    let dirac = |d: &Distribution| match d {
        Distribution::Dirac {
            value: Value::Scalar(x),
        } => Some(*x),
        _ => None,
    };
    let within = |a: f64, z: f64| Ok(if (a - z).abs() <= epsilon { 1.0 } else { 0.0 });
    if let Some(a) = dirac(model) {
        if is_continuous(data) {
            let p = expect_kernel(data, |z| within(a, z), rule_breakpoints(&rule, a), true)?;
            return Ok(BvmEstimate::closed_form(p));
        }
    }
    if let Some(b) = dirac(data) {
        if is_continuous(model) {
            let p = expect_kernel(model, |z| within(b, z), rule_breakpoints(&rule, b), true)?;
            return Ok(BvmEstimate::closed_form(p));
        }
    }
    estimate_bvm_mc(&Scenario::new(model.clone(), data.clone(), rule), samples, seed)
}

/// The conjunction of per-point rules |ŷᵢ − yᵢ| ≤ εᵢ.
pub fn improved_reliability_rule(tolerances: &[f64]) -> AgreementRule {
    AgreementRule::and(
        tolerances
            .iter()
            .enumerate()
            .map(|(index, &e)| {
                AgreementRule::threshold(ComparisonFnSpec::PointAbsError { index }, e)
            })
            .collect(),
    )
}

pub fn improved_reliability(
    model: &Distribution,
    data: &Distribution,
    tolerances: &[f64],
    samples: usize,
    seed: u64,
) -> Result<BvmEstimate> {
    for d in [model, data] {
        match d.dim() {
            Some(n) if n == tolerances.len() => {}
            Some(n) => {
                return Err(BvmError::LengthMismatch {
                    left: n,
                    right: tolerances.len(),
                })
            }
            None => return Err(BvmError::KindMismatch("expected path distributions".into())),
        }
    }
    let s = Scenario::new(model.clone(), data.clone(), improved_reliability_rule(tolerances));
    estimate_bvm_mc(&s, samples, seed)
}

/// BVM for a certain model mean ⟨ŷ⟩′ against the Student-t uncertainty of
/// the population mean. The rule sees (ẑ, z) = (⟨ŷ⟩′, μ_y).
pub fn frequentist(model_mean: f64, data: &DataSummary, rule: &AgreementRule) -> Result<BvmEstimate> {
    data.validate()?;
    rule.validate()?;
    let mu = data.mean_distribution();
    let zhat = Value::Scalar(model_mean);
    let p = expect_kernel(
        &mu,
        |z| rule.evaluate_kernel(&zhat, &Value::Scalar(z)),
        rule_breakpoints(rule, model_mean),
        rule.is_boolean(),
    )?;
    Ok(BvmEstimate::closed_form(p))
}

/// Θ(B(d)) for the area d between the two empirical CDFs.
pub fn area_metric_validation(
    model_samples: &[f64],
    data_samples: &[f64],
    rule: &AgreementRule,
) -> Result<BvmEstimate> {
    let d = area_metric(&Ecdf::new(model_samples)?, &Ecdf::new(data_samples)?);
    Ok(BvmEstimate::closed_form(rule.evaluate_statistic(d)?))
}

/// Area-metric BVM with the data ECDF uncertain: the data samples are
/// bootstrap-resampled `resamples` times and the kernel averaged.
pub fn area_metric_bootstrap(
    model_samples: &[f64],
    data_samples: &[f64],
    rule: &AgreementRule,
    resamples: usize,
    seed: u64,
) -> Result<BvmEstimate> {
    let model = Ecdf::new(model_samples)?;
    Ecdf::new(data_samples)?;
    let n = data_samples.len();
    let sums = mc_sums(resamples, |r| {
        let mut rng = draw_rng(seed, streams::BOOTSTRAP, r);
        let resample: Vec<f64> = (0..n)
            .map(|_| data_samples[rand::Rng::random_range(&mut rng, 0..n)])
            .collect();
        rule.evaluate_statistic(area_metric(&model, &Ecdf::new(&resample)?))
    })?;
    Ok(sums.into_estimate(rule.is_boolean(), seed))
}

/// Binned-probability BVM with the data bin probabilities uncertain:
/// q ~ Dirichlet(counts + 1), kernel Θ(B(Σ|pᵢ − qᵢ|)).
pub fn binned_pdf_metric(
    model: &BinnedPdf,
    counts: &[f64],
    rule: &AgreementRule,
    draws: usize,
    seed: u64,
) -> Result<BvmEstimate> {
    if counts.len() != model.bins() {
        return Err(BvmError::BinMismatch);
    }
    if counts.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(invalid("counts", "bin counts must be finite and nonnegative"));
    }
    let gammas: Vec<Gamma<f64>> = counts
        .iter()
        .map(|&c| Gamma::new(c + 1.0, 1.0).expect("positive shape"))
        .collect();
    let p = model.masses();
    let sums = mc_sums(draws, |r| {
        let mut rng = draw_rng(seed, streams::DIRICHLET, r);
        let g: Vec<f64> = gammas.iter().map(|d| d.sample(&mut rng)).collect();
        let total: f64 = g.iter().sum();
        let d: f64 = p.iter().zip(&g).map(|(pi, gi)| (pi - gi / total).abs()).sum();
        rule.evaluate_statistic(d)
    })?;
    Ok(sums.into_estimate(rule.is_boolean(), seed))
}

fn divergence_statistic(kind: DivergenceKind, model: &BinnedPdf, data: &BinnedPdf) -> Result<f64> {
    match divergence(kind, data, model) {
        Ok(g) => Ok(g),
        Err(BvmError::InfiniteDivergence) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Θ(B(G(ρ_D ‖ ρ_M))); an infinite divergence is treated as f = +∞.
pub fn divergence_validation(
    model: &BinnedPdf,
    data: &BinnedPdf,
    kind: DivergenceKind,
    rule: &AgreementRule,
) -> Result<BvmEstimate> {
    let g = divergence_statistic(kind, model, data)?;
    Ok(BvmEstimate::closed_form(rule.evaluate_statistic(g)?))
}

/// Divergence BVM with both pdfs uncertain; `draw_pair` returns a
/// (model, data) pdf pair from its generator.
pub fn divergence_validation_uncertain<F>(
    draw_pair: F,
    kind: DivergenceKind,
    rule: &AgreementRule,
    samples: usize,
    seed: u64,
) -> Result<BvmEstimate>
where
    F: Fn(&mut DrawRng) -> Result<(BinnedPdf, BinnedPdf)> + Sync,
{
    let sums = mc_sums(samples, |k| {
        let (m, d) = draw_pair(&mut draw_rng(seed, streams::UNCERTAIN_PDF, k))?;
        rule.evaluate_statistic(divergence_statistic(kind, &m, &d)?)
    })?;
    Ok(sums.into_estimate(rule.is_boolean(), seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisTest {
    pub estimate: BvmEstimate,
    /// Central acceptance region [c_lo, c_hi] at level 1 − α.
    pub region: ConfidenceRegion,
    /// Half-width of the acceptance region.
    pub c_alpha: f64,
}

/// Classical test under the null hypothesis that the model pdf equals the
/// data pdf: the BVM is the data mass inside its own 1 − α region.
pub fn classical_hypothesis(data: &Distribution, alpha: f64) -> Result<HypothesisTest> {
    require_scalar(data)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("{alpha} outside (0, 1)")));
    }
    let region = confidence_interval(data, 1.0 - alpha)?;
    let (lo, hi) = region.bounds().expect("interval region");
    let p = data.prob_in(&region)?;
    Ok(HypothesisTest {
        estimate: BvmEstimate::closed_form(p),
        region,
        c_alpha: 0.5 * (hi - lo),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMode {
    /// Equal-tailed central intervals.
    Interval,
    /// Highest-density confidence sets.
    Set,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub estimate: BvmEstimate,
    /// 1 − β_M: model mass inside the data region.
    pub model_power: f64,
    /// 1 − β_D: data mass inside the model region.
    pub data_power: f64,
    /// α + α̂ − αα̂.
    pub systematic_error: f64,
    pub data_region: ConfidenceRegion,
    pub model_region: ConfidenceRegion,
}

fn region_at(d: &Distribution, level: f64, mode: RegionMode) -> Result<ConfidenceRegion> {
    match mode {
        RegionMode::Interval => confidence_interval(d, level),
        RegionMode::Set => confidence_set(d, level, DEFAULT_SET_BINS),
    }
}

/// (1 − β_M(α))·(1 − β_D(α̂)) with the data region at level 1 − α and the
/// model region at level 1 − α̂.
pub fn statistical_power_bvm(
    model: &Distribution,
    data: &Distribution,
    alpha: f64,
    alpha_hat: f64,
    mode: RegionMode,
) -> Result<PowerResult> {
    require_scalar(model)?;
    require_scalar(data)?;
    for (name, a) in [("alpha", alpha), ("alpha_hat", alpha_hat)] {
        if !(0.0..1.0).contains(&a) {
            return Err(invalid(name, format!("{a} outside [0, 1)")));
        }
    }
    let data_region = region_at(data, 1.0 - alpha, mode)?;
    let model_region = region_at(model, 1.0 - alpha_hat, mode)?;
    let model_power = model.prob_in(&data_region)?.clamp(0.0, 1.0);
    let data_power = data.prob_in(&model_region)?.clamp(0.0, 1.0);
    Ok(PowerResult {
        estimate: BvmEstimate::closed_form(model_power * data_power),
        model_power,
        data_power,
        systematic_error: alpha + alpha_hat - alpha * alpha_hat,
        data_region,
        model_region,
    })
}

/// The statistical-power BVM as an explicit scenario: ẑ in the data
/// region and z in the model region.
pub fn power_rule(result: &PowerResult) -> AgreementRule {
    AgreementRule::and(vec![
        AgreementRule::InRegion {
            region: result.data_region.clone(),
            side: Side::Model,
        },
        AgreementRule::InRegion {
            region: result.model_region.clone(),
            side: Side::Data,
        },
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub log_evidence: f64,
    /// Delta-method standard error of the log evidence.
    pub log_std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// ln p(Y | M) by averaging the likelihood over prior draws.
pub fn bayesian_evidence(
    model: &ModelFunction,
    prior: &Distribution,
    likelihood: &GaussianLikelihood,
    samples: usize,
    seed: u64,
) -> Result<Evidence> {
    if samples == 0 {
        return Err(invalid("samples", "need at least one sample"));
    }
    prior.validate()?;
    model.check_grid(&likelihood.grid)?;
    let logs = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let theta = prior.draw(seed, streams::EVIDENCE, k).coordinates()?;
            let pred = model.evaluate(&theta, &likelihood.grid)?;
            Ok(likelihood.log_likelihood(&pred))
        })
        .collect::<Result<Vec<f64>>>()?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(Evidence {
            log_evidence: f64::NEG_INFINITY,
            log_std_error: 0.0,
            n_samples: samples,
            seed,
        });
    }
    let n = samples as f64;
    let (s, s2) = logs.iter().fold((0.0, 0.0), |(s, s2), &l| {
        let w = (l - top).exp();
        (s + w, s2 + w * w)
    });
    let mean = s / n;
    let se = if samples > 1 {
        let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt() / mean
    } else {
        0.0
    };
    Ok(Evidence {
        log_evidence: top + mean.ln(),
        log_std_error: se,
        n_samples: samples,
        seed,
    })
}

/// ρ(Y | M) / ρ(Y | M′) from log evidences.
pub fn bayes_factor(log_ev: f64, log_ev_alt: f64) -> Ratio {
    match (log_ev == f64::NEG_INFINITY, log_ev_alt == f64::NEG_INFINITY) {
        (true, true) => Ratio::Indeterminate,
        (false, true) => Ratio::Infinite,
        (true, false) => Ratio::Finite(0.0),
        (false, false) => Ratio::Finite((log_ev - log_ev_alt).exp()),
    }
}

/// ln K, exact difference of log evidences.
pub fn log_bayes_factor(a: &Evidence, b: &Evidence) -> f64 {
    a.log_evidence - b.log_evidence
}
