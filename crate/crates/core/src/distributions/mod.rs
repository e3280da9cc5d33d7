//! Uncertain model outputs and data: sampling, densities, quantiles,
//! push-forward through model functions and confidence regions.

mod discretize;
mod model;
mod region;

pub use discretize::{DiscretizeOptions, WeightedValues, WEIGHT_TOLERANCE};
pub use model::{InputGrid, ModelFunction};
pub use region::{
    confidence_interval, confidence_set, confidence_set_histogram, path_confidence_band,
    ConfidenceRegion, ConfidenceSetHistogram, RegionKind, DEFAULT_SET_BINS,
};

use rand::Rng;
use rand_distr::{Distribution as _, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StatNormal, StudentsT};

use crate::error::{invalid, BvmError, Result};
use crate::rng::{draw_rng, streams};
use crate::value::Value;

/// Tolerance on categorical probabilities summing to one.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// A sampleable description of an uncertain comparison value.
///
/// Constructed values should go through the checked constructors or
/// [`Distribution::validate`]; deserialized values are validated by the
/// scenario loader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Dirac {
        value: Value,
    },
    Normal {
        mean: f64,
        std: f64,
    },
    StudentT {
        location: f64,
        dof: f64,
        scale: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Density λ·exp(−λ(x − shift)) for x ≥ shift.
    ShiftedExponential {
        rate: f64,
        shift: f64,
    },
    Categorical {
        values: Vec<Value>,
        probs: Vec<f64>,
    },
    Empirical {
        samples: Vec<Value>,
    },
    /// Independent components, concatenated into one path.
    Product {
        components: Vec<Distribution>,
    },
    /// θ ~ prior, output = model(θ, grid).
    PushForward {
        prior: Box<Distribution>,
        model: ModelFunction,
        grid: InputGrid,
    },
}

impl Distribution {
    pub fn dirac(value: impl Into<Value>) -> Self {
        Distribution::Dirac {
            value: value.into(),
        }
    }

    pub fn normal(mean: f64, std: f64) -> Result<Self> {
        let d = Distribution::Normal { mean, std };
        d.validate()?;
        Ok(d)
    }

    pub fn student_t(location: f64, dof: f64, scale: f64) -> Result<Self> {
        let d = Distribution::StudentT {
            location,
            dof,
            scale,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = Distribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn shifted_exponential(rate: f64, shift: f64) -> Result<Self> {
        let d = Distribution::ShiftedExponential { rate, shift };
        d.validate()?;
        Ok(d)
    }

    pub fn categorical(values: Vec<Value>, probs: Vec<f64>) -> Result<Self> {
        let d = Distribution::Categorical { values, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn empirical(samples: Vec<Value>) -> Result<Self> {
        let d = Distribution::Empirical { samples };
        d.validate()?;
        Ok(d)
    }

    pub fn product(components: Vec<Distribution>) -> Result<Self> {
        let d = Distribution::Product { components };
        d.validate()?;
        Ok(d)
    }

    /// Independent Normals, one per coordinate.
    pub fn independent_normals(means: &[f64], stds: &[f64]) -> Result<Self> {
        if means.len() != stds.len() {
            return Err(BvmError::LengthMismatch {
                left: means.len(),
                right: stds.len(),
            });
        }
        let components = means
            .iter()
            .zip(stds)
            .map(|(&m, &s)| {
                if s == 0.0 {
                    Ok(Distribution::dirac(m))
                } else {
                    Distribution::normal(m, s)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Distribution::product(components)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Dirac { .. } => "dirac",
            Distribution::Normal { .. } => "normal",
            Distribution::StudentT { .. } => "student_t",
            Distribution::Uniform { .. } => "uniform",
            Distribution::ShiftedExponential { .. } => "shifted_exponential",
            Distribution::Categorical { .. } => "categorical",
            Distribution::Empirical { .. } => "empirical",
            Distribution::Product { .. } => "product",
            Distribution::PushForward { .. } => "push_forward",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::Dirac { .. } => Ok(()),
            Distribution::Normal { mean, std } => {
                finite("mean", *mean)?;
                positive("std", *std)
            }
            Distribution::StudentT {
                location,
                dof,
                scale,
            } => {
                finite("location", *location)?;
                positive("dof", *dof)?;
                positive("scale", *scale)
            }
            Distribution::Uniform { lo, hi } => {
                finite("lo", *lo)?;
                finite("hi", *hi)?;
                if lo < hi {
                    Ok(())
                } else {
                    Err(invalid("lo", "uniform needs lo < hi"))
                }
            }
            Distribution::ShiftedExponential { rate, shift } => {
                finite("shift", *shift)?;
                positive("rate", *rate)
            }
            Distribution::Categorical { values, probs } => {
                if values.is_empty() {
                    return Err(BvmError::Empty("categorical values"));
                }
                if values.len() != probs.len() {
                    return Err(BvmError::LengthMismatch {
                        left: values.len(),
                        right: probs.len(),
                    });
                }
                if probs.iter().any(|&p| !(p >= 0.0)) {
                    return Err(invalid("probs", "probabilities must be nonnegative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_TOLERANCE {
                    return Err(invalid("probs", format!("probabilities sum to {total}")));
                }
                Ok(())
            }
            Distribution::Empirical { samples } => {
                if samples.is_empty() {
                    Err(BvmError::Empty("empirical samples"))
                } else {
                    Ok(())
                }
            }
            Distribution::Product { components } => {
                if components.is_empty() {
                    return Err(BvmError::Empty("product components"));
                }
                for c in components {
                    c.validate()?;
                    if c.dim().is_none() {
                        return Err(invalid(
                            "components",
                            "product components must be numeric",
                        ));
                    }
                }
                Ok(())
            }
            Distribution::PushForward { prior, model, grid } => {
                prior.validate()?;
                model.check_grid(grid)?;
                let dim = prior
                    .dim()
                    .ok_or_else(|| invalid("prior", "parameter prior must be numeric"))?;
                if dim != model.parameter_count() {
                    return Err(BvmError::DimensionMismatch {
                        expected: model.parameter_count(),
                        actual: dim,
                    });
                }
                Ok(())
            }
        }
    }

    /// Number of real coordinates in a draw; `None` for label-valued or
    /// mixed-shape distributions.
    pub fn dim(&self) -> Option<usize> {
        fn uniform_dim(values: &[Value]) -> Option<usize> {
            let mut dims = values.iter().map(|v| match v {
                Value::Scalar(_) => Some(1),
                Value::Path(p) => Some(p.len()),
                _ => None,
            });
            let first = dims.next()??;
            dims.all(|d| d == Some(first)).then_some(first)
        }
        match self {
            Distribution::Dirac { value } => uniform_dim(std::slice::from_ref(value)),
            Distribution::Normal { .. }
            | Distribution::StudentT { .. }
            | Distribution::Uniform { .. }
            | Distribution::ShiftedExponential { .. } => Some(1),
            Distribution::Categorical { values, .. } => uniform_dim(values),
            Distribution::Empirical { samples } => uniform_dim(samples),
            Distribution::Product { components } => {
                components.iter().map(|c| c.dim()).sum::<Option<usize>>()
            }
            Distribution::PushForward { grid, .. } => Some(grid.len()),
        }
    }

    /// True when every draw is a `Value::Scalar`.
    pub fn is_scalar(&self) -> bool {
        match self {
            Distribution::Dirac { value } => matches!(value, Value::Scalar(_)),
            Distribution::Normal { .. }
            | Distribution::StudentT { .. }
            | Distribution::Uniform { .. }
            | Distribution::ShiftedExponential { .. } => true,
            Distribution::Categorical { values, .. } => {
                values.iter().all(|v| matches!(v, Value::Scalar(_)))
            }
            Distribution::Empirical { samples } => {
                samples.iter().all(|v| matches!(v, Value::Scalar(_)))
            }
            Distribution::Product { .. } | Distribution::PushForward { .. } => false,
        }
    }

    /// One draw using the caller's generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            Distribution::Dirac { value } => value.clone(),
            Distribution::Normal { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                Value::Scalar(mean + std * z)
            }
            Distribution::StudentT {
                location,
                dof,
                scale,
            } => {
                let t = rand_distr::StudentT::new(*dof)
                    .expect("validated dof")
                    .sample(rng);
                Value::Scalar(location + scale * t)
            }
            Distribution::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                Value::Scalar(lo + (hi - lo) * u)
            }
            Distribution::ShiftedExponential { rate, shift } => {
                let e = Exp::new(*rate).expect("validated rate").sample(rng);
                Value::Scalar(shift + e)
            }
            Distribution::Categorical { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, &p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return v.clone();
                    }
                }
                // rounding left u above the accumulated total: last atom with mass
                let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(values.len() - 1);
                values[last].clone()
            }
            Distribution::Empirical { samples } => {
                samples[rng.random_range(0..samples.len())].clone()
            }
            Distribution::Product { components } => {
                let mut out = Vec::new();
                for c in components {
                    match c.sample_with(rng) {
                        Value::Scalar(x) => out.push(x),
                        Value::Path(p) => out.extend(p),
                        other => unreachable!("validated numeric product, got {}", other.kind()),
                    }
                }
                Value::Path(out)
            }
            Distribution::PushForward { prior, model, grid } => {
                let theta = prior
                    .sample_with(rng)
                    .coordinates()
                    .expect("validated numeric prior");
                Value::Path(model.evaluate_unchecked(&theta, grid))
            }
        }
    }

    /// Draw number `index` of stream `stream` under `seed`.
    pub fn draw(&self, seed: u64, stream: u64, index: u64) -> Value {
        self.sample_with(&mut draw_rng(seed, stream, index))
    }

    /// `n` i.i.d. draws; draw `i` depends only on `(seed, i)`.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<Value> {
        self.sample_stream(seed, streams::SAMPLE, n)
    }

    pub fn sample_stream(&self, seed: u64, stream: u64, n: usize) -> Vec<Value> {
        (0..n as u64).map(|i| self.draw(seed, stream, i)).collect()
    }

    /// Scalar draws; errors for non-scalar distributions.
    pub fn sample_scalars(&self, seed: u64, stream: u64, n: usize) -> Result<Vec<f64>> {
        if !self.is_scalar() {
            return Err(BvmError::NotScalar(self.name()));
        }
        Ok((0..n as u64)
            .map(|i| match self.draw(seed, stream, i) {
                Value::Scalar(x) => x,
                _ => unreachable!(),
            })
            .collect())
    }

    /// Probability density (mass for discrete variants) at `x`.
    ///
    /// A Dirac delta reports `+∞` at its atom and 0 elsewhere.
    pub fn density(&self, x: &Value) -> Result<f64> {
        match self {
            Distribution::Empirical { .. } | Distribution::PushForward { .. } => {
                Err(BvmError::DensityUnsupported(self.name()))
            }
            Distribution::Dirac { value } => {
                check_compatible(value, x)?;
                Ok(if value == x { f64::INFINITY } else { 0.0 })
            }
            Distribution::Categorical { values, probs } => {
                check_compatible(&values[0], x)?;
                Ok(values
                    .iter()
                    .zip(probs)
                    .filter(|(v, _)| *v == x)
                    .map(|(_, p)| p)
                    .sum())
            }
            Distribution::Product { components } => {
                let coords = x.coordinates()?;
                let expected = self.dim().unwrap_or(0);
                if coords.len() != expected {
                    return Err(BvmError::DimensionMismatch {
                        expected,
                        actual: coords.len(),
                    });
                }
                let mut offset = 0;
                let mut density = 1.0;
                for c in components {
                    let d = c.dim().unwrap_or(1);
                    let part = if c.is_scalar() {
                        Value::Scalar(coords[offset])
                    } else {
                        Value::Path(coords[offset..offset + d].to_vec())
                    };
                    density *= c.density(&part)?;
                    offset += d;
                }
                Ok(density)
            }
            _ => {
                let x = x.as_scalar()?;
                Ok(self.continuous_pdf(x))
            }
        }
    }

    fn continuous_pdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Normal { mean, std } => {
                StatNormal::new(*mean, *std).expect("validated").pdf(x)
            }
            Distribution::StudentT {
                location,
                dof,
                scale,
            } => StudentsT::new(*location, *scale, *dof)
                .expect("validated")
                .pdf(x),
            Distribution::Uniform { lo, hi } => {
                if (*lo..=*hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Distribution::ShiftedExponential { rate, shift } => {
                if x >= *shift {
                    rate * (-rate * (x - shift)).exp()
                } else {
                    0.0
                }
            }
            _ => unreachable!("continuous_pdf on {}", self.name()),
        }
    }

    /// Whether the distribution has a closed-form CDF and quantile function.
    pub fn has_closed_form_cdf(&self) -> bool {
        matches!(
            self,
            Distribution::Normal { .. }
                | Distribution::StudentT { .. }
                | Distribution::Uniform { .. }
                | Distribution::ShiftedExponential { .. }
        )
    }

    /// P(X ≤ x) for scalar distributions.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !self.is_scalar() {
            return Err(BvmError::NotScalar(self.name()));
        }
        Ok(match self {
            Distribution::Normal { mean, std } => {
                standard_normal_cdf((x - mean) / std)
            }
            Distribution::StudentT {
                location,
                dof,
                scale,
            } => StudentsT::new(*location, *scale, *dof)
                .expect("validated")
                .cdf(x),
            Distribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Distribution::ShiftedExponential { rate, shift } => {
                if x < *shift {
                    0.0
                } else {
                    -(-rate * (x - shift)).exp_m1()
                }
            }
            _ => self
                .atoms()
                .iter()
                .filter(|(v, _)| *v <= x)
                .map(|(_, p)| p)
                .sum::<f64>()
                .min(1.0),
        })
    }

    /// Weighted scalar atoms of a discrete scalar distribution.
    fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Distribution::Dirac {
                value: Value::Scalar(v),
            } => vec![(*v, 1.0)],
            Distribution::Categorical { values, probs } => values
                .iter()
                .zip(probs)
                .filter_map(|(v, &p)| match v {
                    Value::Scalar(x) => Some((*x, p)),
                    _ => None,
                })
                .collect(),
            Distribution::Empirical { samples } => {
                let w = 1.0 / samples.len() as f64;
                samples
                    .iter()
                    .filter_map(|v| match v {
                        Value::Scalar(x) => Some((*x, w)),
                        _ => None,
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Quantile function Q(p) for scalar distributions.
    ///
    /// Closed form (refined by Newton steps on the CDF) for continuous
    /// families, generalized inverse for discrete atoms, and linear
    /// interpolation between order statistics for empirical samples
    /// (requires at least [`MIN_EMPIRICAL_SAMPLES`]).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p", format!("probability {p} outside [0, 1]")));
        }
        if !self.is_scalar() {
            return Err(BvmError::NotScalar(self.name()));
        }
        match self {
            Distribution::Normal { mean, std } => {
                let d = StatNormal::new(*mean, *std).expect("validated");
                let cdf = |x: f64| standard_normal_cdf((x - mean) / std);
                Ok(polish_quantile(cdf, |x| d.pdf(x), p, d.inverse_cdf(p)))
            }
            Distribution::StudentT {
                location,
                dof,
                scale,
            } => {
                let d = StudentsT::new(*location, *scale, *dof).expect("validated");
                let x0 = match p {
                    0.0 => f64::NEG_INFINITY,
                    1.0 => f64::INFINITY,
                    _ => d.inverse_cdf(p),
                };
                Ok(polish_quantile(|x| d.cdf(x), |x| d.pdf(x), p, x0))
            }
            Distribution::Uniform { lo, hi } => Ok(lo + p * (hi - lo)),
            Distribution::ShiftedExponential { rate, shift } => {
                Ok(shift - (-p).ln_1p() / rate)
            }
            Distribution::Empirical { samples } => {
                if samples.len() < MIN_EMPIRICAL_SAMPLES {
                    return Err(BvmError::InsufficientSamples {
                        needed: MIN_EMPIRICAL_SAMPLES,
                        have: samples.len(),
                    });
                }
                let mut xs: Vec<f64> = self.atoms().into_iter().map(|(x, _)| x).collect();
                xs.sort_by(f64::total_cmp);
                Ok(interpolated_quantile(&xs, p))
            }
            _ => {
                let mut atoms = self.atoms();
                atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                for &(x, w) in &atoms {
                    acc += w;
                    if acc >= p - PROB_TOLERANCE && w > 0.0 {
                        return Ok(x);
                    }
                }
                Ok(atoms.last().expect("nonempty").0)
            }
        }
    }

    /// Probability mass inside `region` (closed intervals).
    pub fn prob_in(&self, region: &ConfidenceRegion) -> Result<f64> {
        match &region.kind {
            RegionKind::Labels { members } => match self {
                Distribution::Dirac { value } => Ok(if members.contains(value) { 1.0 } else { 0.0 }),
                Distribution::Categorical { values, probs } => Ok(values
                    .iter()
                    .zip(probs)
                    .filter(|(v, _)| members.contains(v))
                    .map(|(_, p)| p)
                    .sum()),
                Distribution::Empirical { samples } => Ok(samples
                    .iter()
                    .filter(|v| members.contains(v))
                    .count() as f64
                    / samples.len() as f64),
                _ if self.is_scalar() => Ok(0.0),
                _ => Err(BvmError::NotScalar(self.name())),
            },
            RegionKind::Interval { lo, hi } => self.interval_mass(*lo, *hi),
            RegionKind::Set { intervals } => intervals
                .iter()
                .map(|&(lo, hi)| self.interval_mass(lo, hi))
                .sum(),
        }
    }

    fn interval_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        if !self.is_scalar() {
            return Err(BvmError::NotScalar(self.name()));
        }
        if hi < lo {
            return Ok(0.0);
        }
        if self.has_closed_form_cdf() {
            Ok((self.cdf(hi)? - self.cdf(lo)?).max(0.0))
        } else {
            Ok(self
                .atoms()
                .iter()
                .filter(|(x, _)| (lo..=hi).contains(x))
                .map(|(_, w)| w)
                .sum::<f64>()
                .min(1.0))
        }
    }

    /// Std for Normal, scale for Student-t, width for Uniform, 1/rate for
    /// the exponential.
    #[cfg(test)]
    pub(crate) fn spread(&self) -> Option<f64> {
        match self {
            Distribution::Normal { std, .. } => Some(*std),
            Distribution::StudentT { scale, .. } => Some(*scale),
            Distribution::Uniform { lo, hi } => Some(hi - lo),
            Distribution::ShiftedExponential { rate, .. } => Some(1.0 / rate),
            _ => None,
        }
    }
}

/// Φ(x) through the complementary error function, accurate in both tails.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Minimum sample count for empirical quantiles and histograms.
pub const MIN_EMPIRICAL_SAMPLES: usize = 1000;

/// Result of [`push_forward`]: the distribution of model output paths.
pub fn push_forward(
    prior: Distribution,
    model: ModelFunction,
    grid: InputGrid,
) -> Result<Distribution> {
    let d = Distribution::PushForward {
        prior: Box::new(prior),
        model,
        grid,
    };
    d.validate()?;
    Ok(d)
}

/// n draws of `dist` under `seed`; draw `i` is a pure function of `(seed, i)`.
pub fn sample(dist: &Distribution, seed: u64, n: usize) -> Vec<Value> {
    dist.sample(seed, n)
}

pub fn density(dist: &Distribution, x: &Value) -> Result<f64> {
    dist.density(x)
}

/// Linear interpolation between order statistics of ascending `sorted`.
pub fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn polish_quantile(cdf: impl Fn(f64) -> f64, pdf: impl Fn(f64) -> f64, p: f64, x0: f64) -> f64 {
    if !x0.is_finite() || p <= 0.0 || p >= 1.0 {
        return x0;
    }
    let mut x = x0;
    for _ in 0..4 {
        let density = pdf(x);
        if density <= 0.0 || !density.is_finite() {
            break;
        }
        let step = (cdf(x) - p) / density;
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

fn finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{x} is not finite")))
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{x} must be positive")))
    }
}

fn check_compatible(reference: &Value, x: &Value) -> Result<()> {
    let ok = match (reference, x) {
        (Value::Scalar(_), Value::Scalar(_)) | (Value::Label(_), Value::Label(_)) => true,
        (Value::Path(a), Value::Path(b)) => a.len() == b.len(),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(BvmError::KindMismatch(format!(
            "cannot evaluate a {} distribution at a {}",
            reference.kind(),
            x.kind()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;

    #[test]
    fn dirac_samples_exactly() {
        let d = Distribution::dirac(2.0);
        assert_eq!(d.sample(99, 3), vec![Value::Scalar(2.0); 3]);
    }

    #[test]
    fn degenerate_categorical() {
        let d = Distribution::categorical(vec![0.0.into(), 1.0.into()], vec![1.0, 0.0]).unwrap();
        assert_eq!(d.sample(3, 5), vec![Value::Scalar(0.0); 5]);
    }

    #[test]
    fn normal_sample_mean() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let xs = d.sample_scalars(7, streams::SAMPLE, 100_000).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        // 3/sqrt(n) ≈ 0.0095
        assert!(mean.abs() < 0.02, "{mean}");
    }

    #[test]
    fn prefix_property() {
        let d = Distribution::student_t(0.0, 3.0, 2.0).unwrap();
        let long = d.sample(11, 50);
        let short = d.sample(11, 20);
        assert_eq!(&long[..20], &short[..]);
    }

    #[test]
    fn density_closed_forms() {
        let n = Distribution::normal(0.0, 1.0).unwrap();
        let d = n.density(&0.0.into()).unwrap();
        assert!((d - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        let u = Distribution::uniform(0.0, 2.0).unwrap();
        assert_eq!(u.density(&3.0.into()).unwrap(), 0.0);
        assert_eq!(u.density(&1.0.into()).unwrap(), 0.5);
    }

    #[test]
    fn student_t_density_matches_normalized_kernel() {
        // oracle: numerically normalize (1 + t²/ν)^(−(ν+1)/2) with t = x/scale
        let (dof, scale) = (10.0_f64, 1.75_f64);
        let kernel = |x: f64| (1.0 + (x / scale).powi(2) / dof).powf(-(dof + 1.0) / 2.0);
        let z = adaptive_simpson(kernel, -2000.0, 2000.0, 1e-12);
        let expected = kernel(0.0) / z;
        let d = Distribution::student_t(0.0, dof, scale).unwrap();
        let got = d.density(&0.0.into()).unwrap();
        assert!((got - expected).abs() < 1e-8, "{got} vs {expected}");
    }

    #[test]
    fn densities_integrate_to_one() {
        let cases = [
            Distribution::normal(1.0, 0.5).unwrap(),
            Distribution::student_t(-1.0, 10.0, 1.75).unwrap(),
            Distribution::uniform(-1.0, 3.0).unwrap(),
            Distribution::shifted_exponential(2.0, 0.5).unwrap(),
        ];
        for d in &cases {
            let (center, spread) = match d {
                Distribution::Uniform { lo, hi } => (0.5 * (lo + hi), 0.5 * (hi - lo)),
                Distribution::ShiftedExponential { shift, rate } => (*shift + 5.0 / rate, 5.0 / rate),
                _ => (d.quantile(0.5).unwrap(), d.spread().unwrap()),
            };
            let (lo, hi) = match d {
                Distribution::StudentT { .. } => (center - 1e4 * spread, center + 1e4 * spread),
                _ => (center - 10.0 * spread, center + 10.0 * spread),
            };
            let f = |x: f64| d.density(&Value::Scalar(x)).unwrap();
            // integrate piecewise so kinks at the support edges are bracketed
            let mut knots = vec![lo, hi];
            match d {
                Distribution::Uniform { lo: a, hi: b } => knots.extend([*a, *b]),
                Distribution::ShiftedExponential { shift, .. } => knots.push(*shift),
                Distribution::StudentT { location, scale, .. } => {
                    knots.extend([location - 20.0 * scale, location + 20.0 * scale])
                }
                _ => {}
            }
            knots.sort_by(f64::total_cmp);
            let total: f64 = knots
                .windows(2)
                .map(|w| adaptive_simpson(f, w[0], w[1], 1e-12))
                .sum();
            assert!((total - 1.0).abs() < 1e-6, "{}: {total}", d.name());
        }
    }

    #[test]
    fn density_unsupported_for_sample_based() {
        let e = Distribution::empirical(vec![1.0.into()]).unwrap();
        assert_eq!(
            e.density(&1.0.into()),
            Err(BvmError::DensityUnsupported("empirical"))
        );
    }

    #[test]
    fn categorical_validation() {
        assert!(Distribution::categorical(vec![0.0.into()], vec![0.9]).is_err());
        assert!(Distribution::categorical(vec![0.0.into(), 1.0.into()], vec![1.2, -0.2]).is_err());
        assert!(Distribution::categorical(vec![], vec![]).is_err());
    }

    #[test]
    fn quantiles_of_standard_families() {
        let n = Distribution::normal(0.0, 1.0).unwrap();
        assert!((n.quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-12);
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!((u.quantile(0.05).unwrap() - 0.05).abs() < 1e-15);
        let t = Distribution::student_t(0.0, 10.0, 1.0).unwrap();
        // t_{0.975, 10} = 2.228138851986522
        assert!((t.quantile(0.975).unwrap() - 2.228138851986522).abs() < 1e-9);
        let e = Distribution::shifted_exponential(2.0, 1.0).unwrap();
        assert!((e.cdf(e.quantile(0.3).unwrap()).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn discrete_quantiles() {
        let c = Distribution::categorical(
            vec![0.0.into(), 10.0.into(), 5.0.into()],
            vec![0.5, 0.45, 0.05],
        )
        .unwrap();
        assert_eq!(c.quantile(0.5).unwrap(), 0.0);
        assert_eq!(c.quantile(0.51).unwrap(), 5.0);
        assert_eq!(c.quantile(0.56).unwrap(), 10.0);
    }

    #[test]
    fn empirical_quantile_needs_samples() {
        let e = Distribution::empirical(vec![1.0.into(); 10]).unwrap();
        assert!(matches!(
            e.quantile(0.5),
            Err(BvmError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn interpolated_quantile_is_linear() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(interpolated_quantile(&xs, 0.5), 1.5);
        assert_eq!(interpolated_quantile(&xs, 1.0), 3.0);
        assert_eq!(interpolated_quantile(&xs, 0.0), 0.0);
    }

    #[test]
    fn push_forward_certain_parameters() {
        let grid = InputGrid::linspace(0.0, 1.0, 3).unwrap();
        let d = push_forward(
            Distribution::dirac(vec![1.0, -0.5, 1.0 / 24.0]),
            ModelFunction::even_polynomial(3),
            grid.clone(),
        )
        .unwrap();
        let expected = ModelFunction::even_polynomial(3)
            .evaluate(&[1.0, -0.5, 1.0 / 24.0], &grid)
            .unwrap();
        for v in d.sample(4, 10) {
            assert_eq!(v, Value::Path(expected.clone()));
        }
        assert_eq!(
            d.density(&Value::Path(expected)),
            Err(BvmError::DensityUnsupported("push_forward"))
        );
    }

    #[test]
    fn push_forward_dimension_mismatch() {
        let grid = InputGrid::linspace(0.0, 1.0, 3).unwrap();
        let err = push_forward(
            Distribution::dirac(vec![1.0, 2.0]),
            ModelFunction::even_polynomial(3),
            grid,
        );
        assert_eq!(
            err,
            Err(BvmError::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        );
    }

    #[test]
    fn push_forward_constant_model_marginal_is_normal() {
        let grid = InputGrid::linspace(0.0, 1.0, 4).unwrap();
        let d = push_forward(
            Distribution::normal(0.0, 1.0).unwrap(),
            ModelFunction::Polynomial { powers: vec![0] },
            grid,
        )
        .unwrap();
        let mut xs: Vec<f64> = d
            .sample(21, 10_000)
            .into_iter()
            .map(|v| v.as_path().unwrap()[2])
            .collect();
        xs.sort_by(f64::total_cmp);
        let normal = Distribution::normal(0.0, 1.0).unwrap();
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = normal.cdf(x).unwrap();
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn push_forward_taylor_prior_at_origin() {
        let grid = InputGrid::linspace(0.0, std::f64::consts::PI, 50).unwrap();
        let prior =
            Distribution::independent_normals(&[1.0, -0.5, 1.0 / 24.0], &[0.1, 0.05, 0.005])
                .unwrap();
        let d = push_forward(prior, ModelFunction::even_polynomial(3), grid).unwrap();
        let n = 10_000;
        let mean = d
            .sample(5, n)
            .iter()
            .map(|v| v.as_path().unwrap()[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn product_density_factorizes() {
        let p = Distribution::product(vec![
            Distribution::normal(0.0, 1.0).unwrap(),
            Distribution::uniform(0.0, 2.0).unwrap(),
        ])
        .unwrap();
        let d = p.density(&Value::Path(vec![0.0, 1.0])).unwrap();
        assert!((d - 0.5 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!(p.density(&Value::Path(vec![0.0])).is_err());
    }

    #[test]
    fn prob_in_interval() {
        let n = Distribution::normal(0.0, 1.0).unwrap();
        let r = ConfidenceRegion::interval(-1.959963984540054, 1.959963984540054, 0.95);
        assert!((n.prob_in(&r).unwrap() - 0.95).abs() < 1e-12);
        let dirac = Distribution::dirac(5.0);
        assert_eq!(dirac.prob_in(&r).unwrap(), 0.0);
    }
}
