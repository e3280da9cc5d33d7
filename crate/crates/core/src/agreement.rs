//! Agreement rules B(ẑ, z) and their kernels Θ(B).
//!
//! Every rule except [`AgreementRule::SoftExponential`] yields a kernel in
//! {0, 1}. Under `and`/`or`, kernels combine as independent events
//! (product, and 1 − Π(1 − kᵢ)), which is plain Boolean logic on {0, 1}.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::comparison::{coverage_fraction, mean_abs_error, ComparisonFnSpec};
use crate::distributions::ConfidenceRegion;
use crate::error::{invalid, BvmError, Result};
use crate::value::Value;

pub const DEFAULT_COVERAGE_LO: f64 = 0.91;
pub const DEFAULT_COVERAGE_HI: f64 = 0.99;

fn default_coverage_lo() -> f64 {
    DEFAULT_COVERAGE_LO
}

fn default_coverage_hi() -> f64 {
    DEFAULT_COVERAGE_HI
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Model,
    Data,
}

/// A tolerance that is either shared by every point or given per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tolerance {
    Scalar(f64),
    PerPoint(Vec<f64>),
}

impl Tolerance {
    fn at(&self, i: usize) -> f64 {
        match self {
            Tolerance::Scalar(e) => *e,
            Tolerance::PerPoint(v) => v[i],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            Tolerance::Scalar(_) => Ok(()),
            Tolerance::PerPoint(v) if v.len() == n => Ok(()),
            Tolerance::PerPoint(v) => Err(BvmError::LengthMismatch {
                left: v.len(),
                right: n,
            }),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Tolerance::Scalar(e) => vec![*e],
            Tolerance::PerPoint(v) => v.clone(),
        }
    }
}

impl From<f64> for Tolerance {
    fn from(e: f64) -> Self {
        Tolerance::Scalar(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgreementRule {
    AlwaysTrue {},
    AlwaysFalse {},
    /// f(ẑ, z) ≤ ε.
    Threshold {
        comparison: ComparisonFnSpec,
        epsilon: f64,
    },
    /// lo ≤ f(ẑ, z) ≤ hi.
    Interval {
        comparison: ComparisonFnSpec,
        lo: f64,
        hi: f64,
    },
    /// ẑ ∈ S(z), where S(z) is z plus its listed synonyms.
    SetMembership {
        #[serde(default)]
        synonyms: BTreeMap<String, Vec<String>>,
    },
    /// The model (or data) value lies in a fixed region.
    InRegion {
        region: ConfidenceRegion,
        side: Side,
    },
    And {
        children: Vec<AgreementRule>,
    },
    Or {
        children: Vec<AgreementRule>,
    },
    Not {
        child: Box<AgreementRule>,
    },
    /// Threshold with ε marginalized over ε′ + Exp(λ):
    /// 1 for f ≤ ε′, exp(−λ(f − ε′)) beyond.
    SoftExponential {
        comparison: ComparisonFnSpec,
        shift: f64,
        rate: f64,
    },
    /// At least a fraction γ of points within ε, and every point within mε.
    GammaEpsilon {
        gamma: f64,
        epsilon: Tolerance,
        m: f64,
    },
    /// Mean absolute error ≤ ⟨ε⟩ and the fraction of data points inside the
    /// model band within [coverage_lo, coverage_hi].
    EpsilonBeta {
        mean_epsilon: f64,
        #[serde(default = "default_coverage_lo")]
        coverage_lo: f64,
        #[serde(default = "default_coverage_hi")]
        coverage_hi: f64,
        band: Vec<ConfidenceRegion>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
    Not,
}

/// Build a compound rule, rejecting empty children and soft kernels under
/// negation.
pub fn compose(op: BoolOp, mut children: Vec<AgreementRule>) -> Result<AgreementRule> {
    let rule = match op {
        BoolOp::And => AgreementRule::And { children },
        BoolOp::Or => AgreementRule::Or { children },
        BoolOp::Not => {
            if children.len() != 1 {
                return Err(BvmError::InvalidRule(format!(
                    "not takes exactly one child, got {}",
                    children.len()
                )));
            }
            AgreementRule::Not {
                child: Box::new(children.remove(0)),
            }
        }
    };
    rule.validate()?;
    Ok(rule)
}

impl AgreementRule {
    pub fn threshold(comparison: ComparisonFnSpec, epsilon: f64) -> Self {
        AgreementRule::Threshold {
            comparison,
            epsilon,
        }
    }

    pub fn soft_exponential(comparison: ComparisonFnSpec, shift: f64, rate: f64) -> Self {
        AgreementRule::SoftExponential {
            comparison,
            shift,
            rate,
        }
    }

    pub fn gamma_epsilon(gamma: f64, epsilon: impl Into<Tolerance>, m: f64) -> Self {
        AgreementRule::GammaEpsilon {
            gamma,
            epsilon: epsilon.into(),
            m,
        }
    }

    pub fn epsilon_beta(mean_epsilon: f64, band: Vec<ConfidenceRegion>) -> Self {
        AgreementRule::EpsilonBeta {
            mean_epsilon,
            coverage_lo: DEFAULT_COVERAGE_LO,
            coverage_hi: DEFAULT_COVERAGE_HI,
            band,
        }
    }

    pub fn and(children: Vec<AgreementRule>) -> Self {
        AgreementRule::And { children }
    }

    pub fn or(children: Vec<AgreementRule>) -> Self {
        AgreementRule::Or { children }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: AgreementRule) -> Self {
        AgreementRule::Not {
            child: Box::new(child),
        }
    }

    /// True when every kernel value is in {0, 1}.
    pub fn is_boolean(&self) -> bool {
        match self {
            AgreementRule::SoftExponential { .. } => false,
            AgreementRule::And { children } | AgreementRule::Or { children } => {
                children.iter().all(|c| c.is_boolean())
            }
            AgreementRule::Not { child } => child.is_boolean(),
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AgreementRule::AlwaysTrue {}
            | AgreementRule::AlwaysFalse {}
            | AgreementRule::SetMembership { .. }
            | AgreementRule::InRegion { .. } => Ok(()),
            AgreementRule::Threshold { epsilon, .. } => {
                if epsilon.is_nan() {
                    return Err(invalid("epsilon", "must be a number"));
                }
                Ok(())
            }
            AgreementRule::Interval { lo, hi, .. } => {
                if !(lo <= hi) {
                    return Err(invalid("interval", format!("lo {lo} exceeds hi {hi}")));
                }
                Ok(())
            }
            AgreementRule::And { children } | AgreementRule::Or { children } => {
                if children.is_empty() {
                    return Err(BvmError::InvalidRule("compound rule without children".into()));
                }
                children.iter().try_for_each(|c| c.validate())
            }
            AgreementRule::Not { child } => {
                if !child.is_boolean() {
                    return Err(BvmError::InvalidRule(
                        "a soft kernel cannot be negated".into(),
                    ));
                }
                child.validate()
            }
            AgreementRule::SoftExponential { shift, rate, .. } => {
                if !(*rate > 0.0) || !rate.is_finite() {
                    return Err(invalid("rate", format!("{rate} must be positive")));
                }
                if !shift.is_finite() {
                    return Err(invalid("shift", "must be finite"));
                }
                Ok(())
            }
            AgreementRule::GammaEpsilon { gamma, epsilon, m } => {
                if !(0.0..=1.0).contains(gamma) {
                    return Err(invalid("gamma", format!("{gamma} outside [0, 1]")));
                }
                if !(*m >= 1.0) {
                    return Err(invalid("m", format!("{m} must be at least 1")));
                }
                if epsilon.values().iter().any(|e| !(*e >= 0.0)) {
                    return Err(invalid("epsilon", "tolerances must be nonnegative"));
                }
                Ok(())
            }
            AgreementRule::EpsilonBeta {
                mean_epsilon,
                coverage_lo,
                coverage_hi,
                band,
            } => {
                if mean_epsilon.is_nan() {
                    return Err(invalid("mean_epsilon", "must be a number"));
                }
                if !(0.0 <= *coverage_lo && coverage_lo <= coverage_hi && *coverage_hi <= 1.0) {
                    return Err(invalid(
                        "coverage",
                        format!("bounds [{coverage_lo}, {coverage_hi}] are not an interval in [0, 1]"),
                    ));
                }
                if band.is_empty() {
                    return Err(BvmError::Empty("confidence band"));
                }
                Ok(())
            }
        }
    }

    /// Θ(B(ẑ, z)) in [0, 1].
    pub fn evaluate_kernel(&self, zhat: &Value, z: &Value) -> Result<f64> {
        match self {
            AgreementRule::AlwaysTrue {} => Ok(1.0),
            AgreementRule::AlwaysFalse {} => Ok(0.0),
            AgreementRule::Threshold {
                comparison,
                epsilon,
            } => Ok(indicator(scalar_statistic(comparison, zhat, z)? <= *epsilon)),
            AgreementRule::Interval { comparison, lo, hi } => {
                let f = scalar_statistic(comparison, zhat, z)?;
                Ok(indicator(*lo <= f && f <= *hi))
            }
            AgreementRule::SetMembership { synonyms } => match (zhat, z) {
                (Value::Label(a), Value::Label(b)) => Ok(indicator(
                    a == b || synonyms.get(b).is_some_and(|s| s.contains(a)),
                )),
                _ => Err(BvmError::KindMismatch(format!(
                    "set membership needs labels, got {} and {}",
                    zhat.kind(),
                    z.kind()
                ))),
            },
            AgreementRule::InRegion { region, side } => {
                let v = match side {
                    Side::Model => zhat,
                    Side::Data => z,
                };
                Ok(indicator(region.contains(v)))
            }
            AgreementRule::And { children } => {
                let mut k = 1.0;
                for c in children {
                    k *= c.evaluate_kernel(zhat, z)?;
                    if k == 0.0 {
                        break;
                    }
                }
                Ok(k)
            }
            AgreementRule::Or { children } => {
                let mut miss = 1.0;
                for c in children {
                    miss *= 1.0 - c.evaluate_kernel(zhat, z)?;
                    if miss == 0.0 {
                        break;
                    }
                }
                Ok(1.0 - miss)
            }
            AgreementRule::Not { child } => Ok(1.0 - child.evaluate_kernel(zhat, z)?),
            AgreementRule::SoftExponential {
                comparison,
                shift,
                rate,
            } => Ok(soft_kernel(scalar_statistic(comparison, zhat, z)?, *shift, *rate)),
            AgreementRule::GammaEpsilon { gamma, epsilon, m } => Ok(indicator(
                gamma_epsilon_eval(*gamma, epsilon, *m, zhat.as_path()?, z.as_path()?)?,
            )),
            AgreementRule::EpsilonBeta {
                mean_epsilon,
                coverage_lo,
                coverage_hi,
                band,
            } => Ok(indicator(epsilon_beta_eval(
                *mean_epsilon,
                *coverage_lo,
                *coverage_hi,
                band,
                zhat.as_path()?,
                z.as_path()?,
            )?)),
        }
    }

    /// Kernel for a rule that depends only on a comparison value f.
    /// The rule's own comparison functions are ignored.
    pub fn evaluate_statistic(&self, f: f64) -> Result<f64> {
        match self {
            AgreementRule::AlwaysTrue {} => Ok(1.0),
            AgreementRule::AlwaysFalse {} => Ok(0.0),
            AgreementRule::Threshold { epsilon, .. } => Ok(indicator(f <= *epsilon)),
            AgreementRule::Interval { lo, hi, .. } => Ok(indicator(*lo <= f && f <= *hi)),
            AgreementRule::SoftExponential { shift, rate, .. } => Ok(soft_kernel(f, *shift, *rate)),
            AgreementRule::And { children } => children
                .iter()
                .try_fold(1.0, |k, c| Ok(k * c.evaluate_statistic(f)?)),
            AgreementRule::Or { children } => children
                .iter()
                .try_fold(1.0, |miss, c| Ok(miss * (1.0 - c.evaluate_statistic(f)?)))
                .map(|miss: f64| 1.0 - miss),
            AgreementRule::Not { child } => Ok(1.0 - child.evaluate_statistic(f)?),
            other => Err(BvmError::InvalidRule(format!(
                "{} is not a rule over a single comparison value",
                other.name()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AgreementRule::AlwaysTrue {} => "always_true",
            AgreementRule::AlwaysFalse {} => "always_false",
            AgreementRule::Threshold { .. } => "threshold",
            AgreementRule::Interval { .. } => "interval",
            AgreementRule::SetMembership { .. } => "set_membership",
            AgreementRule::InRegion { .. } => "in_region",
            AgreementRule::And { .. } => "and",
            AgreementRule::Or { .. } => "or",
            AgreementRule::Not { .. } => "not",
            AgreementRule::SoftExponential { .. } => "soft_exponential",
            AgreementRule::GammaEpsilon { .. } => "gamma_epsilon",
            AgreementRule::EpsilonBeta { .. } => "epsilon_beta",
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn scalar_statistic(f: &ComparisonFnSpec, zhat: &Value, z: &Value) -> Result<f64> {
    match f.apply(zhat, z)? {
        Value::Scalar(x) if x.is_nan() => Err(invalid("comparison", "comparison value is NaN")),
        Value::Scalar(x) => Ok(x),
        other => Err(BvmError::NotScalar(other.kind())),
    }
}

/// Θ(f ≤ ε′) + Θ(f > ε′)·exp(−λ(f − ε′)).
pub fn soft_kernel(f: f64, shift: f64, rate: f64) -> f64 {
    if f <= shift {
        1.0
    } else {
        (-rate * (f - shift)).exp()
    }
}

/// 1 iff at least a fraction γ of points satisfy |ŷᵢ − yᵢ| ≤ εᵢ and every
/// point satisfies |ŷᵢ − yᵢ| ≤ m·εᵢ.
pub fn gamma_epsilon_eval(
    gamma: f64,
    epsilon: &Tolerance,
    m: f64,
    yhat: &[f64],
    y: &[f64],
) -> Result<bool> {
    if yhat.len() != y.len() {
        return Err(BvmError::LengthMismatch {
            left: yhat.len(),
            right: y.len(),
        });
    }
    if yhat.is_empty() {
        return Err(BvmError::Empty("path"));
    }
    epsilon.check(yhat.len())?;
    let mut inside = 0usize;
    for (i, (a, b)) in yhat.iter().zip(y).enumerate() {
        let err = (a - b).abs();
        let eps = epsilon.at(i);
        if err > m * eps {
            return Ok(false);
        }
        if err <= eps {
            inside += 1;
        }
    }
    Ok(inside as f64 / yhat.len() as f64 >= gamma)
}

/// 1 iff mean |ŷ − y| ≤ ⟨ε⟩ and the band coverage of y lies in [lo, hi].
pub fn epsilon_beta_eval(
    mean_epsilon: f64,
    coverage_lo: f64,
    coverage_hi: f64,
    band: &[ConfidenceRegion],
    yhat: &[f64],
    y: &[f64],
) -> Result<bool> {
    let mae = mean_abs_error(yhat, y)?;
    let coverage = coverage_fraction(y, band)?;
    Ok(mae <= mean_epsilon && coverage_lo <= coverage && coverage <= coverage_hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::ComparisonFnSpec as F;

    fn s(x: f64) -> Value {
        Value::Scalar(x)
    }

    #[test]
    fn threshold_and_soft_examples() {
        let r = AgreementRule::threshold(F::AbsDiff, 1.0);
        assert_eq!(r.evaluate_kernel(&s(0.5), &s(0.0)).unwrap(), 1.0);
        assert_eq!(r.evaluate_kernel(&s(1.0), &s(0.0)).unwrap(), 1.0);
        assert_eq!(r.evaluate_kernel(&s(1.5), &s(0.0)).unwrap(), 0.0);

        let (shift, rate) = (0.3, 4.0);
        let soft = AgreementRule::soft_exponential(F::AbsDiff, shift, rate);
        let f = shift + std::f64::consts::LN_2 / rate;
        let k = soft.evaluate_kernel(&s(f), &s(0.0)).unwrap();
        assert!((k - 0.5).abs() < 1e-12);
        assert_eq!(soft.evaluate_kernel(&s(0.1), &s(0.0)).unwrap(), 1.0);
        assert_eq!(soft.evaluate_kernel(&s(f64::INFINITY), &s(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn soft_kernel_is_continuous_at_shift() {
        let (shift, rate) = (0.7, 12.0);
        assert_eq!(soft_kernel(shift, shift, rate), 1.0);
        let right = soft_kernel(shift + 1e-12, shift, rate);
        assert!((1.0 - right).abs() < 1e-9);
    }

    #[test]
    fn set_membership() {
        let mut synonyms = BTreeMap::new();
        synonyms.insert("cat".to_string(), vec!["cat".to_string(), "feline".to_string()]);
        let r = AgreementRule::SetMembership { synonyms };
        let cat = Value::from("cat");
        assert_eq!(r.evaluate_kernel(&Value::from("feline"), &cat).unwrap(), 1.0);
        assert_eq!(r.evaluate_kernel(&Value::from("dog"), &cat).unwrap(), 0.0);
        assert_eq!(r.evaluate_kernel(&Value::from("dog"), &Value::from("dog")).unwrap(), 1.0);
        assert!(r.evaluate_kernel(&s(1.0), &cat).is_err());
    }

    #[test]
    fn gamma_epsilon_examples() {
        let y: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        for (g, e) in [(1.0, 0.0), (0.75, 0.3), (0.9, 1.0)] {
            assert!(gamma_epsilon_eval(g, &Tolerance::Scalar(e), 5.0, &y, &y).unwrap());
        }
        let eps = 0.1;
        let mut yhat = y.clone();
        yhat[10] += 2.0 * eps;
        yhat[20] += 0.5 * eps;
        assert!(gamma_epsilon_eval(0.90, &Tolerance::Scalar(eps), 5.0, &yhat, &y).unwrap());
        yhat[30] += 5.5 * eps;
        for g in [0.0, 0.5, 0.75] {
            assert!(!gamma_epsilon_eval(g, &Tolerance::Scalar(eps), 5.0, &yhat, &y).unwrap());
        }
        assert!(gamma_epsilon_eval(0.9, &Tolerance::Scalar(eps), 5.0, &yhat, &y[..3]).is_err());
    }

    #[test]
    fn per_point_tolerance() {
        let y = [0.0, 0.0];
        let yhat = [0.1, 0.5];
        let eps = Tolerance::PerPoint(vec![0.2, 0.6]);
        assert!(gamma_epsilon_eval(1.0, &eps, 1.0, &yhat, &y).unwrap());
        let tight = Tolerance::PerPoint(vec![0.2, 0.4]);
        assert!(!gamma_epsilon_eval(1.0, &tight, 1.0, &yhat, &y).unwrap());
        assert!(gamma_epsilon_eval(0.5, &tight, 2.0, &yhat, &y).unwrap());
    }

    #[test]
    fn epsilon_beta_examples() {
        let n = 100;
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let zero_band: Vec<_> = y.iter().map(|_| ConfidenceRegion::interval(0.0, 0.0, 0.95)).collect();
        let yhat = vec![0.0; n];
        for e in [0.1, 1.0, 100.0] {
            assert!(!epsilon_beta_eval(e, 0.91, 0.99, &zero_band, &yhat, &y).unwrap());
        }

        let wide = vec![ConfidenceRegion::everything(); n];
        assert!(!epsilon_beta_eval(1.0, 0.91, 0.99, &wide, &y, &y).unwrap());

        let band: Vec<_> = (0..n)
            .map(|i| {
                if i % 20 == 0 {
                    ConfidenceRegion::interval(5.0, 6.0, 0.95)
                } else {
                    ConfidenceRegion::interval(-1.0, 1.0, 0.95)
                }
            })
            .collect();
        assert_eq!(coverage_fraction(&y, &band).unwrap(), 0.95);
        let close: Vec<f64> = y.iter().map(|v| v + 0.01).collect();
        assert!(epsilon_beta_eval(0.05, 0.91, 0.99, &band, &close, &y).unwrap());
    }

    #[test]
    fn compose_examples() {
        let t = AgreementRule::AlwaysTrue {};
        let and = compose(BoolOp::And, vec![t.clone(), t.clone()]).unwrap();
        assert_eq!(and.evaluate_kernel(&s(0.0), &s(0.0)).unwrap(), 1.0);

        let b = AgreementRule::threshold(F::AbsDiff, 0.5);
        let contradiction = AgreementRule::and(vec![b.clone(), AgreementRule::not(b.clone())]);
        for x in [-1.0, 0.0, 0.25, 0.5, 3.0] {
            assert_eq!(contradiction.evaluate_kernel(&s(x), &s(0.0)).unwrap(), 0.0);
        }

        let or = AgreementRule::or(vec![AgreementRule::AlwaysFalse {}, t]);
        assert_eq!(or.evaluate_kernel(&s(9.0), &s(0.0)).unwrap(), 1.0);

        assert!(compose(BoolOp::And, vec![]).is_err());
        assert!(compose(BoolOp::Not, vec![b.clone(), b]).is_err());
        let soft = AgreementRule::soft_exponential(F::AbsDiff, 0.1, 1.0);
        assert!(compose(BoolOp::Not, vec![soft]).is_err());
    }

    #[test]
    fn statistic_rules() {
        let r = AgreementRule::or(vec![
            AgreementRule::threshold(F::IdentityStatistic, -1.0),
            AgreementRule::Interval {
                comparison: F::IdentityStatistic,
                lo: 1.0,
                hi: 2.0,
            },
        ]);
        assert_eq!(r.evaluate_statistic(-3.0).unwrap(), 1.0);
        assert_eq!(r.evaluate_statistic(0.0).unwrap(), 0.0);
        assert_eq!(r.evaluate_statistic(1.5).unwrap(), 1.0);
        assert!(AgreementRule::gamma_epsilon(0.9, 0.1, 5.0)
            .evaluate_statistic(0.0)
            .is_err());
    }

    #[test]
    fn rules_round_trip_through_json() {
        let rule = AgreementRule::and(vec![
            AgreementRule::threshold(F::MeanAbsError, 0.9),
            AgreementRule::not(AgreementRule::InRegion {
                region: ConfidenceRegion::interval(-1.0, 1.0, 0.95),
                side: Side::Data,
            }),
            AgreementRule::gamma_epsilon(0.9, Tolerance::PerPoint(vec![0.1, 0.2]), 5.0),
        ]);
        let text = serde_json::to_string(&rule).unwrap();
        let back: AgreementRule = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rule);
        let eb: AgreementRule = serde_json::from_str(
            r#"{"rule":"epsilon_beta","mean_epsilon":0.9,"band":[{"level":0.95,"kind":"interval","lo":0,"hi":1}]}"#,
        )
        .unwrap();
        match eb {
            AgreementRule::EpsilonBeta {
                coverage_lo,
                coverage_hi,
                ..
            } => assert_eq!((coverage_lo, coverage_hi), (0.91, 0.99)),
            _ => unreachable!(),
        }
        let bad = serde_json::from_str::<AgreementRule>(r#"{"rule":"always_true","x":1}"#);
        assert!(bad.is_err());
    }
}
