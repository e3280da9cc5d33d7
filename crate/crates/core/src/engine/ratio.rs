use serde::{Deserialize, Serialize};

use super::{BvmEstimate, SweepGrid};
use crate::error::{invalid, BvmError, Result};

/// Outcome of dividing two probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Ratio {
    #[serde(rename = "ok")]
    Finite(f64),
    /// 0/0: neither model agrees.
    Indeterminate,
    /// x/0 with x > 0: only the numerator model agrees.
    Infinite,
}

impl Ratio {
    pub fn status(&self) -> &'static str {
        match self {
            Ratio::Finite(_) => "ok",
            Ratio::Indeterminate => "indeterminate",
            Ratio::Infinite => "infinite",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

pub fn ratio_of(num: f64, den: f64) -> Ratio {
    match (num == 0.0, den == 0.0) {
        (true, true) => Ratio::Indeterminate,
        (false, true) => Ratio::Infinite,
        _ => Ratio::Finite(num / den),
    }
}

/// K = P(A | M, D, B) / P(A | M′, D, B).
pub fn bvm_factor(a: &BvmEstimate, b: &BvmEstimate) -> Ratio {
    ratio_of(a.p_hat, b.p_hat)
}

/// R = K · P(M) / P(M′).
pub fn bvm_ratio(k: Ratio, prior: f64, prior_alt: f64) -> Result<Ratio> {
    for (name, p) in [("prior", prior), ("prior_alt", prior_alt)] {
        if !(p > 0.0) || !p.is_finite() {
            return Err(invalid(name, format!("{p} must be positive")));
        }
    }
    Ok(match k {
        Ratio::Finite(v) => Ratio::Finite(v * (prior / prior_alt)),
        other => other,
    })
}

/// Σ grid₁ / Σ grid₂ over identical (γ, ε) axes.
pub fn averaged_boolean_ratio(g1: &SweepGrid, g2: &SweepGrid) -> Result<Ratio> {
    if g1.gammas != g2.gammas || g1.epsilons != g2.epsilons {
        return Err(BvmError::AxisMismatch);
    }
    Ok(ratio_of(g1.total(), g2.total()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_ratio() {
        let p = |x| BvmEstimate::closed_form(x);
        assert_eq!(bvm_factor(&p(0.3), &p(0.3)), Ratio::Finite(1.0));
        assert_eq!(bvm_factor(&p(0.0), &p(0.0)), Ratio::Indeterminate);
        assert_eq!(bvm_factor(&p(1.0), &p(0.0)), Ratio::Infinite);
        assert_eq!(bvm_factor(&p(0.0), &p(0.5)), Ratio::Finite(0.0));

        assert_eq!(bvm_ratio(Ratio::Finite(2.0), 1.0, 1.0).unwrap(), Ratio::Finite(2.0));
        assert_eq!(bvm_ratio(Ratio::Finite(2.0), 1.0, 2.0).unwrap(), Ratio::Finite(1.0));
        assert_eq!(bvm_ratio(Ratio::Indeterminate, 1.0, 2.0).unwrap(), Ratio::Indeterminate);
        assert!(bvm_ratio(Ratio::Finite(2.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn ratio_serializes_with_status() {
        let j = serde_json::to_string(&Ratio::Finite(0.5)).unwrap();
        assert_eq!(j, r#"{"status":"ok","value":0.5}"#);
        let j = serde_json::to_string(&Ratio::Indeterminate).unwrap();
        assert_eq!(j, r#"{"status":"indeterminate"}"#);
    }
}
