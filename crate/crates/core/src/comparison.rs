//! Comparison value functions f(ẑ, z).
//!
//! Divergences are reported in nats. The Hellinger distance uses the
//! convention H² = 1 − Σ √(pᵢ qᵢ), so H ∈ [0, 1].

use serde::{Deserialize, Serialize};

use crate::distributions::ConfidenceRegion;
use crate::error::{BvmError, Result};
use crate::value::{BinnedPdf, Ecdf, Value};

/// Named comparison functions as they appear in scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ComparisonFnSpec {
    /// |ẑ − z| for scalars.
    AbsDiff,
    /// (ẑ − z)² for scalars.
    SqDiff,
    /// Signed ẑ − z for scalars.
    Difference,
    MeanAbsError,
    MaxAbsError,
    /// Path of |ŷᵢ − yᵢ|.
    PerPointAbsError,
    /// |ŷᵢ − yᵢ| at one index.
    PointAbsError { index: usize },
    /// Area between the ECDFs of two sample sets (or two ECDF values).
    AreaMetric,
    /// Σ|pᵢ − qᵢ| over `bins` pooled-range bins (or over given binned pdfs).
    BinnedProbDiff { bins: usize },
    /// KL(z ‖ ẑ): the data pdf against the model pdf.
    #[serde(alias = "kl_divergence")]
    Kl,
    #[serde(alias = "symmetrized_kl")]
    SymKl,
    #[serde(alias = "js_divergence")]
    Js,
    Hellinger,
    /// Passes ẑ through unchanged.
    IdentityStatistic,
}

impl ComparisonFnSpec {
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self,
            ComparisonFnSpec::AbsDiff
                | ComparisonFnSpec::SqDiff
                | ComparisonFnSpec::MeanAbsError
                | ComparisonFnSpec::MaxAbsError
                | ComparisonFnSpec::PerPointAbsError
                | ComparisonFnSpec::PointAbsError { .. }
                | ComparisonFnSpec::AreaMetric
                | ComparisonFnSpec::BinnedProbDiff { .. }
                | ComparisonFnSpec::SymKl
                | ComparisonFnSpec::Js
                | ComparisonFnSpec::Hellinger
        )
    }

    /// Evaluates f(ẑ, z). An infinite divergence is reported as `+∞`.
    pub fn apply(&self, zhat: &Value, z: &Value) -> Result<Value> {
        use ComparisonFnSpec::*;
        let scalar = |x: f64| Ok(Value::Scalar(x));
        match self {
            AbsDiff => scalar((zhat.as_scalar()? - z.as_scalar()?).abs()),
            SqDiff => scalar((zhat.as_scalar()? - z.as_scalar()?).powi(2)),
            Difference => scalar(zhat.as_scalar()? - z.as_scalar()?),
            MeanAbsError => scalar(mean_abs_error(zhat.as_path()?, z.as_path()?)?),
            MaxAbsError => scalar(max_abs_error(zhat.as_path()?, z.as_path()?)?),
            PerPointAbsError => Ok(Value::Path(abs_errors(zhat.as_path()?, z.as_path()?)?)),
            PointAbsError { index } => {
                let (a, b) = (zhat.as_path()?, z.as_path()?);
                check_lengths(a, b)?;
                let i = *index;
                if i >= a.len() {
                    return Err(BvmError::DimensionMismatch {
                        expected: i + 1,
                        actual: a.len(),
                    });
                }
                scalar((a[i] - b[i]).abs())
            }
            AreaMetric => match (zhat, z) {
                (Value::Ecdf(f1), Value::Ecdf(f2)) => scalar(area_metric(f1, f2)),
                (Value::Path(a), Value::Path(b)) => scalar(area_metric(&ecdf(a)?, &ecdf(b)?)),
                _ => Err(kind_error("area_metric", zhat, z)),
            },
            BinnedProbDiff { bins } => {
                let (p, q) = binned_pair(zhat, z, *bins)?;
                scalar(binned_prob_diff(&p, &q)?)
            }
            Kl | SymKl | Js | Hellinger => {
                let kind = match self {
                    Kl => DivergenceKind::Kl,
                    SymKl => DivergenceKind::SymKl,
                    Js => DivergenceKind::Js,
                    _ => DivergenceKind::Hellinger,
                };
                let (model, data) = match (zhat, z) {
                    (Value::Binned(m), Value::Binned(d)) => (m, d),
                    _ => return Err(kind_error("divergence", zhat, z)),
                };
                match divergence(kind, data, model) {
                    Ok(v) => scalar(v),
                    Err(BvmError::InfiniteDivergence) => scalar(f64::INFINITY),
                    Err(e) => Err(e),
                }
            }
            IdentityStatistic => Ok(zhat.clone()),
        }
    }
}

fn kind_error(name: &str, a: &Value, b: &Value) -> BvmError {
    BvmError::KindMismatch(format!("{name} cannot compare {} with {}", a.kind(), b.kind()))
}

fn binned_pair(a: &Value, b: &Value, bins: usize) -> Result<(BinnedPdf, BinnedPdf)> {
    match (a, b) {
        (Value::Binned(p), Value::Binned(q)) => Ok((p.clone(), q.clone())),
        (Value::Path(x), Value::Path(y)) => pooled_histograms(x, y, bins),
        _ => Err(kind_error("binned_prob_diff", a, b)),
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(BvmError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(BvmError::Empty("path"));
    }
    Ok(())
}

pub fn abs_errors(yhat: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_lengths(yhat, y)?;
    Ok(yhat.iter().zip(y).map(|(a, b)| (a - b).abs()).collect())
}

/// (1/N) Σ |yᵢ − ŷᵢ|.
pub fn mean_abs_error(yhat: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(yhat, y)?;
    let total: f64 = yhat.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / yhat.len() as f64)
}

pub fn max_abs_error(yhat: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(yhat, y)?;
    Ok(yhat
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Fraction of points with |ŷᵢ − yᵢ| ≤ ε.
pub fn fraction_within(yhat: &[f64], y: &[f64], epsilon: f64) -> Result<f64> {
    check_lengths(yhat, y)?;
    let inside = yhat
        .iter()
        .zip(y)
        .filter(|(a, b)| (*a - *b).abs() <= epsilon)
        .count();
    Ok(inside as f64 / yhat.len() as f64)
}

/// Fraction of points with |ŷᵢ − yᵢ| ≤ εᵢ, one tolerance per point.
pub fn fraction_within_each(yhat: &[f64], y: &[f64], epsilon: &[f64]) -> Result<f64> {
    check_lengths(yhat, y)?;
    check_lengths(yhat, epsilon)?;
    let inside = yhat
        .iter()
        .zip(y)
        .zip(epsilon)
        .filter(|((a, b), e)| (*a - *b).abs() <= **e)
        .count();
    Ok(inside as f64 / yhat.len() as f64)
}

/// Fraction of data points inside the model's per-point confidence regions.
pub fn coverage_fraction(y: &[f64], band: &[ConfidenceRegion]) -> Result<f64> {
    if y.len() != band.len() {
        return Err(BvmError::LengthMismatch {
            left: y.len(),
            right: band.len(),
        });
    }
    if y.is_empty() {
        return Err(BvmError::Empty("path"));
    }
    let inside = y
        .iter()
        .zip(band)
        .filter(|(yi, r)| r.contains_scalar(**yi))
        .count();
    Ok(inside as f64 / y.len() as f64)
}

pub fn ecdf(samples: &[f64]) -> Result<Ecdf> {
    Ecdf::new(samples)
}

/// ∫ |F₁(x) − F₂(x)| dx, integrated exactly over the merged breakpoints.
pub fn area_metric(f1: &Ecdf, f2: &Ecdf) -> f64 {
    let (a, b) = (f1.sorted(), f2.sorted());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut area = 0.0;
    let mut prev: Option<f64> = None;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            let gap = (i as f64 / na - j as f64 / nb).abs();
            area += gap * (x - p);
        }
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        prev = Some(x);
    }
    area
}

/// Histograms of two sample sets on shared equal-width bins spanning the
/// pooled range widened by 1% (±0.5 around a degenerate range).
pub fn pooled_histograms(a: &[f64], b: &[f64], bins: usize) -> Result<(BinnedPdf, BinnedPdf)> {
    if a.is_empty() || b.is_empty() {
        return Err(BvmError::Empty("histogram samples"));
    }
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (lo, hi) = if hi > lo {
        let pad = 0.005 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    Ok((
        BinnedPdf::from_samples(a, lo, hi, bins)?,
        BinnedPdf::from_samples(b, lo, hi, bins)?,
    ))
}

fn check_same_bins(p: &BinnedPdf, q: &BinnedPdf) -> Result<()> {
    if p.edges() != q.edges() {
        return Err(BvmError::BinMismatch);
    }
    Ok(())
}

/// Σᵢ |pᵢ − qᵢ|, in [0, 2].
pub fn binned_prob_diff(p: &BinnedPdf, q: &BinnedPdf) -> Result<f64> {
    check_same_bins(p, q)?;
    Ok(p.masses()
        .iter()
        .zip(q.masses())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Kl,
    SymKl,
    Js,
    Hellinger,
}

fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(BvmError::InfiniteDivergence);
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total.max(0.0))
}

/// Divergence of `p` from `q` in nats. KL and symmetrized KL signal
/// [`BvmError::InfiniteDivergence`] when p has mass where q has none.
pub fn divergence(kind: DivergenceKind, p: &BinnedPdf, q: &BinnedPdf) -> Result<f64> {
    check_same_bins(p, q)?;
    let (p, q) = (p.masses(), q.masses());
    match kind {
        DivergenceKind::Kl => kl(p, q),
        DivergenceKind::SymKl => Ok(kl(p, q)? + kl(q, p)?),
        DivergenceKind::Js => {
            let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
            let js = 0.5 * kl(p, &m)? + 0.5 * kl(q, &m)?;
            Ok(js.min(std::f64::consts::LN_2))
        }
        DivergenceKind::Hellinger => {
            // ½Σ(√p − √q)², equal to 1 − Σ√(pq) for normalized inputs but
            // exactly zero when p = q
            let h2: f64 = p
                .iter()
                .zip(q)
                .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
                .sum::<f64>()
                * 0.5;
            Ok(h2.min(1.0).sqrt())
        }
    }
}

impl DivergenceKind {
    pub fn spec(self) -> ComparisonFnSpec {
        match self {
            DivergenceKind::Kl => ComparisonFnSpec::Kl,
            DivergenceKind::SymKl => ComparisonFnSpec::SymKl,
            DivergenceKind::Js => ComparisonFnSpec::Js,
            DivergenceKind::Hellinger => ComparisonFnSpec::Hellinger,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pdf(m: &[f64]) -> BinnedPdf {
        BinnedPdf::from_probabilities(m.to_vec()).unwrap()
    }

    #[test]
    fn mean_abs_error_cases() {
        assert_eq!(mean_abs_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mean_abs_error(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 2.0);
        let y = [0.3, -1.2, 4.0];
        let shifted: Vec<f64> = y.iter().map(|v| v + 0.25).collect();
        assert!((mean_abs_error(&shifted, &y).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(
            mean_abs_error(&[0.0], &[0.0, 1.0]),
            Err(BvmError::LengthMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn fraction_within_cases() {
        let y = vec![0.0; 50];
        assert_eq!(fraction_within(&y, &y, 0.0).unwrap(), 1.0);
        let eps = 0.1;
        let mut yhat = vec![0.05; 50];
        yhat[7] = 2.0 * eps;
        assert_eq!(fraction_within(&yhat, &y, eps).unwrap(), 0.98);
        assert_eq!(fraction_within(&vec![0.2; 50], &y, eps).unwrap(), 0.0);
    }

    #[test]
    fn max_abs_error_cases() {
        assert_eq!(max_abs_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(max_abs_error(&[0.0, 7.0, 0.0], &[0.0; 3]).unwrap(), 7.0);
        assert_eq!(max_abs_error(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn coverage_cases() {
        let band = vec![ConfidenceRegion::interval(-1.0, 1.0, 0.95); 4];
        assert_eq!(coverage_fraction(&[0.0, 0.5, -0.5, 1.0], &band).unwrap(), 1.0);
        assert_eq!(coverage_fraction(&[0.0, 0.5, 3.0, -2.0], &band).unwrap(), 0.5);
        let zero = vec![ConfidenceRegion::interval(0.0, 0.0, 0.95); 3];
        assert_eq!(coverage_fraction(&[0.1, -0.2, 0.05], &zero).unwrap(), 0.0);
        assert!(coverage_fraction(&[0.0], &band).is_err());
    }

    #[test]
    fn area_metric_cases() {
        let f = ecdf(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(area_metric(&f, &f), 0.0);
        let a = ecdf(&[0.0]).unwrap();
        let b = ecdf(&[1.0]).unwrap();
        assert_eq!(area_metric(&a, &b), 1.0);
        // unequal sizes: F1 steps at 0 and 2, F2 at 1; |F1-F2| = 1/2 on [0,2)
        let c = ecdf(&[0.0, 2.0]).unwrap();
        assert!((area_metric(&c, &b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binned_prob_diff_cases() {
        assert_eq!(binned_prob_diff(&pdf(&[0.5, 0.5]), &pdf(&[0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(binned_prob_diff(&pdf(&[1.0, 0.0]), &pdf(&[0.0, 1.0])).unwrap(), 2.0);
        assert_eq!(binned_prob_diff(&pdf(&[0.5, 0.5]), &pdf(&[0.25, 0.75])).unwrap(), 0.5);
        let other = BinnedPdf::new(vec![0.0, 0.5, 2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(
            binned_prob_diff(&pdf(&[0.5, 0.5]), &other),
            Err(BvmError::BinMismatch)
        );
    }

    #[test]
    fn divergence_hand_values() {
        let p = pdf(&[0.5, 0.5]);
        let q = pdf(&[0.25, 0.75]);
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((divergence(DivergenceKind::Kl, &p, &q).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.14384).abs() < 1e-5);
        for kind in [
            DivergenceKind::Kl,
            DivergenceKind::SymKl,
            DivergenceKind::Js,
            DivergenceKind::Hellinger,
        ] {
            assert_eq!(divergence(kind, &p, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn disjoint_supports() {
        let p = pdf(&[1.0, 0.0]);
        let q = pdf(&[0.0, 1.0]);
        assert_eq!(
            divergence(DivergenceKind::Kl, &p, &q),
            Err(BvmError::InfiniteDivergence)
        );
        let js = divergence(DivergenceKind::Js, &p, &q).unwrap();
        assert!((js - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(divergence(DivergenceKind::Hellinger, &p, &q).unwrap(), 1.0);
        let v = ComparisonFnSpec::Kl
            .apply(&Value::Binned(q), &Value::Binned(p))
            .unwrap();
        assert_eq!(v, Value::Scalar(f64::INFINITY));
    }

    #[test]
    fn spec_names_serialize_verbatim() {
        assert_eq!(
            serde_json::to_string(&ComparisonFnSpec::MeanAbsError).unwrap(),
            "\"mean_abs_error\""
        );
        assert_eq!(serde_json::to_string(&ComparisonFnSpec::Kl).unwrap(), "\"kl\"");
        let f: ComparisonFnSpec = serde_json::from_str(r#"{"binned_prob_diff":{"bins":8}}"#).unwrap();
        assert_eq!(f, ComparisonFnSpec::BinnedProbDiff { bins: 8 });
    }

    #[test]
    fn apply_checks_kinds() {
        let r = ComparisonFnSpec::AbsDiff.apply(&Value::Path(vec![1.0]), &Value::Scalar(1.0));
        assert!(matches!(r, Err(BvmError::KindMismatch(_))));
        let v = ComparisonFnSpec::IdentityStatistic
            .apply(&Value::Scalar(3.0), &Value::Scalar(-1.0))
            .unwrap();
        assert_eq!(v, Value::Scalar(3.0));
    }

    #[test]
    fn pooled_histograms_share_edges() {
        let (p, q) = pooled_histograms(&[0.0, 1.0], &[2.0, 3.0], 4).unwrap();
        assert_eq!(p.edges(), q.edges());
        assert_eq!(binned_prob_diff(&p, &q).unwrap(), 2.0);
        let (p, _) = pooled_histograms(&[1.0], &[1.0], 3).unwrap();
        assert_eq!(p.masses(), &[0.0, 1.0, 0.0]);
    }
}
