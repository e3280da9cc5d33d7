//! Values that flow through the engine: draws from distributions and the
//! comparison values that agreement rules are evaluated on.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, BvmError, Result};

/// Tolerance on the total mass of a binned pdf.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A single comparison value: a draw of ẑ or z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(f64),
    Path(Vec<f64>),
    Label(String),
    Binned(BinnedPdf),
    Ecdf(Ecdf),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Path(_) => "path",
            Value::Label(_) => "label",
            Value::Binned(_) => "binned pdf",
            Value::Ecdf(_) => "ecdf",
        }
    }

    pub fn as_scalar(&self) -> Result<f64> {
        match self {
            Value::Scalar(x) => Ok(*x),
            other => Err(BvmError::KindMismatch(format!(
                "expected scalar, got {}",
                other.kind()
            ))),
        }
    }

    pub fn as_path(&self) -> Result<&[f64]> {
        match self {
            Value::Path(p) => Ok(p),
            other => Err(BvmError::KindMismatch(format!(
                "expected path, got {}",
                other.kind()
            ))),
        }
    }

    /// Real coordinates of a numeric value (a scalar is a 1-vector).
    pub fn coordinates(&self) -> Result<Vec<f64>> {
        match self {
            Value::Scalar(x) => Ok(vec![*x]),
            Value::Path(p) => Ok(p.clone()),
            other => Err(BvmError::KindMismatch(format!(
                "expected numeric value, got {}",
                other.kind()
            ))),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Scalar(x)
    }
}

impl From<Vec<f64>> for Value {
    fn from(p: Vec<f64>) -> Self {
        Value::Path(p)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Label(s.to_owned())
    }
}

/// Right-continuous empirical cumulative distribution function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(BvmError::Empty("ecdf samples"));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(invalid("samples", "NaN sample"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// F(x) = #{xᵢ ≤ x} / n.
    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&s| s <= x);
        count as f64 / self.sorted.len() as f64
    }
}

/// A histogram pdf: bin edges and per-bin masses summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinnedPdf {
    edges: Vec<f64>,
    masses: Vec<f64>,
}

impl BinnedPdf {
    pub fn new(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let pdf = BinnedPdf { edges, masses };
        pdf.validate()?;
        Ok(pdf)
    }

    /// Equal-width unit bins `[0,1), [1,2), …` for probability vectors whose
    /// bins carry no geometry (pass/fail, categories).
    pub fn from_probabilities(masses: Vec<f64>) -> Result<Self> {
        let edges = (0..=masses.len()).map(|i| i as f64).collect();
        Self::new(edges, masses)
    }

    /// Histogram of `samples` with `bins` equal-width bins over `[lo, hi]`.
    /// Samples outside the range are clamped into the end bins.
    pub fn from_samples(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(BvmError::Empty("histogram samples"));
        }
        let edges = equal_width_edges(lo, hi, bins)?;
        let mut counts = vec![0usize; bins];
        for &x in samples {
            counts[bin_index(&edges, x)] += 1;
        }
        let n = samples.len() as f64;
        Self::new(edges, counts.into_iter().map(|c| c as f64 / n).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.masses.is_empty() {
            return Err(BvmError::Empty("binned pdf masses"));
        }
        if self.edges.len() != self.masses.len() + 1 {
            return Err(BvmError::LengthMismatch {
                left: self.edges.len(),
                right: self.masses.len() + 1,
            });
        }
        if self.edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("edges", "bin edges must be strictly increasing"));
        }
        if self.masses.iter().any(|&m| !(m >= 0.0)) {
            return Err(invalid("masses", "bin masses must be nonnegative"));
        }
        let total: f64 = self.masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(BvmError::WeightNormalization(total));
        }
        Ok(())
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }
}

pub(crate) fn equal_width_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(invalid("bins", "need at least one bin"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("range", format!("empty histogram range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    Ok(edges)
}

/// Bin holding `x`; the last bin is closed on the right and out-of-range
/// values clamp to the end bins.
pub(crate) fn bin_index(edges: &[f64], x: f64) -> usize {
    let bins = edges.len() - 1;
    let i = edges.partition_point(|&e| e <= x);
    i.saturating_sub(1).min(bins - 1)
}
