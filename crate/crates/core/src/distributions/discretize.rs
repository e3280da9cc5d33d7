//! Deterministic discretization of distributions into weighted value lists,
//! used by the grid estimator.

use serde::{Deserialize, Serialize};

use super::Distribution;
use crate::error::{invalid, BvmError, Result};
use crate::value::Value;

/// Refuse to materialize grids larger than this many points.
const MAX_GRID_POINTS: usize = 20_000_000;

/// Weight tolerance accepted by the grid estimator.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeOptions {
    /// Grid values per continuous coordinate.
    pub points_per_dim: usize,
    /// Half-width of the grid in units of the coordinate's spread.
    pub span: f64,
}

impl Default for DiscretizeOptions {
    fn default() -> Self {
        DiscretizeOptions {
            points_per_dim: 20,
            span: 3.0,
        }
    }
}

/// Values with probability weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedValues {
    pub values: Vec<Value>,
    pub weights: Vec<f64>,
}

impl WeightedValues {
    pub fn new(values: Vec<Value>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(BvmError::Empty("weighted values"));
        }
        if values.len() != weights.len() {
            return Err(BvmError::LengthMismatch {
                left: values.len(),
                right: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(invalid("weights", "weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(BvmError::WeightNormalization(total));
        }
        Ok(WeightedValues { values, weights })
    }

    pub fn certain(value: Value) -> Self {
        WeightedValues {
            values: vec![value],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Distribution {
    /// Discretize onto a weighted grid.
    ///
    /// Continuous scalars get `points_per_dim` equally spaced values over
    /// center ± span·spread with density weights renormalized over the grid
    /// (Uniform uses cell midpoints, the exponential spans
    /// [shift, shift + 2·span/rate]). Products take the Cartesian product with
    /// the last component varying fastest; push-forwards map every prior grid
    /// point through the model.
    pub fn discretize(&self, opts: &DiscretizeOptions) -> Result<WeightedValues> {
        if opts.points_per_dim == 0 {
            return Err(invalid("points_per_dim", "need at least one grid value"));
        }
        if !(opts.span > 0.0) {
            return Err(invalid("span", "grid span must be positive"));
        }
        let n = opts.points_per_dim;
        match self {
            Distribution::Dirac { value } => Ok(WeightedValues::certain(value.clone())),
            Distribution::Categorical { values, probs } => {
                WeightedValues::new(values.clone(), probs.clone())
            }
            Distribution::Empirical { samples } => {
                let w = 1.0 / samples.len() as f64;
                WeightedValues::new(samples.clone(), vec![w; samples.len()])
            }
            Distribution::Uniform { lo, hi } => {
                let width = (hi - lo) / n as f64;
                let values = (0..n)
                    .map(|i| Value::Scalar(lo + width * (i as f64 + 0.5)))
                    .collect();
                WeightedValues::new(values, vec![1.0 / n as f64; n])
            }
            Distribution::Normal { mean, std } => {
                self.density_grid(mean - opts.span * std, mean + opts.span * std, n)
            }
            Distribution::StudentT {
                location, scale, ..
            } => self.density_grid(location - opts.span * scale, location + opts.span * scale, n),
            Distribution::ShiftedExponential { rate, shift } => {
                let width = 2.0 * opts.span / rate / n as f64;
                let values: Vec<f64> = (0..n).map(|i| shift + width * (i as f64 + 0.5)).collect();
                self.weighted_by_density(values)
            }
            Distribution::Product { components } => {
                let parts = components
                    .iter()
                    .map(|c| c.discretize(opts))
                    .collect::<Result<Vec<_>>>()?;
                let total = parts
                    .iter()
                    .try_fold(1usize, |acc, p| acc.checked_mul(p.len()))
                    .filter(|&t| t <= MAX_GRID_POINTS)
                    .ok_or_else(|| invalid("points_per_dim", "product grid is too large"))?;
                let mut values = Vec::with_capacity(total);
                let mut weights = Vec::with_capacity(total);
                let mut index = vec![0usize; parts.len()];
                for _ in 0..total {
                    let mut coords = Vec::new();
                    let mut w = 1.0;
                    for (part, &i) in parts.iter().zip(&index) {
                        coords.extend(part.values[i].coordinates()?);
                        w *= part.weights[i];
                    }
                    values.push(Value::Path(coords));
                    weights.push(w);
                    for k in (0..parts.len()).rev() {
                        index[k] += 1;
                        if index[k] < parts[k].len() {
                            break;
                        }
                        index[k] = 0;
                    }
                }
                WeightedValues::new(values, weights)
            }
            Distribution::PushForward { prior, model, grid } => {
                let params = prior.discretize(opts)?;
                let values = params
                    .values
                    .iter()
                    .map(|theta| Ok(Value::Path(model.evaluate(&theta.coordinates()?, grid)?)))
                    .collect::<Result<Vec<_>>>()?;
                WeightedValues::new(values, params.weights)
            }
        }
    }

    fn density_grid(&self, lo: f64, hi: f64, n: usize) -> Result<WeightedValues> {
        let values: Vec<f64> = if n == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + step * i as f64).collect()
        };
        self.weighted_by_density(values)
    }

    fn weighted_by_density(&self, values: Vec<f64>) -> Result<WeightedValues> {
        let raw: Vec<f64> = values
            .iter()
            .map(|&x| self.density(&Value::Scalar(x)))
            .collect::<Result<_>>()?;
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("grid", "grid carries no probability mass"));
        }
        WeightedValues::new(
            values.into_iter().map(Value::Scalar).collect(),
            raw.into_iter().map(|w| w / total).collect(),
        )
    }
}
