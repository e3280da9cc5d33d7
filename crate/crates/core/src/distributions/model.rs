//! Model functions mapping a parameter vector over an input grid to an
//! output path.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, BvmError, Result};

/// Strictly increasing evaluation points x₁ < … < x_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct InputGrid {
    points: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Points(PointsSpec),
    Linspace(LinspaceSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointsSpec {
    points: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinspaceSpec {
    lo: f64,
    hi: f64,
    n: usize,
}

impl TryFrom<GridSpec> for InputGrid {
    type Error = BvmError;

    fn try_from(spec: GridSpec) -> Result<Self> {
        match spec {
            GridSpec::Points(p) => InputGrid::new(p.points),
            GridSpec::Linspace(l) => InputGrid::linspace(l.lo, l.hi, l.n),
        }
    }
}

impl From<InputGrid> for GridSpec {
    fn from(grid: InputGrid) -> Self {
        GridSpec::Points(PointsSpec {
            points: grid.points,
        })
    }
}

impl InputGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(BvmError::Empty("input grid"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(invalid("points", "grid points must be finite"));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("points", "grid points must be strictly increasing"));
        }
        Ok(InputGrid { points })
    }

    /// `n` evenly spaced points on `[lo, hi]`, both ends included.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        match n {
            0 => Err(BvmError::Empty("input grid")),
            1 => Self::new(vec![lo]),
            _ => {
                let step = (hi - lo) / (n - 1) as f64;
                let mut points: Vec<f64> = (0..n - 1).map(|i| lo + step * i as f64).collect();
                points.push(hi);
                Self::new(points)
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Built-in model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelFunction {
    /// ŷ(x) = Σⱼ θⱼ x^pⱼ.
    Polynomial { powers: Vec<u32> },
    /// ŷ(x; a,b,c,d,f,g) = a + b·x·exp(−c·cos(d·x)) + f·sin(g·x).
    DampedOscillator,
    /// ŷ(x; a,b) = a·cos(b·x).
    Cosine,
    /// ŷᵢ = Σⱼ θⱼ·basis[j][i], with the basis tabulated on the grid.
    Tabulated { basis: Vec<Vec<f64>> },
}

impl ModelFunction {
    /// Even-power Taylor family `a + b x² + c x⁴ + …` with `terms` coefficients.
    pub fn even_polynomial(terms: usize) -> Self {
        ModelFunction::Polynomial {
            powers: (0..terms as u32).map(|k| 2 * k).collect(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            ModelFunction::Polynomial { powers } => powers.len(),
            ModelFunction::DampedOscillator => 6,
            ModelFunction::Cosine => 2,
            ModelFunction::Tabulated { basis } => basis.len(),
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        match self {
            ModelFunction::DampedOscillator => ["a", "b", "c", "d", "f", "g"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            ModelFunction::Cosine => vec!["amplitude".into(), "frequency".into()],
            ModelFunction::Polynomial { powers } => (0..powers.len())
                .map(|i| match i {
                    0..=25 => char::from(b'a' + i as u8).to_string(),
                    _ => format!("theta{i}"),
                })
                .collect(),
            ModelFunction::Tabulated { basis } => {
                (0..basis.len()).map(|i| format!("theta{i}")).collect()
            }
        }
    }

    /// Checks that the model can be evaluated on `grid`.
    pub fn check_grid(&self, grid: &InputGrid) -> Result<()> {
        match self {
            ModelFunction::Tabulated { basis } => {
                if basis.is_empty() {
                    return Err(BvmError::Empty("tabulated basis"));
                }
                for row in basis {
                    if row.len() != grid.len() {
                        return Err(BvmError::LengthMismatch {
                            left: row.len(),
                            right: grid.len(),
                        });
                    }
                }
                Ok(())
            }
            ModelFunction::Polynomial { powers } if powers.is_empty() => {
                Err(BvmError::Empty("polynomial powers"))
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, params: &[f64], grid: &InputGrid) -> Result<Vec<f64>> {
        if params.len() != self.parameter_count() {
            return Err(BvmError::DimensionMismatch {
                expected: self.parameter_count(),
                actual: params.len(),
            });
        }
        self.check_grid(grid)?;
        Ok(self.evaluate_unchecked(params, grid))
    }

    pub(crate) fn evaluate_unchecked(&self, params: &[f64], grid: &InputGrid) -> Vec<f64> {
        let xs = grid.points();
        match self {
            ModelFunction::Polynomial { powers } => xs
                .iter()
                .map(|&x| {
                    powers
                        .iter()
                        .zip(params)
                        .map(|(&p, &theta)| theta * x.powi(p as i32))
                        .sum()
                })
                .collect(),
            ModelFunction::DampedOscillator => {
                let (a, b, c, d, f, g) = (
                    params[0], params[1], params[2], params[3], params[4], params[5],
                );
                xs.iter()
                    .map(|&x| a + b * x * (-c * (d * x).cos()).exp() + f * (g * x).sin())
                    .collect()
            }
            ModelFunction::Cosine => xs.iter().map(|&x| params[0] * (params[1] * x).cos()).collect(),
            ModelFunction::Tabulated { basis } => (0..xs.len())
                .map(|i| basis.iter().zip(params).map(|(row, &t)| t * row[i]).sum())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_both_ends() {
        let g = InputGrid::linspace(0.0, std::f64::consts::PI, 50).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(g.points()[49], std::f64::consts::PI);
    }

    #[test]
    fn grid_must_increase() {
        assert!(InputGrid::new(vec![0.0, 0.0]).is_err());
        assert!(InputGrid::new(vec![]).is_err());
        assert!(InputGrid::linspace(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn grid_serde_forms() {
        let a: InputGrid = serde_json::from_str(r#"{"lo":0,"hi":1,"n":3}"#).unwrap();
        let b: InputGrid = serde_json::from_str(r#"{"points":[0,0.5,1]}"#).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<InputGrid>(r#"{"lo":0,"hi":1,"n":3,"x":1}"#).is_err());
    }

    #[test]
    fn taylor_model_values() {
        let grid = InputGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let m = ModelFunction::even_polynomial(3);
        let y = m.evaluate(&[1.0, -0.5, 1.0 / 24.0], &grid).unwrap();
        assert_eq!(y[0], 1.0);
        assert!((y[1] - (1.0 - 0.5 + 1.0 / 24.0)).abs() < 1e-15);
        assert!((y[2] - (1.0 - 2.0 + 16.0 / 24.0)).abs() < 1e-15);
    }

    #[test]
    fn damped_oscillator_matches_formula() {
        let grid = InputGrid::new(vec![0.3]).unwrap();
        let y = ModelFunction::DampedOscillator
            .evaluate(&[1.0, 1.0, 1.0, 10.0, 1.0, 10.0], &grid)
            .unwrap();
        let x: f64 = 0.3;
        let expected = 1.0 + x * (-(10.0 * x).cos()).exp() + (10.0 * x).sin();
        assert_eq!(y[0], expected);
    }

    #[test]
    fn evaluation_checks_dimensions() {
        let grid = InputGrid::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(
            ModelFunction::Cosine.evaluate(&[1.0], &grid),
            Err(BvmError::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        );
        let tab = ModelFunction::Tabulated {
            basis: vec![vec![1.0, 2.0, 3.0]],
        };
        assert!(tab.evaluate(&[1.0], &grid).is_err());
    }

    #[test]
    fn tabulated_is_linear_combination() {
        let grid = InputGrid::new(vec![0.0, 1.0]).unwrap();
        let tab = ModelFunction::Tabulated {
            basis: vec![vec![1.0, 1.0], vec![0.0, 2.0]],
        };
        assert_eq!(tab.evaluate(&[2.0, 3.0], &grid).unwrap(), vec![2.0, 8.0]);
    }
}
