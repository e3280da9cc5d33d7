//! (γ, ε) sweeps of the gamma-epsilon rule.
//!
//! Each (ẑ, z) pair contributes one sorted vector of absolute errors. With
//! c_γ the smallest count satisfying c/N ≥ γ, the rule holds at (γ, ε) iff
//! the c_γ-th smallest error is ≤ ε and the largest error is ≤ mε, so a
//! pair's contribution to a whole row is found by one binary search over ε.
//! Cells are accumulated in fixed pair order, which keeps every row and
//! column exactly monotone.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ratio_of, BvmEstimate, KernelSums, Method};
use crate::comparison::abs_errors;
use crate::distributions::{DiscretizeOptions, Distribution, WeightedValues};
use crate::error::{invalid, BvmError, Result};
use crate::rng::streams;

/// Pairs per work unit in a sweep.
const SWEEP_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepEstimator {
    Grid {
        #[serde(flatten)]
        options: DiscretizeOptions,
    },
    Mc {
        samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub m: f64,
    /// Row-major: `cells[i * epsilons.len() + j]` is (γᵢ, εⱼ).
    pub cells: Vec<BvmEstimate>,
}

impl SweepGrid {
    pub fn cell(&self, gamma_index: usize, epsilon_index: usize) -> &BvmEstimate {
        &self.cells[gamma_index * self.epsilons.len() + epsilon_index]
    }

    pub fn p(&self, gamma_index: usize, epsilon_index: usize) -> f64 {
        self.cell(gamma_index, epsilon_index).p_hat
    }

    /// Sum of all cell probabilities.
    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.p_hat).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,epsilon,p_agree\n");
        for (i, g) in self.gammas.iter().enumerate() {
            for (j, e) in self.epsilons.iter().enumerate() {
                let _ = writeln!(out, "{g},{e},{}", self.p(i, j));
            }
        }
        out
    }
}

/// Per-cell ratio grid as CSV; the ratio column is empty unless the status
/// is `ok`.
pub fn ratio_grid_csv(g1: &SweepGrid, g2: &SweepGrid) -> Result<String> {
    if g1.gammas != g2.gammas || g1.epsilons != g2.epsilons {
        return Err(BvmError::AxisMismatch);
    }
    let mut out = String::from("gamma,epsilon,ratio,status\n");
    for (i, g) in g1.gammas.iter().enumerate() {
        for (j, e) in g1.epsilons.iter().enumerate() {
            let r = ratio_of(g1.p(i, j), g2.p(i, j));
            let value = r.value().map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{g},{e},{value},{}", r.status());
        }
    }
    Ok(out)
}

/// Values `(start + k·step) / denom` for k = 0, 1, … while the numerator
/// stays ≤ `stop`. Integer steps keep decimal axes exact.
pub fn scaled_axis(start: i64, stop: i64, step: i64, denom: f64) -> Vec<f64> {
    if step <= 0 || stop < start {
        return Vec::new();
    }
    (0..)
        .map(|k| start + k * step)
        .take_while(|&n| n <= stop)
        .map(|n| n as f64 / denom)
        .collect()
}

fn decimal_places(s: &str) -> usize {
    s.split_once('.').map_or(0, |(_, frac)| frac.len())
}

fn scaled_integer(s: &str, places: usize) -> Option<i64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}{}", "0".repeat(places - frac.len()));
    let v: i64 = digits.parse().ok()?;
    Some(if neg { -v } else { v })
}

/// Parse `"min:max:step"` written as decimals, e.g. `"0.75:1:0.01"`.
pub fn parse_axis(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.trim().split(':').map(str::trim).collect();
    let bad = || invalid("axis", format!("expected min:max:step decimals, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let places = parts.iter().map(|p| decimal_places(p)).max().unwrap_or(0);
    if places > 12 {
        return Err(bad());
    }
    let ints: Vec<i64> = parts
        .iter()
        .map(|p| scaled_integer(p, places).ok_or_else(bad))
        .collect::<Result<_>>()?;
    if ints[2] <= 0 || ints[1] < ints[0] {
        return Err(invalid("axis", format!("{spec:?} must have min ≤ max and step > 0")));
    }
    Ok(scaled_axis(ints[0], ints[1], ints[2], 10f64.powi(places as i32)))
}

fn check_axes(gammas: &[f64], epsilons: &[f64], m: f64) -> Result<()> {
    if gammas.is_empty() || epsilons.is_empty() {
        return Err(BvmError::Empty("sweep axis"));
    }
    if gammas.iter().chain(epsilons).any(|v| !v.is_finite()) {
        return Err(invalid("axis", "axis values must be finite"));
    }
    if epsilons.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("epsilon", "epsilon axis must be strictly increasing"));
    }
    if !(m >= 1.0) {
        return Err(invalid("m", format!("{m} must be at least 1")));
    }
    Ok(())
}

/// Smallest count c with c/n ≥ γ, or `None` when no count qualifies.
fn required_counts(gammas: &[f64], n: usize) -> Vec<Option<usize>> {
    gammas
        .iter()
        .map(|&g| (0..=n).find(|&c| c as f64 / n as f64 >= g))
        .collect()
}

struct SweepPlan<'a> {
    epsilons: &'a [f64],
    counts: Vec<Option<usize>>,
    m: f64,
    n_points: usize,
}

impl SweepPlan<'_> {
    fn add_pair(&self, acc: &mut [f64], weight: f64, mut errs: Vec<f64>) -> Result<()> {
        if errs.len() != self.n_points {
            return Err(BvmError::DimensionMismatch {
                expected: self.n_points,
                actual: errs.len(),
            });
        }
        errs.sort_by(f64::total_cmp);
        let max = errs[errs.len() - 1];
        let ne = self.epsilons.len();
        for (gi, c) in self.counts.iter().enumerate() {
            let Some(c) = *c else { continue };
            let t = if c == 0 { f64::NEG_INFINITY } else { errs[c - 1] };
            let j0 = self
                .epsilons
                .partition_point(|&e| !(t <= e && max <= self.m * e));
            for cell in &mut acc[gi * ne + j0..(gi + 1) * ne] {
                *cell += weight;
            }
        }
        Ok(())
    }

    fn run<F>(&self, n_pairs: usize, cells: usize, pair: F) -> Result<Vec<f64>>
    where
        F: Fn(usize) -> Result<Option<(f64, Vec<f64>)>> + Sync,
    {
        let partials = (0..n_pairs.div_ceil(SWEEP_CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![0.0; cells];
                for p in c * SWEEP_CHUNK..((c + 1) * SWEEP_CHUNK).min(n_pairs) {
                    if let Some((w, errs)) = pair(p)? {
                        self.add_pair(&mut acc, w, errs)?;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = vec![0.0; cells];
        for part in partials {
            for (t, v) in total.iter_mut().zip(part) {
                *t += v;
            }
        }
        Ok(total)
    }
}

fn path_len(v: &crate::value::Value) -> Result<usize> {
    Ok(v.as_path()?.len())
}

/// Sweep over explicit weighted model and data paths.
pub fn sweep_pairs(
    model: &WeightedValues,
    data: &WeightedValues,
    gammas: &[f64],
    epsilons: &[f64],
    m: f64,
) -> Result<SweepGrid> {
    check_axes(gammas, epsilons, m)?;
    if model.is_empty() || data.is_empty() {
        return Err(BvmError::Empty("weighted paths"));
    }
    let n = path_len(&model.values[0])?;
    if n == 0 {
        return Err(BvmError::Empty("path"));
    }
    for (w, name) in [(model, "model"), (data, "data")] {
        let total: f64 = w.weights.iter().sum();
        if (total - 1.0).abs() > crate::distributions::WEIGHT_TOLERANCE {
            return Err(BvmError::WeightNormalization(total));
        }
        if w.values.len() != w.weights.len() {
            return Err(invalid(name, "values and weights differ in length"));
        }
    }
    let plan = SweepPlan {
        epsilons,
        counts: required_counts(gammas, n),
        m,
        n_points: n,
    };
    let nd = data.len();
    let cells = gammas.len() * epsilons.len();
    let sums = plan.run(model.len() * nd, cells, |p| {
        let (i, j) = (p / nd, p % nd);
        let w = model.weights[i] * data.weights[j];
        if w == 0.0 {
            return Ok(None);
        }
        let errs = abs_errors(model.values[i].as_path()?, data.values[j].as_path()?)?;
        Ok(Some((w, errs)))
    })?;
    let pairs = (model.len() * nd) as u64;
    Ok(SweepGrid {
        gammas: gammas.to_vec(),
        epsilons: epsilons.to_vec(),
        m,
        cells: sums
            .into_iter()
            .map(|p| {
                let mut e = BvmEstimate::exact(p, Method::Grid);
                e.n_samples = pairs;
                e
            })
            .collect(),
    })
}

/// Gamma-epsilon BVM at every (γ, ε) for independent model and data path
/// distributions.
pub fn sweep(
    model: &Distribution,
    data: &Distribution,
    gammas: &[f64],
    epsilons: &[f64],
    m: f64,
    estimator: &SweepEstimator,
) -> Result<SweepGrid> {
    match estimator {
        SweepEstimator::Grid { options } => sweep_pairs(
            &model.discretize(options)?,
            &data.discretize(options)?,
            gammas,
            epsilons,
            m,
        ),
        SweepEstimator::Mc { samples, seed } => {
            check_axes(gammas, epsilons, m)?;
            if *samples == 0 {
                return Err(invalid("samples", "need at least one sample"));
            }
            let n = model
                .dim()
                .ok_or_else(|| BvmError::KindMismatch("sweep needs path distributions".into()))?;
            let plan = SweepPlan {
                epsilons,
                counts: required_counts(gammas, n),
                m,
                n_points: n,
            };
            let cells = gammas.len() * epsilons.len();
            let counts = plan.run(*samples, cells, |k| {
                let zhat = model.draw(*seed, streams::MODEL, k as u64);
                let z = data.draw(*seed, streams::DATA, k as u64);
                Ok(Some((1.0, abs_errors(zhat.as_path()?, z.as_path()?)?)))
            })?;
            Ok(SweepGrid {
                gammas: gammas.to_vec(),
                epsilons: epsilons.to_vec(),
                m,
                cells: counts
                    .into_iter()
                    .map(|c| {
                        KernelSums {
                            n: *samples,
                            sum: c,
                            sum_sq: c,
                        }
                        .into_estimate(true, *seed)
                    })
                    .collect(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agreement::{gamma_epsilon_eval, Tolerance};
    use crate::value::Value;

    #[test]
    fn axis_parsing_is_exact() {
        let g = parse_axis("0.75:1:0.01").unwrap();
        assert_eq!(g.len(), 26);
        assert_eq!(g[0], 0.75);
        assert_eq!(g[25], 1.0);
        assert_eq!(g[3], 78.0 / 100.0);
        let e = parse_axis("0:1:0.01").unwrap();
        assert_eq!(e.len(), 101);
        assert_eq!(parse_axis("-1:1:0.5").unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(parse_axis("1:0:0.1").is_err());
        assert!(parse_axis("0:1").is_err());
        assert!(parse_axis("a:1:0.1").is_err());
    }

    #[test]
    fn required_counts_match_fraction_rule() {
        let counts = required_counts(&[0.0, 0.75, 0.98, 1.0, 1.01], 50);
        assert_eq!(counts, vec![Some(0), Some(38), Some(49), Some(50), None]);
    }

    #[test]
    fn matches_direct_evaluation() {
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.2).cos()).collect();
        let paths: Vec<Value> = (0..12)
            .map(|k| {
                Value::Path(
                    y.iter()
                        .enumerate()
                        .map(|(i, v)| v + 0.03 * k as f64 * ((i * 7 + k) % 5) as f64 / 4.0)
                        .collect(),
                )
            })
            .collect();
        let model = WeightedValues::new(paths.clone(), vec![1.0 / 12.0; 12]).unwrap();
        let data = WeightedValues::certain(Value::Path(y.clone()));
        let gammas = parse_axis("0.75:1:0.05").unwrap();
        let eps = parse_axis("0:0.5:0.01").unwrap();
        let grid = sweep_pairs(&model, &data, &gammas, &eps, 5.0).unwrap();
        for (i, &g) in gammas.iter().enumerate() {
            for (j, &e) in eps.iter().enumerate() {
                let direct: f64 = paths
                    .iter()
                    .map(|p| {
                        let ok = gamma_epsilon_eval(g, &Tolerance::Scalar(e), 5.0, p.as_path().unwrap(), &y)
                            .unwrap();
                        if ok {
                            1.0 / 12.0
                        } else {
                            0.0
                        }
                    })
                    .sum();
                assert!((grid.p(i, j) - direct).abs() < 1e-12, "cell ({g}, {e})");
            }
        }
    }

    #[test]
    fn csv_has_contract_header() {
        let model = WeightedValues::certain(Value::Path(vec![0.0, 0.1]));
        let data = WeightedValues::certain(Value::Path(vec![0.0, 0.0]));
        let grid = sweep_pairs(&model, &data, &[0.5, 1.0], &[0.0, 0.1], 5.0).unwrap();
        let csv = grid.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("gamma,epsilon,p_agree"));
        assert_eq!(lines.next(), Some("0.5,0,0"));
        assert_eq!(csv.lines().count(), 5);
        let ratio = ratio_grid_csv(&grid, &grid).unwrap();
        assert!(ratio.starts_with("gamma,epsilon,ratio,status\n0.5,0,,indeterminate\n"));
    }
}
