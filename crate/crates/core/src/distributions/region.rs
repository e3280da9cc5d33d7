//! Confidence intervals, highest-density confidence sets and per-point
//! confidence bands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{interpolated_quantile, Distribution, MIN_EMPIRICAL_SAMPLES, PROB_TOLERANCE};
use crate::error::{invalid, BvmError, Result};
use crate::rng::streams;
use crate::value::{bin_index, equal_width_edges, Value};

/// Default histogram resolution for confidence sets.
pub const DEFAULT_SET_BINS: usize = 512;

/// Tail probability left outside the histogram window of a confidence set.
const WINDOW_TAIL: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub level: f64,
    #[serde(flatten)]
    pub kind: RegionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    /// Closed interval [lo, hi].
    Interval { lo: f64, hi: f64 },
    /// Union of disjoint closed intervals, ascending.
    Set { intervals: Vec<(f64, f64)> },
    /// Finite set of atoms (numeric or label).
    Labels { members: Vec<Value> },
}

impl ConfidenceRegion {
    pub fn interval(lo: f64, hi: f64, level: f64) -> Self {
        ConfidenceRegion {
            level,
            kind: RegionKind::Interval { lo, hi },
        }
    }

    /// A region containing every real number.
    pub fn everything() -> Self {
        Self::interval(f64::NEG_INFINITY, f64::INFINITY, 1.0)
    }

    pub fn contains_scalar(&self, x: f64) -> bool {
        match &self.kind {
            RegionKind::Interval { lo, hi } => *lo <= x && x <= *hi,
            RegionKind::Set { intervals } => intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi),
            RegionKind::Labels { members } => members.iter().any(|m| *m == Value::Scalar(x)),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (v, &self.kind) {
            (Value::Scalar(x), _) => self.contains_scalar(*x),
            (_, RegionKind::Labels { members }) => members.contains(v),
            _ => false,
        }
    }

    /// Width of an interval region (sum of widths for a set).
    pub fn width(&self) -> f64 {
        match &self.kind {
            RegionKind::Interval { lo, hi } => hi - lo,
            RegionKind::Set { intervals } => intervals.iter().map(|(lo, hi)| hi - lo).sum(),
            RegionKind::Labels { .. } => 0.0,
        }
    }

    /// `(lo, hi)` if the region is a single interval.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match &self.kind {
            RegionKind::Interval { lo, hi } => Some((*lo, *hi)),
            RegionKind::Set { intervals } if intervals.len() == 1 => Some(intervals[0]),
            _ => None,
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level <= 1.0 {
        Ok(())
    } else {
        Err(invalid("level", format!("confidence level {level} outside (0, 1]")))
    }
}

/// Central interval [Q(α/2), Q(1 − α/2)] with α = 1 − level.
pub fn confidence_interval(dist: &Distribution, level: f64) -> Result<ConfidenceRegion> {
    check_level(level)?;
    if !dist.is_scalar() {
        return Err(BvmError::NotScalar(dist.name()));
    }
    let alpha = 1.0 - level;
    let lo = dist.quantile(alpha / 2.0)?;
    let hi = dist.quantile(1.0 - alpha / 2.0)?;
    Ok(ConfidenceRegion::interval(lo, hi, level))
}

/// The histogram behind a continuous confidence set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSetHistogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub selected: Vec<bool>,
}

impl ConfidenceSetHistogram {
    pub fn selected_count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    fn to_region(&self, level: f64) -> ConfidenceRegion {
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        let mut open: Option<usize> = None;
        for i in 0..=self.selected.len() {
            let on = self.selected.get(i).copied().unwrap_or(false);
            match (on, open) {
                (true, None) => open = Some(i),
                (false, Some(start)) => {
                    intervals.push((self.edges[start], self.edges[i]));
                    open = None;
                }
                _ => {}
            }
        }
        ConfidenceRegion {
            level,
            kind: RegionKind::Set { intervals },
        }
    }
}

/// Greedy highest-probability selection: bins in descending mass order
/// until the cumulative mass reaches `level`. Ties go to the lower index.
fn greedy_select(masses: &[f64], level: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
    let mut selected = vec![false; masses.len()];
    let mut acc = 0.0;
    for i in order {
        if acc >= level - PROB_TOLERANCE {
            break;
        }
        selected[i] = true;
        acc += masses[i];
    }
    selected
}

/// Histogram and greedy selection for a continuous or empirical scalar
/// distribution.
pub fn confidence_set_histogram(
    dist: &Distribution,
    level: f64,
    bins: usize,
) -> Result<ConfidenceSetHistogram> {
    check_level(level)?;
    if !dist.is_scalar() {
        return Err(BvmError::NotScalar(dist.name()));
    }
    let tail = WINDOW_TAIL.min((1.0 - level) / 4.0);
    let (edges, masses) = if dist.has_closed_form_cdf() {
        let (lo, hi) = if tail > 0.0 {
            (dist.quantile(tail)?, dist.quantile(1.0 - tail)?)
        } else {
            (dist.quantile(0.0)?, dist.quantile(1.0)?)
        };
        if !lo.is_finite() || !hi.is_finite() {
            return Err(invalid("level", "a level-1 set of an unbounded distribution has no histogram"));
        }
        let edges = equal_width_edges(lo, hi, bins)?;
        let masses = edges
            .windows(2)
            .map(|w| Ok((dist.cdf(w[1])? - dist.cdf(w[0])?).max(0.0)))
            .collect::<Result<Vec<f64>>>()?;
        (edges, masses)
    } else if let Distribution::Empirical { samples } = dist {
        if samples.len() < MIN_EMPIRICAL_SAMPLES {
            return Err(BvmError::InsufficientSamples {
                needed: MIN_EMPIRICAL_SAMPLES,
                have: samples.len(),
            });
        }
        let mut xs: Vec<f64> = samples.iter().map(|v| v.as_scalar()).collect::<Result<_>>()?;
        xs.sort_by(f64::total_cmp);
        let lo = interpolated_quantile(&xs, WINDOW_TAIL);
        let hi = interpolated_quantile(&xs, 1.0 - WINDOW_TAIL);
        let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let edges = equal_width_edges(lo, hi, bins)?;
        let mut counts = vec![0usize; bins];
        for &x in xs.iter().filter(|&&x| lo <= x && x <= hi) {
            counts[bin_index(&edges, x)] += 1;
        }
        let n = xs.len() as f64;
        (edges, counts.into_iter().map(|c| c as f64 / n).collect())
    } else {
        return Err(invalid("dist", format!("{} has no histogram form", dist.name())));
    };
    let selected = greedy_select(&masses, level);
    Ok(ConfidenceSetHistogram {
        edges,
        masses,
        selected,
    })
}

/// Smallest set of values holding probability `level`: greedy over atoms
/// for discrete distributions, over `bins` equal-width histogram bins
/// otherwise. The result is a union of disjoint intervals (or atoms).
pub fn confidence_set(dist: &Distribution, level: f64, bins: usize) -> Result<ConfidenceRegion> {
    check_level(level)?;
    match dist {
        Distribution::Dirac { value } => Ok(ConfidenceRegion {
            level,
            kind: RegionKind::Labels {
                members: vec![value.clone()],
            },
        }),
        Distribution::Categorical { values, probs } => {
            let mut atoms: Vec<(Value, f64)> = Vec::new();
            for (v, &p) in values.iter().zip(probs) {
                match atoms.iter_mut().find(|(a, _)| a == v) {
                    Some((_, mass)) => *mass += p,
                    None => atoms.push((v.clone(), p)),
                }
            }
            let masses: Vec<f64> = atoms.iter().map(|(_, p)| *p).collect();
            let selected = greedy_select(&masses, level);
            let members = atoms
                .into_iter()
                .zip(selected)
                .filter(|(_, s)| *s)
                .map(|((v, _), _)| v)
                .collect();
            Ok(ConfidenceRegion {
                level,
                kind: RegionKind::Labels { members },
            })
        }
        _ if level == 1.0 && dist.has_closed_form_cdf() => Ok(ConfidenceRegion {
            level,
            kind: RegionKind::Set {
                intervals: vec![(dist.quantile(0.0)?, dist.quantile(1.0)?)],
            },
        }),
        _ => Ok(confidence_set_histogram(dist, level, bins)?.to_region(level)),
    }
}

/// Per-coordinate central intervals of a path distribution, estimated from
/// `n` draws (at least [`MIN_EMPIRICAL_SAMPLES`]).
pub fn path_confidence_band(
    dist: &Distribution,
    level: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<ConfidenceRegion>> {
    check_level(level)?;
    if n < MIN_EMPIRICAL_SAMPLES {
        return Err(BvmError::InsufficientSamples {
            needed: MIN_EMPIRICAL_SAMPLES,
            have: n,
        });
    }
    let dim = dist
        .dim()
        .ok_or_else(|| invalid("dist", "band needs a numeric path distribution"))?;
    let draws: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| dist.draw(seed, streams::BAND, i).coordinates())
        .collect::<Result<_>>()?;
    let alpha = 1.0 - level;
    Ok((0..dim)
        .into_par_iter()
        .map(|j| {
            let mut column: Vec<f64> = draws.iter().map(|d| d[j]).collect();
            column.sort_by(f64::total_cmp);
            ConfidenceRegion::interval(
                interpolated_quantile(&column, alpha / 2.0),
                interpolated_quantile(&column, 1.0 - alpha / 2.0),
                level,
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{push_forward, InputGrid, ModelFunction};

    #[test]
    fn standard_normal_interval() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let r = confidence_interval(&d, 0.95).unwrap();
        let (lo, hi) = r.bounds().unwrap();
        assert!((lo + 1.95996).abs() < 1e-5 && (hi - 1.95996).abs() < 1e-5);
    }

    #[test]
    fn dirac_interval_has_zero_width() {
        let r = confidence_interval(&Distribution::dirac(5.0), 0.95).unwrap();
        assert_eq!(r.bounds(), Some((5.0, 5.0)));
        assert_eq!(r.width(), 0.0);
    }

    #[test]
    fn uniform_interval() {
        let r = confidence_interval(&Distribution::uniform(0.0, 1.0).unwrap(), 0.9).unwrap();
        let (lo, hi) = r.bounds().unwrap();
        assert!((lo - 0.05).abs() < 1e-12 && (hi - 0.95).abs() < 1e-12);
    }

    #[test]
    fn interval_rejects_paths_and_bad_levels() {
        let p = Distribution::dirac(vec![1.0, 2.0]);
        assert!(matches!(confidence_interval(&p, 0.9), Err(BvmError::NotScalar(_))));
        let n = Distribution::normal(0.0, 1.0).unwrap();
        assert!(confidence_interval(&n, 0.0).is_err());
        assert!(confidence_interval(&n, 1.5).is_err());
    }

    #[test]
    fn categorical_set_is_greedy() {
        let d = Distribution::categorical(
            vec![0.0.into(), 10.0.into(), 5.0.into()],
            vec![0.5, 0.45, 0.05],
        )
        .unwrap();
        let r = confidence_set(&d, 0.95, DEFAULT_SET_BINS).unwrap();
        assert_eq!(
            r.kind,
            RegionKind::Labels {
                members: vec![0.0.into(), 10.0.into()]
            }
        );
        assert!(r.contains(&10.0.into()) && !r.contains(&5.0.into()));
    }

    #[test]
    fn certain_categorical_set() {
        let d = Distribution::categorical(vec![0.0.into()], vec![1.0]).unwrap();
        for level in [0.1, 0.5, 0.99] {
            let r = confidence_set(&d, level, 16).unwrap();
            assert_eq!(r.kind, RegionKind::Labels { members: vec![0.0.into()] });
        }
    }

    #[test]
    fn unimodal_set_matches_interval() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let h = confidence_set_histogram(&d, 0.95, 512).unwrap();
        let width = h.edges[1] - h.edges[0];
        let set = confidence_set(&d, 0.95, 512).unwrap();
        let (slo, shi) = set.bounds().expect("single interval");
        let (lo, hi) = confidence_interval(&d, 0.95).unwrap().bounds().unwrap();
        assert!((slo - lo).abs() <= width && (shi - hi).abs() <= width);
        assert!(d.prob_in(&set).unwrap() >= 0.95 - 1e-12);
    }

    #[test]
    fn bimodal_set_splits() {
        let mut samples = Vec::new();
        let left = Distribution::normal(-5.0, 0.5).unwrap();
        let right = Distribution::normal(5.0, 0.5).unwrap();
        samples.extend(left.sample(1, 50_000));
        samples.extend(right.sample(2, 50_000));
        let d = Distribution::empirical(samples).unwrap();
        let r = confidence_set(&d, 0.9, 64).unwrap();
        match &r.kind {
            RegionKind::Set { intervals } => assert_eq!(intervals.len(), 2),
            k => panic!("{k:?}"),
        }
        assert!(!r.contains_scalar(0.0));
    }

    #[test]
    fn empirical_set_needs_samples() {
        let d = Distribution::empirical(vec![0.0.into(); 10]).unwrap();
        assert!(matches!(
            confidence_set(&d, 0.9, 64),
            Err(BvmError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn hdr_is_no_larger_than_any_central_window() {
        for d in [
            Distribution::normal(0.0, 2.0).unwrap(),
            Distribution::student_t(1.0, 3.0, 1.0).unwrap(),
            Distribution::shifted_exponential(1.5, 0.0).unwrap(),
        ] {
            let h = confidence_set_histogram(&d, 0.9, 200).unwrap();
            // smallest contiguous window reaching the level
            let n = h.masses.len();
            let mut best = n;
            for start in 0..n {
                let mut acc = 0.0;
                for end in start..n {
                    acc += h.masses[end];
                    if acc >= 0.9 - PROB_TOLERANCE {
                        best = best.min(end - start + 1);
                        break;
                    }
                }
            }
            assert!(h.selected_count() <= best, "{} > {best}", h.selected_count());
        }
    }

    #[test]
    fn band_of_deterministic_path_has_zero_width() {
        let grid = InputGrid::linspace(0.0, 1.0, 5).unwrap();
        let d = push_forward(
            Distribution::dirac(vec![1.0, 2.0]),
            ModelFunction::Cosine,
            grid,
        )
        .unwrap();
        let band = path_confidence_band(&d, 0.95, 1000, 3).unwrap();
        assert_eq!(band.len(), 5);
        assert!(band.iter().all(|r| r.width() == 0.0));
    }
}
