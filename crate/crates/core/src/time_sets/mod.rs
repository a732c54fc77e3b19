//! Measurable subsets of `[0, T]` realised as finite unions of half-open
//! intervals, together with right density points and the geometric
//! refinement sequence `ℓ_m = ℓ + q^{m-1}(ℓ1 - ℓ)`.

mod density;

pub use density::{
    build_sequence, find_density_point, find_theta0, right_density, DensityPoint, DensitySequence, DensityThreshold,
    StepCertificate, DEFAULT_SCAN_STEP,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, invariant};
use crate::Result;

/// Half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Interval { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    /// Length of the overlap with `[lo, hi)`.
    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        (self.end.min(hi) - self.start.max(lo)).max(0.0)
    }
}

impl From<(f64, f64)> for Interval {
    fn from((start, end): (f64, f64)) -> Self {
        Interval { start, end }
    }
}

impl From<Interval> for (f64, f64) {
    fn from(i: Interval) -> Self {
        (i.start, i.end)
    }
}

/// A finite union of disjoint half-open intervals in `[0, T]` with positive measure.
///
/// Intervals are kept sorted; touching intervals are merged on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTimeSet", into = "RawTimeSet")]
pub struct TimeSet {
    horizon: f64,
    intervals: Vec<Interval>,
}

#[derive(Serialize, Deserialize)]
struct RawTimeSet {
    horizon: f64,
    intervals: Vec<Interval>,
}

impl TryFrom<RawTimeSet> for TimeSet {
    type Error = crate::Error;

    fn try_from(raw: RawTimeSet) -> Result<Self> {
        TimeSet::new(raw.horizon, raw.intervals)
    }
}

impl From<TimeSet> for RawTimeSet {
    fn from(s: TimeSet) -> Self {
        RawTimeSet {
            horizon: s.horizon,
            intervals: s.intervals,
        }
    }
}

impl TimeSet {
    pub fn new(horizon: f64, intervals: impl IntoIterator<Item = Interval>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(domain(format!("horizon must be positive, got {horizon}")));
        }
        let mut merged: Vec<Interval> = Vec::new();
        for iv in intervals {
            if !(iv.start.is_finite() && iv.end.is_finite()) || iv.start >= iv.end {
                return Err(invariant(format!("degenerate interval [{}, {})", iv.start, iv.end)));
            }
            if iv.start < 0.0 || iv.end > horizon {
                return Err(invariant(format!(
                    "interval [{}, {}) not contained in [0, {horizon}]",
                    iv.start, iv.end
                )));
            }
            match merged.last_mut() {
                Some(last) if iv.start < last.end => {
                    return Err(invariant(format!(
                        "intervals must be sorted and disjoint: [{}, {}) after [{}, {})",
                        iv.start, iv.end, last.start, last.end
                    )));
                }
                Some(last) if iv.start == last.end => last.end = iv.end,
                _ => merged.push(iv),
            }
        }
        if merged.is_empty() {
            return Err(invariant("time set must have positive measure"));
        }
        Ok(TimeSet {
            horizon,
            intervals: merged,
        })
    }

    /// `[0, T)`.
    pub fn full(horizon: f64) -> Result<Self> {
        TimeSet::new(horizon, [Interval::new(0.0, horizon)])
    }

    pub fn from_pairs(horizon: f64, pairs: &[(f64, f64)]) -> Result<Self> {
        TimeSet::new(horizon, pairs.iter().copied().map(Interval::from))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Lebesgue measure, optionally restricted to `window = (lo, hi) ⊆ [0, T]`.
    pub fn measure(&self, window: Option<(f64, f64)>) -> Result<f64> {
        match window {
            None => Ok(self.intervals.iter().map(Interval::len).sum()),
            Some((lo, hi)) => {
                if !(lo >= 0.0 && hi <= self.horizon && lo <= hi) {
                    return Err(domain(format!(
                        "window ({lo}, {hi}) is not a subinterval of [0, {}]",
                        self.horizon
                    )));
                }
                Ok(self.overlap(lo, hi))
            }
        }
    }

    /// `|(lo, hi) ∩ S|` without domain checks; the window is clipped implicitly.
    pub fn overlap(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        // first interval that ends after lo
        let first = self.intervals.partition_point(|iv| iv.end <= lo);
        let mut total = 0.0;
        for iv in &self.intervals[first..] {
            if iv.start >= hi {
                break;
            }
            total += iv.overlap(lo, hi);
        }
        total
    }

    pub fn contains(&self, t: f64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.end <= t);
        self.intervals.get(idx).is_some_and(|iv| iv.start <= t)
    }

    /// The pieces of `S ∩ (lo, hi)`.
    pub fn clip(&self, lo: f64, hi: f64) -> Vec<Interval> {
        self.intervals
            .iter()
            .filter_map(|iv| {
                let c = Interval::new(iv.start.max(lo), iv.end.min(hi));
                (!c.is_empty()).then_some(c)
            })
            .collect()
    }

    /// Sorted interval endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.intervals.iter().flat_map(|iv| [iv.start, iv.end]).collect()
    }

    /// The longest interval; ties resolve to the earliest one.
    pub fn longest_interval(&self) -> Interval {
        let mut best = self.intervals[0];
        for iv in &self.intervals[1..] {
            if iv.len() > best.len() {
                best = *iv;
            }
        }
        best
    }
}

/// Per-interval removal lengths (as fractions of `T`) whose level-`k` total is `ratio^k`.
///
/// Level `k` acts on `2^{k-1}` intervals, so each loses `ratio^k / 2^{k-1}`.
/// With `ratio = 1/4` the limit set has measure `2/3` of the horizon.
pub fn level_total_schedule(depth: usize, ratio: f64) -> Vec<f64> {
    (1..=depth)
        .map(|k| ratio.powi(k as i32) / 2f64.powi(k as i32 - 1))
        .collect()
}

/// Fat (Smith–Volterra–Cantor type) set on `[0, T)`.
///
/// At level `k` the open middle piece of length `schedule[k-1] · T` is removed
/// from each of the `2^{k-1}` current intervals.
pub fn fat_cantor(horizon: f64, depth: usize, schedule: &[f64]) -> Result<TimeSet> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(domain(format!("horizon must be positive, got {horizon}")));
    }
    if depth == 0 {
        return Err(domain("depth must be positive"));
    }
    if schedule.len() < depth {
        return Err(domain(format!(
            "removal schedule has {} entries, depth {depth} needs {depth}",
            schedule.len()
        )));
    }
    let mut removed = 0.0;
    for (k, &f) in schedule[..depth].iter().enumerate() {
        if !(f > 0.0 && f < 1.0) {
            return Err(domain(format!(
                "removal fraction {f} at level {} outside (0, 1)",
                k + 1
            )));
        }
        removed += 2f64.powi(k as i32) * f * horizon;
    }
    if removed >= horizon {
        return Err(domain(format!("schedule removes {removed} >= horizon {horizon}")));
    }

    let mut pieces = vec![Interval::new(0.0, horizon)];
    for (k, &f) in schedule[..depth].iter().enumerate() {
        let cut = f * horizon;
        let mut next = Vec::with_capacity(2 * pieces.len());
        for iv in &pieces {
            if cut >= iv.len() {
                return Err(domain(format!(
                    "level {} removes {cut} from an interval of length {}",
                    k + 1,
                    iv.len()
                )));
            }
            let mid = iv.midpoint();
            next.push(Interval::new(iv.start, mid - 0.5 * cut));
            next.push(Interval::new(mid + 0.5 * cut, iv.end));
        }
        pieces = next;
    }
    TimeSet::new(horizon, pieces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_examples() {
        let full = TimeSet::full(1.0).unwrap();
        assert_eq!(full.measure(None).unwrap(), 1.0);

        let s = TimeSet::from_pairs(1.0, &[(0.0, 0.25), (0.5, 0.75)]).unwrap();
        let m = s.measure(Some((0.6, 1.0))).unwrap();
        assert!((m - 0.15).abs() < 1e-15);

        let c = fat_cantor(1.0, 1, &[0.25]).unwrap();
        assert_eq!(c.measure(None).unwrap(), 0.75);
    }

    #[test]
    fn window_outside_horizon_is_domain_error() {
        let s = TimeSet::full(1.0).unwrap();
        assert!(matches!(s.measure(Some((0.5, 1.5))), Err(crate::Error::Domain(_))));
        assert!(matches!(s.measure(Some((-0.1, 0.5))), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn rejects_overlap_and_empty() {
        assert!(TimeSet::from_pairs(1.0, &[(0.0, 0.5), (0.4, 0.6)]).is_err());
        assert!(TimeSet::from_pairs(1.0, &[]).is_err());
        assert!(TimeSet::from_pairs(1.0, &[(0.2, 0.2)]).is_err());
        assert!(TimeSet::from_pairs(1.0, &[(0.5, 1.2)]).is_err());
    }

    #[test]
    fn touching_intervals_merge() {
        let s = TimeSet::from_pairs(2.0, &[(0.0, 0.5), (0.5, 1.0), (1.5, 2.0)]).unwrap();
        assert_eq!(s.intervals().len(), 2);
        assert_eq!(s.intervals()[0], Interval::new(0.0, 1.0));
    }

    #[test]
    fn fat_cantor_depth_one() {
        let c = fat_cantor(1.0, 1, &[0.25]).unwrap();
        assert_eq!(c.intervals(), &[Interval::new(0.0, 0.375), Interval::new(0.625, 1.0)]);
    }

    #[test]
    fn fat_cantor_depth_two() {
        let c = fat_cantor(1.0, 2, &[0.25, 1.0 / 16.0]).unwrap();
        assert_eq!(c.intervals().len(), 4);
        assert!((c.measure(None).unwrap() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn fat_cantor_level_totals_approach_two_thirds() {
        // independent: 1 - sum_{k=1}^{8} 4^{-k}
        let mut removed = 0.0;
        let mut term = 1.0;
        for _ in 0..8 {
            term /= 4.0;
            removed += term;
        }
        let expected = 1.0 - removed;
        let c = fat_cantor(1.0, 8, &level_total_schedule(8, 0.25)).unwrap();
        assert_eq!(c.intervals().len(), 256);
        let m = c.measure(None).unwrap();
        assert!((m - expected).abs() < 1e-12);
        assert!((m - 0.666687).abs() < 1e-4);
    }

    #[test]
    fn fat_cantor_rejects_full_removal() {
        assert!(fat_cantor(1.0, 1, &[1.0]).is_err());
        assert!(fat_cantor(1.0, 2, &[0.5, 0.3]).is_err());
        assert!(fat_cantor(1.0, 3, &[0.25]).is_err());
    }

    #[test]
    fn overlap_is_additive_over_windows() {
        let c = fat_cantor(1.0, 5, &level_total_schedule(5, 0.25)).unwrap();
        let a = c.overlap(0.0, 0.37);
        let b = c.overlap(0.37, 1.0);
        assert!((a + b - c.measure(None).unwrap()).abs() < 1e-14);
        assert_eq!(c.measure(Some((0.0, 1.0))).unwrap(), c.measure(None).unwrap());
    }

    #[test]
    fn json_shape() {
        let s = TimeSet::from_pairs(1.0, &[(0.0, 0.25), (0.5, 0.75)]).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, r#"{"horizon":1.0,"intervals":[[0.0,0.25],[0.5,0.75]]}"#);
        let back: TimeSet = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<TimeSet>(r#"{"horizon":1.0,"intervals":[]}"#).is_err());
    }
}
