use serde::{Deserialize, Serialize};

use super::TimeSet;
use crate::error::{domain, invariant, Error};
use crate::{holds, Result, SetMode};

/// Default θ-scan step as a fraction of the horizon.
pub const DEFAULT_SCAN_STEP: f64 = 1e-4;

/// `|(ℓ, ℓ+θ) ∩ S| / θ`.
pub fn right_density(set: &TimeSet, ell: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(domain(format!("theta must be positive, got {theta}")));
    }
    if !(ell >= 0.0 && ell < set.horizon()) {
        return Err(domain(format!("ell = {ell} outside [0, {})", set.horizon())));
    }
    if ell + theta > set.horizon() {
        return Err(domain(format!(
            "theta = {theta} exceeds T - ell = {}",
            set.horizon() - ell
        )));
    }
    Ok(set.overlap(ell, ell + theta) / theta)
}

/// The proportion constant `κ(q)` in `|(ℓ,ℓ+θ) \ S| < κ(q) |(ℓ,ℓ+θ) ∩ S|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DensityThreshold {
    /// `(1 - q) / (2(1 + q))`
    #[default]
    Strict,
    /// `min{(1 - q)/(2q), 1/2}`
    Relaxed,
}

impl DensityThreshold {
    pub fn kappa(self, q: f64) -> f64 {
        match self {
            DensityThreshold::Strict => (1.0 - q) / (2.0 * (1.0 + q)),
            DensityThreshold::Relaxed => ((1.0 - q) / (2.0 * q)).min(0.5),
        }
    }
}

fn check_ratio(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("ratio q must lie in (0, 1), got {q}")))
    }
}

/// First `θ > 0` at which `κ |(ℓ,ℓ+θ) ∩ S| - |(ℓ,ℓ+θ) \ S|` stops being positive.
///
/// The function is piecewise linear with kinks at the endpoints of `S`, so a
/// walk over those endpoints locates the zero exactly. Returns `None` if the
/// condition holds all the way to `T`.
fn first_failure(set: &TimeSet, ell: f64, kappa: f64) -> Option<f64> {
    let horizon = set.horizon();
    let mut cuts: Vec<f64> = set
        .breakpoints()
        .into_iter()
        .filter(|&b| b > ell && b < horizon)
        .collect();
    cuts.push(horizon);
    let mut pos = ell;
    let mut margin = 0.0;
    for next in cuts {
        let len = next - pos;
        if len <= 0.0 {
            continue;
        }
        if set.contains(0.5 * (pos + next)) {
            margin += kappa * len;
        } else {
            if margin - len <= 0.0 {
                return Some(pos + margin - ell);
            }
            margin -= len;
        }
        pos = next;
    }
    None
}

/// Largest θ0 on the scan grid (step `step · T`) such that
/// `|(ℓ,ℓ+θ) \ S| < κ(q) |(ℓ,ℓ+θ) ∩ S|` for every `θ < θ0`, capped at `T - ℓ`.
///
/// The check is exact between grid points because the defect is piecewise
/// linear in θ with kinks only at endpoints of `S`.
pub fn find_theta0(set: &TimeSet, ell: f64, q: f64, threshold: DensityThreshold, step: Option<f64>) -> Result<f64> {
    check_ratio(q)?;
    let horizon = set.horizon();
    if !(ell >= 0.0 && ell < horizon) {
        return Err(domain(format!("ell = {ell} outside [0, {horizon})")));
    }
    let step = step.unwrap_or(DEFAULT_SCAN_STEP) * horizon;
    if !(step > 0.0) {
        return Err(domain("scan step must be positive"));
    }
    let room = horizon - ell;
    let theta0 = match first_failure(set, ell, threshold.kappa(q)) {
        None => room,
        Some(star) if star >= room => room,
        Some(star) => {
            // back off one ulp-scale so a failure landing on a grid point stays excluded
            let cells = (star * (1.0 - 1e-12) / step).floor();
            cells * step
        }
    };
    if theta0 < step.min(room) {
        return Err(Error::NotDensityPoint(format!(
            "ell = {ell}: proportion condition fails below the scan step {step}"
        )));
    }
    Ok(theta0)
}

/// A right density point together with its certified radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub ell: f64,
    pub theta0: f64,
}

impl DensityPoint {
    /// The start of the refinement sequence, `ℓ1 = ℓ + θ0`.
    pub fn ell1(&self) -> f64 {
        self.ell + self.theta0
    }
}

/// Scans the left endpoints of `S` and keeps the one with the largest certified
/// radius; ties go to the smallest `ℓ`.
pub fn find_density_point(
    set: &TimeSet,
    q: f64,
    threshold: DensityThreshold,
    step: Option<f64>,
) -> Result<DensityPoint> {
    check_ratio(q)?;
    let mut best: Option<DensityPoint> = None;
    for iv in set.intervals() {
        let Ok(theta0) = find_theta0(set, iv.start, q, threshold, step) else {
            continue;
        };
        if best.is_none_or(|b| theta0 > b.theta0) {
            best = Some(DensityPoint { ell: iv.start, theta0 });
        }
    }
    best.ok_or_else(|| Error::NotDensityPoint("no interval endpoint certifies".into()))
}

/// Per-step record of the refinement certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCertificate {
    pub m: usize,
    /// `δ_m = ℓ_m - ℓ_{m+1}`
    pub gap: f64,
    /// `|(ℓ_{m+1}, ℓ_m) ∩ S|`
    pub gap_measure: f64,
    /// `|(ξ_m, ℓ_m) ∩ S|`
    pub xi_measure: f64,
}

/// The sequence `ℓ_m = ℓ + q^{m-1}(ℓ1 - ℓ)` with its checked proportion certificates.
///
/// `points` holds `ℓ_1 .. ℓ_{depth+1}`; `gaps`, `midpoints` and `certificates`
/// hold the `depth` steps `m = 1 .. depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySequence {
    pub base: f64,
    pub ratio: f64,
    pub start: f64,
    pub depth: usize,
    pub mode: SetMode,
    pub points: Vec<f64>,
    pub gaps: Vec<f64>,
    pub midpoints: Vec<f64>,
    /// 3 for a general set, 1 when `(ℓ, ℓ1) ⊆ S`.
    pub proportion_factor: f64,
    pub certificates: Vec<StepCertificate>,
}

impl DensitySequence {
    pub fn first_gap(&self) -> f64 {
        self.gaps[0]
    }

    /// The gap one step past the audited range, `δ_{depth+1}`.
    pub fn tail_gap(&self) -> f64 {
        self.ratio.powi(self.depth as i32) * (1.0 - self.ratio) * (self.start - self.base)
    }
}

/// Builds `ℓ_1 .. ℓ_{depth+1}` and checks every proportion certificate.
///
/// In [`SetMode::GeneralE`] each step must satisfy `δ_m ≤ 3|(ℓ_{m+1},ℓ_m) ∩ S|`
/// and `|(ξ_m,ℓ_m) ∩ S| ≥ δ_m/6` with `ξ_m = ℓ_{m+1} + δ_m/6`. In
/// [`SetMode::FullInterval`] the whole of `(ℓ, ℓ1)` must lie in `S` and
/// `ξ_m = ℓ_{m+1} + δ_m/2`.
pub fn build_sequence(
    set: &TimeSet,
    ell: f64,
    ell1: f64,
    q: f64,
    depth: usize,
    mode: SetMode,
) -> Result<DensitySequence> {
    check_ratio(q)?;
    if depth == 0 {
        return Err(domain("depth must be positive"));
    }
    if !(ell >= 0.0 && ell < ell1 && ell1 <= set.horizon()) {
        return Err(domain(format!(
            "need 0 <= ell < ell1 <= T, got ell = {ell}, ell1 = {ell1}, T = {}",
            set.horizon()
        )));
    }
    let span = ell1 - ell;
    if mode == SetMode::FullInterval && !holds(span, set.overlap(ell, ell1)) {
        return Err(invariant(format!(
            "full-interval mode needs ({ell}, {ell1}) inside the set; covered measure {} of {span}",
            set.overlap(ell, ell1)
        )));
    }

    let points: Vec<f64> = (0..=depth).map(|k| ell + q.powi(k as i32) * span).collect();
    let gaps: Vec<f64> = (0..depth).map(|k| q.powi(k as i32) * (1.0 - q) * span).collect();
    let xi_factor = mode.xi_factor();
    let proportion = mode.proportion_factor();
    let mut midpoints = Vec::with_capacity(depth);
    let mut certificates = Vec::with_capacity(depth);
    for m in 1..=depth {
        let (hi, lo, gap) = (points[m - 1], points[m], gaps[m - 1]);
        let xi = lo + gap / xi_factor;
        let gap_measure = set.overlap(lo, hi);
        let xi_measure = set.overlap(xi, hi);
        if !holds(gap, proportion * gap_measure) {
            return Err(Error::SequenceCertificate {
                m,
                detail: format!(
                    "delta = {gap} > {proportion} * |gap ∩ E| = {}; ell1 too far from ell or ell not a density point",
                    proportion * gap_measure
                ),
            });
        }
        if !holds(gap / xi_factor, xi_measure) {
            return Err(Error::SequenceCertificate {
                m,
                detail: format!("|(xi, ell_m) ∩ E| = {xi_measure} < delta/{xi_factor}"),
            });
        }
        midpoints.push(xi);
        certificates.push(StepCertificate {
            m,
            gap,
            gap_measure,
            xi_measure,
        });
    }

    Ok(DensitySequence {
        base: ell,
        ratio: q,
        start: ell1,
        depth,
        mode,
        points,
        gaps,
        midpoints,
        proportion_factor: proportion,
        certificates,
    })
}
