//! Final-state observability for non-autonomous evolution families.
//!
//! The crate follows the Lebeau–Robbiano strategy end to end on a concrete,
//! finite-dimensional instance:
//!
//! * [`time_sets`]: interval-union time sets, right density points and the
//!   geometric refinement sequence used to telescope the estimate.
//! * [`constants`]: the explicit observability-constant chain
//!   (`q`, `λ*`, `c1..c4`, `ε`, `C_obs`, and the envelope `C1, C2, C3`).
//! * [`evolution`]: Fourier-multiplier evolution families generated by
//!   time-dependent elliptic symbols on a discrete torus, spectral projectors
//!   and dissipation-estimate certification.
//! * [`observation`]: time-dependent sensor families, thickness predicates and
//!   empirical certification of the uncertainty relation.
//! * [`pipeline`]: traces `F`, `G`, the ε-balance audit, the telescoping audit
//!   and the final observability check.

// `!(a < b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod evolution;
mod fit;
pub mod float_serde;
pub mod norm;
pub mod observation;
pub mod pipeline;
pub mod rng;
pub mod time_sets;

pub use error::{Error, Result};
pub use norm::NormExponent;

/// Relative tolerance used when an inequality is audited in floating point.
///
/// An audited inequality `lhs <= rhs` passes when
/// `rhs - lhs >= -AUDIT_RTOL * max(|lhs|, |rhs|)`.
pub const AUDIT_RTOL: f64 = 1e-10;

/// How the density-point sequence and the derived constants treat the set `E`.
///
/// `GeneralE` uses the factor-3 proportion estimate and `ξ_m = ℓ_{m+1} + δ_m/6`;
/// `FullInterval` requires `(ℓ, ℓ1) ⊆ E` and uses `ξ_m = ℓ_{m+1} + δ_m/2`,
/// replacing the numerical factor 6 by 2 throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetMode {
    #[serde(alias = "general-E")]
    GeneralE,
    FullInterval,
}

impl SetMode {
    /// Factor `k` with `|(ξ_m, ℓ_m) ∩ E| ≥ δ_m / k`; also the leading factor of `C_obs`.
    pub fn xi_factor(self) -> f64 {
        match self {
            SetMode::GeneralE => 6.0,
            SetMode::FullInterval => 2.0,
        }
    }

    /// Factor `p` in `δ_m ≤ p · |(ℓ_{m+1}, ℓ_m) ∩ E|`.
    pub fn proportion_factor(self) -> f64 {
        match self {
            SetMode::GeneralE => 3.0,
            SetMode::FullInterval => 1.0,
        }
    }
}

/// Checks `lhs <= rhs` up to [`AUDIT_RTOL`].
pub fn holds(lhs: f64, rhs: f64) -> bool {
    if lhs <= rhs {
        return true;
    }
    let scale = lhs.abs().max(rhs.abs());
    rhs - lhs >= -AUDIT_RTOL * scale
}
