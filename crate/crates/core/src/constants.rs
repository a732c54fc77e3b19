//! The explicit constant chain behind the observability estimate.
//!
//! Inputs are the uncertainty-relation constants `(d0, d1, γ1)`, the
//! dissipation constants `(d2, d3, γ2, γ3, γ4)`, the growth bound `(M, ω)` and
//! the observation bound `‖C(·)‖_{E,∞}`. Everything downstream (`q`, `λ*`,
//! `c1..c4`, the per-step `ε_m`, `C_obs`) is a closed-form function of them.
//!
//! `C_obs` is evaluated in log space; when it exceeds the `f64` range the value
//! is `+∞` and [`ObservabilityCertificate::overflow`] is set.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invariant};
use crate::{NormExponent, Result, SetMode};

/// Certified inputs to the observability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantBundle {
    pub d0: f64,
    pub d1: f64,
    pub gamma1: f64,
    pub d2: f64,
    pub d3: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    /// Growth prefactor `M ≥ 1` in `‖U(t,s)‖ ≤ M e^{ω(t-s)}`.
    #[serde(rename = "M")]
    pub growth_bound: f64,
    #[serde(rename = "omega")]
    pub growth_rate: f64,
    /// `‖C(·)‖_{E,∞}`
    #[serde(rename = "C_sup")]
    pub observation_bound: f64,
    /// Constant `c` of a sub-exponential blow-up `exp(c (t-s)^{-κ})` used in place
    /// of the polynomial one; it enters `c2` additively.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subexp_blowup: Option<f64>,
}

impl ConstantBundle {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.d0,
            self.d1,
            self.gamma1,
            self.d2,
            self.d3,
            self.gamma2,
            self.gamma3,
            self.gamma4,
            self.growth_bound,
            self.growth_rate,
            self.observation_bound,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invariant("constant bundle contains a non-finite value"));
        }
        if !(self.gamma2 > self.gamma1) {
            return Err(invariant(format!(
                "gamma2 = {} must exceed gamma1 = {}",
                self.gamma2, self.gamma1
            )));
        }
        let positive = [
            ("d0", self.d0),
            ("d1", self.d1),
            ("d3", self.d3),
            ("gamma1", self.gamma1),
            ("gamma3", self.gamma3),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(invariant(format!("{name} = {v} must be positive")));
            }
        }
        if self.d2 < 1.0 {
            return Err(invariant(format!("d2 = {} must be >= 1", self.d2)));
        }
        if self.growth_bound < 1.0 {
            return Err(invariant(format!("M = {} must be >= 1", self.growth_bound)));
        }
        if self.gamma4 < 0.0 || self.observation_bound < 0.0 {
            return Err(invariant("gamma4 and C_sup must be nonnegative"));
        }
        if self.subexp_blowup.is_some_and(|c| !(c > 0.0 && c.is_finite())) {
            return Err(invariant("sub-exponential blow-up constant must be positive"));
        }
        Ok(())
    }

    /// `κ = γ1γ3 / (γ2 - γ1)`
    pub fn kappa(&self) -> f64 {
        self.gamma1 * self.gamma3 / (self.gamma2 - self.gamma1)
    }

    pub fn omega_plus(&self) -> f64 {
        self.growth_rate.max(0.0)
    }
}

fn check_exponents(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<()> {
    if !(gamma1 > 0.0 && gamma3 > 0.0) {
        return Err(invariant("gamma1 and gamma3 must be positive"));
    }
    if !(gamma2 > gamma1) {
        return Err(invariant(format!("gamma2 = {gamma2} must exceed gamma1 = {gamma1}")));
    }
    Ok(())
}

/// `q = (3/4)^{(γ2-γ1)/(γ1γ3)}`, so that `q^κ = 3/4`.
pub fn q_ratio(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<f64> {
    check_exponents(gamma1, gamma2, gamma3)?;
    Ok(0.75f64.powf((gamma2 - gamma1) / (gamma1 * gamma3)))
}

/// `f(λ) = d1 λ^{γ1} - (d3/2) λ^{γ2} dt^{γ3}`.
pub fn f_objective(d1: f64, d3: f64, gamma1: f64, gamma2: f64, gamma3: f64, dt: f64, lambda: f64) -> f64 {
    d1 * lambda.powf(gamma1) - 0.5 * d3 * lambda.powf(gamma2) * dt.powf(gamma3)
}

/// Maximiser of [`f_objective`] on `(0, ∞)`:
/// `λ* = (2d1γ1/(d3γ2))^{1/(γ2-γ1)} (1/dt)^{γ3/(γ2-γ1)}`.
pub fn lambda_star(d1: f64, d3: f64, gamma1: f64, gamma2: f64, gamma3: f64, dt: f64) -> Result<f64> {
    check_exponents(gamma1, gamma2, gamma3)?;
    if !(dt > 0.0) {
        return Err(domain(format!("time difference must be positive, got {dt}")));
    }
    let gap = gamma2 - gamma1;
    Ok((2.0 * d1 * gamma1 / (d3 * gamma2)).powf(1.0 / gap) * dt.powf(-gamma3 / gap))
}

/// `f(λ*) = d1 (1 - γ1/γ2) (2d1γ1/(d3γ2))^{γ1/(γ2-γ1)} dt^{-κ}`.
pub fn f_max(d1: f64, d3: f64, gamma1: f64, gamma2: f64, gamma3: f64, dt: f64) -> Result<f64> {
    check_exponents(gamma1, gamma2, gamma3)?;
    if !(dt > 0.0) {
        return Err(domain(format!("time difference must be positive, got {dt}")));
    }
    let gap = gamma2 - gamma1;
    let kappa = gamma1 * gamma3 / gap;
    Ok(d1 * (1.0 - gamma1 / gamma2) * (2.0 * d1 * gamma1 / (d3 * gamma2)).powf(gamma1 / gap) * dt.powf(-kappa))
}

/// `exp(γ4(γ2-γ1)/(γ1γ3) · dt^{-κ})`, an upper bound for `max{1, dt^{-γ4}}`.
pub fn blowup_envelope(gamma1: f64, gamma2: f64, gamma3: f64, gamma4: f64, dt: f64) -> Result<f64> {
    check_exponents(gamma1, gamma2, gamma3)?;
    if !(dt > 0.0) {
        return Err(domain(format!("time difference must be positive, got {dt}")));
    }
    let inv_kappa = (gamma2 - gamma1) / (gamma1 * gamma3);
    Ok((gamma4 * inv_kappa * dt.powf(-1.0 / inv_kappa)).exp())
}

/// `c1 = max{d0, (d0 ‖C‖ + 1) d2}` and
/// `c2 = d1(1-γ1/γ2)(2d1γ1/(d3γ2))^{γ1/(γ2-γ1)} + γ4(γ2-γ1)/(γ1γ3)`
/// (plus the sub-exponential blow-up constant when one is given).
pub fn derive_c1_c2(bundle: &ConstantBundle) -> Result<(f64, f64)> {
    bundle.validate()?;
    let b = bundle;
    let c1 = b.d0.max((b.d0 * b.observation_bound + 1.0) * b.d2);
    let gap = b.gamma2 - b.gamma1;
    let c2 = b.d1 * (1.0 - b.gamma1 / b.gamma2) * (2.0 * b.d1 * b.gamma1 / (b.d3 * b.gamma2)).powf(b.gamma1 / gap)
        + b.gamma4 * gap / (b.gamma1 * b.gamma3)
        + b.subexp_blowup.unwrap_or(0.0);
    Ok((c1, c2))
}

/// `c3 = M c1 e^{ω₊ δ1}` and `c4 = c2 · k^κ` with `k = 6` (general set) or `2`
/// (full interval).
pub fn derive_c3_c4(
    c1: f64,
    c2: f64,
    growth_bound: f64,
    growth_rate: f64,
    delta1: f64,
    kappa: f64,
    mode: SetMode,
) -> Result<(f64, f64)> {
    if !(delta1 > 0.0) {
        return Err(domain(format!("delta1 must be positive, got {delta1}")));
    }
    let c3 = growth_bound * c1 * (growth_rate.max(0.0) * delta1).exp();
    let c4 = c2 * mode.xi_factor().powf(kappa);
    Ok((c3, c4))
}

/// `ε = c3^{-1} q exp(-2 c4 / δ_m^κ)`, which lies in `(0, 1)` whenever `c3 ≥ 1`.
pub fn epsilon_choice(c3: f64, c4: f64, delta_m: f64, q: f64, kappa: f64) -> Result<f64> {
    if !(delta_m > 0.0) {
        return Err(domain(format!("delta_m must be positive, got {delta_m}")));
    }
    Ok(q / c3 * (-2.0 * c4 / delta_m.powf(kappa)).exp())
}

/// Natural log of [`cobs_explicit`].
#[allow(clippy::too_many_arguments)]
pub fn log_cobs_explicit(
    c3: f64,
    c4: f64,
    q: f64,
    delta1: f64,
    growth_bound: f64,
    growth_rate: f64,
    horizon: f64,
    ell1: f64,
    kappa: f64,
    mode: SetMode,
) -> Result<f64> {
    if !(delta1 > 0.0) {
        return Err(domain(format!("delta1 must be positive, got {delta1}")));
    }
    if ell1 > horizon {
        return Err(domain(format!("ell1 = {ell1} exceeds T = {horizon}")));
    }
    Ok(mode.xi_factor().ln() + 2.0 * c3.ln() - q.ln() - delta1.ln()
        + 3.0 * c4 / delta1.powf(kappa)
        + growth_bound.ln()
        + growth_rate * (horizon - ell1))
}

/// `C_obs = k c3² q^{-1} δ1^{-1} exp(3c4/δ1^κ) M e^{ω(T-ℓ1)}` for `r = 1`,
/// with `k = 6` (general set) or `2` (full interval).
#[allow(clippy::too_many_arguments)]
pub fn cobs_explicit(
    c3: f64,
    c4: f64,
    q: f64,
    delta1: f64,
    growth_bound: f64,
    growth_rate: f64,
    horizon: f64,
    ell1: f64,
    kappa: f64,
    mode: SetMode,
) -> Result<f64> {
    log_cobs_explicit(c3, c4, q, delta1, growth_bound, growth_rate, horizon, ell1, kappa, mode).map(f64::exp)
}

/// The envelope constants
/// `C1 = 2M³c1²/(q(1-q))`, `C2 = 3c2 (2/(1-q))^κ`, `C3 = 3ω₊`.
pub fn remark_constants(bundle: &ConstantBundle, q: f64) -> Result<(f64, f64, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(domain(format!("q must lie in (0, 1), got {q}")));
    }
    let (c1, c2) = derive_c1_c2(bundle)?;
    let m = bundle.growth_bound;
    let big1 = 2.0 * m.powi(3) * c1 * c1 / (q * (1.0 - q));
    let big2 = 3.0 * c2 * (2.0 / (1.0 - q)).powf(bundle.kappa());
    let big3 = 3.0 * bundle.omega_plus();
    Ok((big1, big2, big3))
}

/// `C1 / (τ2-τ1)^{1/r} · exp(C2 / (τ2-τ1)^κ + C3 T)`, with `1/∞ = 0`.
#[allow(clippy::too_many_arguments)]
pub fn cobs_bound(
    big1: f64,
    big2: f64,
    big3: f64,
    tau1: f64,
    tau2: f64,
    horizon: f64,
    r: NormExponent,
    kappa: f64,
) -> Result<f64> {
    if !(tau1 < tau2 && tau2 <= horizon) {
        return Err(domain(format!(
            "need tau1 < tau2 <= T, got ({tau1}, {tau2}), T = {horizon}"
        )));
    }
    let width = tau2 - tau1;
    let log = big1.ln() - r.reciprocal() * width.ln() + big2 / width.powf(kappa) + big3 * horizon;
    Ok(log.exp())
}

/// Lifts an `r = 1` constant to general `r`: `C · |E|^{1 - 1/r}`.
pub fn holder_lift(cobs_one: f64, measure: f64, r: NormExponent) -> f64 {
    let exponent = 1.0 - r.reciprocal();
    if exponent == 0.0 {
        cobs_one
    } else {
        cobs_one * measure.powf(exponent)
    }
}

/// The derived constant chain for one choice of `(ℓ, ℓ1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityCertificate {
    pub mode: SetMode,
    pub kappa: f64,
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub ell: f64,
    pub ell1: f64,
    pub delta1: f64,
    /// `ε_m` for the audited steps `m = 1..`.
    pub epsilons: Vec<f64>,
    /// `r = 1` constant from the explicit formula.
    #[serde(rename = "C_obs")]
    #[serde(with = "crate::float_serde")]
    pub cobs: f64,
    #[serde(rename = "log_C_obs")]
    pub log_cobs: f64,
    /// `C_obs` lifted to `r` through the measure of `E`.
    #[serde(rename = "C_obs_r")]
    #[serde(with = "crate::float_serde")]
    pub cobs_r: f64,
    pub r: NormExponent,
    #[serde(rename = "C1")]
    pub big1: f64,
    #[serde(rename = "C2")]
    pub big2: f64,
    #[serde(rename = "C3")]
    pub big3: f64,
    /// `C_obs` exceeded the `f64` range; the bound holds but is numerically vacuous.
    pub overflow: bool,
    /// A sub-exponential blow-up constant was merged into `c2`.
    pub subexp_blowup_used: bool,
}

impl ObservabilityCertificate {
    /// Derives the chain for the sequence starting at `ℓ1` above the density point `ℓ`.
    ///
    /// `steps` is the number of per-step `ε_m` to record; `measure` is `|E|`,
    /// used for the lift to `r`.
    #[allow(clippy::too_many_arguments)]
    pub fn derive(
        bundle: &ConstantBundle,
        mode: SetMode,
        horizon: f64,
        ell: f64,
        ell1: f64,
        steps: usize,
        measure: f64,
        r: NormExponent,
    ) -> Result<Self> {
        bundle.validate()?;
        if !(ell >= 0.0 && ell < ell1 && ell1 <= horizon) {
            return Err(domain(format!(
                "need 0 <= ell < ell1 <= T, got ({ell}, {ell1}), T = {horizon}"
            )));
        }
        let kappa = bundle.kappa();
        let q = q_ratio(bundle.gamma1, bundle.gamma2, bundle.gamma3)?;
        let (c1, c2) = derive_c1_c2(bundle)?;
        let delta1 = (1.0 - q) * (ell1 - ell);
        let (c3, c4) = derive_c3_c4(c1, c2, bundle.growth_bound, bundle.growth_rate, delta1, kappa, mode)?;
        let epsilons = (0..steps)
            .map(|k| epsilon_choice(c3, c4, q.powi(k as i32) * delta1, q, kappa))
            .collect::<Result<Vec<_>>>()?;
        let log_cobs = log_cobs_explicit(
            c3,
            c4,
            q,
            delta1,
            bundle.growth_bound,
            bundle.growth_rate,
            horizon,
            ell1,
            kappa,
            mode,
        )?;
        let cobs = log_cobs.exp();
        let cobs_r = holder_lift(cobs, measure, r);
        let (big1, big2, big3) = remark_constants(bundle, q)?;
        Ok(ObservabilityCertificate {
            mode,
            kappa,
            q,
            c1,
            c2,
            c3,
            c4,
            ell,
            ell1,
            delta1,
            epsilons,
            cobs,
            log_cobs,
            cobs_r,
            r,
            big1,
            big2,
            big3,
            overflow: cobs.is_infinite(),
            subexp_blowup_used: bundle.subexp_blowup.is_some(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    pub(crate) fn worked_bundle() -> ConstantBundle {
        ConstantBundle {
            d0: 1.0,
            d1: 1.0,
            gamma1: 1.0,
            d2: 1.0,
            d3: 2.0,
            gamma2: 2.0,
            gamma3: 1.0,
            gamma4: 0.0,
            growth_bound: 1.0,
            growth_rate: 0.0,
            observation_bound: 1.0,
            subexp_blowup: None,
        }
    }

    #[test]
    fn q_ratio_examples() {
        assert_eq!(q_ratio(1.0, 2.0, 1.0).unwrap(), 0.75);
        assert!(rel(q_ratio(1.0, 3.0, 1.0).unwrap(), 0.5625) < 1e-15);
        assert!(rel(q_ratio(1.0, 2.0, 2.0).unwrap(), 0.8660254037844386) < 1e-15);
        assert!(q_ratio(2.0, 2.0, 1.0).is_err());
        assert!(q_ratio(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lambda_star_examples() {
        assert!(rel(lambda_star(1.0, 2.0, 1.0, 2.0, 1.0, 1.0).unwrap(), 0.5) < 1e-15);
        assert!(rel(lambda_star(1.0, 2.0, 1.0, 2.0, 1.0, 0.25).unwrap(), 2.0) < 1e-15);
        assert!(
            rel(
                lambda_star(2.0, 1.0, 1.0, 3.0, 1.0, 1.0).unwrap(),
                1.154_700_538_379_251_5
            ) < 1e-14
        );
    }

    #[test]
    fn lambda_star_agrees_with_grid_maximisation() {
        let (d1, d3, g1, g2, g3, dt) = (2.0, 1.0, 1.0, 3.0, 1.0, 1.0);
        let mut best = (0.0, f64::NEG_INFINITY);
        for k in 1..=400_000 {
            let lam = k as f64 * 1e-5;
            let v = f_objective(d1, d3, g1, g2, g3, dt, lam);
            if v > best.1 {
                best = (lam, v);
            }
        }
        assert!((best.0 - lambda_star(d1, d3, g1, g2, g3, dt).unwrap()).abs() < 2e-5);
        assert!((best.1 - f_max(d1, d3, g1, g2, g3, dt).unwrap()).abs() < 1e-8);
        assert!(rel(f_max(d1, d3, g1, g2, g3, dt).unwrap(), 1.539_600_717_839_002) < 1e-14);
    }

    #[test]
    fn f_max_examples() {
        assert!(rel(f_max(1.0, 2.0, 1.0, 2.0, 1.0, 1.0).unwrap(), 0.25) < 1e-15);
        assert!(rel(f_max(1.0, 2.0, 1.0, 2.0, 1.0, 0.25).unwrap(), 1.0) < 1e-15);
    }

    #[test]
    fn blowup_envelope_examples() {
        assert_eq!(blowup_envelope(1.0, 2.0, 1.0, 0.0, 0.3).unwrap(), 1.0);
        assert!(rel(blowup_envelope(1.0, 2.0, 1.0, 1.0, 1.0).unwrap(), std::f64::consts::E) < 1e-15);
        let big = blowup_envelope(1.0, 2.0, 1.0, 2.0, 0.1).unwrap();
        assert!(rel(big, 20f64.exp()) < 1e-14);
        assert!(big >= 0.1f64.powf(-2.0));
    }

    #[test]
    fn c1_c2_examples() {
        let b = worked_bundle();
        assert_eq!(derive_c1_c2(&b).unwrap(), (2.0, 0.25));
        let b4 = ConstantBundle { gamma4: 1.0, ..b };
        assert_eq!(derive_c1_c2(&b4).unwrap().1, 1.25);
        let b0 = ConstantBundle {
            d0: 3.0,
            observation_bound: 0.0,
            ..b
        };
        assert_eq!(derive_c1_c2(&b0).unwrap().0, 3.0);
    }

    #[test]
    fn subexp_blowup_adds_to_c2() {
        let b = ConstantBundle {
            subexp_blowup: Some(0.5),
            ..worked_bundle()
        };
        assert_eq!(derive_c1_c2(&b).unwrap().1, 0.75);
    }

    #[test]
    fn c3_c4_examples() {
        assert_eq!(
            derive_c3_c4(2.0, 0.25, 1.0, 0.0, 1.0, 1.0, SetMode::GeneralE).unwrap(),
            (2.0, 1.5)
        );
        assert_eq!(
            derive_c3_c4(2.0, 0.25, 1.0, 0.0, 1.0, 1.0, SetMode::FullInterval)
                .unwrap()
                .1,
            0.5
        );
        assert_eq!(
            derive_c3_c4(1.0, 0.25, 2.0, -1.0, 5.0, 1.0, SetMode::GeneralE)
                .unwrap()
                .0,
            2.0
        );
    }

    #[test]
    fn epsilon_examples() {
        let e = epsilon_choice(2.0, 1.5, 1.0, 0.75, 1.0).unwrap();
        assert!(rel(e, 0.375 * (-3f64).exp()) < 1e-15);
        assert!((e - 0.01867).abs() < 1e-5);
        let e2 = epsilon_choice(2.0, 1.5, 0.5, 0.75, 1.0).unwrap();
        assert!(rel(e2, 0.375 * (-6f64).exp()) < 1e-15);
        let near = epsilon_choice(1.0, 1e-12, 1.0, 1.0 - 1e-12, 1.0).unwrap();
        assert!(near < 1.0 && near > 0.999);
    }

    #[test]
    fn cobs_explicit_examples() {
        let g = cobs_explicit(2.0, 1.5, 0.75, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, SetMode::GeneralE).unwrap();
        assert!(rel(g, 32.0 * 4.5f64.exp()) < 1e-13);
        let f = cobs_explicit(2.0, 0.5, 0.75, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, SetMode::FullInterval).unwrap();
        assert!(rel(f, 8.0 * 4.0 / 3.0 * 1.5f64.exp()) < 1e-13);
        let w = cobs_explicit(2.0, 1.5, 0.75, 1.0, 1.0, 1.0, 3.0, 1.0, 1.0, SetMode::GeneralE).unwrap();
        assert!(rel(w / g, 2f64.exp()) < 1e-13);
    }

    #[test]
    fn cobs_overflow_is_infinite_not_error() {
        let v = cobs_explicit(2.0, 1.5, 0.75, 1e-4, 1.0, 0.0, 1.0, 1.0, 1.0, SetMode::GeneralE).unwrap();
        assert!(v.is_infinite());
    }

    #[test]
    fn remark_constant_examples() {
        let b = worked_bundle();
        let (c1, c2, c3) = remark_constants(&b, 0.75).unwrap();
        assert!(rel(c1, 2.0 * 4.0 / (0.75 * 0.25)) < 1e-15);
        assert!(rel(c2, 6.0) < 1e-15);
        assert_eq!(c3, 0.0);
        let b2 = ConstantBundle { growth_rate: 2.0, ..b };
        assert_eq!(remark_constants(&b2, 0.75).unwrap().2, 6.0);
        // M = 2, c1 = 1 (d0 = 1, C_sup = 0, d2 = 1), q = 1/2
        let b3 = ConstantBundle {
            growth_bound: 2.0,
            observation_bound: 0.0,
            ..b
        };
        assert!(rel(remark_constants(&b3, 0.5).unwrap().0, 64.0) < 1e-15);
    }

    #[test]
    fn cobs_bound_examples() {
        let c1 = 2.0 * 4.0 / (0.75 * 0.25);
        let one = cobs_bound(c1, 6.0, 0.0, 0.0, 1.0, 1.0, NormExponent::ONE, 1.0).unwrap();
        assert!(rel(one, c1 * 6f64.exp()) < 1e-14);
        assert!((one - 17213.0).abs() < 1.0);
        let inf = cobs_bound(c1, 6.0, 0.0, 0.0, 1.0, 1.0, NormExponent::Infinity, 1.0).unwrap();
        assert!(rel(inf, one) < 1e-14);
        let two = cobs_bound(c1, 6.0, 0.0, 0.0, 4.0, 4.0, NormExponent::TWO, 1.0).unwrap();
        assert!(rel(two, c1 / 2.0 * 1.5f64.exp()) < 1e-14);
        assert!(cobs_bound(c1, 6.0, 0.0, 1.0, 1.0, 1.0, NormExponent::ONE, 1.0).is_err());
    }

    #[test]
    fn holder_lift_examples() {
        assert_eq!(holder_lift(10.0, 2.0, NormExponent::ONE), 10.0);
        assert!(rel(holder_lift(10.0, 4.0, NormExponent::TWO), 20.0) < 1e-15);
        assert_eq!(holder_lift(10.0, 4.0, NormExponent::Infinity), 40.0);
    }

    #[test]
    fn bundle_validation() {
        let b = worked_bundle();
        assert!(b.validate().is_ok());
        assert!(ConstantBundle { gamma2: 1.0, ..b }.validate().is_err());
        assert!(ConstantBundle { d2: 0.5, ..b }.validate().is_err());
        assert!(ConstantBundle { growth_bound: 0.9, ..b }.validate().is_err());
        assert!(ConstantBundle { d0: 0.0, ..b }.validate().is_err());
    }

    #[test]
    fn certificate_for_worked_instance() {
        // ell = 0, ell1 = 4 gives delta1 = (1 - 3/4) * 4 = 1
        let cert = ObservabilityCertificate::derive(
            &worked_bundle(),
            SetMode::GeneralE,
            4.0,
            0.0,
            4.0,
            3,
            4.0,
            NormExponent::ONE,
        )
        .unwrap();
        assert_eq!(cert.q, 0.75);
        assert_eq!((cert.c1, cert.c2, cert.c3, cert.c4), (2.0, 0.25, 2.0, 1.5));
        assert_eq!(cert.delta1, 1.0);
        assert!(rel(cert.cobs, 32.0 * 4.5f64.exp()) < 1e-12);
        assert!(cert.epsilons.iter().all(|&e| e > 0.0 && e < 1.0));
        assert!(!cert.overflow);
    }

    #[test]
    fn json_uses_symbol_names() {
        let js = serde_json::to_value(worked_bundle()).unwrap();
        for key in [
            "d0", "d1", "gamma1", "d2", "d3", "gamma2", "gamma3", "gamma4", "M", "omega", "C_sup",
        ] {
            assert!(js.get(key).is_some(), "missing {key}");
        }
    }
}
