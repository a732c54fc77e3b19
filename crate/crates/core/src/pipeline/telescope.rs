use serde::{Deserialize, Serialize};

use super::balance::{balance_on, BalanceStep};
use super::quadrature::lr_norms;
use super::traces::Trajectory;
use super::{scaled, Derivation, Instance};
use crate::constants::ConstantBundle;
use crate::error::{invariant, Error};
use crate::evolution::Field;
use crate::{NormExponent, Result, SetMode};

/// Tolerance of the exponent identity `4c4/δ_m^κ = 3c4/δ_{m+1}^κ`.
pub const IDENTITY_RTOL: f64 = 1e-10;

/// Audit of refinement step `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelescopeStep {
    pub m: usize,
    pub ell_m: f64,
    pub ell_next: f64,
    pub xi_m: f64,
    pub delta_m: f64,
    pub epsilon_m: f64,
    pub log_epsilon_m: f64,
    /// Sampled time in `(ξ_m, ℓ_m) ∩ E`.
    pub t: f64,
    #[serde(rename = "F_ell_m")]
    pub f_ell_m: f64,
    #[serde(rename = "F_ell_next")]
    pub f_ell_next: f64,
    #[serde(rename = "F_t")]
    pub f_t: f64,
    #[serde(rename = "G_t")]
    pub g_t: f64,
    /// `∫_{(ℓ_{m+1}, ℓ_m) ∩ E} G`
    pub gap_integral: f64,
    /// `F(ℓ_m) ≤ c3² q^{-1} e^{3c4/δ_m^κ} G(t) + q e^{-c4/δ_m^κ} F(ℓ_{m+1})`
    pub lhs: f64,
    #[serde(with = "crate::float_serde")]
    pub rhs: f64,
    #[serde(with = "crate::float_serde")]
    pub slack: f64,
    /// `expm1(|4c4/δ_m^κ - 3c4/δ_{m+1}^κ|)`
    pub identity_error: f64,
    /// Running sum `Σ_{k ≤ m} k c3² q^{-1} ∫_{(ℓ_{k+1}, ℓ_k) ∩ E} G`.
    pub partial_sum: f64,
    pub checks: Vec<BalanceStep>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelescopeAudit {
    pub x0_id: usize,
    pub mode: SetMode,
    pub depth: usize,
    pub q: f64,
    pub c3: f64,
    pub c4: f64,
    pub kappa: f64,
    pub steps: Vec<TelescopeStep>,
    /// Truncation remainder `δ_{D+1} e^{-3c4/δ_{D+1}^κ} F(ℓ_{D+1})` and its natural log.
    pub remainder: f64,
    pub log_remainder: f64,
    /// `∫_E G`
    pub set_integral: f64,
    #[serde(rename = "F_ell1")]
    pub f_ell1: f64,
    #[serde(rename = "F_T")]
    pub f_final: f64,
    #[serde(rename = "C_obs")]
    #[serde(with = "crate::float_serde")]
    pub cobs: f64,
    pub final_checks: Vec<BalanceStep>,
    pub monotone_partial_sums: bool,
    pub max_identity_error: f64,
    pub quadrature_converged: bool,
    pub pass: bool,
}

impl TelescopeAudit {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.steps {
            for c in s.checks.iter().filter(|c| !c.holds) {
                out.push(format!("m = {}: {} (lhs {:e}, rhs {:e})", s.m, c.name, c.lhs, c.rhs));
            }
        }
        for c in self.final_checks.iter().filter(|c| !c.holds) {
            out.push(format!("{} (lhs {:e}, rhs {:e})", c.name, c.lhs, c.rhs));
        }
        if !self.monotone_partial_sums {
            out.push("partial sums are not nondecreasing".into());
        }
        out
    }

    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::Audit(format!(
                "telescope for x0 #{}: {}",
                self.x0_id,
                self.failures().join("; ")
            )))
        }
    }
}

/// Audits the telescoping chain for one initial datum.
///
/// For each `m ≤ depth` the ε-balance inequality is applied between
/// `ℓ_{m+1}` and a sampled `t ∈ (ξ_m, ℓ_m) ∩ E` (midpoint of the largest
/// piece) with `ε = ε_m`; the resulting bound on `F(ℓ_m)`, its rearranged
/// `δ_m`-weighted form and its integrated form are checked. The chain ends
/// with the summed bound on `F(ℓ1)`, the growth step to `F(T)` and
/// `F(T) ≤ C_obs ∫_E G`.
pub fn run_telescope(
    instance: &Instance,
    bundle: &ConstantBundle,
    derivation: &Derivation,
    x0: &Field,
    x0_id: usize,
) -> Result<TelescopeAudit> {
    let seq = &derivation.sequence;
    let cert = &derivation.certificate;
    if seq.mode != cert.mode {
        return Err(invariant("sequence and certificate use different set modes"));
    }
    let traj = Trajectory::new(instance, x0)?;
    let (q, c3, c4, kappa) = (cert.q, cert.c3, cert.c4, cert.kappa);
    let k = seq.mode.xi_factor();
    let log_lead = (k * c3 * c3 / q).ln();
    // ln w_m with w_m = δ_m e^{-3c4/δ_m^κ}
    let log_w = |delta: f64| delta.ln() - 3.0 * c4 / delta.powf(kappa);
    let ones = [NormExponent::ONE];
    let mut quadrature_converged = true;

    let mut steps = Vec::with_capacity(seq.depth);
    let mut partial_sum = 0.0;
    for m in 1..=seq.depth {
        let (ell_m, ell_next, xi_m, delta_m) =
            (seq.points[m - 1], seq.points[m], seq.midpoints[m - 1], seq.gaps[m - 1]);
        let delta_next = if m < seq.depth { seq.gaps[m] } else { seq.tail_gap() };
        let piece = instance
            .set
            .clip(xi_m, ell_m)
            .into_iter()
            .max_by(|a, b| a.len().total_cmp(&b.len()))
            .ok_or_else(|| invariant(format!("(ξ_{m}, ℓ_{m}) does not meet E")))?;
        let t = piece.midpoint();
        let log_eps = q.ln() - c3.ln() - 2.0 * c4 / delta_m.powf(kappa);

        let f_ell_m = traj.f(ell_m)?;
        let f_ell_next = traj.f(ell_next)?;
        let (f_t, g_t) = traj.fg(t)?;
        let gap = lr_norms(&instance.set_pieces(ell_next, ell_m), &ones, |s| traj.g(s))?;
        quadrature_converged &= gap.converged;
        let gap_integral = gap.values[0];
        partial_sum += scaled(log_lead, gap_integral);

        let mut checks = vec![BalanceStep::new(
            "xi proportion",
            delta_m / k,
            instance.set.overlap(xi_m, ell_m),
        )];
        checks.push(BalanceStep::new(
            "exponential bound",
            f_ell_m,
            scaled(bundle.growth_bound.ln() + bundle.growth_rate * (ell_m - t), f_t),
        ));
        let balance = balance_on(&traj, bundle, ell_next, t, log_eps)?;
        for s in &balance.steps {
            checks.push(BalanceStep {
                name: format!("balance: {}", s.name),
                ..s.clone()
            });
        }
        let log_g_coef = (c3 * c3 / q).ln() + 3.0 * c4 / delta_m.powf(kappa);
        let rhs = scaled(log_g_coef, g_t) + scaled(q.ln() - c4 / delta_m.powf(kappa), f_ell_next);
        checks.push(BalanceStep::new("before rearranging", f_ell_m, rhs));
        let weighted = f_ell_m - scaled(log_w(delta_next) - log_w(delta_m), f_ell_next);
        checks.push(BalanceStep::new("rearranged", weighted, scaled(log_g_coef, g_t)));
        checks.push(BalanceStep::new(
            "integrated",
            weighted,
            scaled(log_lead - delta_m.ln() + 3.0 * c4 / delta_m.powf(kappa), gap_integral),
        ));
        let identity_error = (4.0 * c4 / delta_m.powf(kappa) - 3.0 * c4 / delta_next.powf(kappa))
            .abs()
            .exp_m1();
        checks.push(BalanceStep {
            name: "exponent identity".into(),
            lhs: identity_error,
            rhs: IDENTITY_RTOL,
            slack: IDENTITY_RTOL - identity_error,
            holds: identity_error <= IDENTITY_RTOL,
        });
        let pass = checks.iter().all(|c| c.holds);
        steps.push(TelescopeStep {
            m,
            ell_m,
            ell_next,
            xi_m,
            delta_m,
            epsilon_m: log_eps.exp(),
            log_epsilon_m: log_eps,
            t,
            f_ell_m,
            f_ell_next,
            f_t,
            g_t,
            gap_integral,
            lhs: f_ell_m,
            rhs,
            slack: rhs - f_ell_m,
            identity_error,
            partial_sum,
            checks,
            pass,
        });
    }

    let delta1 = seq.first_gap();
    let tail = seq.tail_gap();
    let f_tail = traj.f(*seq.points.last().expect("nonempty sequence"))?;
    let log_remainder = log_w(tail) + f_tail.ln();
    let remainder = scaled(log_w(tail), f_tail);
    let whole = lr_norms(&instance.set_pieces(0.0, instance.horizon()), &ones, |s| traj.g(s))?;
    quadrature_converged &= whole.converged;
    let set_integral = whole.values[0];
    let f_ell1 = traj.f(seq.start)?;
    let horizon = instance.horizon();
    let f_final = traj.f(horizon)?;
    let cobs = cert.log_cobs.exp();
    let orbit_max = seq
        .points
        .iter()
        .map(|&p| traj.f(p))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let final_checks = vec![
        BalanceStep::new(
            "telescoped sum",
            f_ell1,
            scaled(-log_w(delta1), partial_sum) + scaled(log_w(tail) - log_w(delta1), f_tail),
        ),
        BalanceStep::new("F(ell1) bound", f_ell1, scaled(log_lead - log_w(delta1), set_integral)),
        BalanceStep::new(
            "growth to T",
            f_final,
            scaled(
                bundle.growth_bound.ln() + bundle.growth_rate * (horizon - seq.start),
                f_ell1,
            ),
        ),
        BalanceStep::new("observability", f_final, scaled(cert.log_cobs, set_integral)),
        BalanceStep::new(
            "orbit bound",
            orbit_max,
            scaled(
                bundle.growth_bound.ln() + bundle.omega_plus() * horizon,
                traj.initial_norm(),
            ),
        ),
    ];
    let monotone_partial_sums = steps.windows(2).all(|w| w[1].partial_sum >= w[0].partial_sum);
    let max_identity_error = steps.iter().map(|s| s.identity_error).fold(0.0, f64::max);
    let pass = steps.iter().all(|s| s.pass) && final_checks.iter().all(|c| c.holds) && monotone_partial_sums;
    Ok(TelescopeAudit {
        x0_id,
        mode: seq.mode,
        depth: seq.depth,
        q,
        c3,
        c4,
        kappa,
        steps,
        remainder,
        log_remainder,
        set_integral,
        f_ell1,
        f_final,
        cobs,
        final_checks,
        monotone_partial_sums,
        max_identity_error,
        quadrature_converged,
        pass,
    })
}
