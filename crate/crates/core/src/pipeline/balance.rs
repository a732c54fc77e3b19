use serde::{Deserialize, Serialize};

use super::traces::{Split, Trajectory};
use super::{relative_slack, scaled, Instance};
use crate::constants::{derive_c1_c2, ConstantBundle};
use crate::error::{domain, Error};
use crate::evolution::Field;
use crate::time_sets::TimeSet;
use crate::{holds, rng, Result};

/// One audited inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceStep {
    pub name: String,
    pub lhs: f64,
    #[serde(with = "crate::float_serde")]
    pub rhs: f64,
    #[serde(with = "crate::float_serde")]
    pub slack: f64,
    pub holds: bool,
}

impl BalanceStep {
    pub(crate) fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        BalanceStep {
            name: name.into(),
            lhs,
            rhs,
            slack: relative_slack(lhs, rhs),
            holds: holds(lhs, rhs),
        }
    }
}

/// Audit of `F(t) ≤ c1 exp(c2 (t-s)^{-κ}) (ε^{-1} G(t) + ε F(s))` and the steps
/// leading to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceAudit {
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
    /// `ln ε`, exact even when `ε` underflows.
    pub log_epsilon: f64,
    /// Cutoff with `ε = exp(-(d3/2) λ^{γ2} (t-s)^{γ3})`.
    pub lambda: f64,
    #[serde(rename = "F_t")]
    pub f_t: f64,
    #[serde(rename = "F_s")]
    pub f_s: f64,
    #[serde(rename = "G_t")]
    pub g_t: f64,
    pub split: Split,
    pub lhs: f64,
    #[serde(with = "crate::float_serde")]
    pub rhs: f64,
    /// `rhs - lhs` of the final inequality.
    #[serde(with = "crate::float_serde")]
    pub slack: f64,
    /// Every step, the final inequality last.
    pub steps: Vec<BalanceStep>,
    pub pass: bool,
}

impl BalanceAudit {
    /// Smallest relative slack over all steps.
    pub fn min_step_slack(&self) -> f64 {
        self.steps.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min)
    }

    pub fn failed_steps(&self) -> Vec<&str> {
        self.steps
            .iter()
            .filter(|s| !s.holds)
            .map(|s| s.name.as_str())
            .collect()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::Audit(format!(
                "ε-balance at s = {}, t = {}, ε = {:e}: failed steps {:?}",
                self.s,
                self.t,
                self.epsilon,
                self.failed_steps()
            )))
        }
    }
}

/// One sampled `(s, t, ε)` for the ε-balance audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceTuple {
    pub s: f64,
    pub t: f64,
    pub epsilon: f64,
}

/// `count` tuples with `t` uniform on `E`, `s` uniform on `[0, t)` and
/// `ln ε` uniform on `[-20, 0)`.
pub fn random_balance_tuples(set: &TimeSet, count: usize, seed: u64) -> Vec<BalanceTuple> {
    use rand::Rng as _;
    let total: f64 = set.intervals().iter().map(|iv| iv.len()).sum();
    (0..count)
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let mut u = r.random::<f64>() * total;
            let mut t = set.intervals().last().expect("nonempty set").end;
            for iv in set.intervals() {
                if u < iv.len() {
                    t = iv.start + u;
                    break;
                }
                u -= iv.len();
            }
            // keep t > 0 so that s < t is possible
            let t = t.max(total * 1e-9);
            let s = r.random::<f64>() * t;
            let epsilon = (-20.0 * r.random::<f64>()).exp().min(1.0 - f64::EPSILON);
            BalanceTuple { s, t, epsilon }
        })
        .collect()
}

/// `λ` with `ε = exp(-(d3/2) λ^{γ2} dt^{γ3})`.
pub fn lambda_for_epsilon(bundle: &ConstantBundle, epsilon: f64, dt: f64) -> f64 {
    (2.0 * (-epsilon.ln()) / (bundle.d3 * dt.powf(bundle.gamma3))).powf(1.0 / bundle.gamma2)
}

/// Audits the ε-balance inequality for `U(·,0)x0` between `s` and `t ∈ E`.
///
/// Besides the final inequality, the audit checks each step with the
/// constants of `bundle`: the triangle inequalities `F ≤ F_λ + F_λ^⊥` and
/// `G_λ ≤ G + G_λ^⊥`, the uncertainty step, `G_λ^⊥ ≤ ‖C‖ F_λ^⊥`, the
/// dissipation step, and the two intermediate bounds before and after
/// substituting `ε`. Any failing step fails the audit.
pub fn epsilon_balance_check(
    instance: &Instance,
    bundle: &ConstantBundle,
    s: f64,
    t: f64,
    epsilon: f64,
    x0: &Field,
) -> Result<BalanceAudit> {
    bundle.validate()?;
    if !(0.0 <= s && s < t && t <= instance.horizon()) {
        return Err(domain(format!("need 0 <= s < t <= T, got s = {s}, t = {t}")));
    }
    if !(instance.set.contains(t) || instance.set.intervals().iter().any(|iv| iv.end == t)) {
        return Err(domain(format!("t = {t} does not lie in E")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let traj = Trajectory::new(instance, x0)?;
    balance_on(&traj, bundle, s, t, epsilon.ln())
}

/// The audit for `ε = e^{log_eps}`; working with `ln ε` keeps tiny `ε` exact.
pub(crate) fn balance_on(
    traj: &Trajectory,
    bundle: &ConstantBundle,
    s: f64,
    t: f64,
    log_eps: f64,
) -> Result<BalanceAudit> {
    let b = bundle;
    let dt = t - s;
    let (c1, c2) = derive_c1_c2(b)?;
    let lambda = (-2.0 * log_eps / (b.d3 * dt.powf(b.gamma3))).powf(1.0 / b.gamma2);
    let f_s = traj.f(s)?;
    let (f_t, g_t) = traj.fg(t)?;
    let split = traj.split(t, lambda)?;

    let log_ucp = b.d0.ln() + b.d1 * lambda.powf(b.gamma1);
    let blowup = if b.gamma4 == 0.0 {
        1.0
    } else {
        dt.powf(-b.gamma4).max(1.0)
    };
    let log_decay = -b.d3 * lambda.powf(b.gamma2) * dt.powf(b.gamma3);
    // ε^{-1} G(t) + ε F(s)
    let mixed = scaled(-log_eps, g_t) + scaled(log_eps, f_s);

    let mut steps = vec![
        BalanceStep::new("triangle F", f_t, split.f_low + split.f_high),
        BalanceStep::new("triangle G", split.g_low, g_t + split.g_high),
        BalanceStep::new("uncertainty", split.f_low, scaled(log_ucp, split.g_low)),
        BalanceStep::new("observation bound", split.g_high, b.observation_bound * split.f_high),
        BalanceStep::new("dissipation", split.f_high, scaled(blowup.ln() + log_decay, b.d2 * f_s)),
        BalanceStep::new(
            "before epsilon",
            f_t,
            scaled(
                c1.ln() + b.d1 * lambda.powf(b.gamma1) + blowup.ln(),
                g_t + scaled(log_decay, f_s),
            ),
        ),
        BalanceStep::new(
            "after epsilon",
            f_t,
            scaled(c1.ln() + blowup.ln() + b.d1 * lambda.powf(b.gamma1) + log_eps, mixed),
        ),
    ];
    let rhs = scaled(c1.ln() + c2 * dt.powf(-b.kappa()), mixed);
    steps.push(BalanceStep::new("epsilon balance", f_t, rhs));
    let pass = steps.iter().all(|s| s.holds);
    Ok(BalanceAudit {
        s,
        t,
        epsilon: log_eps.exp(),
        log_epsilon: log_eps,
        lambda,
        f_t,
        f_s,
        g_t,
        split,
        lhs: f_t,
        rhs,
        slack: rhs - f_t,
        steps,
        pass,
    })
}
