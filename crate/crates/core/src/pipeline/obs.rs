use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::lr_norms;
use super::traces::Trajectory;
use super::{scaled, AuditMode, CertifiedBundle, Derivation, Instance};
use crate::evolution::Field;
use crate::{holds, NormExponent, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsRow {
    pub x0_id: usize,
    /// `‖U(T,0)x0‖`
    pub lhs: f64,
    /// `C_obs(r) ‖G‖_{L^r(E)}`
    #[serde(with = "crate::float_serde")]
    pub rhs: f64,
    #[serde(with = "crate::float_serde")]
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsTable {
    pub r: NormExponent,
    #[serde(rename = "C_obs_r")]
    #[serde(with = "crate::float_serde")]
    pub cobs_r: f64,
    pub rows: Vec<ObsRow>,
    #[serde(with = "crate::float_serde")]
    pub min_margin: f64,
    /// `None` in diagnostic mode.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsReport {
    pub mode: AuditMode,
    /// `r = 1` constant.
    #[serde(rename = "C_obs")]
    #[serde(with = "crate::float_serde")]
    pub cobs: f64,
    #[serde(rename = "log_C_obs")]
    pub log_cobs: f64,
    pub overflow: bool,
    pub measure: f64,
    pub tables: Vec<ObsTable>,
    pub quadrature_converged: bool,
    pub pass: Option<bool>,
}

/// Checks `‖U(T,0)x0‖ ≤ C_obs |E|^{1-1/r} ‖G‖_{L^r(E)}` for every `x0` and `r`.
///
/// In [`AuditMode::Certify`] the bundle must be certified on the instance's
/// grid; in [`AuditMode::Diagnostic`] anything runs and no verdict is given.
pub fn verify_obs(
    instance: &Instance,
    bundle: &CertifiedBundle,
    derivation: &Derivation,
    exponents: &[NormExponent],
    batch: &[Field],
    mode: AuditMode,
) -> Result<ObsReport> {
    bundle.admit(instance, mode)?;
    let cert = &derivation.certificate;
    let measure = instance.set.measure(None)?;
    let log_cobs_r: Vec<f64> = exponents
        .iter()
        .map(|r| cert.log_cobs + (1.0 - r.reciprocal()) * measure.ln())
        .collect();
    let pieces = instance.set_pieces(0.0, instance.horizon());
    let horizon = instance.horizon();

    let per_x0: Vec<(f64, Vec<f64>, bool)> = batch
        .par_iter()
        .map(|x0| -> Result<(f64, Vec<f64>, bool)> {
            let traj = Trajectory::new(instance, x0)?;
            let norms = lr_norms(&pieces, exponents, |t| traj.g(t))?;
            Ok((traj.f(horizon)?, norms.values, norms.converged))
        })
        .collect::<Result<_>>()?;

    let verdict = |ok: bool| (mode == AuditMode::Certify).then_some(ok);
    let tables: Vec<ObsTable> = exponents
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let rows: Vec<ObsRow> = per_x0
                .iter()
                .enumerate()
                .map(|(x0_id, (lhs, norms, _))| {
                    let rhs = scaled(log_cobs_r[i], norms[i]);
                    ObsRow {
                        x0_id,
                        lhs: *lhs,
                        rhs,
                        margin: rhs - lhs,
                    }
                })
                .collect();
            let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
            let ok = rows.iter().all(|r| holds(r.lhs, r.rhs));
            ObsTable {
                r,
                cobs_r: log_cobs_r[i].exp(),
                rows,
                min_margin,
                pass: verdict(ok),
            }
        })
        .collect();
    let all = tables.iter().all(|t| t.rows.iter().all(|r| holds(r.lhs, r.rhs)));
    Ok(ObsReport {
        mode,
        cobs: cert.cobs,
        log_cobs: cert.log_cobs,
        overflow: cert.overflow,
        measure,
        tables,
        quadrature_converged: per_x0.iter().all(|p| p.2),
        pass: verdict(all),
    })
}
