//! Runs and audits the proof chain on a concrete instance: traces `F`, `G`,
//! the ε-balance inequality, the telescoping chain and the final
//! observability estimate.

mod balance;
mod obs;
mod quadrature;
mod telescope;
mod traces;

pub use balance::{
    epsilon_balance_check, lambda_for_epsilon, random_balance_tuples, BalanceAudit, BalanceStep, BalanceTuple,
};
pub use obs::{verify_obs, ObsReport, ObsRow, ObsTable};
pub use quadrature::{lr_norms, split_at, SetNorms, MAX_LEVEL, QUAD_RTOL};
pub use telescope::{run_telescope, TelescopeAudit, TelescopeStep};
pub use traces::{compute_traces, Split, TraceRecord, Trajectory};

use serde::{Deserialize, Serialize};

use crate::constants::{q_ratio, ConstantBundle, ObservabilityCertificate};
use crate::error::{invariant, Error};
use crate::evolution::{
    certify_de, estimate_exp_bound, time_pairs, DeCertificate, EvolutionFamily, ExpBound, Field, GridSpace, GridSpec,
    ProjectorKind,
};
use crate::observation::{certify_ucp, SensorFamily, UcpCertificate, UcpOptions};
use crate::time_sets::{build_sequence, find_density_point, DensitySequence, DensityThreshold, TimeSet};
use crate::{rng, NormExponent, Result, SetMode};

/// Whether audits may run on constants that were not certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    /// Refuse uncertified constants; report pass/fail.
    #[default]
    Certify,
    /// Run on anything and report margins without a verdict.
    Diagnostic,
}

/// Evolution family, sensors, observation set and projector shape on one grid.
#[derive(Debug, Clone)]
pub struct Instance {
    pub family: EvolutionFamily,
    pub sensors: SensorFamily,
    pub set: TimeSet,
    pub projector: ProjectorKind,
}

impl Instance {
    pub fn new(family: EvolutionFamily, sensors: SensorFamily, set: TimeSet, projector: ProjectorKind) -> Result<Self> {
        if family.grid() != sensors.grid() {
            return Err(Error::GridMismatch(format!(
                "evolution grid {:?} differs from sensor grid {:?}",
                family.grid().spec(),
                sensors.grid_spec()
            )));
        }
        let horizon = family.horizon();
        for (name, other) in [("sensor mesh", sensors.horizon()), ("time set", set.horizon())] {
            if (other - horizon).abs() > 1e-12 * horizon {
                return Err(invariant(format!(
                    "{name} horizon {other} differs from the symbol horizon {horizon}"
                )));
            }
        }
        Ok(Instance {
            family,
            sensors,
            set,
            projector,
        })
    }

    pub fn grid(&self) -> &GridSpace {
        self.family.grid()
    }

    pub fn horizon(&self) -> f64 {
        self.family.horizon()
    }

    /// Breakpoints of the symbol and sensor meshes.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .family
            .symbol()
            .mesh
            .iter()
            .chain(self.sensors.mesh())
            .copied()
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `E ∩ (lo, hi)` split at every mesh breakpoint.
    pub fn set_pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let pieces: Vec<(f64, f64)> = self.set.clip(lo, hi).iter().map(|iv| (iv.start, iv.end)).collect();
        split_at(&pieces, &self.breakpoints())
    }

    /// `n` initial data with independent standard normal values.
    pub fn random_batch(&self, n: usize, seed: u64) -> Vec<Field> {
        (0..n)
            .map(|i| rng::normal_field(self.grid().len(), &mut rng::stream(seed, i as u64)))
            .collect()
    }
}

/// A constant bundle and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBundle {
    pub constants: ConstantBundle,
    /// Every constant came out of a certification run on `grid`.
    pub certified: bool,
    pub grid: GridSpec,
    pub seed: Option<u64>,
}

impl CertifiedBundle {
    /// A bundle supplied by hand; usable in diagnostic mode only.
    pub fn uncertified(constants: ConstantBundle, grid: GridSpec) -> Self {
        CertifiedBundle {
            constants,
            certified: false,
            grid,
            seed: None,
        }
    }

    /// Checks that the bundle may be used on `instance` under `mode`.
    pub fn admit(&self, instance: &Instance, mode: AuditMode) -> Result<()> {
        self.constants.validate()?;
        if mode == AuditMode::Certify {
            if !self.certified {
                return Err(Error::Certification(
                    "constants are not certified; use diagnostic mode".into(),
                ));
            }
            if self.grid != instance.grid().spec() {
                return Err(Error::GridMismatch(format!(
                    "constants certified on {:?}, instance grid is {:?}",
                    self.grid,
                    instance.grid().spec()
                )));
            }
        }
        Ok(())
    }
}

/// Sampling grids for [`certify_instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub de_lambdas: Vec<f64>,
    /// `(s, t)` pairs for the dissipation fit; empty means all pairs of an
    /// 11-point grid merged with the symbol mesh.
    #[serde(default)]
    pub de_pairs: Vec<(f64, f64)>,
    pub ucp_lambdas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub gamma1: f64,
    pub d1_min: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            de_lambdas: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            de_pairs: vec![],
            ucp_lambdas: vec![2.0, 4.0, 8.0, 16.0],
            trials: 10,
            seed: 0,
            gamma1: 1.0,
            d1_min: 0.01,
        }
    }
}

/// Everything [`certify_instance`] measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCertificates {
    pub growth: ExpBound,
    pub dissipation: DeCertificate,
    pub uncertainty: UcpCertificate,
    pub bundle: CertifiedBundle,
}

/// Certifies growth, dissipation and uncertainty constants and assembles the bundle.
pub fn certify_instance(instance: &Instance, options: &CertifyOptions) -> Result<InstanceCertificates> {
    let growth = estimate_exp_bound(&instance.family, options.trials, options.seed)?;
    let pairs = if options.de_pairs.is_empty() {
        time_pairs(instance.horizon(), &instance.family.symbol().mesh, 11)
    } else {
        options.de_pairs.clone()
    };
    let dissipation = certify_de(
        &instance.family,
        instance.projector,
        &options.de_lambdas,
        &pairs,
        options.trials,
        options.seed,
    )?;
    let ucp_options = UcpOptions {
        gamma1: options.gamma1,
        d1_min: options.d1_min,
        trials: options.trials,
        seed: options.seed,
    };
    let uncertainty = certify_ucp(
        &instance.sensors,
        &instance.set,
        instance.projector,
        &options.ucp_lambdas,
        &ucp_options,
    )?;
    let constants = ConstantBundle {
        d0: uncertainty.d0,
        d1: uncertainty.d1,
        gamma1: uncertainty.gamma1,
        d2: dissipation.d2,
        d3: dissipation.d3,
        gamma2: dissipation.gamma2,
        gamma3: dissipation.gamma3,
        gamma4: dissipation.gamma4,
        growth_bound: growth.growth_bound,
        growth_rate: growth.growth_rate,
        observation_bound: instance.sensors.sup_norm_on(&instance.set),
        subexp_blowup: None,
    };
    constants.validate()?;
    let bundle = CertifiedBundle {
        constants,
        certified: true,
        grid: instance.grid().spec(),
        seed: Some(options.seed),
    };
    Ok(InstanceCertificates {
        growth,
        dissipation,
        uncertainty,
        bundle,
    })
}

/// Chooses `(ℓ, ℓ1)`: the longest interval of `E` in full-interval mode, the
/// best scanned density point otherwise. `ell1` overrides the upper end.
pub fn choose_window(set: &TimeSet, q: f64, mode: SetMode, ell1: Option<f64>) -> Result<(f64, f64)> {
    let (ell, top) = match mode {
        SetMode::FullInterval => {
            let iv = set.longest_interval();
            (iv.start, iv.end)
        }
        SetMode::GeneralE => {
            let p = find_density_point(set, q, DensityThreshold::Strict, None)?;
            (p.ell, p.ell1())
        }
    };
    Ok((ell, ell1.unwrap_or(top)))
}

/// The density sequence and the derived constant chain for an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub sequence: DensitySequence,
    pub certificate: ObservabilityCertificate,
}

/// Builds the refinement sequence and the observability certificate (`r = 1`).
pub fn derive_chain(
    set: &TimeSet,
    bundle: &ConstantBundle,
    mode: SetMode,
    depth: usize,
    ell1: Option<f64>,
) -> Result<Derivation> {
    let q = q_ratio(bundle.gamma1, bundle.gamma2, bundle.gamma3)?;
    let (ell, ell1) = choose_window(set, q, mode, ell1)?;
    let sequence = build_sequence(set, ell, ell1, q, depth, mode)?;
    let certificate = ObservabilityCertificate::derive(
        bundle,
        mode,
        set.horizon(),
        ell,
        ell1,
        depth,
        set.measure(None)?,
        NormExponent::ONE,
    )?;
    Ok(Derivation { sequence, certificate })
}

/// `e^{log_factor} · value`, with `0` whenever `value = 0`.
pub(crate) fn scaled(log_factor: f64, value: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        (log_factor + value.ln()).exp()
    }
}

/// Relative slack `(rhs - lhs) / max(|lhs|, |rhs|)`, `0` when both vanish.
pub(crate) fn relative_slack(lhs: f64, rhs: f64) -> f64 {
    if rhs == f64::INFINITY {
        return if lhs == f64::INFINITY { 0.0 } else { 1.0 };
    }
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (rhs - lhs) / scale
    }
}
