use std::path::Path;

use anyhow::{bail, Context};
use finobs::evolution::{EllipticSymbol, EvolutionFamily, GridSpace, GridSpec, ProjectorKind};
use finobs::observation::{SensorBox, SensorSpec};
use finobs::pipeline::{CertifyOptions, Instance};
use finobs::time_sets::{fat_cantor, level_total_schedule, TimeSet};
use finobs::{NormExponent, SetMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub grid: GridSpec,
    pub horizon: f64,
    pub symbol: SymbolConfig,
    pub sensors: SensorConfig,
    pub time_set: TimeSetConfig,
    #[serde(default)]
    pub projector: ProjectorKind,
    #[serde(default)]
    pub certify: CertifySection,
    pub mode: SetMode,
    #[serde(default)]
    pub ell1: Option<f64>,
    #[serde(default = "default_r")]
    pub r: Vec<NormExponent>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_balance_samples")]
    pub balance_samples: usize,
    #[serde(default = "default_trace_points")]
    pub trace_points: usize,
}

fn default_r() -> Vec<NormExponent> {
    vec![NormExponent::ONE]
}

fn default_depth() -> usize {
    8
}

fn default_batch() -> usize {
    20
}

fn default_balance_samples() -> usize {
    20
}

fn default_trace_points() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolConfig {
    Heat,
    ModulatedHeat { mesh: Vec<f64>, theta: Vec<f64> },
    General(EllipticSymbol),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SensorConfig {
    Full,
    Empty,
    Stripes {
        period: f64,
        fill: f64,
        /// Observe only while `t ∈ E`.
        #[serde(default)]
        on_set_only: bool,
    },
    DriftingStripes {
        period: f64,
        fill: f64,
        pieces: usize,
        drift: f64,
    },
    SwitchingHalves,
    Boxes {
        boxes: Vec<SensorBox>,
        #[serde(default)]
        on_set_only: bool,
    },
    Custom(SensorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeSetConfig {
    Full,
    Intervals {
        intervals: Vec<(f64, f64)>,
    },
    /// Level `k` removes a total of `ratio^k · T`.
    FatCantor {
        depth: usize,
        ratio: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifySection {
    pub de_lambdas: Vec<f64>,
    pub de_pairs: Vec<(f64, f64)>,
    pub ucp_lambdas: Vec<f64>,
    pub trials: usize,
    pub gamma1: f64,
    pub d1_min: f64,
}

impl Default for CertifySection {
    fn default() -> Self {
        let d = CertifyOptions::default();
        CertifySection {
            de_lambdas: d.de_lambdas,
            de_pairs: d.de_pairs,
            ucp_lambdas: d.ucp_lambdas,
            trials: d.trials,
            gamma1: d.gamma1,
            d1_min: d.d1_min,
        }
    }
}

/// The part of a config that fixes the certified constants.
#[derive(Serialize)]
struct InstanceKey<'a> {
    schema_version: u32,
    seed: u64,
    grid: &'a GridSpec,
    horizon: f64,
    symbol: &'a SymbolConfig,
    sensors: &'a SensorConfig,
    time_set: &'a TimeSetConfig,
    projector: &'a ProjectorKind,
    certify: &'a CertifySection,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            bail!("horizon must be positive, got {}", self.horizon);
        }
        if self.r.is_empty() {
            bail!("r list must not be empty");
        }
        if self.depth == 0 || self.batch == 0 {
            bail!("depth and batch must be positive");
        }
        if self.trace_points < 2 {
            bail!("trace_points must be at least 2");
        }
        if self.mode == SetMode::FullInterval && self.time_set()?.longest_interval().is_empty() {
            bail!("full-interval mode needs an interval inside E");
        }
        Ok(())
    }

    /// Hash of the whole config.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    /// Hash of the fields that determine the certified constants.
    pub fn instance_hash(&self) -> String {
        let key = InstanceKey {
            schema_version: self.schema_version,
            seed: self.seed,
            grid: &self.grid,
            horizon: self.horizon,
            symbol: &self.symbol,
            sensors: &self.sensors,
            time_set: &self.time_set,
            projector: &self.projector,
            certify: &self.certify,
        };
        sha256_hex(&serde_json::to_vec(&key).expect("config serializes"))
    }

    pub fn time_set(&self) -> finobs::Result<TimeSet> {
        match &self.time_set {
            TimeSetConfig::Full => TimeSet::full(self.horizon),
            TimeSetConfig::Intervals { intervals } => TimeSet::from_pairs(self.horizon, intervals),
            TimeSetConfig::FatCantor { depth, ratio } => {
                fat_cantor(self.horizon, *depth, &level_total_schedule(*depth, *ratio))
            }
        }
    }

    pub fn symbol(&self) -> finobs::Result<EllipticSymbol> {
        let d = self.grid.d;
        match &self.symbol {
            SymbolConfig::Heat => EllipticSymbol::heat(d, self.horizon),
            SymbolConfig::ModulatedHeat { mesh, theta } => {
                EllipticSymbol::modulated_heat(d, mesh.clone(), theta.clone())
            }
            SymbolConfig::General(s) => {
                s.validate()?;
                Ok(s.clone())
            }
        }
    }

    pub fn sensor_spec(&self, set: &TimeSet) -> finobs::Result<SensorSpec> {
        let (d, t) = (self.grid.d, self.horizon);
        let confine = |boxes: Vec<SensorBox>, on_set_only: bool| {
            if on_set_only {
                SensorSpec::on_set_only(set, boxes)
            } else {
                SensorSpec {
                    mesh: vec![0.0, t],
                    pieces: vec![boxes],
                }
            }
        };
        Ok(match &self.sensors {
            SensorConfig::Full => SensorSpec::full(d, t),
            SensorConfig::Empty => SensorSpec::empty(t),
            SensorConfig::Stripes {
                period,
                fill,
                on_set_only,
            } => confine(SensorSpec::stripe_boxes(d, *period, *fill, 0.0)?, *on_set_only),
            SensorConfig::DriftingStripes {
                period,
                fill,
                pieces,
                drift,
            } => SensorSpec::drifting_stripes(d, t, *period, *fill, *pieces, *drift)?,
            SensorConfig::SwitchingHalves => SensorSpec::switching_halves(d, t),
            SensorConfig::Boxes { boxes, on_set_only } => confine(boxes.clone(), *on_set_only),
            SensorConfig::Custom(spec) => spec.clone(),
        })
    }

    pub fn grid(&self) -> finobs::Result<GridSpace> {
        GridSpace::from_spec(self.grid)
    }

    /// Evolution family only; enough for dissipation certification.
    pub fn family(&self) -> finobs::Result<EvolutionFamily> {
        EvolutionFamily::new(self.symbol()?, self.grid()?)
    }

    pub fn instance(&self) -> finobs::Result<Instance> {
        let grid = self.grid()?;
        let set = self.time_set()?;
        let sensors = self.sensor_spec(&set)?.realize(&grid)?;
        let family = EvolutionFamily::new(self.symbol()?, grid)?;
        Instance::new(family, sensors, set, self.projector)
    }

    pub fn certify_options(&self) -> CertifyOptions {
        let c = &self.certify;
        CertifyOptions {
            de_lambdas: c.de_lambdas.clone(),
            de_pairs: c.de_pairs.clone(),
            ucp_lambdas: c.ucp_lambdas.clone(),
            trials: c.trials,
            seed: self.seed,
            gamma1: c.gamma1,
            d1_min: c.d1_min,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat() -> ExperimentConfig {
        serde_json::from_str(
            r#"{"schema_version": 1, "seed": 3, "grid": {"d": 1, "N": 32, "p": 2}, "horizon": 1.0,
                "symbol": {"kind": "heat"}, "sensors": {"kind": "full"}, "time_set": {"kind": "full"},
                "mode": "full-interval", "r": [1, 2, "inf"]}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_and_round_trip() {
        let c = heat();
        assert_eq!(c.depth, 8);
        assert_eq!(c.projector, ProjectorKind::Sharp);
        assert_eq!(c.r.len(), 3);
        let again: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
        c.instance().unwrap();
    }

    #[test]
    fn instance_hash_ignores_audit_settings() {
        let a = heat();
        let mut b = a.clone();
        b.batch = 99;
        b.r = vec![NormExponent::ONE];
        assert_eq!(a.instance_hash(), b.instance_hash());
        assert_ne!(a.hash(), b.hash());
        b.seed = 4;
        assert_ne!(a.instance_hash(), b.instance_hash());
    }

    #[test]
    fn rejects_missing_seed_and_bad_version() {
        let missing = r#"{"schema_version": 1, "grid": {"d": 1, "N": 32, "p": 2}, "horizon": 1.0,
            "symbol": {"kind": "heat"}, "sensors": {"kind": "full"}, "time_set": {"kind": "full"},
            "mode": "general-e"}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(missing).is_err());
        let mut c = heat();
        c.schema_version = 2;
        assert!(c.validate().is_err());
    }
}
