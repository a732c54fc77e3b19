//! Sensor families `t ↦ Ω(t)`, the observation operators `C(t) = 𝟙_{Ω(t)}`,
//! thickness predicates and empirical certification of the uncertainty relation.

mod sensors;
mod thickness;
mod ucp;

pub use sensors::{SensorBox, SensorFamily, SensorSpec};
pub use thickness::{mean_thickness_check, uniform_thickness_check, ThicknessReport, ThicknessWitness};
pub use ucp::{certify_ucp, UcpCertificate, UcpOptions, UcpSample, UcpSampleKind, MAX_EXTREMAL_BAND};
