use serde::{Deserialize, Serialize};

use super::Instance;
use crate::evolution::{Field, Propagator, SpectralProjector, Spectrum};
use crate::Result;

/// `F(t) = ‖U(t,0)x0‖` and `G(t) = ‖C(t)U(t,0)x0‖` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub x0_id: usize,
    pub times: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
}

/// The orbit `t ↦ U(t,0)x0` with the norms the proof works with.
#[derive(Debug, Clone)]
pub struct Trajectory<'a> {
    instance: &'a Instance,
    propagator: Propagator<'a>,
    norm0: f64,
}

/// `F_λ`, `F_λ^⊥`, `G_λ`, `G_λ^⊥` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    #[serde(rename = "F_lambda")]
    pub f_low: f64,
    #[serde(rename = "F_lambda_perp")]
    pub f_high: f64,
    #[serde(rename = "G_lambda")]
    pub g_low: f64,
    #[serde(rename = "G_lambda_perp")]
    pub g_high: f64,
}

impl<'a> Trajectory<'a> {
    pub fn new(instance: &'a Instance, x0: &Field) -> Result<Self> {
        let propagator = Propagator::new(&instance.family, x0)?;
        Ok(Trajectory {
            instance,
            propagator,
            norm0: instance.grid().norm(x0),
        })
    }

    pub fn initial_norm(&self) -> f64 {
        self.norm0
    }

    pub fn spectrum(&self, t: f64) -> Result<Spectrum> {
        self.propagator.spectrum_at(t)
    }

    pub fn state(&self, t: f64) -> Result<Field> {
        self.propagator.state_at(t)
    }

    /// `F(t)`
    pub fn f(&self, t: f64) -> Result<f64> {
        Ok(self.instance.grid().norm(&self.state(t)?))
    }

    /// `G(t)`
    pub fn g(&self, t: f64) -> Result<f64> {
        let y = self.instance.sensors.apply(t, &self.state(t)?)?;
        Ok(self.instance.grid().norm(&y))
    }

    /// `(F(t), G(t))` from a single transform.
    pub fn fg(&self, t: f64) -> Result<(f64, f64)> {
        let x = self.state(t)?;
        let grid = self.instance.grid();
        Ok((grid.norm(&x), grid.norm(&self.instance.sensors.apply(t, &x)?)))
    }

    /// Splits `U(t,0)x0` at the cutoff `λ`.
    pub fn split(&self, t: f64, lambda: f64) -> Result<Split> {
        let grid = self.instance.grid();
        let (low, high) = if lambda.is_infinite() {
            (self.state(t)?, grid.zeros())
        } else {
            SpectralProjector::new(lambda, self.instance.projector)?.split_spectrum(grid, &self.spectrum(t)?)?
        };
        let sensors = &self.instance.sensors;
        Ok(Split {
            f_low: grid.norm(&low),
            f_high: grid.norm(&high),
            g_low: grid.norm(&sensors.apply(t, &low)?),
            g_high: grid.norm(&sensors.apply(t, &high)?),
        })
    }
}

/// Evaluates `F` and `G` at every time of `times`.
pub fn compute_traces(instance: &Instance, x0: &Field, times: &[f64], x0_id: usize) -> Result<TraceRecord> {
    let traj = Trajectory::new(instance, x0)?;
    let mut f = Vec::with_capacity(times.len());
    let mut g = Vec::with_capacity(times.len());
    for &t in times {
        let (a, b) = traj.fg(t)?;
        f.push(a);
        g.push(b);
    }
    Ok(TraceRecord {
        x0_id,
        times: times.to_vec(),
        f,
        g,
    })
}
