use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sensors::SensorFamily;
use crate::error::{domain, Error};
use crate::evolution::{Field, GridSpace, GridSpec, ProjectorKind, SpectralProjector, Spectrum};
use crate::fit::{ls_slope, tidy};
use crate::time_sets::TimeSet;
use crate::{holds, rng, NormExponent, Result};

/// Largest band for which the exact worst case is computed by eigendecomposition.
pub const MAX_EXTREMAL_BAND: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UcpSampleKind {
    /// Random band-limited field.
    Random,
    /// Worst field in the range of a sharp `P_λ` for `p = 2`
    /// (smallest eigenvalue of the masked Gram matrix).
    Extremal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcpSample {
    pub lambda: f64,
    /// Abscissa of the fit: the largest kept wavenumber for a sharp cutoff.
    pub lambda_in: f64,
    pub kind: UcpSampleKind,
    /// `‖P_λ x‖ / min_{τ ∈ E} ‖C(τ) P_λ x‖`
    #[serde(with = "crate::float_serde")]
    pub ratio: f64,
    #[serde(with = "crate::float_serde")]
    pub bound: f64,
    #[serde(with = "crate::float_serde")]
    pub slack: f64,
}

/// Fitted `(d0, d1)` for a fixed `γ1` with the samples that back them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcpCertificate {
    pub d0: f64,
    pub d1: f64,
    pub gamma1: f64,
    pub d1_min: f64,
    pub set: TimeSet,
    pub lambdas: Vec<f64>,
    pub grid: GridSpec,
    pub projector: ProjectorKind,
    pub trials: usize,
    pub seed: u64,
    pub random_samples: usize,
    pub extremal_samples: usize,
    pub samples: Vec<UcpSample>,
    pub violations: usize,
}

impl UcpCertificate {
    /// `d0 e^{d1 λ^{γ1}}`
    pub fn factor(&self, lambda: f64) -> f64 {
        self.d0 * (self.d1 * lambda.powf(self.gamma1)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcpOptions {
    pub gamma1: f64,
    pub d1_min: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for UcpOptions {
    fn default() -> Self {
        UcpOptions {
            gamma1: 1.0,
            d1_min: 0.01,
            trials: 20,
            seed: 0,
        }
    }
}

fn band_limited(grid: &GridSpace, proj: &SpectralProjector, rng: &mut rng::Rng) -> Result<Field> {
    let spec = grid
        .wavenumbers()
        .into_iter()
        .map(|r| {
            let w = proj.weight(r);
            if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * w
            }
        })
        .collect();
    grid.inverse(&Spectrum(spec))
}

fn frequency(grid: &GridSpace, j: usize) -> [i64; 2] {
    let [a, b] = grid.wavevector(j);
    [a as i64, b as i64]
}

fn flat_index(grid: &GridSpace, k: [i64; 2]) -> usize {
    let n = grid.points_per_axis() as i64;
    match grid.dim() {
        1 => k[0].rem_euclid(n) as usize,
        _ => (k[0].rem_euclid(n) * n + k[1].rem_euclid(n)) as usize,
    }
}

/// `sup ‖x‖₂ / ‖𝟙_Ω x‖₂` over `x` spanned by the modes `band`, or `None`
/// when the band is too large to decompose.
fn extremal_ratio(grid: &GridSpace, mask: &[bool], band: &[usize]) -> Result<Option<f64>> {
    if band.len() > MAX_EXTREMAL_BAND {
        return Ok(None);
    }
    let indicator = Field::from_real(mask.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    let hat = grid.forward(&indicator)?;
    let cell = grid.cell_volume();
    let freqs: Vec<[i64; 2]> = band.iter().map(|&j| frequency(grid, j)).collect();
    let gram = DMatrix::from_fn(band.len(), band.len(), |a, b| {
        let (ka, kb) = (freqs[a], freqs[b]);
        hat.0[flat_index(grid, [ka[0] - kb[0], ka[1] - kb[1]])] * cell
    });
    let smallest = gram
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let volume = crate::evolution::TORUS_SIDE.powi(grid.dim() as i32);
    if smallest <= 1e-12 * volume {
        return Ok(Some(f64::INFINITY));
    }
    Ok(Some((volume / smallest).sqrt()))
}

/// Fits the uncertainty relation `‖P_λ x‖ ≤ d0 e^{d1 λ^{γ1}} essinf_{τ ∈ E} ‖C(τ) P_λ x‖`.
///
/// The essential infimum is the minimum over the sensor pieces meeting `E` in
/// positive measure. Samples are random band-limited fields; for a sharp
/// cutoff and `p = 2` the exact worst field is added per mask and `λ`.
/// `d1` is the least-squares slope of `ln ratio` against `λ^{γ1}` (at least
/// `d1_min`) and `d0 ≥ 1` covers every sample.
pub fn certify_ucp(
    sensors: &SensorFamily,
    set: &TimeSet,
    projector: ProjectorKind,
    lambdas: &[f64],
    options: &UcpOptions,
) -> Result<UcpCertificate> {
    if lambdas.is_empty() {
        return Err(domain("λ grid must be nonempty"));
    }
    if !(options.gamma1 > 0.0 && options.d1_min > 0.0) {
        return Err(domain("gamma1 and d1_min must be positive"));
    }
    let grid = sensors.grid();
    let pieces = sensors.pieces_meeting(set);
    if pieces.is_empty() {
        return Err(domain("E does not meet the sensor mesh"));
    }
    let mut masks: Vec<(usize, &[bool])> = Vec::new();
    for &k in &pieces {
        if !masks.iter().any(|(_, m)| *m == sensors.mask(k)) {
            masks.push((k, sensors.mask(k)));
        }
    }

    let jobs: Vec<(usize, f64)> = lambdas.iter().enumerate().map(|(i, &l)| (i, l)).collect();
    let per_lambda: Vec<Vec<UcpSample>> = jobs
        .par_iter()
        .map(|&(i, lambda)| -> Result<Vec<UcpSample>> {
            let proj = SpectralProjector::new(lambda, projector)?;
            let lambda_in = proj.class_infimum(grid);
            let mut out = Vec::new();
            let mut rng = rng::stream(options.seed, i as u64);
            for trial in 0..options.trials {
                let x = band_limited(grid, &proj, &mut rng)?;
                let mut seen = f64::INFINITY;
                let mut blind = pieces[0];
                for &k in &pieces {
                    let v = grid.norm(&sensors.apply_piece(k, &x));
                    if v < seen {
                        seen = v;
                        blind = k;
                    }
                }
                if !(seen > 0.0) {
                    return Err(Error::Certification(format!(
                        "sensor never sees the field: λ = {lambda}, trial {trial}, mesh piece {blind} \
                         [{}, {})",
                        sensors.mesh()[blind],
                        sensors.mesh()[blind + 1]
                    )));
                }
                out.push(UcpSample {
                    lambda,
                    lambda_in,
                    kind: UcpSampleKind::Random,
                    ratio: grid.norm(&x) / seen,
                    bound: 0.0,
                    slack: 0.0,
                });
            }
            if projector == ProjectorKind::Sharp && grid.norm_exponent() == NormExponent::TWO {
                let band: Vec<usize> = (0..grid.len())
                    .filter(|&j| proj.weight(grid.wavenumbers()[j]) > 0.0)
                    .collect();
                for &(k, mask) in &masks {
                    if let Some(ratio) = extremal_ratio(grid, mask, &band)? {
                        if !ratio.is_finite() {
                            return Err(Error::Certification(format!(
                                "some field with |ξ| <= {lambda} vanishes on Ω(t) for t in mesh piece {k} [{}, {})",
                                sensors.mesh()[k],
                                sensors.mesh()[k + 1]
                            )));
                        }
                        out.push(UcpSample {
                            lambda,
                            lambda_in,
                            kind: UcpSampleKind::Extremal,
                            ratio,
                            bound: 0.0,
                            slack: 0.0,
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut samples: Vec<UcpSample> = per_lambda.into_iter().flatten().collect();

    let gamma1 = options.gamma1;
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.lambda_in.powf(gamma1), s.ratio.ln()))
        .collect();
    let d1 = ls_slope(&points).unwrap_or(0.0).max(options.d1_min);
    let d0 = points.iter().map(|&(x, y)| (y - d1 * x).exp()).fold(1.0, f64::max);
    let covers = |d0: f64| {
        d0 >= 1.0
            && samples
                .iter()
                .all(|s| holds(s.ratio, d0 * (d1 * s.lambda_in.powf(gamma1)).exp()))
    };
    let d0 = tidy(d0, covers);

    let mut violations = 0;
    for s in &mut samples {
        s.bound = d0 * (d1 * s.lambda_in.powf(gamma1)).exp();
        s.slack = s.bound - s.ratio;
        if !holds(s.ratio, s.bound) {
            violations += 1;
        }
    }
    let random_samples = samples.iter().filter(|s| s.kind == UcpSampleKind::Random).count();
    Ok(UcpCertificate {
        d0,
        d1,
        gamma1,
        d1_min: options.d1_min,
        set: set.clone(),
        lambdas: lambdas.to_vec(),
        grid: grid.spec(),
        projector,
        trials: options.trials,
        seed: options.seed,
        random_samples,
        extremal_samples: samples.len() - random_samples,
        samples,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::super::sensors::{SensorBox, SensorSpec};
    use super::*;
    use crate::evolution::TORUS_SIDE;
    use std::f64::consts::PI;

    fn grid() -> GridSpace {
        GridSpace::new(1, 64, NormExponent::TWO).unwrap()
    }

    fn options() -> UcpOptions {
        UcpOptions {
            trials: 8,
            seed: 5,
            ..UcpOptions::default()
        }
    }

    #[test]
    fn full_torus_ratio_is_one() {
        let fam = SensorSpec::full(1, 1.0).realize(&grid()).unwrap();
        let e = TimeSet::full(1.0).unwrap();
        let cert = certify_ucp(&fam, &e, ProjectorKind::Sharp, &[2.0, 4.0, 8.0], &options()).unwrap();
        assert_eq!((cert.d0, cert.d1, cert.gamma1), (1.0, 0.01, 1.0));
        assert!(cert
            .samples
            .iter()
            .filter(|s| s.kind == UcpSampleKind::Random)
            .all(|s| s.ratio == 1.0));
        // any p
        let inf = SensorSpec::full(1, 1.0)
            .realize(&grid().with_norm(NormExponent::Infinity))
            .unwrap();
        let cert = certify_ucp(&inf, &e, ProjectorKind::Sharp, &[2.0, 4.0], &options()).unwrap();
        assert!(cert.samples.iter().all(|s| s.ratio == 1.0));
    }

    #[test]
    fn single_mode_in_a_box() {
        // the range of P_λ for λ < 1 is the constant mode: ratio = sqrt(2π / V)
        let fam = SensorSpec {
            mesh: vec![0.0, 1.0],
            pieces: vec![vec![SensorBox::new(vec![0.0], vec![PI / 2.0])]],
        }
        .realize(&grid())
        .unwrap();
        let e = TimeSet::full(1.0).unwrap();
        let cert = certify_ucp(&fam, &e, ProjectorKind::Sharp, &[0.5], &options()).unwrap();
        for s in &cert.samples {
            assert!((s.ratio - (TORUS_SIDE / (PI / 2.0)).sqrt()).abs() < 1e-12, "{s:?}");
        }
        assert!(cert.d0 >= 2.0 - 1e-12);
    }

    #[test]
    fn stripes_certificate_covers_every_sample() {
        let g = GridSpace::new(1, 256, NormExponent::TWO).unwrap();
        let fam = SensorSpec::stripes(1, 1.0, PI / 4.0, 0.5).unwrap().realize(&g).unwrap();
        let e = TimeSet::full(1.0).unwrap();
        let cert = certify_ucp(&fam, &e, ProjectorKind::Sharp, &[2.0, 4.0, 8.0, 16.0], &options()).unwrap();
        assert_eq!(cert.violations, 0);
        assert!(cert.samples.iter().all(|s| s.slack >= -1e-10 * s.bound));
        // the exact worst case dominates every random sample at the same λ
        for l in [2.0, 4.0, 8.0, 16.0] {
            let worst = cert
                .samples
                .iter()
                .find(|s| s.lambda == l && s.kind == UcpSampleKind::Extremal)
                .unwrap()
                .ratio;
            assert!(cert
                .samples
                .iter()
                .filter(|s| s.lambda == l)
                .all(|s| s.ratio <= worst * (1.0 + 1e-10)));
        }
    }

    #[test]
    fn band_wider_than_the_sensor_is_blind() {
        // 33 modes cannot avoid a field vanishing on 32 of 64 cells
        let fam = SensorSpec::stripes(1, 1.0, PI / 4.0, 0.5)
            .unwrap()
            .realize(&grid())
            .unwrap();
        let e = TimeSet::full(1.0).unwrap();
        assert!(matches!(
            certify_ucp(&fam, &e, ProjectorKind::Sharp, &[16.0], &options()),
            Err(Error::Certification(_))
        ));
    }

    #[test]
    fn blind_sensors_fail_with_witness() {
        let fam = SensorSpec::empty(1.0).realize(&grid()).unwrap();
        let e = TimeSet::full(1.0).unwrap();
        let err = certify_ucp(&fam, &e, ProjectorKind::Sharp, &[2.0], &options()).unwrap_err();
        assert!(
            matches!(err, Error::Certification(ref m) if m.contains("mesh piece 0")),
            "{err}"
        );
    }
}
