use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error};
use crate::{NormExponent, Result};

/// Side length of the torus `[0, 2π)^d`.
pub const TORUS_SIDE: f64 = 2.0 * PI;

/// Serializable description of a grid: `{d, N, p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: NormExponent,
}

/// Values of a grid function in physical space, row-major for `d = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(pub Vec<Complex64>);

/// Unnormalised discrete Fourier coefficients of a [`Field`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(pub Vec<Complex64>);

impl Field {
    pub fn zeros(len: usize) -> Self {
        Field(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn from_real(values: impl IntoIterator<Item = f64>) -> Self {
        Field(values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sub(&self, other: &Field) -> Field {
        Field(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Field) -> Field {
        Field(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// The discretised torus `[0, 2π)^d`, `d ∈ {1, 2}`, with `N` points per axis and a
/// `p`-norm weighted by the cell volume `(2π/N)^d`.
#[derive(Clone)]
pub struct GridSpace {
    dim: usize,
    n: usize,
    norm: NormExponent,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for GridSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpace")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("norm", &self.norm)
            .finish()
    }
}

impl PartialEq for GridSpace {
    fn eq(&self, other: &Self) -> bool {
        self.spec() == other.spec()
    }
}

impl GridSpace {
    pub fn new(dim: usize, n: usize, norm: NormExponent) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(domain(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(domain(format!("points per axis must be a power of two >= 2, got {n}")));
        }
        let mut planner = FftPlanner::new();
        Ok(GridSpace {
            dim,
            n,
            norm,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        GridSpace::new(spec.d, spec.n, spec.p)
    }

    /// Same grid, different norm exponent.
    pub fn with_norm(&self, norm: NormExponent) -> Self {
        GridSpace { norm, ..self.clone() }
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            d: self.dim,
            n: self.n,
            p: self.norm,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn norm_exponent(&self) -> NormExponent {
        self.norm
    }

    /// Total number of grid points `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        TORUS_SIDE / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Signed integer frequency of FFT index `k` along one axis.
    pub fn axis_frequency(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Wave vector of flat index `j` (second component is 0 in one dimension).
    pub fn wavevector(&self, j: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.axis_frequency(j) as f64, 0.0],
            _ => [
                self.axis_frequency(j / self.n) as f64,
                self.axis_frequency(j % self.n) as f64,
            ],
        }
    }

    /// `|ξ|` for every flat index.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.len())
            .map(|j| {
                let [a, b] = self.wavevector(j);
                a.hypot(b)
            })
            .collect()
    }

    /// Physical coordinates of flat index `j`.
    pub fn coordinates(&self, j: usize) -> [f64; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [j as f64 * h, 0.0],
            _ => [(j / self.n) as f64 * h, (j % self.n) as f64 * h],
        }
    }

    pub fn zeros(&self) -> Field {
        Field::zeros(self.len())
    }

    /// Field with the single Fourier mode `e^{i k·x}`.
    pub fn plane_wave(&self, k: [i64; 2]) -> Field {
        Field(
            (0..self.len())
                .map(|j| {
                    let [x, y] = self.coordinates(j);
                    Complex64::from_polar(1.0, k[0] as f64 * x + k[1] as f64 * y)
                })
                .collect(),
        )
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "field of length {len} on a grid of {} points",
                self.len()
            )))
        }
    }

    /// Discrete `L^p` norm with cell-volume weight.
    pub fn norm(&self, field: &Field) -> f64 {
        self.norm_with(field, self.norm)
    }

    pub fn norm_with(&self, field: &Field, p: NormExponent) -> f64 {
        let w = self.cell_volume();
        match p {
            NormExponent::Infinity => field.0.iter().map(|z| z.norm()).fold(0.0, f64::max),
            NormExponent::Finite(1.0) => w * field.0.iter().map(|z| z.norm()).sum::<f64>(),
            NormExponent::Finite(2.0) => (w * field.0.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt(),
            NormExponent::Finite(p) => (w * field.0.iter().map(|z| z.norm().powf(p)).sum::<f64>()).powf(1.0 / p),
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        // rows (or the whole line when d = 1)
        fft.process(data);
        if self.dim == 2 {
            transpose(data, n);
            fft.process(data);
            transpose(data, n);
        }
    }

    pub fn forward(&self, field: &Field) -> Result<Spectrum> {
        self.check_len(field.len())?;
        let mut data = field.0.clone();
        self.transform(&mut data, &self.forward);
        Ok(Spectrum(data))
    }

    pub fn inverse(&self, spectrum: &Spectrum) -> Result<Field> {
        self.check_len(spectrum.0.len())?;
        let mut data = spectrum.0.clone();
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        for z in &mut data {
            *z *= scale;
        }
        Ok(Field(data))
    }

    /// Applies the Fourier multiplier `ξ_j ↦ m[j]`.
    pub fn apply_multiplier(&self, field: &Field, multiplier: &[Complex64]) -> Result<Field> {
        self.check_len(multiplier.len())?;
        let mut spec = self.forward(field)?;
        for (z, m) in spec.0.iter_mut().zip(multiplier) {
            *z *= m;
        }
        self.inverse(&spec)
    }
    /// `p`-operator norm of the Fourier multiplier `ξ_j ↦ m[j]`.
    ///
    /// Exact for `p ∈ {1, 2, ∞}`: the largest `|m|` for `p = 2`, the `ℓ¹` norm
    /// of the convolution kernel for `p ∈ {1, ∞}`. Other exponents get the
    /// Riesz–Thorin interpolation bound between the two.
    pub fn multiplier_norm(&self, multiplier: &[Complex64], p: NormExponent) -> Result<f64> {
        self.check_len(multiplier.len())?;
        let two = multiplier.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let theta = match p {
            NormExponent::Infinity => 0.0,
            NormExponent::Finite(p) => 2.0 * (1.0 / p).min(1.0 - 1.0 / p),
        };
        if theta == 1.0 {
            return Ok(two);
        }
        let kernel = self.inverse(&Spectrum(multiplier.to_vec()))?;
        let one: f64 = kernel.0.iter().map(|z| z.norm()).sum();
        if theta == 0.0 {
            Ok(one)
        } else {
            Ok(two.powf(theta) * one.powf(1.0 - theta))
        }
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Writes a field as a one-line JSON header `{d, N, p}` followed by `N^d`
/// little-endian `(re, im)` pairs of `f64`.
pub fn write_field<W: Write>(mut out: W, grid: &GridSpace, field: &Field) -> Result<()> {
    grid.check_len(field.len())?;
    serde_json::to_writer(&mut out, &grid.spec())?;
    out.write_all(b"\n")?;
    for z in &field.0 {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(mut input: R) -> Result<(GridSpec, Field)> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let spec: GridSpec = serde_json::from_str(header.trim_end())?;
    let len = spec
        .n
        .checked_pow(spec.d as u32)
        .ok_or_else(|| domain("grid too large"))?;
    let mut bytes = vec![0u8; 16 * len];
    input.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok((spec, Field(data)))
}
