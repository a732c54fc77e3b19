use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{Field, GridSpace, Spectrum};
use crate::error::domain;
use crate::Result;

/// Shape of the frequency cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProjectorKind {
    /// Keep exactly the modes with `|ξ| ≤ λ`.
    #[default]
    Sharp,
    /// Multiplier equal to 1 on `|ξ| ≤ λ`, 0 on `|ξ| ≥ (1 + width) λ`, with a
    /// `C^∞` transition in between.
    Smoothed { width: f64 },
}

/// The frequency cutoff `P_λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralProjector {
    pub cutoff: f64,
    pub kind: ProjectorKind,
}

fn smooth_step(s: f64) -> f64 {
    // 1 for s <= 0, 0 for s >= 1
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / (1.0 - s)).exp();
    let b = (-1.0 / s).exp();
    a / (a + b)
}

impl SpectralProjector {
    pub fn new(cutoff: f64, kind: ProjectorKind) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(domain(format!("cutoff must be positive, got {cutoff}")));
        }
        if let ProjectorKind::Smoothed { width } = kind {
            if !(width > 0.0 && width.is_finite()) {
                return Err(domain(format!("smoothing width must be positive, got {width}")));
            }
        }
        Ok(SpectralProjector { cutoff, kind })
    }

    pub fn sharp(cutoff: f64) -> Result<Self> {
        SpectralProjector::new(cutoff, ProjectorKind::Sharp)
    }

    /// Multiplier value at wavenumber `|ξ|`.
    pub fn weight(&self, wavenumber: f64) -> f64 {
        match self.kind {
            ProjectorKind::Sharp => {
                if wavenumber <= self.cutoff {
                    1.0
                } else {
                    0.0
                }
            }
            ProjectorKind::Smoothed { width } => smooth_step((wavenumber - self.cutoff) / (width * self.cutoff)),
        }
    }

    pub fn multiplier(&self, grid: &GridSpace) -> Vec<Complex64> {
        grid.wavenumbers()
            .into_iter()
            .map(|r| Complex64::new(self.weight(r), 0.0))
            .collect()
    }

    pub fn complement_multiplier(&self, grid: &GridSpace) -> Vec<Complex64> {
        grid.wavenumbers()
            .into_iter()
            .map(|r| Complex64::new(1.0 - self.weight(r), 0.0))
            .collect()
    }

    /// `P_λ x`
    pub fn apply(&self, grid: &GridSpace, x: &Field) -> Result<Field> {
        grid.apply_multiplier(x, &self.multiplier(grid))
    }

    /// `(Id - P_λ) x`
    pub fn apply_complement(&self, grid: &GridSpace, x: &Field) -> Result<Field> {
        grid.apply_multiplier(x, &self.complement_multiplier(grid))
    }

    /// Splits Fourier coefficients into `(P_λ x, (Id - P_λ) x)` in physical space.
    pub fn split_spectrum(&self, grid: &GridSpace, x: &Spectrum) -> Result<(Field, Field)> {
        let r = grid.wavenumbers();
        let mut low = x.clone();
        let mut high = x.clone();
        for ((lo, hi), k) in low.0.iter_mut().zip(high.0.iter_mut()).zip(r) {
            let w = self.weight(k);
            *lo *= w;
            *hi *= 1.0 - w;
        }
        Ok((grid.inverse(&low)?, grid.inverse(&high)?))
    }

    /// Supremum of the cutoffs that give the same sharp projector on `grid`,
    /// i.e. the smallest discarded wavenumber (`∞` if nothing is discarded).
    /// For smoothed projectors this is the cutoff itself.
    pub fn class_supremum(&self, grid: &GridSpace) -> f64 {
        match self.kind {
            ProjectorKind::Sharp => grid
                .wavenumbers()
                .into_iter()
                .filter(|&r| r > self.cutoff)
                .fold(f64::INFINITY, f64::min),
            ProjectorKind::Smoothed { .. } => self.cutoff,
        }
    }

    /// Infimum of the cutoffs that give the same sharp projector on `grid`,
    /// i.e. the largest kept wavenumber. For smoothed projectors this is the cutoff.
    pub fn class_infimum(&self, grid: &GridSpace) -> f64 {
        match self.kind {
            ProjectorKind::Sharp => grid
                .wavenumbers()
                .into_iter()
                .filter(|&r| r <= self.cutoff)
                .fold(0.0, f64::max),
            ProjectorKind::Smoothed { .. } => self.cutoff,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::NormExponent;

    fn grid() -> GridSpace {
        GridSpace::new(1, 32, NormExponent::TWO).unwrap()
    }

    #[test]
    fn sharp_cutoff_removes_high_modes() {
        let g = grid();
        let x = g.plane_wave([1, 0]).add(&g.plane_wave([3, 0]));
        let p = SpectralProjector::sharp(2.0).unwrap();
        let y = p.apply(&g, &x).unwrap();
        assert!(g.norm(&y.sub(&g.plane_wave([1, 0]))) < 1e-13);
    }

    #[test]
    fn sharp_cutoff_is_idempotent_and_partitions() {
        let g = grid();
        let x = Field::from_real((0..32).map(|j| ((j * 5) % 7) as f64 - 3.0));
        let p = SpectralProjector::sharp(4.5).unwrap();
        let once = p.apply(&g, &x).unwrap();
        let twice = p.apply(&g, &once).unwrap();
        assert!(g.norm(&once.sub(&twice)) <= 1e-13 * g.norm(&x));
        let rest = p.apply_complement(&g, &x).unwrap();
        assert!(g.norm(&once.add(&rest).sub(&x)) <= 1e-13 * g.norm(&x));
    }

    #[test]
    fn smoothed_weight_is_monotone_and_bounded() {
        let p = SpectralProjector::new(4.0, ProjectorKind::Smoothed { width: 0.5 }).unwrap();
        let mut last = 1.0;
        for k in 0..80 {
            let w = p.weight(k as f64 * 0.1);
            assert!((0.0..=1.0).contains(&w));
            assert!(w <= last + 1e-15);
            last = w;
        }
        assert_eq!(p.weight(4.0), 1.0);
        assert_eq!(p.weight(6.0), 0.0);
    }

    #[test]
    fn class_bounds_on_integer_grid() {
        let g = grid();
        let p = SpectralProjector::sharp(2.5).unwrap();
        assert_eq!(p.class_supremum(&g), 3.0);
        assert_eq!(p.class_infimum(&g), 2.0);
        assert_eq!(
            SpectralProjector::sharp(100.0).unwrap().class_supremum(&g),
            f64::INFINITY
        );
    }
}
