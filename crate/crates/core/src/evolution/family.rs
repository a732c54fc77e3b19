use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Field, GridSpace, Spectrum};
use super::symbol::{EllipticSymbol, EllipticityCertificate};
use crate::error::{domain, Error};
use crate::fit::{growth_fit, tidy};
use crate::{holds, rng, Result};

/// The evolution family `U(t, s)` of `∂_t u + 𝔞(t, D) u = 0` on the torus.
///
/// `U(t, s)` is the Fourier multiplier `e^{-Φ(t, s, ξ)}` with
/// `Φ(t, s, ξ) = ∫_s^t 𝔞(τ, ξ) dτ`, which is a finite sum because the
/// coefficients are piecewise constant. Symbol values on each mesh piece are
/// cached per frequency when the family is built.
#[derive(Debug, Clone)]
pub struct EvolutionFamily {
    symbol: EllipticSymbol,
    grid: GridSpace,
    ellipticity: EllipticityCertificate,
    /// `piece_values[k][j] = 𝔞(t, ξ_j)` for `t` in mesh piece `k`.
    piece_values: Vec<Vec<Complex64>>,
}

impl EvolutionFamily {
    pub fn new(symbol: EllipticSymbol, grid: GridSpace) -> Result<Self> {
        symbol.validate()?;
        if symbol.dim() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "symbol in {} dimensions on a {}-dimensional grid",
                symbol.dim(),
                grid.dim()
            )));
        }
        let ellipticity = symbol.check_ellipticity(&grid);
        if !ellipticity.pass {
            return Err(Error::Certification(format!(
                "symbol is not uniformly strongly elliptic: {}",
                ellipticity.reason.clone().unwrap_or_default()
            )));
        }
        let piece_values = (0..symbol.pieces())
            .map(|k| (0..grid.len()).map(|j| symbol.eval(k, grid.wavevector(j))).collect())
            .collect();
        Ok(EvolutionFamily {
            symbol,
            grid,
            ellipticity,
            piece_values,
        })
    }

    pub fn symbol(&self) -> &EllipticSymbol {
        &self.symbol
    }

    pub fn grid(&self) -> &GridSpace {
        &self.grid
    }

    pub fn ellipticity(&self) -> &EllipticityCertificate {
        &self.ellipticity
    }

    pub fn horizon(&self) -> f64 {
        self.symbol.horizon()
    }

    fn check_times(&self, t: f64, s: f64) -> Result<()> {
        let horizon = self.horizon();
        if !(s >= 0.0 && t <= horizon) {
            return Err(domain(format!("times ({s}, {t}) outside [0, {horizon}]")));
        }
        if t < s {
            return Err(domain(format!("evolution needs s <= t, got s = {s}, t = {t}")));
        }
        Ok(())
    }

    /// Length of `[s, t]` inside each mesh piece.
    fn piece_weights(&self, t: f64, s: f64) -> Vec<f64> {
        self.symbol
            .mesh
            .windows(2)
            .map(|w| (t.min(w[1]) - s.max(w[0])).max(0.0))
            .collect()
    }

    /// `Φ(t, s, ξ_j)` for every frequency.
    pub fn phase(&self, t: f64, s: f64) -> Result<Vec<Complex64>> {
        self.check_times(t, s)?;
        let weights = self.piece_weights(t, s);
        let mut phase = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (values, &w) in self.piece_values.iter().zip(&weights) {
            if w == 0.0 {
                continue;
            }
            for (acc, v) in phase.iter_mut().zip(values) {
                *acc += v * w;
            }
        }
        Ok(phase)
    }

    /// The multiplier `e^{-Φ(t, s, ξ)}`.
    pub fn multiplier(&self, t: f64, s: f64) -> Result<Vec<Complex64>> {
        Ok(self.phase(t, s)?.into_iter().map(|z| (-z).exp()).collect())
    }

    /// `U(t, s) x`; returns `x` itself when `t = s`.
    pub fn apply(&self, t: f64, s: f64, x: &Field) -> Result<Field> {
        self.check_times(t, s)?;
        if t == s {
            if x.len() != self.grid.len() {
                return Err(Error::GridMismatch("field does not match the family's grid".into()));
            }
            return Ok(x.clone());
        }
        self.grid.apply_multiplier(x, &self.multiplier(t, s)?)
    }

    /// `U(t, s)` acting on Fourier coefficients.
    pub fn apply_spectrum(&self, t: f64, s: f64, x: &Spectrum) -> Result<Spectrum> {
        self.check_times(t, s)?;
        if t == s {
            return Ok(x.clone());
        }
        let m = self.multiplier(t, s)?;
        Ok(Spectrum(x.0.iter().zip(&m).map(|(a, b)| a * b).collect()))
    }
}

/// Evaluates `U(t, 0) x0` at many times from a single forward transform.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    family: &'a EvolutionFamily,
    initial: Spectrum,
}

impl<'a> Propagator<'a> {
    pub fn new(family: &'a EvolutionFamily, x0: &Field) -> Result<Self> {
        Ok(Propagator {
            family,
            initial: family.grid().forward(x0)?,
        })
    }

    pub fn family(&self) -> &'a EvolutionFamily {
        self.family
    }

    /// Fourier coefficients of `U(t, 0) x0`.
    pub fn spectrum_at(&self, t: f64) -> Result<Spectrum> {
        self.family.apply_spectrum(t, 0.0, &self.initial)
    }

    pub fn state_at(&self, t: f64) -> Result<Field> {
        self.family.grid().inverse(&self.spectrum_at(t)?)
    }
}

/// A growth bound `‖U(t, s)‖ ≤ M e^{ω(t-s)}` fitted on sampled time pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpBound {
    #[serde(rename = "M")]
    pub growth_bound: f64,
    #[serde(rename = "omega")]
    pub growth_rate: f64,
    /// Number of `(s, t)` pairs.
    pub pairs: usize,
    /// Number of random fields per pair.
    pub trials: usize,
    pub seed: u64,
    /// Largest sampled `‖U(t, s)x‖ / (M e^{ω(t-s)}‖x‖)`; at most 1 up to rounding.
    pub worst_ratio: f64,
}

/// Time pairs `s < t` from a uniform grid of `points` nodes merged with the mesh.
pub fn time_pairs(horizon: f64, mesh: &[f64], points: usize) -> Vec<(f64, f64)> {
    let mut nodes: Vec<f64> = (0..points.max(2))
        .map(|k| horizon * k as f64 / (points.max(2) - 1) as f64)
        .collect();
    nodes.extend_from_slice(mesh);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * horizon);
    let mut pairs = Vec::new();
    for (i, &s) in nodes.iter().enumerate() {
        for &t in &nodes[i + 1..] {
            pairs.push((s, t));
        }
    }
    pairs
}

/// Fits `(M, ω)` with `M ≥ 1` over all pairs of an 11-point time grid (plus the
/// symbol mesh), minimising `M e^{ωT}`.
///
/// Each pair contributes the multiplier's operator norm (exact for
/// `p ∈ {1, 2, ∞}`) and `trials` random-field ratios.
pub fn estimate_exp_bound(fam: &EvolutionFamily, trials: usize, seed: u64) -> Result<ExpBound> {
    if trials == 0 {
        return Err(domain("trials must be at least 1"));
    }
    let grid = fam.grid();
    let p = grid.norm_exponent();
    let pairs = time_pairs(fam.horizon(), &fam.symbol().mesh, 11);
    let ratios: Vec<(f64, f64)> = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(s, t))| -> Result<(f64, f64)> {
            let m = fam.multiplier(t, s)?;
            let mut worst = grid.multiplier_norm(&m, p)?;
            let mut rng = rng::stream(seed, idx as u64);
            for _ in 0..trials {
                let x = rng::normal_field(grid.len(), &mut rng);
                let y = grid.apply_multiplier(&x, &m)?;
                worst = worst.max(grid.norm(&y) / grid.norm(&x));
            }
            Ok((t - s, worst))
        })
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = ratios.iter().map(|&(dt, r)| (dt, r.ln())).collect();
    let (a, omega) = growth_fit(&points, fam.horizon());
    let fits = |a: f64, omega: f64| ratios.iter().all(|&(dt, r)| holds(r, a.exp() * (omega * dt).exp()));
    let omega = tidy(omega, |w| fits(a, w));
    let a = if a <= 1e-12 && fits(0.0, omega) { 0.0 } else { a };
    let growth_bound = a.exp();
    let worst_ratio = ratios
        .iter()
        .map(|&(dt, r)| r / (growth_bound * (omega * dt).exp()))
        .fold(0.0, f64::max);
    Ok(ExpBound {
        growth_bound,
        growth_rate: omega,
        pairs: pairs.len(),
        trials,
        seed,
        worst_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::NormExponent;

    fn heat_family(n: usize) -> EvolutionFamily {
        let grid = GridSpace::new(1, n, NormExponent::TWO).unwrap();
        EvolutionFamily::new(EllipticSymbol::heat(1, 1.0).unwrap(), grid).unwrap()
    }

    fn amplitude_of(grid: &GridSpace, f: &Field, k: i64) -> Complex64 {
        let spec = grid.forward(f).unwrap();
        let idx = (0..grid.len()).find(|&j| grid.axis_frequency(j) == k).unwrap();
        spec.0[idx] / grid.len() as f64
    }

    #[test]
    fn heat_damps_single_mode() {
        let fam = heat_family(32);
        let x = fam.grid().plane_wave([3, 0]);
        let y = fam.apply(0.35, 0.25, &x).unwrap();
        let a = amplitude_of(fam.grid(), &y, 3);
        assert!((a.re - (-0.9f64).exp()).abs() < 1e-14 && a.im.abs() < 1e-14);
    }

    #[test]
    fn identity_at_equal_times() {
        let fam = heat_family(16);
        let x = Field::from_real((0..16).map(|j| (j as f64).sin() + 0.3));
        assert_eq!(fam.apply(0.4, 0.4, &x).unwrap(), x);
    }

    #[test]
    fn piecewise_integral_of_coefficients() {
        let grid = GridSpace::new(1, 16, NormExponent::TWO).unwrap();
        let sym = EllipticSymbol::modulated_heat(1, vec![0.0, 0.5, 1.0], vec![1.0, 2.0]).unwrap();
        let fam = EvolutionFamily::new(sym, grid.clone()).unwrap();
        let y = fam.apply(1.0, 0.0, &grid.plane_wave([1, 0])).unwrap();
        let a = amplitude_of(&grid, &y, 1);
        assert!((a.re - (-1.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn backwards_time_is_rejected() {
        let fam = heat_family(8);
        assert!(matches!(
            fam.apply(0.1, 0.2, &fam.grid().zeros()),
            Err(Error::Domain(_))
        ));
        assert!(fam.apply(1.5, 0.2, &fam.grid().zeros()).is_err());
    }

    #[test]
    fn non_elliptic_symbol_is_refused() {
        use super::super::symbol::SymbolTerm;
        let grid = GridSpace::new(1, 8, NormExponent::TWO).unwrap();
        let s = EllipticSymbol::new(
            3,
            vec![0.0, 1.0],
            vec![SymbolTerm::constant(vec![3], Complex64::new(-1.0, 0.0))],
            None,
        )
        .unwrap();
        assert!(matches!(EvolutionFamily::new(s, grid), Err(Error::Certification(_))));
    }

    #[test]
    fn propagator_matches_direct_application() {
        let fam = heat_family(32);
        let x0 = Field::from_real((0..32).map(|j| ((j * 7 % 11) as f64) - 5.0));
        let prop = Propagator::new(&fam, &x0).unwrap();
        let a = prop.state_at(0.3).unwrap();
        let b = fam.apply(0.3, 0.0, &x0).unwrap();
        assert!(fam.grid().norm(&a.sub(&b)) < 1e-13 * fam.grid().norm(&x0));
    }

    #[test]
    fn heat_growth_bound_is_trivial() {
        let fam = heat_family(32);
        let b = estimate_exp_bound(&fam, 3, 7).unwrap();
        assert_eq!((b.growth_bound, b.growth_rate), (1.0, 0.0));
        let inf = EvolutionFamily::new(fam.symbol().clone(), fam.grid().with_norm(NormExponent::Infinity)).unwrap();
        let b = estimate_exp_bound(&inf, 3, 7).unwrap();
        assert!(b.growth_bound >= 1.0 && b.worst_ratio <= 1.0 + 1e-10);
    }

    #[test]
    fn shifted_heat_grows_at_rate_one() {
        use super::super::symbol::SymbolTerm;
        let grid = GridSpace::new(1, 32, NormExponent::TWO).unwrap();
        let sym = EllipticSymbol::new(
            2,
            vec![0.0, 1.0],
            vec![
                SymbolTerm::constant(vec![2], Complex64::new(-1.0, 0.0)),
                SymbolTerm::constant(vec![0], Complex64::new(-1.0, 0.0)),
            ],
            None,
        )
        .unwrap();
        let fam = EvolutionFamily::new(sym, grid).unwrap();
        let b = estimate_exp_bound(&fam, 2, 1).unwrap();
        assert_eq!((b.growth_bound, b.growth_rate), (1.0, 1.0));
    }
}
