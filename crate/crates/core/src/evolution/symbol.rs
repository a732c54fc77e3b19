//! Time-dependent polynomial symbols `𝔞(t, ξ) = Σ_{|α| ≤ m} a_α(t) (iξ)^α` with
//! coefficients that are constant on the pieces of a time mesh.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::GridSpace;
use crate::error::{domain, invariant};
use crate::Result;

/// One monomial `a_α(t) (iξ)^α`; `values[k]` is the coefficient on mesh piece `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    pub alpha: Vec<u32>,
    pub values: Vec<Complex64>,
}

impl SymbolTerm {
    pub fn order(&self) -> u32 {
        self.alpha.iter().sum()
    }

    /// A coefficient that is the same on every piece.
    pub fn constant(alpha: Vec<u32>, value: Complex64) -> Self {
        SymbolTerm {
            alpha,
            values: vec![value],
        }
    }

    fn value(&self, piece: usize) -> Complex64 {
        if self.values.len() == 1 {
            self.values[0]
        } else {
            self.values[piece]
        }
    }
}

/// A symbol of degree `m` on the time mesh `0 = t_0 < … < t_K = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticSymbol {
    pub degree: u32,
    pub mesh: Vec<f64>,
    pub terms: Vec<SymbolTerm>,
    /// Declared ellipticity constant; checked against the grid when a family is built.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellipticity: Option<f64>,
}

/// Outcome of checking `Re Σ_{|α|=m} a_α(t)(iξ)^α ≥ c|ξ|^m` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityCertificate {
    pub degree: u32,
    /// Largest `c` valid on every grid frequency and mesh piece.
    pub constant: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl EllipticSymbol {
    pub fn new(degree: u32, mesh: Vec<f64>, terms: Vec<SymbolTerm>, ellipticity: Option<f64>) -> Result<Self> {
        let symbol = EllipticSymbol {
            degree,
            mesh,
            terms,
            ellipticity,
        };
        symbol.validate()?;
        Ok(symbol)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 2 {
            return Err(domain(format!("degree must be at least 2, got {}", self.degree)));
        }
        if self.mesh.len() < 2 || self.mesh[0] != 0.0 {
            return Err(domain("time mesh must start at 0 and contain at least one piece"));
        }
        if self.mesh.windows(2).any(|w| !(w[0] < w[1])) || !self.mesh.iter().all(|t| t.is_finite()) {
            return Err(domain("time mesh must be strictly increasing"));
        }
        let pieces = self.pieces();
        let dim = self
            .terms
            .first()
            .map(|t| t.alpha.len())
            .ok_or_else(|| domain("symbol has no terms"))?;
        if !(dim == 1 || dim == 2) {
            return Err(domain(format!("multi-index length must be 1 or 2, got {dim}")));
        }
        for term in &self.terms {
            if term.alpha.len() != dim {
                return Err(domain("all multi-indices must have the same length"));
            }
            if term.order() > self.degree {
                return Err(domain(format!(
                    "term of order {} exceeds degree {}",
                    term.order(),
                    self.degree
                )));
            }
            if !(term.values.len() == 1 || term.values.len() == pieces) {
                return Err(domain(format!(
                    "coefficient table has {} values for {pieces} mesh pieces",
                    term.values.len()
                )));
            }
            if term.values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(domain("non-finite coefficient"));
            }
        }
        if self.ellipticity.is_some_and(|c| !(c > 0.0)) {
            return Err(invariant("declared ellipticity constant must be positive"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.terms[0].alpha.len()
    }

    pub fn pieces(&self) -> usize {
        self.mesh.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.mesh.last().expect("validated mesh")
    }

    /// `𝔞(t, ξ) = ξ²` summed over axes, i.e. the heat equation `∂_t u = Δu`, on `[0, T]`.
    pub fn heat(dim: usize, horizon: f64) -> Result<Self> {
        EllipticSymbol::modulated_heat(dim, vec![0.0, horizon], vec![1.0])
    }

    /// `𝔞(t, ξ) = θ(t)|ξ|²` with `θ` piecewise constant on `mesh`.
    pub fn modulated_heat(dim: usize, mesh: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let values: Vec<Complex64> = theta.iter().map(|&v| Complex64::new(-v, 0.0)).collect();
        let terms = (0..dim)
            .map(|axis| {
                let mut alpha = vec![0; dim];
                alpha[axis] = 2;
                SymbolTerm {
                    alpha,
                    values: values.clone(),
                }
            })
            .collect();
        let floor = theta.iter().copied().fold(f64::INFINITY, f64::min);
        EllipticSymbol::new(2, mesh, terms, (floor > 0.0).then_some(floor))
    }

    fn monomial(alpha: &[u32], xi: [f64; 2]) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        alpha.iter().zip(xi).map(|(&a, x)| (i * x).powu(a)).product()
    }

    /// `𝔞(t, ξ)` on mesh piece `piece`.
    pub fn eval(&self, piece: usize, xi: [f64; 2]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.value(piece) * Self::monomial(&t.alpha, xi))
            .sum()
    }

    /// Principal part `Σ_{|α| = m} a_α (iξ)^α` on mesh piece `piece`.
    pub fn principal(&self, piece: usize, xi: [f64; 2]) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.order() == self.degree)
            .map(|t| t.value(piece) * Self::monomial(&t.alpha, xi))
            .sum()
    }

    /// Checks the principal-part bound on all nonzero grid frequencies and mesh pieces.
    pub fn check_ellipticity(&self, grid: &GridSpace) -> EllipticityCertificate {
        let degenerate = self
            .terms
            .iter()
            .filter(|t| t.order() == self.degree)
            .all(|t| t.values.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        if degenerate {
            return EllipticityCertificate {
                degree: self.degree,
                constant: 0.0,
                pass: false,
                reason: Some("all top-order coefficients vanish".into()),
            };
        }
        let mut constant = f64::INFINITY;
        for piece in 0..self.pieces() {
            for j in 0..grid.len() {
                let xi = grid.wavevector(j);
                let r = xi[0].hypot(xi[1]);
                if r == 0.0 {
                    continue;
                }
                let ratio = self.principal(piece, xi).re / r.powi(self.degree as i32);
                constant = constant.min(ratio);
            }
        }
        let mut reason = None;
        if !(constant > 0.0) {
            reason = Some(format!(
                "real part of the principal symbol has lower bound {constant} <= 0"
            ));
        } else if let Some(declared) = self.ellipticity {
            if constant < declared * (1.0 - 1e-12) {
                reason = Some(format!(
                    "certified constant {constant} is below the declared {declared}"
                ));
            }
        }
        EllipticityCertificate {
            degree: self.degree,
            constant,
            pass: reason.is_none(),
            reason,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::NormExponent;

    fn grid1() -> GridSpace {
        GridSpace::new(1, 32, NormExponent::TWO).unwrap()
    }

    #[test]
    fn heat_is_elliptic_with_unit_constant() {
        let cert = EllipticSymbol::heat(1, 1.0).unwrap().check_ellipticity(&grid1());
        assert!(cert.pass);
        assert_eq!((cert.degree, cert.constant), (2, 1.0));
    }

    #[test]
    fn pure_dispersion_fails() {
        // 𝔞 = iξ³ = -(iξ)³
        let s = EllipticSymbol::new(
            3,
            vec![0.0, 1.0],
            vec![SymbolTerm::constant(vec![3], Complex64::new(-1.0, 0.0))],
            None,
        )
        .unwrap();
        assert_eq!(s.eval(0, [2.0, 0.0]), Complex64::new(0.0, 8.0));
        let cert = s.check_ellipticity(&grid1());
        assert!(!cert.pass);
    }

    #[test]
    fn modulated_quartic_takes_minimum_over_pieces() {
        // 𝔞 = θ(t) ξ⁴ = θ(t) (iξ)⁴, θ ∈ {1, 2}
        let s = EllipticSymbol::new(
            4,
            vec![0.0, 0.5, 1.0],
            vec![SymbolTerm {
                alpha: vec![4],
                values: vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
            }],
            Some(1.0),
        )
        .unwrap();
        let cert = s.check_ellipticity(&grid1());
        assert!(cert.pass);
        assert_eq!((cert.degree, cert.constant), (4, 1.0));
    }

    #[test]
    fn degenerate_symbol_reports_reason() {
        let s = EllipticSymbol::new(
            2,
            vec![0.0, 1.0],
            vec![
                SymbolTerm::constant(vec![2], Complex64::new(0.0, 0.0)),
                SymbolTerm::constant(vec![0], Complex64::new(1.0, 0.0)),
            ],
            None,
        )
        .unwrap();
        let cert = s.check_ellipticity(&grid1());
        assert!(!cert.pass);
        assert!(cert.reason.unwrap().contains("vanish"));
    }

    #[test]
    fn two_dimensional_heat() {
        let grid = GridSpace::new(2, 8, NormExponent::TWO).unwrap();
        let s = EllipticSymbol::heat(2, 1.0).unwrap();
        assert_eq!(s.eval(0, [3.0, 4.0]), Complex64::new(25.0, 0.0));
        assert!(s.check_ellipticity(&grid).pass);
    }

    #[test]
    fn rejects_malformed_tables() {
        let bad = EllipticSymbol::new(
            2,
            vec![0.0, 0.5, 1.0],
            vec![SymbolTerm {
                alpha: vec![2],
                values: vec![Complex64::new(-1.0, 0.0); 3],
            }],
            None,
        );
        assert!(bad.is_err());
        assert!(EllipticSymbol::new(
            2,
            vec![0.0, 1.0],
            vec![SymbolTerm::constant(vec![3], Complex64::new(1.0, 0.0))],
            None
        )
        .is_err());
        assert!(EllipticSymbol::modulated_heat(1, vec![0.0, 0.5, 0.4], vec![1.0, 1.0]).is_err());
    }
}
