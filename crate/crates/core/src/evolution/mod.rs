//! Fourier-multiplier evolution families on the torus.
//!
//! A time-dependent elliptic symbol `𝔞(t, ξ) = Σ a_α(t)(iξ)^α` with
//! coefficients constant on the pieces of a time mesh generates
//! `U(t, s) = e^{-Φ(t, s, D)}`, `Φ(t, s, ξ) = ∫_s^t 𝔞(τ, ξ) dτ`. Because `Φ` is
//! a finite sum, the evolution law `U(t, s)U(s, r) = U(t, r)` holds to rounding.

mod dissipation;
mod family;
mod grid;
mod projector;
mod symbol;

pub use dissipation::{certify_de, de_bound, DeCertificate, DeSample};
pub use family::{estimate_exp_bound, time_pairs, EvolutionFamily, ExpBound, Propagator};
pub use grid::{read_field, write_field, Field, GridSpace, GridSpec, Spectrum, TORUS_SIDE};
pub use projector::{ProjectorKind, SpectralProjector};
pub use symbol::{EllipticSymbol, EllipticityCertificate, SymbolTerm};
