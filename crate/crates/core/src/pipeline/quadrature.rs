use serde::{Deserialize, Serialize};

use crate::{NormExponent, Result};

/// Relative change between successive refinements at which quadrature stops.
pub const QUAD_RTOL: f64 = 1e-8;
/// Panels are at least `3^-MAX_LEVEL` of their piece wide.
pub const MAX_LEVEL: u32 = 20;

/// `‖g‖_{L^r(pieces)}` for several `r` at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetNorms {
    pub values: Vec<f64>,
    pub nodes: usize,
    pub converged: bool,
}

/// Splits `pieces` at every breakpoint strictly inside them.
pub fn split_at(pieces: &[(f64, f64)], breakpoints: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a, b) in pieces {
        let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&c| c > a && c < b).collect();
        cuts.sort_by(f64::total_cmp);
        let mut lo = a;
        for c in cuts {
            if c > lo {
                out.push((lo, c));
                lo = c;
            }
        }
        out.push((lo, b));
    }
    out
}

/// Midpoint sums of `g^p` over a panel of width `w` from its midpoint value
/// `v` and the midpoints `left`, `right` of its outer thirds, combined by one
/// Richardson step: `(9 M_{w/3} - M_w) / 8`.
fn extrapolated(p: f64, w: f64, v: f64, left: f64, right: f64) -> f64 {
    let coarse = w * v.powf(p);
    let fine = w / 3.0 * (left.powf(p) + v.powf(p) + right.powf(p));
    (9.0 * fine - coarse) / 8.0
}

/// Adaptive composite midpoint rule with tripling.
///
/// Each piece starts as 9 panels, the first of them graded geometrically
/// towards the left end (where a parabolic orbit may start). A panel's
/// estimate is its midpoint sum on one and on three nodes combined by a
/// Richardson step; the panel is accepted when, for every `r`, that estimate
/// and the sum of the estimates of its three thirds differ by at most
/// [`QUAD_RTOL`] times the larger of the panel integral and the panel's share
/// `(width / total length) · I` of an estimate `I` of the whole integral.
/// Since `g ≥ 0` the summed differences stay below `2 · QUAD_RTOL · I`. The
/// estimate starts from the coarse panels and is redone if it came out more
/// than twice the result. Panels are refined at most [`MAX_LEVEL`] times
/// below the length of their piece; hitting the limit clears `converged`.
/// For `r = ∞` the value is the largest sampled `g`.
pub fn lr_norms(pieces: &[(f64, f64)], exponents: &[NormExponent], g: impl Fn(f64) -> Result<f64>) -> Result<SetNorms> {
    let finite: Vec<f64> = exponents
        .iter()
        .filter_map(|r| match r {
            NormExponent::Finite(p) => Some(*p),
            NormExponent::Infinity => None,
        })
        .collect();
    let pieces: Vec<(f64, f64)> = pieces.iter().copied().filter(|(a, b)| b > a).collect();
    let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    let mut nodes = 0;
    let mut sup: f64 = 0.0;
    let eval = |t: f64, nodes: &mut usize, sup: &mut f64| -> Result<f64> {
        let v = g(t)?;
        *nodes += 1;
        *sup = sup.max(v);
        Ok(v)
    };

    // coarse panels: (left end, width, midpoint, left-third midpoint, right-third midpoint)
    let mut coarse = Vec::with_capacity(20 * pieces.len());
    for &(a, b) in &pieces {
        let h = (b - a) / 9.0;
        let mut edges: Vec<f64> = (0..=MAX_LEVEL).rev().map(|k| a + h * 3f64.powi(-(k as i32))).collect();
        edges.insert(0, a);
        edges.extend((2..=9).map(|i| a + i as f64 * h));
        for e in edges.windows(2) {
            let (lo, w) = (e[0], e[1] - e[0]);
            let v = eval(lo + 0.5 * w, &mut nodes, &mut sup)?;
            let left = eval(lo + w / 6.0, &mut nodes, &mut sup)?;
            let right = eval(lo + 5.0 * w / 6.0, &mut nodes, &mut sup)?;
            coarse.push((lo, w, v, left, right));
        }
    }
    let mut estimate: Vec<f64> = finite
        .iter()
        .map(|&p| {
            coarse
                .iter()
                .map(|&(_, w, v, l, r)| extrapolated(p, w, v, l, r))
                .sum::<f64>()
                .max(0.0)
        })
        .collect();

    loop {
        let mut integrals = vec![0.0; finite.len()];
        let mut converged = true;
        let mut stack: Vec<(f64, f64, f64, f64, f64, u32)> = coarse
            .iter()
            .rev()
            .map(|&(lo, w, v, l, r)| (lo, w, v, l, r, 2))
            .collect();
        while let Some((lo, w, v, left, right, level)) = stack.pop() {
            let third = w / 3.0;
            // thirds of each third: (left end, midpoint, left, right)
            let mut kids = [(0.0, 0.0, 0.0, 0.0); 3];
            for (k, mid) in [left, v, right].into_iter().enumerate() {
                let a = lo + k as f64 * third;
                let l = eval(a + third / 6.0, &mut nodes, &mut sup)?;
                let r = eval(a + 5.0 * third / 6.0, &mut nodes, &mut sup)?;
                kids[k] = (a, mid, l, r);
            }
            let refined: Vec<f64> = finite
                .iter()
                .map(|&p| kids.iter().map(|&(_, m, l, r)| extrapolated(p, third, m, l, r)).sum())
                .collect();
            let settled = finite.iter().zip(&refined).zip(&estimate).all(|((&p, &fine), &whole)| {
                let diff = (fine - extrapolated(p, w, v, left, right)).abs();
                diff <= QUAD_RTOL * fine.abs().max(whole * w / total)
            });
            if settled || level + 1 >= MAX_LEVEL {
                converged &= settled;
                for (acc, fine) in integrals.iter_mut().zip(&refined) {
                    *acc += fine;
                }
            } else {
                for &(a, m, l, r) in kids.iter().rev() {
                    stack.push((a, third, m, l, r, level + 1));
                }
            }
        }
        for i in &mut integrals {
            *i = i.max(0.0);
        }
        if estimate.iter().zip(&integrals).any(|(e, i)| *e > 2.0 * i) {
            estimate = integrals;
            continue;
        }
        let mut finite_iter = integrals.into_iter().zip(&finite);
        let values = exponents
            .iter()
            .map(|r| match r {
                NormExponent::Infinity => sup,
                NormExponent::Finite(_) => {
                    let (integral, p) = finite_iter.next().expect("one integral per finite exponent");
                    integral.powf(1.0 / p)
                }
            })
            .collect();
        return Ok(SetNorms {
            values,
            nodes,
            converged,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential_integrals() {
        let r = [NormExponent::ONE, NormExponent::TWO, NormExponent::Infinity];
        let out = lr_norms(&[(0.0, 1.0), (2.0, 3.0)], &r, Ok).unwrap();
        assert!(out.converged);
        assert!((out.values[0] - 3.0).abs() < 1e-12);
        assert!((out.values[1] - (1.0f64 / 3.0 + 19.0 / 3.0).sqrt()).abs() < 1e-8);
        assert!(out.values[2] <= 3.0 && out.values[2] > 2.99);
        let e = lr_norms(&[(0.0, 1.0)], &[NormExponent::ONE], |t| Ok((-5.0 * t).exp())).unwrap();
        assert!((e.values[0] - (1.0 - (-5.0f64).exp()) / 5.0).abs() < 1e-8);
    }

    #[test]
    fn zero_integrand() {
        let out = lr_norms(&[(0.0, 1.0)], &[NormExponent::ONE, NormExponent::Infinity], |_| Ok(0.0)).unwrap();
        assert_eq!(out.values, vec![0.0, 0.0]);
        assert!(out.converged);
    }

    #[test]
    fn initial_layer_converges() {
        // heat-like layer of width 1e-4 at the left end
        let out = lr_norms(&[(0.0, 1.0)], &[NormExponent::ONE], |t| {
            Ok(1.0 + 100.0 * (-1e4 * t).exp())
        })
        .unwrap();
        assert!(out.converged);
        let exact = 1.0 + 100.0 * (1.0 - (-1e4f64).exp()) / 1e4;
        assert!((out.values[0] - exact).abs() < 1e-7 * exact, "{:?} vs {exact}", out);
        assert!(
            out.nodes < 100_000,
            "{} nodes, value {} vs {exact}",
            out.nodes,
            out.values[0]
        );
    }

    #[test]
    fn splitting() {
        assert_eq!(
            split_at(&[(0.0, 1.0)], &[0.5, 1.0, 0.0, 0.25]),
            vec![(0.0, 0.25), (0.25, 0.5), (0.5, 1.0)]
        );
    }
}
