use serde::{Deserialize, Serialize};

use super::sensors::SensorFamily;
use crate::error::domain;
use crate::evolution::TORUS_SIDE;
use crate::time_sets::TimeSet;
use crate::Result;

/// Where a thickness predicate fails: the window `(0, L)^d + x` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessWitness {
    /// A time in the failing mesh piece (absent for the time-averaged check).
    pub t: Option<f64>,
    pub x: [f64; 2],
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessReport {
    pub pass: bool,
    pub window: f64,
    pub rho: f64,
    /// `ρ L^d`
    pub required: f64,
    /// Smallest window measure found (time-averaged for the mean check).
    pub min_measure: f64,
    pub witness: Option<ThicknessWitness>,
}

/// Per-axis window weights: `w` whole cells plus the fractional cell `f`,
/// placed after the cells (window starting on a grid point) or before them
/// (window ending on a grid point). The window measure is piecewise linear in
/// the translate with breakpoints at these two positions, so its minimum over
/// all translates is attained at one of them.
struct Window {
    kernels: [Vec<f64>; 2],
}

fn check_window(fam: &SensorFamily, side: f64, rho: f64) -> Result<Window> {
    if !(side > 0.0 && side <= TORUS_SIDE + 1e-12) {
        return Err(domain(format!("window side must lie in (0, 2π], got {side}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(domain(format!("rho must lie in (0, 1], got {rho}")));
    }
    let n = fam.grid().points_per_axis();
    let cells = side / fam.grid().spacing();
    let whole = ((cells + 1e-9).floor() as usize).min(n);
    let frac = if whole == n {
        0.0
    } else {
        (cells - whole as f64).max(0.0)
    };
    let mut after = vec![1.0; whole];
    let mut before = vec![1.0; whole];
    if frac > 1e-9 {
        after.push(frac);
        before.insert(0, frac);
    }
    Ok(Window {
        kernels: [after, before],
    })
}

/// Cyclic correlation `out[j] = Σ_i kernel[i] · values[j + i]`.
fn cyclic_sums(values: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|j| kernel.iter().enumerate().map(|(i, k)| k * values[(j + i) % n]).sum())
        .collect()
}

fn combos(dim: usize) -> &'static [(usize, usize)] {
    if dim == 1 {
        &[(0, 0), (1, 0)]
    } else {
        &[(0, 0), (0, 1), (1, 0), (1, 1)]
    }
}

/// `|Ω ∩ ((0, L)^d + x)|` for the grid realization of `Ω` (each cell belongs
/// to `Ω` iff its corner point does), one table per window placement in
/// [`combos`], indexed by the cell where the window starts.
fn window_tables(fam: &SensorFamily, piece: usize, window: &Window) -> Vec<Vec<f64>> {
    let grid = fam.grid();
    let n = grid.points_per_axis();
    let ones: Vec<f64> = fam.mask(piece).iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    combos(grid.dim())
        .iter()
        .map(|&(a, b)| {
            let counts = if grid.dim() == 1 {
                cyclic_sums(&ones, &window.kernels[a])
            } else {
                let mut rows = vec![0.0; n * n];
                for i in 0..n {
                    rows[i * n..(i + 1) * n]
                        .copy_from_slice(&cyclic_sums(&ones[i * n..(i + 1) * n], &window.kernels[b]));
                }
                let mut out = vec![0.0; n * n];
                for j in 0..n {
                    let column: Vec<f64> = (0..n).map(|i| rows[i * n + j]).collect();
                    for (i, v) in cyclic_sums(&column, &window.kernels[a]).into_iter().enumerate() {
                        out[i * n + j] = v;
                    }
                }
                out
            };
            counts.into_iter().map(|c| c * grid.cell_volume()).collect()
        })
        .collect()
}

/// Minimum over all tables, with the translate `x` where it is attained.
fn table_min(fam: &SensorFamily, window: &Window, tables: &[Vec<f64>]) -> (f64, [f64; 2]) {
    let grid = fam.grid();
    let h = grid.spacing();
    // a leading fractional cell means the window starts inside cell j
    let lead = |kind: usize| {
        let k = &window.kernels[kind];
        if kind == 1 && k[0] < 1.0 {
            (1.0 - k[0]) * h
        } else {
            0.0
        }
    };
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for (&(a, b), table) in combos(grid.dim()).iter().zip(tables) {
        for (j, &m) in table.iter().enumerate() {
            if m < best.0 {
                let mut x = grid.coordinates(j);
                x[0] += lead(a);
                if grid.dim() == 2 {
                    x[1] += lead(b);
                }
                best = (m, x);
            }
        }
    }
    best
}

fn meets(measure: f64, required: f64, window_volume: f64) -> bool {
    measure >= required - 1e-12 * window_volume
}

/// `|Ω(t) ∩ ((0, L)^d + x)| ≥ ρ L^d` for every `t ∈ E` and every grid translate `x`.
pub fn uniform_thickness_check(fam: &SensorFamily, set: &TimeSet, window: f64, rho: f64) -> Result<ThicknessReport> {
    let win = check_window(fam, window, rho)?;
    let volume = window.powi(fam.grid().dim() as i32);
    let required = rho * volume;
    let mut min_measure = f64::INFINITY;
    let mut witness = None;
    for piece in fam.pieces_meeting(set) {
        let (m, x) = table_min(fam, &win, &window_tables(fam, piece, &win));
        if m < min_measure {
            min_measure = m;
            if !meets(m, required, volume) {
                let (lo, hi) = (fam.mesh()[piece], fam.mesh()[piece + 1]);
                let t = set.clip(lo, hi).first().map(|iv| iv.midpoint());
                witness = Some(ThicknessWitness { t, x, measure: m });
            }
        }
    }
    Ok(ThicknessReport {
        pass: witness.is_none(),
        window,
        rho,
        required,
        min_measure,
        witness,
    })
}

/// `(1/T) ∫_0^T |Ω(t) ∩ ((0, L)^d + x)| dt ≥ ρ L^d` for every grid translate `x`,
/// integrating exactly over the piecewise-constant mesh.
pub fn mean_thickness_check(fam: &SensorFamily, horizon: f64, window: f64, rho: f64) -> Result<ThicknessReport> {
    let win = check_window(fam, window, rho)?;
    if (horizon - fam.horizon()).abs() > 1e-12 * horizon {
        return Err(domain(format!(
            "horizon {horizon} does not match the sensor mesh ({})",
            fam.horizon()
        )));
    }
    let volume = window.powi(fam.grid().dim() as i32);
    let required = rho * volume;
    let mut average: Vec<Vec<f64>> = vec![vec![0.0; fam.grid().len()]; combos(fam.grid().dim()).len()];
    for piece in 0..fam.pieces() {
        let weight = (fam.mesh()[piece + 1] - fam.mesh()[piece]) / horizon;
        for (acc, table) in average.iter_mut().zip(window_tables(fam, piece, &win)) {
            for (a, m) in acc.iter_mut().zip(table) {
                *a += weight * m;
            }
        }
    }
    let (min_measure, x) = table_min(fam, &win, &average);
    let witness = (!meets(min_measure, required, volume)).then_some(ThicknessWitness {
        t: None,
        x,
        measure: min_measure,
    });
    Ok(ThicknessReport {
        pass: witness.is_none(),
        window,
        rho,
        required,
        min_measure,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::super::sensors::SensorSpec;
    use super::*;
    use crate::evolution::GridSpace;
    use crate::NormExponent;
    use std::f64::consts::PI;

    fn grid(dim: usize) -> GridSpace {
        GridSpace::new(dim, 64, NormExponent::TWO).unwrap()
    }

    #[test]
    fn full_torus_is_thick() {
        let fam = SensorSpec::full(1, 1.0).realize(&grid(1)).unwrap();
        let e = TimeSet::full(1.0).unwrap();
        assert!(uniform_thickness_check(&fam, &e, 1.0, 1.0).unwrap().pass);
        assert!(mean_thickness_check(&fam, 1.0, 1.0, 1.0).unwrap().pass);
    }

    #[test]
    fn stripes_pass_exactly_at_half() {
        for dim in [1, 2] {
            let l = PI / 2.0;
            let fam = SensorSpec::stripes(dim, 1.0, l, 0.5)
                .unwrap()
                .realize(&grid(dim))
                .unwrap();
            let e = TimeSet::full(1.0).unwrap();
            let half = uniform_thickness_check(&fam, &e, l, 0.5).unwrap();
            assert!(half.pass, "{dim}: {half:?}");
            assert!((half.min_measure - 0.5 * l.powi(dim as i32)).abs() < 1e-12);
            let more = uniform_thickness_check(&fam, &e, l, 0.51).unwrap();
            assert!(!more.pass && more.witness.is_some());
        }
    }

    #[test]
    fn switching_halves_are_mean_thick_only() {
        let fam = SensorSpec::switching_halves(1, 1.0).realize(&grid(1)).unwrap();
        let e = TimeSet::full(1.0).unwrap();
        let uniform = uniform_thickness_check(&fam, &e, PI / 2.0, 0.5).unwrap();
        assert!(!uniform.pass);
        assert_eq!(uniform.witness.as_ref().unwrap().measure, 0.0);
        assert!(mean_thickness_check(&fam, 1.0, PI / 2.0, 0.5).unwrap().pass);
        // on the first half only, the whole-torus window holds half the torus
        let first = TimeSet::from_pairs(1.0, &[(0.0, 0.5)]).unwrap();
        assert!(uniform_thickness_check(&fam, &first, 2.0 * PI, 0.5).unwrap().pass);
    }

    #[test]
    fn drifting_stripes_mean_is_exact() {
        // two pieces, stripes shifted by half a period: the average covers everything half the time
        let l = PI / 2.0;
        let fam = SensorSpec::drifting_stripes(1, 1.0, l, 0.25, 2, l / 2.0)
            .unwrap()
            .realize(&grid(1))
            .unwrap();
        let report = mean_thickness_check(&fam, 1.0, l / 2.0, 0.25).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(!mean_thickness_check(&fam, 1.0, l / 2.0, 0.26).unwrap().pass);
    }

    #[test]
    fn bad_parameters() {
        let fam = SensorSpec::full(1, 1.0).realize(&grid(1)).unwrap();
        assert!(mean_thickness_check(&fam, 1.0, 7.0, 0.5).is_err());
        assert!(mean_thickness_check(&fam, 1.0, 1.0, 0.0).is_err());
        assert!(mean_thickness_check(&fam, 2.0, 1.0, 0.5).is_err());
    }
}
