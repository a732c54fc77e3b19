//! Small fitting helpers shared by the certification routines.

/// Rounds `value` to ten significant digits when the rounded value still
/// passes `accept`; otherwise returns `value` unchanged.
pub(crate) fn tidy(value: f64, accept: impl Fn(f64) -> bool) -> f64 {
    if value == 0.0 || !value.is_finite() {
        return value;
    }
    let scale = 10f64.powi(9 - value.abs().log10().floor() as i32);
    let rounded = (value * scale).round() / scale;
    if accept(rounded) {
        rounded
    } else {
        value
    }
}

/// Least-squares slope of `y` against `x`; `None` when `x` has no spread.
pub(crate) fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Fits `y ≤ a + ω x` with `a ≥ 0`, minimising `a + ω·horizon`.
///
/// The objective is convex and piecewise linear in `ω`, so its minimum sits at
/// `ω = 0`, at some `y_i / x_i`, or at a crossing of two constraint lines.
/// Ties go to the smaller `a`.
pub(crate) fn growth_fit(points: &[(f64, f64)], horizon: f64) -> (f64, f64) {
    let intercept = |omega: f64| points.iter().map(|&(x, y)| y - omega * x).fold(0.0, f64::max);
    let mut candidates = vec![0.0];
    for (i, &(xi, yi)) in points.iter().enumerate() {
        if xi > 0.0 {
            candidates.push(yi / xi);
        }
        for &(xj, yj) in &points[i + 1..] {
            if xi != xj {
                candidates.push((yi - yj) / (xi - xj));
            }
        }
    }
    let mut best = (f64::INFINITY, f64::INFINITY, 0.0);
    for omega in candidates {
        let a = intercept(omega);
        let objective = a + omega * horizon;
        if objective < best.0 - 1e-14 * best.0.abs().max(1.0)
            || (objective <= best.0 + 1e-14 * best.0.abs().max(1.0) && a < best.1)
        {
            best = (objective, a, omega);
        }
    }
    (best.1, best.2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tidy_rounds_only_when_accepted() {
        assert_eq!(tidy(0.9999999999999998, |_| true), 1.0);
        assert_eq!(tidy(0.9999999999999998, |v| v < 1.0), 0.9999999999999998);
        assert_eq!(tidy(0.0, |_| true), 0.0);
    }

    #[test]
    fn slope_of_a_line() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((ls_slope(&pts).unwrap() - 2.0).abs() < 1e-14);
        assert!(ls_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_none());
    }

    #[test]
    fn growth_fit_prefers_rate_over_prefactor() {
        let pts: Vec<_> = (1..=4).map(|i| (i as f64 * 0.25, i as f64 * 0.25)).collect();
        let (a, omega) = growth_fit(&pts, 1.0);
        assert!(a.abs() < 1e-15 && (omega - 1.0).abs() < 1e-15);
        let flat: Vec<_> = (1..=4).map(|i| (i as f64 * 0.25, -(i as f64))).collect();
        assert_eq!(growth_fit(&flat, 1.0), (0.0, -4.0));
    }
}
