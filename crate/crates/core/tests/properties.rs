use finobs::constants::{epsilon_choice, holder_lift, q_ratio, ConstantBundle};
use finobs::evolution::{EllipticSymbol, EvolutionFamily, Field, GridSpace};
use finobs::pipeline::lr_norms;
use finobs::time_sets::{fat_cantor, level_total_schedule, TimeSet};
use finobs::NormExponent;
use proptest::prelude::*;

/// Sorted, disjoint pairs inside `[0, 1]`.
fn interval_set() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(0.0..1.0f64, 2..12).prop_map(|mut ends| {
        ends.sort_by(f64::total_cmp);
        ends.chunks_exact(2)
            .map(|c| (c[0], c[1]))
            .filter(|(a, b)| a < b)
            .collect()
    })
}

fn brute_overlap(pairs: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    pairs.iter().map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn overlap_matches_brute_force_and_is_additive(
        pairs in interval_set().prop_filter("nonempty", |p| !p.is_empty()),
        a in 0.0..1.0f64,
        b in 0.0..1.0f64,
        c in 0.0..1.0f64,
    ) {
        let set = TimeSet::from_pairs(1.0, &pairs).unwrap();
        let mut w = [a, b, c];
        w.sort_by(f64::total_cmp);
        let [lo, mid, hi] = w;
        prop_assert!((set.overlap(lo, hi) - brute_overlap(&pairs, lo, hi)).abs() <= 1e-14);
        prop_assert!((set.overlap(lo, mid) + set.overlap(mid, hi) - set.overlap(lo, hi)).abs() <= 1e-14);
        prop_assert!(set.overlap(lo, hi) <= hi - lo + 1e-15);
        let total = set.measure(None).unwrap();
        prop_assert!((total - brute_overlap(&pairs, 0.0, 1.0)).abs() <= 1e-14);
        for &(s, e) in &pairs {
            prop_assert!(set.contains(0.5 * (s + e)));
        }
    }

    #[test]
    fn fat_cantor_measure(depth in 1usize..8, ratio in 0.05..0.45f64) {
        let set = fat_cantor(1.0, depth, &level_total_schedule(depth, ratio)).unwrap();
        let removed: f64 = (1..=depth as i32).map(|k| ratio.powi(k)).sum();
        prop_assert!((set.measure(None).unwrap() - (1.0 - removed)).abs() <= 1e-12);
        prop_assert_eq!(set.intervals().len(), 1 << depth);
    }

    #[test]
    fn q_and_kappa(g1 in 0.1..3.0f64, gap in 0.05..4.0f64, g3 in 0.1..3.0f64) {
        let g2 = g1 + gap;
        let q = q_ratio(g1, g2, g3).unwrap();
        let kappa = g1 * g3 / (g2 - g1);
        prop_assert!(q > 0.0 && q < 1.0);
        prop_assert!((q.powf(kappa) - 0.75).abs() <= 1e-12);
    }

    #[test]
    fn epsilon_lies_in_unit_interval(
        c3 in 1.0..1e3f64,
        c4 in 0.0..50.0f64,
        delta in 1e-3..10.0f64,
        q in 0.01..0.99f64,
        kappa in 0.1..4.0f64,
    ) {
        let eps = epsilon_choice(c3, c4, delta, q, kappa).unwrap();
        prop_assert!((0.0..1.0).contains(&eps));
    }

    #[test]
    fn holder_lift_is_monotone_in_r(c in 1e-3..1e6f64, measure in 1e-3..10.0f64, p in 1.0..8.0f64) {
        let r = NormExponent::finite(p).unwrap();
        prop_assert_eq!(holder_lift(c, measure, NormExponent::ONE), c);
        let lifted = holder_lift(c, measure, r);
        let top = holder_lift(c, measure, NormExponent::Infinity);
        prop_assert!((top - c * measure).abs() <= 1e-12 * top);
        if measure >= 1.0 {
            prop_assert!(c <= lifted * (1.0 + 1e-12) && lifted <= top * (1.0 + 1e-12));
        } else {
            prop_assert!(c >= lifted * (1.0 - 1e-12) && lifted >= top * (1.0 - 1e-12));
        }
    }

    #[test]
    fn quadrature_matches_exact_integrals(
        a in 0.0..1.0f64,
        len in 0.05..1.0f64,
        rate in 0.0..20.0f64,
        p in 1.0..4.0f64,
    ) {
        let b = a + len;
        let r = NormExponent::finite(p).unwrap();
        let norms = lr_norms(&[(a, b)], &[r, NormExponent::Infinity], |t| Ok((-rate * t).exp())).unwrap();
        let k = rate * p;
        let exact = if k == 0.0 { len } else { ((-k * a).exp() - (-k * b).exp()) / k };
        prop_assert!(norms.converged);
        prop_assert!((norms.values[0] - exact.powf(1.0 / p)).abs() <= 1e-7 * exact.powf(1.0 / p));
        prop_assert!(norms.values[1] <= (-rate * a).exp() * (1.0 + 1e-15));
    }

    #[test]
    fn evolution_law_small_grid(
        r in 0.0..1.0f64,
        ds in 0.0..0.5f64,
        dt in 0.0..0.5f64,
        theta in prop::collection::vec(0.2..3.0f64, 3),
        values in prop::collection::vec(-1.0..1.0f64, 16),
    ) {
        let grid = GridSpace::new(1, 16, NormExponent::TWO).unwrap();
        let symbol = EllipticSymbol::modulated_heat(1, vec![0.0, 0.4, 1.2, 2.0], theta).unwrap();
        let fam = EvolutionFamily::new(symbol, grid.clone()).unwrap();
        let (s, t) = (r + ds, r + ds + dt);
        let x = Field::from_real(values);
        let composed = fam.apply(t, s, &fam.apply(s, r, &x).unwrap()).unwrap();
        let direct = fam.apply(t, r, &x).unwrap();
        prop_assert!(grid.norm(&composed.sub(&direct)) <= 1e-12 * grid.norm(&x).max(1e-300));
        // the heat flow never increases the L² norm
        prop_assert!(grid.norm(&direct) <= grid.norm(&x) * (1.0 + 1e-12));
    }

    #[test]
    fn bundle_round_trips_through_json(d3 in 0.1..10.0f64, omega in -2.0..2.0f64) {
        let bundle = ConstantBundle {
            d0: 1.0,
            d1: 0.5,
            gamma1: 1.0,
            d2: 1.0,
            d3,
            gamma2: 2.0,
            gamma3: 1.0,
            gamma4: 0.0,
            growth_bound: 1.0,
            growth_rate: omega,
            observation_bound: 1.0,
            subexp_blowup: None,
        };
        let back: ConstantBundle = serde_json::from_str(&serde_json::to_string(&bundle).unwrap()).unwrap();
        prop_assert_eq!(back, bundle);
    }
}
