use proptest::prelude::*;
use rfs_core::bounds::{
    approx_factor_bound, harmonic_half, harmonic_half_bounds, order_stat_expectation_bounds, steiner_specific_bound,
    trimmed_max_sum_upper_bound, trimmed_min_sum_lower_bound,
};
use rfs_core::{BoundCase, MomentSpec, OrderIndex, ProblemShape, Simplification};

fn mom(mu: f64, sigma: f64) -> MomentSpec {
    MomentSpec::new(mu, sigma).unwrap()
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn harmonic_sandwich_first_ten_thousand() {
    let mut running = 0.0;
    for n in 1..=10_000u64 {
        running += 1.0 / (n as f64).sqrt();
        let h = harmonic_half(n);
        assert_eq!(h, running, "n={n}");
        let (lo, hi) = harmonic_half_bounds(n);
        assert!(lo < h && h <= hi, "n={n}: {lo} < {h} <= {hi}");
    }
}

#[test]
fn order_stat_branches_meet_at_boundaries() {
    let m = mom(0.3, 1.7);
    for k in (2..=200u64).step_by(2) {
        let r = k / 2;
        let (r_f, k_f) = (r as f64, k as f64);
        let (lo, _) = order_stat_expectation_bounds(OrderIndex::new(r, k).unwrap(), m);
        let other = 0.3 - 1.7 * (k_f * (k_f - r_f) / (2.0 * r_f * r_f)).sqrt();
        assert!(rel_close(lo, other), "lower k={k}: {lo} vs {other}");

        let r = k / 2 + 1;
        let (r_f, tail) = (r as f64, (k - r + 1) as f64);
        let (_, hi) = order_stat_expectation_bounds(OrderIndex::new(r, k).unwrap(), m);
        let other = 0.3 + 1.7 * (k_f * (r_f - 1.0) / (2.0 * tail * tail)).sqrt();
        assert!(rel_close(hi, other), "upper k={k}: {hi} vs {other}");
    }
}

#[test]
fn order_stat_bounds_ordered_and_monotone_in_rank() {
    for &(mu, sigma) in &[(0.0, 1.0), (-2.5, 0.5), (4.0, 3.0)] {
        let m = mom(mu, sigma);
        for k in 1..=200u64 {
            let mut prev: Option<(f64, f64)> = None;
            for r in 1..=k {
                let (lo, hi) = order_stat_expectation_bounds(OrderIndex::new(r, k).unwrap(), m);
                assert!(lo <= hi, "k={k} r={r}");
                if let Some((plo, phi)) = prev {
                    assert!(lo >= plo - 1e-12 * plo.abs().max(1.0), "lower decreased at k={k} r={r}");
                    assert!(hi >= phi - 1e-12 * phi.abs().max(1.0), "upper decreased at k={k} r={r}");
                }
                prev = Some((lo, hi));
            }
        }
    }
}

#[test]
fn spot_values() {
    let (lo, hi) = order_stat_expectation_bounds(OrderIndex::new(1, 2).unwrap(), mom(0.0, 1.0));
    assert_eq!((lo, hi), (-1.0, 0.0));
    let (lo, hi) = order_stat_expectation_bounds(OrderIndex::new(2, 2).unwrap(), mom(0.0, 1.0));
    assert_eq!((lo, hi), (0.0, 1.0));

    let shape = ProblemShape::new(2, 1, 1).unwrap();
    let lb = trimmed_min_sum_lower_bound(shape, mom(0.0, 1.0)).unwrap();
    assert!((lb - (-2.0 * (2f64.sqrt() - 1.0))).abs() < 1e-15);
    assert_eq!(trimmed_max_sum_upper_bound(shape, mom(0.0, 1.0)).unwrap(), 1.0);
    let ub = trimmed_max_sum_upper_bound(ProblemShape::new(10, 1, 4).unwrap(), mom(0.0, 1.0)).unwrap();
    assert!((ub - 20f64.sqrt() / 2.0 * 3.0).abs() < 1e-14);
}

#[test]
fn factor_spot_values_exact() {
    let shape = ProblemShape::new(10, 2, 4).unwrap();
    let r = approx_factor_bound(shape, mom(0.0, 1.0)).unwrap();
    assert_eq!(r.case_id, BoundCase::NegativeDenominator);
    assert_eq!(r.relaxed_value, Some(3.0));
    assert!(r.has(Simplification::Three));

    let r = approx_factor_bound(shape, mom(20.0, 1.0)).unwrap();
    assert_eq!(r.case_id, BoundCase::PositiveDenominator);
    assert_eq!(r.relaxed_value, Some(3.0));

    let r = approx_factor_bound(shape, mom(1.0, 1.0)).unwrap();
    assert_eq!(r.relaxed_value, Some(3.75));
    assert!(r.has(Simplification::Four));
}

#[test]
fn steiner_closed_form() {
    let v = steiner_specific_bound(10, 5, mom(1.0, 1.0)).unwrap();
    assert!((v - 140.0 / 43.0).abs() < 1e-12);
    assert_eq!(steiner_specific_bound(10, 5, mom(0.0, 1.0)).unwrap(), 3.0);
    let vals: Vec<f64> =
        [10u64, 100, 1000].iter().map(|&n| steiner_specific_bound(n, n / 2, mom(1.0, 1.0)).unwrap()).collect();
    assert!(vals[0] > vals[1] && vals[1] > vals[2] && vals[2] > 3.0);
    assert!(vals[2] - 3.0 < 0.01);
}

#[test]
fn negative_case_relaxation_can_undercut_exact() {
    // The relaxed closed form is not an upper bound on the exact value when mu < threshold.
    let r = approx_factor_bound(ProblemShape::new(10, 2, 4).unwrap(), mom(0.0, 1.0)).unwrap();
    let (exact, relaxed) = (r.exact_value.unwrap(), r.relaxed_value.unwrap());
    assert!(relaxed < exact, "{relaxed} vs {exact}");
    assert!(r.notes.iter().any(|n| n.contains("not conservative")));
}

#[test]
fn eps_ge_k_can_sit_below_relaxed() {
    let r = approx_factor_bound(ProblemShape::new(10, 3, 6).unwrap(), mom(3.4, 1.0)).unwrap();
    let eps = r
        .simplified_constants
        .iter()
        .find_map(|s| match s {
            Simplification::EpsilonGeK(e) => Some(*e),
            _ => None,
        })
        .unwrap();
    assert!(eps < r.relaxed_value.unwrap());
    assert!(r.notes.iter().any(|n| n.contains("below the relaxed value")));
}

#[test]
fn exact_value_keeps_absolute_numerator_when_bounds_cross() {
    // ell < m with a large mean puts the E[Y] upper bound below the E[Y*] lower bound.
    let shape = ProblemShape::new(6, 3, 1).unwrap();
    let m = mom(2.906057746936158, 0.5);
    let ub = trimmed_max_sum_upper_bound(shape, m).unwrap();
    let lb = trimmed_min_sum_lower_bound(shape, m).unwrap();
    assert!(ub < lb && lb > 0.0);
    let r = approx_factor_bound(shape, m).unwrap();
    assert_eq!(r.case_id, BoundCase::PositiveDenominator);
    assert_eq!(r.exact_value, Some(1.0 + (lb - ub) / lb));
    assert!(r.relaxed_value.unwrap() < r.exact_value.unwrap());
    assert!(r.notes.iter().any(|n| n.contains("absolute value")));
}

fn eligible_shape() -> impl Strategy<Value = ProblemShape> {
    (2u64..=40).prop_flat_map(|k| {
        let ell_max = (k / 2 + 1).min(k).min(10);
        ((1..=(k / 2).min(10)), (1..=ell_max)).prop_map(move |(m, ell)| ProblemShape::new(k, m, ell).unwrap())
    })
}

fn sigma() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4096))]

    #[test]
    fn trimmed_sum_dominance(k in 2u64..=400, s_frac in 0.0f64..1.0, mu in -50.0f64..50.0, sg in 0.01f64..10.0) {
        let s = 1 + ((k / 2 - 1) as f64 * s_frac) as u64;
        let m = mom(mu, sg);
        let lb = trimmed_min_sum_lower_bound(ProblemShape::new(k, s, 1).unwrap(), m).unwrap();
        let ub = trimmed_max_sum_upper_bound(ProblemShape::new(k, 1, s).unwrap(), m).unwrap();
        prop_assert!(ub >= lb);
    }

    #[test]
    fn exact_value_at_least_one(shape in eligible_shape(), mu in -5.0f64..5.0, sg in sigma()) {
        let r = approx_factor_bound(shape, mom(mu, sg)).unwrap();
        if let Some(e) = r.exact_value {
            prop_assert!(e >= 1.0);
        }
    }

    #[test]
    fn positive_case_relaxation_is_conservative(shape in eligible_shape(), mu in -5.0f64..5.0, sg in sigma()) {
        let m = mom(mu, sg);
        let r = approx_factor_bound(shape, m).unwrap();
        let ub = trimmed_max_sum_upper_bound(shape, m).unwrap();
        let lb = trimmed_min_sum_lower_bound(shape, m).unwrap();
        if r.case_id == BoundCase::PositiveDenominator && ub >= lb {
            if let (Some(e), Some(rel)) = (r.exact_value, r.relaxed_value) {
                prop_assert!(rel >= e, "relaxed {} < exact {}", rel, e);
            }
        }
    }

    #[test]
    fn simplified_constants_dominate_relaxed(shape in eligible_shape(), mu in -5.0f64..5.0, sg in sigma()) {
        let r = approx_factor_bound(shape, mom(mu, sg)).unwrap();
        for c in &r.simplified_constants {
            if matches!(c, Simplification::EpsilonGeK(_)) {
                continue;
            }
            if let Some(rel) = r.relaxed_value {
                prop_assert!(rel <= c.value(), "{} > {} for {:?}", rel, c, shape);
            }
        }
    }

    #[test]
    fn every_constant_has_a_note(shape in eligible_shape(), mu in -5.0f64..5.0, sg in sigma()) {
        let r = approx_factor_bound(shape, mom(mu, sg)).unwrap();
        for c in &r.simplified_constants {
            let prefix = match c {
                Simplification::Two => "2:",
                Simplification::Three => "3:",
                Simplification::Four => "4:",
                Simplification::EpsilonGe2(_) => "eps>=2",
                Simplification::EpsilonGeK(_) => "eps>=k",
            };
            prop_assert!(r.notes.iter().any(|n| n.starts_with(prefix)), "{:?}", c);
        }
    }

    #[test]
    fn epsilon_ge2_is_max_of_two_and_relaxed(shape in eligible_shape(), mu in -5.0f64..5.0, sg in sigma()) {
        let r = approx_factor_bound(shape, mom(mu, sg)).unwrap();
        for c in &r.simplified_constants {
            if let Simplification::EpsilonGe2(e) = c {
                let rel = r.relaxed_value.unwrap();
                let want = rel.max(2.0);
                prop_assert!((e - want).abs() <= 1e-9 * want, "{} vs {}", e, want);
            }
        }
    }

    #[test]
    fn steiner_bound_at_most_three_for_nonpositive_mean(n in 4u64..=2000, a in 0.0f64..1.0, mu in -100.0f64..=0.0, sg in 0.01f64..10.0) {
        let alpha = 2 + ((n - 2) as f64 * a) as u64;
        let v = steiner_specific_bound(n, alpha, mom(mu, sg)).unwrap();
        prop_assert!(v <= 3.0 + 1e-12);
    }
}
