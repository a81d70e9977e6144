use approx::{assert_abs_diff_eq, assert_relative_eq};
use censored_newsvendor::distributions::{DemandDistribution, RngStream};
use censored_newsvendor::newsvendor::{
    CostParameters, cost, cost_difference, optimal_quantity, vanilla_regret,
};
use proptest::prelude::*;

fn arb_distribution() -> impl Strategy<Value = DemandDistribution> {
    prop_oneof![
        (0u64..20, 1u64..150)
            .prop_map(|(lo, span)| DemandDistribution::discrete_uniform(lo, lo + span).unwrap()),
        (5.0f64..120.0).prop_map(|m| DemandDistribution::exponential(m).unwrap()),
        (0.5f64..120.0).prop_map(|m| DemandDistribution::poisson(m).unwrap()),
        ((-20.0f64..100.0), (5.0f64..50.0))
            .prop_map(|(loc, scale)| DemandDistribution::truncated_normal(loc, scale).unwrap()),
        proptest::collection::vec(((0.0f64..150.0), (0.05f64..1.0)), 1..6).prop_map(|raw| {
            let total: f64 = raw.iter().map(|&(_, w)| w).sum();
            let atoms: Vec<(f64, f64)> = raw.iter().map(|&(x, w)| (x, w / total)).collect();
            DemandDistribution::point_mass_mixture(&atoms).unwrap()
        }),
        proptest::collection::vec(0.0f64..150.0, 1..40)
            .prop_map(|xs| DemandDistribution::empirical_from_samples(&xs).unwrap()),
    ]
}

fn arb_costs() -> impl Strategy<Value = CostParameters> {
    ((0.2f64..10.0), (0.2f64..10.0)).prop_map(|(b, h)| CostParameters::new(b, h).unwrap())
}

#[test]
fn cost_parameters_validate_and_expose_the_critical_ratio() {
    let cp = CostParameters::new(3.0, 1.0).unwrap();
    assert_eq!(cp.b(), 3.0);
    assert_eq!(cp.h(), 1.0);
    assert_relative_eq!(cp.rho(), 0.75, max_relative = 1e-15);
    assert!(CostParameters::new(0.0, 1.0).is_err());
    assert!(CostParameters::new(1.0, -2.0).is_err());
    assert!(CostParameters::new(f64::NAN, 1.0).is_err());
    assert!(CostParameters::new(f64::INFINITY, 1.0).is_err());
}

#[test]
fn exponential_cost_hand_values() {
    let d = DemandDistribution::exponential(80.0).unwrap();
    let cp = CostParameters::new(1.0, 1.0).unwrap();
    let q_star = optimal_quantity(&d, &cp);
    assert_relative_eq!(q_star, 80.0 * std::f64::consts::LN_2, max_relative = 1e-12);
    assert_abs_diff_eq!(cost(&d, &cp, q_star), 55.45177, epsilon = 1e-4);
    assert_eq!(vanilla_regret(&d, &cp, q_star), 0.0);
}

#[test]
fn critical_quantiles_for_the_acceptance_distributions() {
    let cp = CostParameters::new(9.0, 1.0).unwrap();
    let exponential = DemandDistribution::exponential(80.0).unwrap();
    assert_abs_diff_eq!(optimal_quantity(&exponential, &cp), 184.20681, epsilon = 1e-4);
    let poisson = DemandDistribution::poisson(80.0).unwrap();
    assert_eq!(optimal_quantity(&poisson, &cp), 92.0);
}

#[test]
fn cost_against_a_direct_expectation_on_atoms() {
    // Two-point demand: the cost is a plain finite sum.
    let d = DemandDistribution::point_mass_mixture(&[(2.0, 0.3), (10.0, 0.7)]).unwrap();
    let cp = CostParameters::new(4.0, 1.5).unwrap();
    for q in [0.0, 1.0, 2.0, 5.0, 10.0, 12.0] {
        let direct = 0.3 * (4.0 * (2.0f64 - q).max(0.0) + 1.5 * (q - 2.0f64).max(0.0))
            + 0.7 * (4.0 * (10.0f64 - q).max(0.0) + 1.5 * (q - 10.0f64).max(0.0));
        assert_relative_eq!(cost(&d, &cp, q), direct, max_relative = 1e-12, epsilon = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn cost_is_convex_in_the_order(
        d in arb_distribution(),
        cp in arb_costs(),
        a in 0.0f64..200.0,
        step in 0.01f64..40.0,
    ) {
        let (c0, c1, c2) = (
            cost(&d, &cp, a),
            cost(&d, &cp, a + step),
            cost(&d, &cp, a + 2.0 * step),
        );
        prop_assert!(c1 <= (c0 + c2) / 2.0 + 1e-8, "midpoint {c1} above chord {}", (c0 + c2) / 2.0);
    }

    #[test]
    fn the_optimal_quantity_minimizes_the_cost(
        d in arb_distribution(),
        cp in arb_costs(),
    ) {
        let q_star = optimal_quantity(&d, &cp);
        let c_star = cost(&d, &cp, q_star);
        let span = q_star.abs().max(10.0);
        for i in 0..=60 {
            let q = (q_star - span) + 2.0 * span * (i as f64 / 60.0);
            if q < 0.0 {
                continue;
            }
            let c = cost(&d, &cp, q);
            prop_assert!(
                c >= c_star - 1e-8 * c_star.abs().max(1.0),
                "cost {c} at {q} beats optimum {c_star} at {q_star}"
            );
        }
    }

    #[test]
    fn cost_is_lipschitz_with_the_worse_unit_cost(
        d in arb_distribution(),
        cp in arb_costs(),
        q1 in 0.0f64..200.0,
        q2 in 0.0f64..200.0,
    ) {
        let gap = (cost(&d, &cp, q1) - cost(&d, &cp, q2)).abs();
        let bound = cp.b().max(cp.h()) * (q1 - q2).abs();
        prop_assert!(gap <= bound + 1e-9, "cost moved {gap} over allowance {bound}");
    }

    #[test]
    fn cost_difference_agrees_with_subtraction(
        d in arb_distribution(),
        cp in arb_costs(),
        q1 in 0.0f64..200.0,
        q2 in 0.0f64..200.0,
    ) {
        let direct = cost(&d, &cp, q1) - cost(&d, &cp, q2);
        let fused = cost_difference(&d, &cp, q1, q2);
        prop_assert!((direct - fused).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn vanilla_regret_is_nonnegative_and_zero_at_the_optimum(
        d in arb_distribution(),
        cp in arb_costs(),
        q in 0.0f64..200.0,
    ) {
        prop_assert!(vanilla_regret(&d, &cp, q) >= -1e-9);
        let q_star = optimal_quantity(&d, &cp);
        prop_assert!(vanilla_regret(&d, &cp, q_star).abs() <= 1e-9);
    }

    #[test]
    fn cost_matches_a_monte_carlo_estimate(
        d in arb_distribution(),
        cp in arb_costs(),
        q in 0.0f64..150.0,
        seed in 0u64..500,
    ) {
        let mut rng = RngStream::new(seed, 5);
        let n = 20_000;
        let losses: Vec<f64> = d
            .sample(&mut rng, n)
            .into_iter()
            .map(|x| cp.b() * (x - q).max(0.0) + cp.h() * (q - x).max(0.0))
            .collect();
        let mc: f64 = losses.iter().sum::<f64>() / n as f64;
        let var: f64 =
            losses.iter().map(|&x| (x - mc).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let analytic = cost(&d, &cp, q);
        prop_assert!(
            (mc - analytic).abs() <= 5.0 * se + 1e-3,
            "monte carlo {mc} vs analytic {analytic}"
        );
    }
}
