use censored_newsvendor::distributions::RngStream;
use censored_newsvendor::newsvendor::CostParameters;
use censored_newsvendor::policies::{
    Branch, CensoredDataset, CensoredGroup, GroupSelector, censored_saa_quantile, g_minus_hat,
    kaplan_meier, naive_saa, q_dagger_hat, rcn, rcn_plus, sample_quantile, subsample_saa,
    true_saa,
};
use proptest::prelude::*;

fn dataset(groups: &[(f64, &[f64])]) -> CensoredDataset {
    CensoredDataset::new(
        groups
            .iter()
            .map(|(q, sales)| CensoredGroup::new(*q, sales.to_vec()).unwrap())
            .collect(),
    )
    .unwrap()
}

fn unit_costs() -> CostParameters {
    CostParameters::new(1.0, 1.0).unwrap()
}

#[test]
fn group_and_dataset_validation() {
    assert!(CensoredGroup::new(10.0, vec![]).is_err());
    assert!(CensoredGroup::new(10.0, vec![11.0]).is_err());
    assert!(CensoredGroup::new(10.0, vec![-0.5]).is_err());
    assert!(CensoredGroup::new(10.0, vec![f64::NAN]).is_err());
    assert!(CensoredGroup::new(0.0, vec![0.0]).is_err());
    assert!(CensoredGroup::new(-3.0, vec![0.0]).is_err());
    assert!(CensoredDataset::new(vec![]).is_err());

    let d = dataset(&[(10.0, &[1.0, 10.0]), (4.0, &[2.0, 4.0]), (10.0, &[3.0])]);
    assert_eq!(d.boundary(), 10.0);
    assert_eq!(d.distinct_order_quantities(), vec![4.0, 10.0]);
    assert_eq!(d.sales_at(10.0), vec![1.0, 10.0, 3.0]);
    assert_eq!(d.boundary_sales(), vec![1.0, 10.0, 3.0]);
    assert_eq!(d.total_observations(), 5);
    assert_eq!(d.min_group_size(), 1);
}

#[test]
fn sample_quantile_uses_the_rank_comparison_convention() {
    let values = [10.0, 20.0, 30.0, 40.0, 50.0];
    // Smallest k with k/5 >= rho, then the k-th order statistic.
    assert_eq!(sample_quantile(&values, 0.5).unwrap(), 30.0);
    assert_eq!(sample_quantile(&values, 0.6).unwrap(), 30.0);
    assert_eq!(sample_quantile(&values, 0.61).unwrap(), 40.0);
    assert_eq!(sample_quantile(&values, 0.2).unwrap(), 10.0);
    assert_eq!(sample_quantile(&values, 0.999).unwrap(), 50.0);
    assert!(sample_quantile(&values, 0.0).is_err());
    assert!(sample_quantile(&values, 1.0).is_err());
    assert!(sample_quantile(&[], 0.5).is_err());
    // Input order never matters.
    assert_eq!(sample_quantile(&[50.0, 10.0, 40.0, 20.0, 30.0], 0.5).unwrap(), 30.0);
}

#[test]
fn g_minus_hat_counts_strictly_below() {
    let d = dataset(&[(10.0, &[5.0, 10.0, 9.999, 10.0])]);
    assert_eq!(g_minus_hat(&d, 10.0, GroupSelector::Boundary), 0.5);
    assert_eq!(g_minus_hat(&d, 5.0, GroupSelector::Boundary), 0.0);
    assert_eq!(g_minus_hat(&d, 100.0, GroupSelector::All), 1.0);
}

#[test]
fn hedge_estimate_hand_value_and_validation() {
    let cp = unit_costs();
    assert_eq!(q_dagger_hat(0.0, &cp, 10.0, 100.0).unwrap(), 55.0);
    assert!(q_dagger_hat(1.0, &cp, 10.0, 100.0).is_err());
    assert!(q_dagger_hat(-0.1, &cp, 10.0, 100.0).is_err());
    assert!(q_dagger_hat(f64::NAN, &cp, 10.0, 100.0).is_err());
}

// The three decision branches on eight boundary observations at
// rho = 0.5, delta = 0.3, where the confidence half-width is
// sqrt(ln(2/0.3)/16) ~ 0.34434.
#[test]
fn rcn_identifiable_branch_orders_the_censored_quantile() {
    let d = dataset(&[(10.0, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 10.0])]);
    let decision = rcn(&d, &unit_costs(), 100.0, 0.3).unwrap();
    assert_eq!(decision.branch, Some(Branch::LikelyIdentifiable));
    assert_eq!(decision.quantity, 4.0);
    assert_eq!(decision.g_minus_hat, Some(0.875));
}

#[test]
fn rcn_knife_edge_branch_holds_the_boundary() {
    let d = dataset(&[(10.0, &[1.0, 2.0, 3.0, 4.0, 10.0, 10.0, 10.0, 10.0])]);
    let decision = rcn(&d, &unit_costs(), 100.0, 0.3).unwrap();
    assert_eq!(decision.branch, Some(Branch::KnifeEdge));
    assert_eq!(decision.quantity, 10.0);
    assert_eq!(decision.g_minus_hat, Some(0.5));
}

#[test]
fn rcn_unidentifiable_branch_orders_the_estimated_hedge() {
    let d = dataset(&[(10.0, &[10.0; 8])]);
    let decision = rcn(&d, &unit_costs(), 100.0, 0.3).unwrap();
    assert_eq!(decision.branch, Some(Branch::LikelyUnidentifiable));
    assert_eq!(decision.quantity, 55.0);
    assert_eq!(decision.g_minus_hat, Some(0.0));
}

#[test]
fn rcn_validates_its_inputs() {
    let d = dataset(&[(10.0, &[1.0])]);
    let cp = unit_costs();
    assert!(rcn(&d, &cp, 5.0, 0.3).is_err(), "cap below the boundary");
    assert!(rcn(&d, &cp, 100.0, 0.0).is_err());
    assert!(rcn(&d, &cp, 100.0, 1.0).is_err());
    assert!(rcn(&d, &cp, f64::INFINITY, 0.3).is_err());
}

#[test]
fn kaplan_meier_hand_trace() {
    // Events 3, 5, 7; censorings at 8, 10, 10. Survival after 7 is 1/2,
    // so the median lands there.
    let d = dataset(&[(10.0, &[3.0, 10.0, 7.0, 10.0]), (8.0, &[8.0, 5.0])]);
    let decision = kaplan_meier(&d, 0.5).unwrap();
    assert_eq!(decision.quantity, 7.0);
    assert_eq!(decision.policy, "kaplan-meier");
}

#[test]
fn kaplan_meier_falls_back_to_the_boundary_when_all_censored() {
    let d = dataset(&[(10.0, &[10.0, 10.0]), (6.0, &[6.0])]);
    assert_eq!(kaplan_meier(&d, 0.5).unwrap().quantity, 10.0);
}

#[test]
fn subsample_saa_uses_only_uncensored_sales() {
    let d = dataset(&[(10.0, &[1.0, 2.0, 10.0, 10.0]), (5.0, &[3.0, 5.0])]);
    // Uncensored pool: 1, 2, 3.
    assert_eq!(subsample_saa(&d, 0.5).unwrap().quantity, 2.0);
    let all_censored = dataset(&[(10.0, &[10.0, 10.0])]);
    assert_eq!(subsample_saa(&all_censored, 0.5).unwrap().quantity, 10.0);
}

#[test]
fn naive_saa_pools_everything() {
    let d = dataset(&[(10.0, &[1.0, 10.0]), (5.0, &[5.0, 2.0])]);
    // Pool: 1, 2, 5, 10.
    assert_eq!(naive_saa(&d, 0.5).unwrap().quantity, 2.0);
    assert_eq!(naive_saa(&d, 0.9).unwrap().quantity, 10.0);
}

#[test]
fn true_saa_validates_demands() {
    assert_eq!(true_saa(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap().quantity, 2.0);
    assert!(true_saa(&[], 0.5).is_err());
    assert!(true_saa(&[-1.0], 0.5).is_err());
    assert!(true_saa(&[f64::NAN], 0.5).is_err());
}

#[test]
fn decisions_serialize_with_kebab_case_diagnostics() {
    let d = dataset(&[(10.0, &[10.0; 8])]);
    let decision = rcn(&d, &unit_costs(), 100.0, 0.3).unwrap();
    let json = serde_json::to_string(&decision).unwrap();
    assert!(json.contains("\"branch\":\"likely-unidentifiable\""));
    assert!(json.contains("\"policy\":\"rcn\""));
    let bare = naive_saa(&d, 0.5).unwrap();
    let json = serde_json::to_string(&bare).unwrap();
    assert!(!json.contains("branch"));
}

/// Groups with sales drawn against the group's own order quantity, the
/// first group always at the largest quantity.
fn arb_dataset() -> impl Strategy<Value = CensoredDataset> {
    (
        (5.0f64..50.0),
        proptest::collection::vec(0.0f64..1.5, 4..60),
        proptest::collection::vec(((0.3f64..0.9), proptest::collection::vec(0.0f64..1.5, 3..40)), 0..3),
    )
        .prop_map(|(lambda, boundary_fracs, others)| {
            let mut groups = vec![
                CensoredGroup::new(
                    lambda,
                    boundary_fracs.iter().map(|f| (f * lambda).min(lambda)).collect(),
                )
                .unwrap(),
            ];
            for (qfrac, fracs) in others {
                let q = qfrac * lambda;
                groups.push(
                    CensoredGroup::new(q, fracs.iter().map(|f| (f * q).min(q)).collect())
                        .unwrap(),
                );
            }
            CensoredDataset::new(groups).unwrap()
        })
}

fn arb_costs() -> impl Strategy<Value = CostParameters> {
    ((0.2f64..8.0), (0.2f64..8.0)).prop_map(|(b, h)| CostParameters::new(b, h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sample_quantile_is_the_smallest_value_reaching_rho(
        values in proptest::collection::vec(0.0f64..100.0, 1..50),
        rho in 0.01f64..0.999,
    ) {
        let q = sample_quantile(&values, rho).unwrap();
        let n = values.len() as f64;
        let at_most = values.iter().filter(|&&v| v <= q).count() as f64;
        prop_assert!(at_most / n >= rho, "mass at or below the quantile misses rho");
        // No strictly smaller observed value reaches rho.
        let mut below: Vec<f64> = values.iter().copied().filter(|&v| v < q).collect();
        below.sort_by(f64::total_cmp);
        if let Some(&prev) = below.last() {
            let mass = values.iter().filter(|&&v| v <= prev).count() as f64;
            prop_assert!(mass / n < rho);
        }
        prop_assert!(values.contains(&q));
    }

    #[test]
    fn rcn_branch_and_quantity_are_consistent(
        data in arb_dataset(),
        cp in arb_costs(),
        delta in 0.05f64..0.95,
        extra in 1.0f64..200.0,
    ) {
        let cap = data.boundary() + extra;
        let decision = rcn(&data, &cp, cap, delta).unwrap();
        let lambda = data.boundary();
        let n = data.boundary_sales().len() as f64;
        let zeta = ((2.0 / delta).ln() / (2.0 * n)).sqrt();
        let ghat = decision.g_minus_hat.unwrap();
        prop_assert_eq!(decision.zeta, Some(zeta));
        match decision.branch.unwrap() {
            Branch::LikelyIdentifiable => {
                prop_assert!(ghat >= cp.rho() + zeta);
                let saa = censored_saa_quantile(&data, GroupSelector::Boundary, cp.rho()).unwrap();
                prop_assert_eq!(decision.quantity, saa);
            }
            Branch::LikelyUnidentifiable => {
                prop_assert!(ghat < cp.rho() - zeta);
                let hedge = q_dagger_hat(ghat, &cp, lambda, cap).unwrap();
                prop_assert_eq!(decision.quantity, hedge);
                prop_assert!(decision.quantity > lambda && decision.quantity < cap);
            }
            Branch::KnifeEdge => {
                prop_assert!(ghat >= cp.rho() - zeta && ghat < cp.rho() + zeta);
                prop_assert_eq!(decision.quantity, lambda);
            }
        }
        prop_assert!((0.0..=cap).contains(&decision.quantity));
    }

    #[test]
    fn rcn_plus_on_a_single_level_matches_rcn(
        lambda in 5.0f64..50.0,
        fracs in proptest::collection::vec(0.0f64..1.5, 4..60),
        cp in arb_costs(),
        delta in 0.05f64..0.95,
        extra in 1.0f64..200.0,
    ) {
        let sales: Vec<f64> = fracs.iter().map(|f| (f * lambda).min(lambda)).collect();
        let data = CensoredDataset::new(vec![CensoredGroup::new(lambda, sales).unwrap()]).unwrap();
        let cap = lambda + extra;
        let single = rcn(&data, &cp, cap, delta).unwrap();
        let multi = rcn_plus(&data, &cp, cap, delta).unwrap();
        prop_assert_eq!(single.quantity, multi.quantity);
        prop_assert_eq!(single.branch, multi.branch);
    }

    #[test]
    fn rcn_plus_certified_levels_really_pass_their_own_test(
        data in arb_dataset(),
        cp in arb_costs(),
        delta in 0.05f64..0.95,
        extra in 1.0f64..200.0,
    ) {
        let cap = data.boundary() + extra;
        let decision = rcn_plus(&data, &cp, cap, delta).unwrap();
        let levels = data.distinct_order_quantities();
        let k = levels.len() as f64;
        let upper = decision.upper_confidence_levels.clone().unwrap();
        for &level in &levels {
            let sales = data.sales_at(level);
            let n_k = sales.len() as f64;
            let zeta_k = ((2.0 * k / delta).ln() / (2.0 * n_k)).sqrt();
            let ghat_k = sales.iter().filter(|&&s| s < level).count() as f64 / n_k;
            prop_assert_eq!(upper.contains(&level), ghat_k >= cp.rho() + zeta_k);
        }
        if upper.is_empty() {
            prop_assert!(matches!(
                decision.branch,
                Some(Branch::KnifeEdge) | Some(Branch::LikelyUnidentifiable)
            ));
        } else {
            prop_assert_eq!(decision.branch, Some(Branch::LikelyIdentifiable));
            let pooled: Vec<f64> = upper.iter().flat_map(|&l| data.sales_at(l)).collect();
            prop_assert_eq!(decision.quantity, sample_quantile(&pooled, cp.rho()).unwrap());
        }
        prop_assert!((0.0..=cap).contains(&decision.quantity));
    }

    #[test]
    fn policies_ignore_observation_and_group_order(
        data in arb_dataset(),
        cp in arb_costs(),
        seed in 0u64..500,
    ) {
        let mut rng = RngStream::new(seed, 0);
        // Shuffle sales within each group, then reverse the group order.
        let mut groups: Vec<CensoredGroup> = data
            .groups()
            .iter()
            .map(|g| {
                let mut sales = g.sales().to_vec();
                for i in (1..sales.len()).rev() {
                    let j = rng.uniform_int(0, i as u64) as usize;
                    sales.swap(i, j);
                }
                CensoredGroup::new(g.order_quantity(), sales).unwrap()
            })
            .collect();
        groups.reverse();
        let shuffled = CensoredDataset::new(groups).unwrap();

        let cap = data.boundary() + 50.0;
        let a = rcn(&data, &cp, cap, 0.3).unwrap();
        let b = rcn(&shuffled, &cp, cap, 0.3).unwrap();
        prop_assert_eq!(a.quantity, b.quantity);
        prop_assert_eq!(a.branch, b.branch);
        let a = rcn_plus(&data, &cp, cap, 0.3).unwrap();
        let b = rcn_plus(&shuffled, &cp, cap, 0.3).unwrap();
        prop_assert_eq!(a.quantity, b.quantity);
        prop_assert_eq!(a.branch, b.branch);
        for f in [naive_saa, subsample_saa, kaplan_meier] {
            let a = f(&data, cp.rho()).unwrap();
            let b = f(&shuffled, cp.rho()).unwrap();
            prop_assert_eq!(a.quantity, b.quantity, "{} changed under shuffling", a.policy);
        }
    }

    #[test]
    fn visible_quantile_means_censored_saa_equals_true_saa(
        lambda in 5.0f64..50.0,
        fracs in proptest::collection::vec(0.0f64..1.3, 4..60),
        rho in 0.05f64..0.95,
    ) {
        // When at least a rho fraction of boundary sales is uncensored, the
        // empirical quantile rank lands strictly below the boundary, where
        // censoring changed nothing: the censored quantile must equal the
        // quantile of the underlying demands bit for bit.
        let demands: Vec<f64> = fracs.iter().map(|f| f * lambda).collect();
        let sales: Vec<f64> = demands.iter().map(|d| d.min(lambda)).collect();
        let n = sales.len() as f64;
        let ghat = sales.iter().filter(|&&s| s < lambda).count() as f64 / n;
        prop_assume!(ghat >= rho);
        prop_assert_eq!(
            sample_quantile(&sales, rho).unwrap(),
            sample_quantile(&demands, rho).unwrap()
        );
    }

    #[test]
    fn without_censoring_the_estimators_collapse_to_the_sample_quantile(
        lambda in 5.0f64..50.0,
        fracs in proptest::collection::vec(0.0f64..0.99, 4..40),
        rho in 0.05f64..0.95,
    ) {
        // Every sale strictly below its order quantity: no censoring at all.
        let sales: Vec<f64> = fracs.iter().map(|f| f * lambda).collect();
        let data =
            CensoredDataset::new(vec![CensoredGroup::new(lambda, sales.clone()).unwrap()])
                .unwrap();
        let expected = sample_quantile(&sales, rho).unwrap();
        prop_assert_eq!(naive_saa(&data, rho).unwrap().quantity, expected);
        prop_assert_eq!(subsample_saa(&data, rho).unwrap().quantity, expected);
        prop_assert_eq!(kaplan_meier(&data, rho).unwrap().quantity, expected);
    }
}
