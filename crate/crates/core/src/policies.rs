//! Ordering policies over censored sales data.
//!
//! Data arrives in groups: each group is a batch of periods that shared one
//! order quantity, and the recorded sale of a period is `min(demand, order)`.
//! The largest order quantity across groups is the observable boundary: no
//! policy can learn anything about demand beyond it.
//!
//! The robust policies (`rcn`, `rcn_plus`) test which side of the
//! identifiability divide the data supports and either order an empirical
//! quantile, hold the boundary, or hedge toward the cap. The baselines
//! (`naive_saa`, `subsample_saa`, `kaplan_meier`, `true_saa`) are the usual
//! suspects, included for comparison.

use crate::newsvendor::CostParameters;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no observations to take a quantile of")]
    EmptySample,
}

/// Periods that shared one order quantity, with their recorded sales.
/// Every sale lies in `[0, order_quantity]`; a sale equal to the order
/// quantity is censored (true demand may be larger).
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredGroup {
    order_quantity: f64,
    sales: Vec<f64>,
}

impl CensoredGroup {
    pub fn new(order_quantity: f64, sales: Vec<f64>) -> Result<Self, PolicyError> {
        if !order_quantity.is_finite() || order_quantity <= 0.0 {
            return Err(PolicyError::InvalidDataset(format!(
                "order quantity {order_quantity} must be finite and positive"
            )));
        }
        if sales.is_empty() {
            return Err(PolicyError::InvalidDataset(
                "a group must contain at least one sale".into(),
            ));
        }
        for &s in &sales {
            if !s.is_finite() || s < 0.0 || s > order_quantity {
                return Err(PolicyError::InvalidDataset(format!(
                    "sale {s} outside [0, {order_quantity}]"
                )));
            }
        }
        Ok(Self { order_quantity, sales })
    }

    pub fn order_quantity(&self) -> f64 {
        self.order_quantity
    }

    pub fn sales(&self) -> &[f64] {
        &self.sales
    }

    /// Sales strictly below the order quantity: the demand was seen exactly.
    pub fn uncensored(&self) -> impl Iterator<Item = f64> + '_ {
        let q = self.order_quantity;
        self.sales.iter().copied().filter(move |&s| s < q)
    }
}

/// A full censored history: one or more groups.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredDataset {
    groups: Vec<CensoredGroup>,
}

impl CensoredDataset {
    pub fn new(groups: Vec<CensoredGroup>) -> Result<Self, PolicyError> {
        if groups.is_empty() {
            return Err(PolicyError::InvalidDataset(
                "a dataset must contain at least one group".into(),
            ));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[CensoredGroup] {
        &self.groups
    }

    /// The observable boundary: the largest order quantity in the data.
    pub fn boundary(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.order_quantity)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Distinct order quantities, ascending. Groups that happened to share
    /// an order quantity are pooled under one level.
    pub fn distinct_order_quantities(&self) -> Vec<f64> {
        let mut qs: Vec<f64> = self.groups.iter().map(|g| g.order_quantity).collect();
        qs.sort_by(|a, b| a.partial_cmp(b).expect("order quantities are finite"));
        qs.dedup();
        qs
    }

    /// Pooled sales of every group ordered exactly `level`.
    pub fn sales_at(&self, level: f64) -> Vec<f64> {
        self.groups
            .iter()
            .filter(|g| g.order_quantity == level)
            .flat_map(|g| g.sales.iter().copied())
            .collect()
    }

    /// Pooled sales of the boundary groups.
    pub fn boundary_sales(&self) -> Vec<f64> {
        self.sales_at(self.boundary())
    }

    pub fn total_observations(&self) -> usize {
        self.groups.iter().map(|g| g.sales.len()).sum()
    }

    pub fn min_group_size(&self) -> usize {
        self.groups
            .iter()
            .map(|g| g.sales.len())
            .min()
            .expect("datasets are nonempty")
    }
}

/// Which groups a pooled statistic draws from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupSelector {
    All,
    /// Only the groups ordered at the boundary.
    Boundary,
    /// Only the groups ordered at exactly this level.
    AtOrderQuantity(f64),
}

fn selected_sales(data: &CensoredDataset, selector: GroupSelector) -> Vec<f64> {
    match selector {
        GroupSelector::All => data
            .groups
            .iter()
            .flat_map(|g| g.sales.iter().copied())
            .collect(),
        GroupSelector::Boundary => data.boundary_sales(),
        GroupSelector::AtOrderQuantity(level) => data.sales_at(level),
    }
}

fn check_rho(rho: f64) -> Result<(), PolicyError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(PolicyError::InvalidParameter(format!(
            "critical ratio {rho} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// The empirical rho-quantile: the smallest k-th order statistic (1-indexed)
/// with k/n >= rho. The rank test is the comparison `k/n >= rho` itself, not
/// `k >= ceil(rho * n)`: the product can round up across an integer and
/// shift the rank.
pub fn sample_quantile(values: &[f64], rho: f64) -> Result<f64, PolicyError> {
    check_rho(rho)?;
    if values.is_empty() {
        return Err(PolicyError::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("observations are finite"));
    let n = sorted.len();
    for (i, &v) in sorted.iter().enumerate() {
        if (i + 1) as f64 / n as f64 >= rho {
            return Ok(v);
        }
    }
    Ok(sorted[n - 1])
}

/// Fraction of the selected sales strictly below `threshold`: the empirical
/// estimate of Pr(D < threshold) when the threshold is at or below every
/// selected order quantity.
pub fn g_minus_hat(data: &CensoredDataset, threshold: f64, selector: GroupSelector) -> f64 {
    let sales = selected_sales(data, selector);
    if sales.is_empty() {
        return 0.0;
    }
    let below = sales.iter().filter(|&&s| s < threshold).count();
    below as f64 / sales.len() as f64
}

/// The empirical rho-quantile of the selected pooled sales.
pub fn censored_saa_quantile(
    data: &CensoredDataset,
    selector: GroupSelector,
    rho: f64,
) -> Result<f64, PolicyError> {
    sample_quantile(&selected_sales(data, selector), rho)
}

/// The hedge order with the visible mass replaced by its estimate:
/// `(b M + h lambda - (b+h) ghat M) / ((b+h)(1 - ghat))`.
pub fn q_dagger_hat(
    ghat: f64,
    cp: &CostParameters,
    lambda: f64,
    cap: f64,
) -> Result<f64, PolicyError> {
    if !(0.0..1.0).contains(&ghat) {
        return Err(PolicyError::InvalidParameter(format!(
            "estimated visible mass {ghat} must lie in [0, 1)"
        )));
    }
    let (b, h) = (cp.b(), cp.h());
    Ok((b * cap + h * lambda - (b + h) * ghat * cap) / ((b + h) * (1.0 - ghat)))
}

/// Which side of the identifiability divide a robust policy concluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    LikelyIdentifiable,
    KnifeEdge,
    LikelyUnidentifiable,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::LikelyIdentifiable => "likely-identifiable",
            Branch::KnifeEdge => "knife-edge",
            Branch::LikelyUnidentifiable => "likely-unidentifiable",
        })
    }
}

/// A policy's output plus the diagnostics that explain it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyDecision {
    pub policy: &'static str,
    pub quantity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    /// Estimated Pr(D < boundary) from the pooled boundary groups.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_minus_hat: Option<f64>,
    /// Half-width of the confidence band around `g_minus_hat`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    /// Order-quantity levels whose own confidence test certified
    /// identifiability (the upper-confidence set of `rcn_plus`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_confidence_levels: Option<Vec<f64>>,
}

impl PolicyDecision {
    fn bare(policy: &'static str, quantity: f64) -> Self {
        Self {
            policy,
            quantity,
            branch: None,
            g_minus_hat: None,
            zeta: None,
            upper_confidence_levels: None,
        }
    }
}

fn check_robust_inputs(
    data: &CensoredDataset,
    cp: &CostParameters,
    cap: f64,
    delta: f64,
) -> Result<(), PolicyError> {
    check_rho(cp.rho())?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PolicyError::InvalidParameter(format!(
            "confidence level {delta} must lie in (0, 1)"
        )));
    }
    if !cap.is_finite() || cap < data.boundary() {
        return Err(PolicyError::InvalidParameter(format!(
            "cap {cap} must be finite and at least the boundary {}",
            data.boundary()
        )));
    }
    Ok(())
}

/// The robust censored-newsvendor policy. Tests the estimated visible mass
/// at the boundary against the critical ratio with a Hoeffding band of
/// half-width `zeta = sqrt(log(2/delta) / (2 n))`:
///
/// - `ghat >= rho + zeta`: the quantile is in view; order the empirical
///   rho-quantile of the boundary sales.
/// - `ghat < rho - zeta`: the quantile is hidden; order the estimated hedge.
/// - otherwise: knife edge; hold the boundary itself.
pub fn rcn(
    data: &CensoredDataset,
    cp: &CostParameters,
    cap: f64,
    delta: f64,
) -> Result<PolicyDecision, PolicyError> {
    check_robust_inputs(data, cp, cap, delta)?;
    let lambda = data.boundary();
    let sales = data.boundary_sales();
    let n = sales.len() as f64;
    let zeta = ((2.0 / delta).ln() / (2.0 * n)).sqrt();
    let ghat = g_minus_hat(data, lambda, GroupSelector::Boundary);
    let rho = cp.rho();

    let (branch, quantity) = if ghat >= rho + zeta {
        (
            Branch::LikelyIdentifiable,
            sample_quantile(&sales, rho)?,
        )
    } else if ghat < rho - zeta {
        (
            Branch::LikelyUnidentifiable,
            q_dagger_hat(ghat, cp, lambda, cap)?,
        )
    } else {
        (Branch::KnifeEdge, lambda)
    };
    Ok(PolicyDecision {
        policy: "rcn",
        quantity,
        branch: Some(branch),
        g_minus_hat: Some(ghat),
        zeta: Some(zeta),
        upper_confidence_levels: None,
    })
}

/// The multi-level refinement of `rcn`. Every distinct order-quantity level
/// runs its own identifiability test with the Bonferroni-adjusted band
/// `zeta_k = sqrt(log(2 K / delta) / (2 n_k))`. If any level certifies that
/// the quantile is visible below it, the policy pools the sales of all such
/// levels and orders their empirical rho-quantile; the extra levels can
/// only add resolution below the quantile. Otherwise it falls back to the
/// boundary test of `rcn`, except that a knife-edge verdict there stays at
/// the boundary even when the unadjusted band would have certified
/// identifiability.
pub fn rcn_plus(
    data: &CensoredDataset,
    cp: &CostParameters,
    cap: f64,
    delta: f64,
) -> Result<PolicyDecision, PolicyError> {
    check_robust_inputs(data, cp, cap, delta)?;
    let rho = cp.rho();
    let levels = data.distinct_order_quantities();
    let k = levels.len() as f64;

    let mut upper: Vec<f64> = Vec::new();
    for &level in &levels {
        let sales = data.sales_at(level);
        let n_k = sales.len() as f64;
        let zeta_k = ((2.0 * k / delta).ln() / (2.0 * n_k)).sqrt();
        let ghat_k = g_minus_hat(data, level, GroupSelector::AtOrderQuantity(level));
        if ghat_k >= rho + zeta_k {
            upper.push(level);
        }
    }

    let lambda = data.boundary();
    let boundary_sales = data.boundary_sales();
    let n1 = boundary_sales.len() as f64;
    let zeta1 = ((2.0 / delta).ln() / (2.0 * n1)).sqrt();
    let ghat1 = g_minus_hat(data, lambda, GroupSelector::Boundary);

    let (branch, quantity) = if !upper.is_empty() {
        let pooled: Vec<f64> = upper
            .iter()
            .flat_map(|&level| data.sales_at(level))
            .collect();
        (Branch::LikelyIdentifiable, sample_quantile(&pooled, rho)?)
    } else if ghat1 < rho - zeta1 {
        (
            Branch::LikelyUnidentifiable,
            q_dagger_hat(ghat1, cp, lambda, cap)?,
        )
    } else {
        (Branch::KnifeEdge, lambda)
    };
    Ok(PolicyDecision {
        policy: "rcn-plus",
        quantity,
        branch: Some(branch),
        g_minus_hat: Some(ghat1),
        zeta: Some(zeta1),
        upper_confidence_levels: Some(upper),
    })
}

/// Baseline: the empirical rho-quantile of all sales, censored or not, as
/// if sales were demand.
pub fn naive_saa(data: &CensoredDataset, rho: f64) -> Result<PolicyDecision, PolicyError> {
    let q = censored_saa_quantile(data, GroupSelector::All, rho)?;
    Ok(PolicyDecision::bare("naive-saa", q))
}

/// Baseline: the empirical rho-quantile of the uncensored sales only
/// (those strictly below their order quantity). Falls back to the boundary
/// when every sale was censored.
pub fn subsample_saa(data: &CensoredDataset, rho: f64) -> Result<PolicyDecision, PolicyError> {
    check_rho(rho)?;
    let uncensored: Vec<f64> = data.groups.iter().flat_map(|g| g.uncensored()).collect();
    let q = if uncensored.is_empty() {
        data.boundary()
    } else {
        sample_quantile(&uncensored, rho)?
    };
    Ok(PolicyDecision::bare("subsample-saa", q))
}

/// Baseline: the rho-quantile of the Kaplan-Meier survival estimate, with a
/// sale below its order quantity as an event and a sale at it as a
/// right-censoring. Ties are resolved the standard way: events at a value
/// count everyone still at risk there, censorings leave after. Falls back
/// to the boundary when the estimated CDF never reaches rho.
pub fn kaplan_meier(data: &CensoredDataset, rho: f64) -> Result<PolicyDecision, PolicyError> {
    check_rho(rho)?;
    let mut obs: Vec<(f64, bool)> = data
        .groups
        .iter()
        .flat_map(|g| {
            let q = g.order_quantity;
            g.sales.iter().map(move |&s| (s, s < q))
        })
        .collect();
    obs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("observations are finite"));

    let mut n_risk = obs.len() as f64;
    let mut survival = 1.0;
    let mut i = 0;
    while i < obs.len() {
        let value = obs[i].0;
        let mut events = 0usize;
        let mut censored = 0usize;
        while i < obs.len() && obs[i].0 == value {
            if obs[i].1 {
                events += 1;
            } else {
                censored += 1;
            }
            i += 1;
        }
        if events > 0 {
            survival *= 1.0 - events as f64 / n_risk;
            if 1.0 - survival >= rho {
                return Ok(PolicyDecision::bare("kaplan-meier", value));
            }
        }
        n_risk -= (events + censored) as f64;
    }
    Ok(PolicyDecision::bare("kaplan-meier", data.boundary()))
}

/// Oracle baseline for simulations: the empirical rho-quantile of the true
/// uncensored demands.
pub fn true_saa(demands: &[f64], rho: f64) -> Result<PolicyDecision, PolicyError> {
    for &d in demands {
        if !d.is_finite() || d < 0.0 {
            return Err(PolicyError::InvalidDataset(format!(
                "demand {d} must be finite and nonnegative"
            )));
        }
    }
    let q = sample_quantile(demands, rho)?;
    Ok(PolicyDecision::bare("true-saa", q))
}
