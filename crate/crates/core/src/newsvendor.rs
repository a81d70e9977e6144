//! Single-period newsvendor cost and its optimizer.
//!
//! Ordering q against random demand D costs `b (D - q)^+ + h (q - D)^+` in
//! expectation: b per unit short, h per unit over. Costs are evaluated
//! analytically through the identity
//! `C(q) = b (E[D] - q) + (b + h) E[(q - D) 1{D <= q}]`,
//! which makes regret identities testable to tight tolerances; Monte Carlo
//! estimation lives in the evaluation module as an independent cross-check.

use crate::distributions::DemandDistribution;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewsvendorError {
    #[error("invalid cost parameters: {0}")]
    InvalidCosts(String),
}

/// Per-unit underage cost b, per-unit overage cost h, and the critical ratio
/// rho = b / (b + h) they induce. Both costs are strictly positive, so
/// rho is in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostParameters {
    b: f64,
    h: f64,
    rho: f64,
}

impl CostParameters {
    pub fn new(b: f64, h: f64) -> Result<Self, NewsvendorError> {
        if !b.is_finite() || !h.is_finite() || b <= 0.0 || h <= 0.0 {
            return Err(NewsvendorError::InvalidCosts(format!(
                "underage {b} and overage {h} must be finite and positive"
            )));
        }
        Ok(Self { b, h, rho: b / (b + h) })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Expected cost of ordering q: `b E[(D - q)^+] + h E[(q - D)^+]`.
pub fn cost(d: &DemandDistribution, cp: &CostParameters, q: f64) -> f64 {
    cp.b() * (d.mean() - q) + (cp.b() + cp.h()) * d.partial_expectation(q)
}

/// The cost-minimizing order: the rho-th quantile of demand,
/// `inf{q : F(q) >= rho}`.
pub fn optimal_quantity(d: &DemandDistribution, cp: &CostParameters) -> f64 {
    d.quantile(cp.rho()).expect("critical ratio lies in (0, 1)")
}

/// `cost(q1) - cost(q2)` evaluated without the mean term:
/// `b (q2 - q1) + (b + h) (pe(q1) - pe(q2))`.
pub fn cost_difference(d: &DemandDistribution, cp: &CostParameters, q1: f64, q2: f64) -> f64 {
    cp.b() * (q2 - q1)
        + (cp.b() + cp.h()) * (d.partial_expectation(q1) - d.partial_expectation(q2))
}

/// Excess cost of ordering q instead of the optimal quantity; nonnegative up
/// to float noise.
pub fn vanilla_regret(d: &DemandDistribution, cp: &CostParameters, q: f64) -> f64 {
    cost(d, cp, q) - cost(d, cp, optimal_quantity(d, cp))
}
