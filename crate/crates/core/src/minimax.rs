//! Worst-case regret over the censoring ambiguity set, in closed form.
//!
//! Censored history pins the demand CDF down only below the observable
//! boundary `lambda`; above it, any tail is consistent with the data. The
//! ambiguity set contains every distribution F that agrees with the true G
//! strictly below `lambda` and whose optimal order stays within a known cap
//! M. The regret of an order q is its worst-case excess cost over that set,
//! `sup_F [C_F(q) - C_F(q*_F)]`, and the minimax risk `Delta` is the
//! smallest regret any fixed q can guarantee.
//!
//! Writing `gamma = Pr_G(D < lambda)` and `rho = b/(b+h)`, two regimes split
//! on whether the optimal quantile is visible:
//!
//! - identifiable (`gamma >= rho`): the optimal order is determined by the
//!   visible part of the CDF, `Delta = 0`, and the minimax order is `q*_G`.
//! - unidentifiable (`gamma < rho`): no order is safe. The minimax order is
//!   the hedge `q_dagger = (bM + h lambda - (b+h) gamma M) / ((b+h)(1 - gamma))`,
//!   which balances the two ways the adversary can win (tail mass at M
//!   versus tail mass at lambda), and
//!   `Delta = h (b - (b+h) gamma)(M - lambda) / ((b+h)(1 - gamma)) > 0`.
//!
//! The closed forms are verified against a brute-force oracle over the
//! boundary family: distributions that copy G below `lambda`, hold mass p at
//! `lambda`, and push the rest to M. Scanning p is enough because for every
//! fixed q the worst case over the whole ambiguity set is attained inside
//! this two-parameter family, and the objective is linear in p on each side
//! of the optimal-order switch at `gamma + p = rho`.

use crate::distributions::{DemandDistribution, DistributionError};
use crate::newsvendor::{self, CostParameters};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinimaxError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("order quantity {0} outside [0, {1}]")]
    QuantityOutOfRange(f64, f64),
    #[error("identifiable instance: the hedge quantity is only defined when Pr(D < lambda) < rho")]
    NotUnidentifiable,
    #[error("unsupported construction: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Everything the worst-case formulas need: the true demand distribution,
/// the observable boundary, the cap on the optimal order, and costs.
#[derive(Debug, Clone)]
pub struct Instance {
    demand: DemandDistribution,
    lambda: f64,
    cap: f64,
    cost: CostParameters,
}

impl Instance {
    pub fn new(
        demand: DemandDistribution,
        lambda: f64,
        cap: f64,
        cost: CostParameters,
    ) -> Result<Self, MinimaxError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(MinimaxError::InvalidInstance(format!(
                "boundary {lambda} must be finite and nonnegative"
            )));
        }
        if !cap.is_finite() || cap <= 0.0 {
            return Err(MinimaxError::InvalidInstance(format!(
                "cap {cap} must be finite and positive"
            )));
        }
        let q_star = newsvendor::optimal_quantity(&demand, &cost);
        if q_star > cap + 1e-9 {
            return Err(MinimaxError::InvalidInstance(format!(
                "optimal quantity {q_star} exceeds the cap {cap}"
            )));
        }
        if demand.cdf_strict(lambda) < cost.rho() && lambda >= cap {
            return Err(MinimaxError::InvalidInstance(format!(
                "unidentifiable boundary {lambda} must lie below the cap {cap}"
            )));
        }
        Ok(Self { demand, lambda, cap, cost })
    }

    pub fn demand(&self) -> &DemandDistribution {
        &self.demand
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn cost(&self) -> &CostParameters {
        &self.cost
    }

    /// Pr(D < lambda): the visible CDF mass, written gamma throughout.
    pub fn g_minus_lambda(&self) -> f64 {
        self.demand.cdf_strict(self.lambda)
    }

    pub fn is_identifiable(&self) -> bool {
        self.g_minus_lambda() >= self.cost.rho()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Identifiable,
    Unidentifiable,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Identifiable => "identifiable",
            Regime::Unidentifiable => "unidentifiable",
        })
    }
}

/// The minimax-optimal constant order and the risk it guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaxSolution {
    pub regime: Regime,
    /// Best constant order: q* of G when identifiable, the hedge otherwise.
    pub q_delta: f64,
    /// Worst-case regret of `q_delta`; zero exactly in the identifiable regime.
    pub delta: f64,
}

fn q_dagger_from(ghat: f64, cp: &CostParameters, lambda: f64, cap: f64) -> f64 {
    let (b, h) = (cp.b(), cp.h());
    (b * cap + h * lambda - (b + h) * ghat * cap) / ((b + h) * (1.0 - ghat))
}

/// The unidentifiable-regime hedge order. Mixes the cap and the boundary at
/// rate rho when nothing is visible (`gamma = 0` gives `rho M + (1-rho) lambda`)
/// and slides toward the boundary as visible mass accumulates. Rejects
/// identifiable instances.
pub fn q_dagger(inst: &Instance) -> Result<f64, MinimaxError> {
    let gamma = inst.g_minus_lambda();
    if gamma >= inst.cost.rho() {
        return Err(MinimaxError::NotUnidentifiable);
    }
    Ok(q_dagger_from(gamma, &inst.cost, inst.lambda, inst.cap))
}

/// The minimax order and risk, by regime.
pub fn minimax_risk(inst: &Instance) -> MinimaxSolution {
    let gamma = inst.g_minus_lambda();
    let (b, h) = (inst.cost.b(), inst.cost.h());
    if gamma >= inst.cost.rho() {
        MinimaxSolution {
            regime: Regime::Identifiable,
            q_delta: newsvendor::optimal_quantity(&inst.demand, &inst.cost),
            delta: 0.0,
        }
    } else {
        MinimaxSolution {
            regime: Regime::Unidentifiable,
            q_delta: q_dagger_from(gamma, &inst.cost, inst.lambda, inst.cap),
            delta: h * (b - (b + h) * gamma) * (inst.cap - inst.lambda)
                / ((b + h) * (1.0 - gamma)),
        }
    }
}

/// Exact worst-case regret of ordering q, `sup_F [C_F(q) - C_F(q*_F)]` over
/// the ambiguity set. Piecewise in q:
///
/// unidentifiable regime: ordering below the boundary loses b per unit
/// against a tail pushed to M on top of the visible overage; between the
/// boundary and the hedge the regret falls linearly with slope
/// `b - (b+h) gamma`; past the hedge it grows with slope h against a tail
/// held at the boundary.
///
/// identifiable regime: below the boundary the adversary is powerless and
/// the regret is the plain excess cost under G; at or above it, the
/// adversary parks all invisible mass at the boundary.
pub fn worst_case_regret(inst: &Instance, q: f64) -> Result<f64, MinimaxError> {
    if !q.is_finite() || q < 0.0 || q > inst.cap {
        return Err(MinimaxError::QuantityOutOfRange(q, inst.cap));
    }
    let d = &inst.demand;
    let cp = &inst.cost;
    let (b, h) = (cp.b(), cp.h());
    let lambda = inst.lambda;
    let cap = inst.cap;
    let gamma = inst.g_minus_lambda();

    if gamma >= cp.rho() {
        if q < lambda {
            Ok(newsvendor::vanilla_regret(d, cp, q))
        } else {
            let q_star = newsvendor::optimal_quantity(d, cp);
            Ok(b * (q_star - q)
                + (b + h)
                    * ((q - lambda) + d.strict_partial_expectation(lambda)
                        - d.partial_expectation(q_star)))
        }
    } else if q < lambda {
        // E[(M - D) 1{D < lambda}] via the strict partial expectation at the
        // boundary shifted up by (M - lambda) of visible mass.
        let tail_gap = (cap - lambda) * gamma + d.strict_partial_expectation(lambda);
        Ok(b * (cap - q) + (b + h) * (d.partial_expectation(q) - tail_gap))
    } else {
        let qd = q_dagger_from(gamma, cp, lambda, cap);
        if q <= qd {
            Ok((b - (b + h) * gamma) * (cap - q))
        } else {
            Ok(h * (q - lambda))
        }
    }
}

/// One member of the boundary family: copies G strictly below the boundary,
/// holds mass p at the boundary, and pushes the remaining `1 - gamma - p`
/// to the cap.
#[derive(Debug, Clone)]
pub struct RestrictedFamilyMember {
    pub p: f64,
    pub distribution: DemandDistribution,
}

impl RestrictedFamilyMember {
    pub fn new(inst: &Instance, p: f64) -> Result<Self, MinimaxError> {
        let distribution = if inst.lambda < inst.cap {
            DemandDistribution::boundary_remix(&inst.demand, inst.lambda, p, inst.cap)?
        } else {
            // The cap sits at or below the boundary (possible only when
            // identifiable): no mass fits strictly above the boundary, so
            // the single coherent member holds everything unseen there.
            let gamma = inst.g_minus_lambda();
            if (p - (1.0 - gamma)).abs() > 1e-12 {
                return Err(MinimaxError::Unsupported(format!(
                    "with the boundary at or above the cap the boundary mass must be {} (got {p})",
                    1.0 - gamma
                )));
            }
            DemandDistribution::boundary_remix(
                &inst.demand,
                inst.lambda,
                1.0 - gamma,
                inst.lambda + 1.0,
            )?
        };
        Ok(Self { p, distribution })
    }

    /// The optimal order of the member, by case: q* of G while the visible
    /// mass already covers rho; the boundary once the boundary atom tips the
    /// CDF over rho; the cap otherwise.
    pub fn optimal_quantity(inst: &Instance, p: f64) -> f64 {
        let gamma = inst.g_minus_lambda();
        let rho = inst.cost.rho();
        if gamma >= rho {
            newsvendor::optimal_quantity(&inst.demand, &inst.cost)
        } else if gamma + p >= rho {
            inst.lambda
        } else {
            inst.cap
        }
    }
}

/// Brute-force verifier for `worst_case_regret`: maximizes
/// `C_{F_p}(q) - C_{F_p}(q*_{F_p})` over a uniform grid of boundary masses p
/// plus the exact switch point where `gamma + p = rho` (both sides of it,
/// since the objective is discontinuous there). Independent of the closed
/// form: costs come from the realized member distributions.
pub fn worst_case_regret_oracle(
    inst: &Instance,
    q: f64,
    grid_size: usize,
) -> Result<f64, MinimaxError> {
    if grid_size < 2 {
        return Err(MinimaxError::Unsupported(
            "oracle grid needs at least 2 points".into(),
        ));
    }
    if !q.is_finite() || q < 0.0 || q > inst.cap {
        return Err(MinimaxError::QuantityOutOfRange(q, inst.cap));
    }
    let gamma = inst.g_minus_lambda();
    let rho = inst.cost.rho();
    let avail = (1.0 - gamma).max(0.0);

    let mut ps: Vec<f64> = Vec::with_capacity(grid_size + 2);
    if inst.lambda >= inst.cap {
        // No room between boundary and cap: the only valid member holds all
        // unseen mass at the boundary.
        ps.push(avail);
    } else {
        for i in 0..grid_size {
            ps.push(avail * i as f64 / (grid_size - 1) as f64);
        }
        if gamma < rho {
            let switch = (rho - gamma).min(avail);
            ps.push(switch);
            let under = switch.next_down().max(0.0);
            ps.push(under);
        }
    }

    let mut best = f64::NEG_INFINITY;
    for &p in &ps {
        let member = RestrictedFamilyMember::new(inst, p)?;
        let q_star = RestrictedFamilyMember::optimal_quantity(inst, p);
        let value = newsvendor::cost(&member.distribution, &inst.cost, q)
            - newsvendor::cost(&member.distribution, &inst.cost, q_star);
        best = best.max(value);
    }
    Ok(best)
}

/// Regimes of the minimax lower-bound constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardRegime {
    StrictlyIdentifiable,
    KnifeEdge,
    StrictlyUnidentifiable,
}

impl HardRegime {
    pub const ALL: [HardRegime; 3] = [
        HardRegime::StrictlyIdentifiable,
        HardRegime::KnifeEdge,
        HardRegime::StrictlyUnidentifiable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HardRegime::StrictlyIdentifiable => "strictly-identifiable",
            HardRegime::KnifeEdge => "knife-edge",
            HardRegime::StrictlyUnidentifiable => "strictly-unidentifiable",
        }
    }
}

impl std::fmt::Display for HardRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for HardRegime {
    type Err = MinimaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "id" | "identifiable" | "strictly-identifiable" => {
                Ok(HardRegime::StrictlyIdentifiable)
            }
            "ke" | "knife-edge" => Ok(HardRegime::KnifeEdge),
            "ui" | "unidentifiable" | "strictly-unidentifiable" => {
                Ok(HardRegime::StrictlyUnidentifiable)
            }
            other => Err(MinimaxError::Unsupported(format!(
                "unknown regime '{other}' (expected id, ke, or ui)"
            ))),
        }
    }
}

/// A pair of two-point demand distributions that no policy can tell apart
/// from n samples without paying the stated regret; the engine behind the
/// minimax lower bounds.
#[derive(Debug, Clone)]
pub struct HardInstancePair {
    pub regime: HardRegime,
    pub g0: DemandDistribution,
    pub g1: DemandDistribution,
    /// The minimax lower bound this pair certifies at sample size n.
    pub lower_bound: f64,
    /// Base separation: the regret of missing the target order grows at
    /// least like `(b + h) * delta0 * |q - q_target|` under both members.
    pub delta0: f64,
    /// Extra separation parameter of the strictly unidentifiable pair.
    pub delta1: Option<f64>,
    /// Upper support point of the strictly identifiable pair (half the
    /// boundary).
    pub h_point: Option<f64>,
}

fn bernoulli(p_one: f64) -> Result<DemandDistribution, DistributionError> {
    DemandDistribution::point_mass_mixture(&[(0.0, 1.0 - p_one), (1.0, p_one)])
}

/// Builds the hard pair for a regime. The unidentifiable and knife-edge
/// pairs live on {0, 1} and need `0 < lambda < 1`; the identifiable pair
/// lives on {0, lambda/2}. The unidentifiable construction degenerates for
/// rho <= 1/3 and is rejected there.
pub fn hard_instances(
    regime: HardRegime,
    cp: &CostParameters,
    lambda: f64,
    cap: f64,
    n: usize,
) -> Result<HardInstancePair, MinimaxError> {
    if n == 0 {
        return Err(MinimaxError::Unsupported("sample size must be positive".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(MinimaxError::InvalidInstance(format!(
            "boundary {lambda} must be positive"
        )));
    }
    if lambda >= cap {
        return Err(MinimaxError::InvalidInstance(format!(
            "boundary {lambda} must lie below the cap {cap}"
        )));
    }
    let rho = cp.rho();
    let nf = n as f64;
    let root = ((1.0 - rho) / nf).sqrt();
    match regime {
        HardRegime::StrictlyUnidentifiable => {
            if lambda >= 1.0 {
                return Err(MinimaxError::Unsupported(
                    "unidentifiable pair lives on {0, 1}: boundary must be in (0, 1)".into(),
                ));
            }
            let delta0 = (rho / 2.0).min((1.0 - rho) / 2.0);
            let delta1 = (rho / 4.0).min((3.0 * rho - 1.0) / 4.0).min(root / 2.0);
            if delta1 <= 0.0 {
                return Err(MinimaxError::Unsupported(
                    "unidentifiable pair degenerates for rho <= 1/3".into(),
                ));
            }
            Ok(HardInstancePair {
                regime,
                g0: bernoulli(1.0 - rho + delta0)?,
                g1: bernoulli(1.0 - rho + delta0 + delta1)?,
                lower_bound: lower_bound(regime, cp, lambda, cap, n),
                delta0,
                delta1: Some(delta1),
                h_point: None,
            })
        }
        HardRegime::KnifeEdge => {
            if lambda >= 1.0 {
                return Err(MinimaxError::Unsupported(
                    "knife-edge pair lives on {0, 1}: boundary must be in (0, 1)".into(),
                ));
            }
            let delta = (rho / 2.0).min((1.0 - rho) / 2.0).min(root / 4.0);
            Ok(HardInstancePair {
                regime,
                g0: bernoulli(1.0 - rho + delta)?,
                g1: bernoulli(1.0 - rho - delta)?,
                lower_bound: lower_bound(regime, cp, lambda, cap, n),
                delta0: delta,
                delta1: None,
                h_point: None,
            })
        }
        HardRegime::StrictlyIdentifiable => {
            let delta = (rho / 2.0).min((1.0 - rho) / 2.0).min(root / 4.0);
            let h_point = lambda / 2.0;
            let g0 = DemandDistribution::point_mass_mixture(&[
                (0.0, rho - delta),
                (h_point, 1.0 - (rho - delta)),
            ])?;
            let g1 = DemandDistribution::point_mass_mixture(&[
                (0.0, rho + delta),
                (h_point, 1.0 - (rho + delta)),
            ])?;
            Ok(HardInstancePair {
                regime,
                g0,
                g1,
                lower_bound: lower_bound(regime, cp, lambda, cap, n),
                delta0: delta,
                delta1: None,
                h_point: Some(h_point),
            })
        }
    }
}

/// Minimax lower bound on expected excess regret after n samples, per
/// regime. The knife-edge bound is exactly twice the identifiable one, and
/// every bound scales as 1/sqrt(n). The unidentifiable value is nonpositive
/// for rho <= 1/3 (the construction does not cover that corner); the raw
/// value is returned and the caller interprets it.
pub fn lower_bound(
    regime: HardRegime,
    cp: &CostParameters,
    lambda: f64,
    cap: f64,
    n: usize,
) -> f64 {
    let rho = cp.rho();
    let shared = (1.0 - rho).sqrt() * rho.min(1.0 - rho) * (-0.5f64).exp() / (n as f64).sqrt();
    match regime {
        HardRegime::StrictlyIdentifiable => lambda * (cp.b() + cp.h()) * shared / 64.0,
        HardRegime::KnifeEdge => lambda * (cp.b() + cp.h()) * shared / 32.0,
        HardRegime::StrictlyUnidentifiable => {
            cp.h() * (cap - lambda) * shared * rho.min(3.0 * rho - 1.0) / 64.0
        }
    }
}

/// Samples sufficient for the robust policy to be within epsilon of the
/// minimax risk with probability 1 - 2 delta:
/// `ceil( 2 (b+h)^2 log(2/delta) / eps^2 * max{lambda^2, max{(b/h)^2, 1} (M - lambda)^2} )`.
pub fn sample_complexity(
    cp: &CostParameters,
    lambda: f64,
    cap: f64,
    epsilon: f64,
    delta: f64,
) -> Result<u64, MinimaxError> {
    if !(epsilon > 0.0) {
        return Err(MinimaxError::Unsupported(format!(
            "epsilon {epsilon} must be positive"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MinimaxError::Unsupported(format!(
            "failure probability {delta} must lie in (0, 1)"
        )));
    }
    let (b, h) = (cp.b(), cp.h());
    let slope = ((b / h) * (b / h)).max(1.0);
    let scale = (lambda * lambda).max(slope * (cap - lambda) * (cap - lambda));
    let n = 2.0 * (b + h) * (b + h) * (2.0 / delta).ln() / (epsilon * epsilon) * scale;
    Ok(n.ceil() as u64)
}
