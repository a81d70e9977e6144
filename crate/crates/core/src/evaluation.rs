//! Metrics and the replication harness.
//!
//! Every metric is analytic: regrets and costs come from the closed forms,
//! never from Monte Carlo (a Monte Carlo estimator exists as a cross-check
//! only). Sweeps are deterministic by construction: each (grid point,
//! replication) pair owns RNG stream `grid_index * replications + rep`
//! under the master seed, so the output is byte-identical for any degree
//! of parallelism.

use crate::data::{
    DataError, GenerationConfig, SecondQuantityRule, generate_dataset,
};
use crate::distributions::{DemandDistribution, RngStream};
use crate::minimax::{Instance, MinimaxError, Regime, minimax_risk, worst_case_regret};
use crate::newsvendor::{self, CostParameters};
use crate::policies::{self, Branch, PolicyError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Minimax(#[from] MinimaxError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Excess worst-case regret relative to the minimax risk, in percent.
/// Only meaningful when the risk is positive (unidentifiable regime).
pub fn relative_regret_ui(regret: f64, delta: f64) -> Result<f64, EvalError> {
    if !(delta > 0.0) {
        return Err(EvalError::Invalid(format!(
            "minimax risk {delta} must be positive for the unidentifiable metric"
        )));
    }
    Ok(100.0 * (regret - delta) / delta)
}

/// Excess expected cost relative to the optimal cost, in percent. Only
/// meaningful when the optimal cost is positive.
pub fn relative_regret_id(cost_q: f64, cost_star: f64) -> Result<f64, EvalError> {
    if !(cost_star > 0.0) {
        return Err(EvalError::Invalid(format!(
            "optimal cost {cost_star} must be positive for the identifiable metric"
        )));
    }
    Ok(100.0 * (cost_q - cost_star) / cost_star)
}

/// Sample-mean estimate of the newsvendor cost with its standard error.
/// A cross-check for the analytic `newsvendor::cost`, not a replacement.
/// Panics if `n == 0`; the standard error is 0 for a single draw.
pub fn monte_carlo_cost(
    d: &DemandDistribution,
    cp: &CostParameters,
    q: f64,
    n: usize,
    rng: &mut RngStream,
) -> (f64, f64) {
    assert!(n >= 1, "monte_carlo_cost needs at least one draw");
    let (b, h) = (cp.b(), cp.h());
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let demand = d.sample_one(rng);
        let loss = b * (demand - q).max(0.0) + h * (q - demand).max(0.0);
        sum += loss;
        sum_sq += loss * loss;
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// The policies the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Rcn,
    RcnPlus,
    NaiveSaa,
    SubsampleSaa,
    KaplanMeier,
    TrueSaa,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Rcn,
        PolicyKind::RcnPlus,
        PolicyKind::NaiveSaa,
        PolicyKind::SubsampleSaa,
        PolicyKind::KaplanMeier,
        PolicyKind::TrueSaa,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Rcn => "rcn",
            PolicyKind::RcnPlus => "rcn-plus",
            PolicyKind::NaiveSaa => "naive-saa",
            PolicyKind::SubsampleSaa => "subsample-saa",
            PolicyKind::KaplanMeier => "kaplan-meier",
            PolicyKind::TrueSaa => "true-saa",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rcn" => Ok(PolicyKind::Rcn),
            "rcn-plus" | "rcn+" => Ok(PolicyKind::RcnPlus),
            "naive-saa" => Ok(PolicyKind::NaiveSaa),
            "subsample-saa" => Ok(PolicyKind::SubsampleSaa),
            "kaplan-meier" | "km" => Ok(PolicyKind::KaplanMeier),
            "true-saa" => Ok(PolicyKind::TrueSaa),
            other => Err(EvalError::Invalid(format!(
                "unknown policy '{other}' (expected one of rcn, rcn-plus, naive-saa, subsample-saa, kaplan-meier, true-saa)"
            ))),
        }
    }
}

/// One policy evaluated on one replication of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub policy: &'static str,
    pub lambda: f64,
    pub n: usize,
    pub b: f64,
    pub h: f64,
    pub replication: usize,
    /// The quantity actually evaluated: the policy output clamped to
    /// `[0, cap]`.
    pub q_alg: f64,
    pub branch: Option<Branch>,
    pub regret: f64,
    pub regret_minus_delta: f64,
    pub vanilla_regret: f64,
    /// Populated only in the unidentifiable regime.
    pub rel_regret_ui: Option<f64>,
    /// Populated only in the identifiable regime with positive optimal cost.
    pub rel_regret_id: Option<f64>,
    pub regime: Regime,
    /// The RNG stream that generated this replication's dataset.
    pub seed: u64,
}

/// A full sweep: the cartesian grid of (b, lambda, n) with `replications`
/// datasets at each point.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub distribution: DemandDistribution,
    pub b_values: Vec<f64>,
    pub h: f64,
    pub lambdas: Vec<f64>,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub delta: f64,
    pub cap: f64,
    pub seed: u64,
    pub policies: Vec<PolicyKind>,
    pub num_groups: usize,
    pub second_quantity_rule: SecondQuantityRule,
}

/// Sweep results plus the failures that were isolated along the way.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// Sorted by (grid index, replication, policy name).
    pub reports: Vec<RegretReport>,
    /// Human-readable descriptions of every (grid point, replication,
    /// policy) that failed; the rest of the sweep is unaffected.
    pub failures: Vec<String>,
}

fn check_sweep(cfg: &SweepConfig) -> Result<(), EvalError> {
    if cfg.b_values.is_empty() || cfg.lambdas.is_empty() || cfg.n_values.is_empty() {
        return Err(EvalError::Invalid(
            "b_values, lambdas, and n_values must all be nonempty".into(),
        ));
    }
    if cfg.replications == 0 {
        return Err(EvalError::Invalid("replications must be positive".into()));
    }
    if cfg.policies.is_empty() {
        return Err(EvalError::Invalid("no policies selected".into()));
    }
    if cfg.num_groups == 0 {
        return Err(EvalError::Invalid("num_groups must be positive".into()));
    }
    Ok(())
}

struct GridPoint {
    index: usize,
    b: f64,
    lambda: f64,
    n: usize,
}

fn run_one_policy(
    kind: PolicyKind,
    data: &crate::data::GeneratedData,
    cp: &CostParameters,
    cap: f64,
    delta: f64,
) -> Result<policies::PolicyDecision, PolicyError> {
    match kind {
        PolicyKind::Rcn => policies::rcn(&data.dataset, cp, cap, delta),
        PolicyKind::RcnPlus => policies::rcn_plus(&data.dataset, cp, cap, delta),
        PolicyKind::NaiveSaa => policies::naive_saa(&data.dataset, cp.rho()),
        PolicyKind::SubsampleSaa => policies::subsample_saa(&data.dataset, cp.rho()),
        PolicyKind::KaplanMeier => policies::kaplan_meier(&data.dataset, cp.rho()),
        PolicyKind::TrueSaa => policies::true_saa(&data.pooled_demands(), cp.rho()),
    }
}

/// Runs the sweep. Per grid point the ambiguity instance and its minimax
/// risk are computed once; replications then run in parallel, each on its
/// own RNG stream. Failures are reported, not fatal. The report order is
/// independent of the rayon thread count.
pub fn run_replications(cfg: &SweepConfig) -> Result<SweepOutput, EvalError> {
    check_sweep(cfg)?;
    let mut grid = Vec::new();
    for &b in &cfg.b_values {
        for &lambda in &cfg.lambdas {
            for &n in &cfg.n_values {
                let index = grid.len();
                grid.push(GridPoint { index, b, lambda, n });
            }
        }
    }

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for point in &grid {
        let cp = match CostParameters::new(point.b, cfg.h) {
            Ok(cp) => cp,
            Err(e) => {
                failures.push(format!(
                    "grid point {} (b={}, lambda={}, n={}): {e}",
                    point.index, point.b, point.lambda, point.n
                ));
                continue;
            }
        };
        let inst = match Instance::new(
            cfg.distribution.clone(),
            point.lambda,
            cfg.cap,
            cp,
        ) {
            Ok(inst) => inst,
            Err(e) => {
                failures.push(format!(
                    "grid point {} (b={}, lambda={}, n={}): {e}",
                    point.index, point.b, point.lambda, point.n
                ));
                continue;
            }
        };
        let solution = minimax_risk(&inst);
        let q_star = newsvendor::optimal_quantity(&cfg.distribution, &cp);
        let cost_star = newsvendor::cost(&cfg.distribution, &cp, q_star);

        let per_rep: Vec<(Vec<RegretReport>, Vec<String>)> = (0..cfg.replications)
            .into_par_iter()
            .map(|rep| {
                let stream = (point.index * cfg.replications + rep) as u64;
                let mut rows = Vec::with_capacity(cfg.policies.len());
                let mut errs = Vec::new();
                let gen_cfg = GenerationConfig {
                    distribution: cfg.distribution.clone(),
                    lambda: point.lambda,
                    num_groups: cfg.num_groups,
                    samples_per_group: point.n,
                    seed: cfg.seed,
                    stream,
                    second_quantity_rule: cfg.second_quantity_rule,
                };
                let data = match generate_dataset(&gen_cfg) {
                    Ok(data) => data,
                    Err(e) => {
                        errs.push(format!(
                            "grid point {} replication {rep}: dataset generation failed: {e}",
                            point.index
                        ));
                        return (rows, errs);
                    }
                };
                for &kind in &cfg.policies {
                    let decision = match run_one_policy(kind, &data, &cp, cfg.cap, cfg.delta) {
                        Ok(d) => d,
                        Err(e) => {
                            errs.push(format!(
                                "grid point {} replication {rep} policy {kind}: {e}",
                                point.index
                            ));
                            continue;
                        }
                    };
                    let q_alg = decision.quantity.clamp(0.0, cfg.cap);
                    let regret = match worst_case_regret(&inst, q_alg) {
                        Ok(r) => r,
                        Err(e) => {
                            errs.push(format!(
                                "grid point {} replication {rep} policy {kind}: {e}",
                                point.index
                            ));
                            continue;
                        }
                    };
                    let rel_regret_ui = match solution.regime {
                        Regime::Unidentifiable => {
                            relative_regret_ui(regret, solution.delta).ok()
                        }
                        Regime::Identifiable => None,
                    };
                    let rel_regret_id = match solution.regime {
                        Regime::Identifiable if cost_star > 0.0 => relative_regret_id(
                            newsvendor::cost(&cfg.distribution, &cp, q_alg),
                            cost_star,
                        )
                        .ok(),
                        _ => None,
                    };
                    rows.push(RegretReport {
                        policy: kind.name(),
                        lambda: point.lambda,
                        n: point.n,
                        b: point.b,
                        h: cfg.h,
                        replication: rep,
                        q_alg,
                        branch: decision.branch,
                        regret,
                        regret_minus_delta: regret - solution.delta,
                        vanilla_regret: newsvendor::vanilla_regret(
                            &cfg.distribution,
                            &cp,
                            q_alg,
                        ),
                        rel_regret_ui,
                        rel_regret_id,
                        regime: solution.regime,
                        seed: stream,
                    });
                }
                (rows, errs)
            })
            .collect();
        for (rows, errs) in per_rep {
            reports.extend(rows);
            failures.extend(errs);
        }
    }
    // seed encodes (grid index, replication) monotonically.
    reports.sort_by(|a, b| (a.seed, a.policy).cmp(&(b.seed, b.policy)));
    Ok(SweepOutput { reports, failures })
}

fn opt_cell<T: std::fmt::Display>(v: &Option<T>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => String::new(),
    }
}

/// Renders reports as CSV with the fixed column set. Floats print in
/// shortest-roundtrip form, absent metrics as empty cells.
pub fn reports_to_csv(reports: &[RegretReport]) -> String {
    let mut out = String::from(
        "policy,lambda,n,b,h,replication,q_alg,branch,regret,regret_minus_delta,vanilla_regret,rel_regret_ui,rel_regret_id,regime,seed\n",
    );
    for r in reports {
        let branch = match &r.branch {
            Some(b) => b.to_string(),
            None => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.policy,
            r.lambda,
            r.n,
            r.b,
            r.h,
            r.replication,
            r.q_alg,
            branch,
            r.regret,
            r.regret_minus_delta,
            r.vanilla_regret,
            opt_cell(&r.rel_regret_ui),
            opt_cell(&r.rel_regret_id),
            r.regime,
            r.seed,
        ));
    }
    out
}
