//! Randomized cross-check of the closed-form worst-case regret against the
//! brute-force oracle that scans the boundary family directly.

use censored_newsvendor::distributions::{DemandDistribution, RngStream};
use censored_newsvendor::minimax::{
    Instance, minimax_risk, q_dagger, worst_case_regret, worst_case_regret_oracle,
};
use censored_newsvendor::newsvendor::{self, CostParameters};
use rayon::prelude::*;

/// Outcome of one verification run.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub instances: usize,
    pub passed: usize,
    pub quantities_checked: usize,
    pub failures: Vec<String>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.instances
    }

    pub fn summary_line(&self) -> String {
        format!("{}/{} instances within tolerance", self.passed, self.instances)
    }
}

/// Absolute-or-relative tolerance for one comparison.
pub fn tolerance(reference: f64) -> f64 {
    1e-6f64.max(1e-3 * reference.abs())
}

fn random_distribution(rng: &mut RngStream) -> DemandDistribution {
    match rng.uniform_int(0, 5) {
        0 => DemandDistribution::discrete_uniform(0, rng.uniform_int(3, 120)),
        1 => DemandDistribution::exponential(rng.uniform_range(5.0, 120.0)),
        2 => DemandDistribution::poisson(rng.uniform_range(2.0, 90.0)),
        3 => DemandDistribution::truncated_normal(
            rng.uniform_range(-20.0, 80.0),
            rng.uniform_range(5.0, 40.0),
        ),
        4 => {
            let k = rng.uniform_int(2, 5) as usize;
            let xs: Vec<f64> = (0..k).map(|_| rng.uniform_range(0.0, 100.0)).collect();
            let ws: Vec<f64> = (0..k).map(|_| rng.uniform_open01()).collect();
            let total: f64 = ws.iter().sum();
            let atoms: Vec<(f64, f64)> =
                xs.iter().zip(&ws).map(|(&x, &w)| (x, w / total)).collect();
            DemandDistribution::point_mass_mixture(&atoms)
        }
        _ => {
            let n = rng.uniform_int(5, 40) as usize;
            let xs: Vec<f64> = (0..n).map(|_| rng.uniform_range(0.0, 100.0)).collect();
            DemandDistribution::empirical_from_samples(&xs)
        }
    }
    .expect("sampled parameters are always in range")
}

/// Draws an instance spanning all demand families and both regimes. The
/// boundary is placed below, above, or around the optimal order so every
/// regret branch gets exercised across a run.
pub fn random_instance(rng: &mut RngStream) -> Instance {
    loop {
        let d = random_distribution(rng);
        let cp = CostParameters::new(rng.uniform_range(0.2, 6.0), rng.uniform_range(0.2, 6.0))
            .expect("sampled costs are positive");
        let q_star = newsvendor::optimal_quantity(&d, &cp);
        let anchor = q_star.max(1.0);
        let lambda = match rng.uniform_int(0, 2) {
            0 => rng.uniform_range(0.02, 1.0) * anchor,
            1 => q_star + rng.uniform_range(0.01, 30.0),
            _ => rng.uniform_range(0.02, 1.6) * anchor,
        };
        let cap = q_star.max(lambda) + rng.uniform_range(0.5, 60.0);
        if let Ok(inst) = Instance::new(d, lambda, cap, cp) {
            return inst;
        }
    }
}

/// Order quantities that cover every branch of the closed form: below the
/// boundary, at it, between boundary and hedge, at the hedge, beyond it,
/// and both endpoints of the feasible range.
pub fn probe_quantities(inst: &Instance) -> Vec<f64> {
    let cap = inst.cap();
    let lambda = inst.lambda();
    let mut qs = vec![0.0, cap];
    if inst.is_identifiable() {
        let q_star = minimax_risk(inst).q_delta;
        let edge = lambda.min(cap);
        qs.extend([0.5 * edge, edge, q_star, 0.5 * (q_star + cap)]);
    } else {
        let hedge = q_dagger(inst).expect("unidentifiable instance has a hedge");
        qs.extend([
            0.5 * lambda,
            lambda,
            0.5 * (lambda + hedge),
            hedge,
            hedge + 0.25 * (cap - hedge),
        ]);
    }
    let mut qs: Vec<f64> = qs.into_iter().map(|q| q.clamp(0.0, cap)).collect();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    qs
}

/// Runs `instances` seeded random instances, comparing the closed form to
/// the oracle at every probe quantity with `grid` candidate distributions.
pub fn check_instances(instances: usize, grid: usize, seed: u64) -> OracleReport {
    let per_instance: Vec<(bool, usize, Vec<String>)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let inst = random_instance(&mut rng);
            let mut failures = Vec::new();
            let qs = probe_quantities(&inst);
            let checked = qs.len();
            for q in qs {
                let closed = match worst_case_regret(&inst, q) {
                    Ok(v) => v,
                    Err(e) => {
                        failures.push(format!("instance {i}: closed form failed at q={q}: {e}"));
                        continue;
                    }
                };
                let brute = match worst_case_regret_oracle(&inst, q, grid) {
                    Ok(v) => v,
                    Err(e) => {
                        failures.push(format!("instance {i}: oracle failed at q={q}: {e}"));
                        continue;
                    }
                };
                let tol = tolerance(closed);
                if (closed - brute).abs() > tol {
                    failures.push(format!(
                        "instance {i} ({}, rho={:.4}, lambda={:.4}, cap={:.4}): q={q:.4} closed={closed:.9} oracle={brute:.9} tol={tol:.2e}",
                        inst.demand().family(),
                        inst.cost().rho(),
                        inst.lambda(),
                        inst.cap(),
                    ));
                }
            }
            (failures.is_empty(), checked, failures)
        })
        .collect();

    let mut report = OracleReport {
        instances,
        passed: 0,
        quantities_checked: 0,
        failures: Vec::new(),
    };
    for (ok, checked, failures) in per_instance {
        report.passed += usize::from(ok);
        report.quantities_checked += checked;
        report.failures.extend(failures);
    }
    report
}
