//! Ordering decisions for the newsvendor problem when historical demand is
//! right-censored by past stocking levels.
//!
//! Sales data only reveals demand up to the order quantity that was on the
//! shelf: a sell-out at quantity `q` says "demand was at least `q`" and
//! nothing more. Everything above the largest historical order quantity
//! (the observable boundary, `lambda` throughout) is invisible, so the true
//! demand distribution is known only below that boundary. This crate treats
//! the set of distributions consistent with what censored data can reveal as
//! an ambiguity set and works with worst-case regret over it.
//!
//! The pieces, bottom up:
//!
//! - [`distributions`]: demand distribution families (discrete uniform,
//!   exponential, Poisson, truncated normal, point-mass mixtures, empirical)
//!   with exact CDFs, quantiles, partial expectations, and deterministic
//!   inverse-CDF sampling.
//! - [`newsvendor`]: expected cost, the critical-ratio optimal quantity, and
//!   the cost-difference identity the regret formulas are built on.
//! - [`minimax`]: the exact worst-case regret of any ordering quantity over
//!   the censoring ambiguity set, the minimax-optimal quantity and its risk,
//!   a brute-force oracle over the boundary family for verification,
//!   minimax lower-bound constructions, and sample-complexity estimates.
//! - [`policies`]: decision rules operating on censored datasets: the robust
//!   censored-newsvendor rule (single- and multi-group forms) and classical
//!   baselines (pooled SAA, uncensored-only SAA, Kaplan-Meier, and an
//!   oracle SAA on uncensored demand for simulations).
//! - [`data`]: synthetic dataset generation with an uncensored shadow for
//!   paired evaluation, plus daily-demand ingestion from raw sales CSVs.
//! - [`evaluation`]: regret metrics, Monte Carlo cross-checks, and the
//!   seeded replication harness that produces deterministic report CSVs.
//!
//! A typical simulation run wires them together: generate a censored dataset
//! from a known distribution, hand it to each policy, and score every
//! decision with the exact regret formulas rather than simulation noise.

pub mod data;
pub mod distributions;
pub mod evaluation;
pub mod minimax;
pub mod newsvendor;
pub mod policies;
