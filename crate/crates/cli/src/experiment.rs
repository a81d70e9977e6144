//! The JSON experiment configuration consumed by `cnv simulate`.

use crate::CliError;
use censored_newsvendor::data::SecondQuantityRule;
use censored_newsvendor::distributions::{DemandDistribution, DistributionSpec};
use censored_newsvendor::evaluation::{PolicyKind, SweepConfig};
use censored_newsvendor::newsvendor::{self, CostParameters};
use serde::Deserialize;
use std::path::PathBuf;

/// A demand distribution given either in the compact one-line syntax
/// (`"exponential(80)"`) or as the structured object form.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DistributionField {
    Structured(DistributionSpec),
    Compact(String),
}

impl DistributionField {
    pub fn build(&self) -> Result<DemandDistribution, CliError> {
        let spec = match self {
            DistributionField::Structured(spec) => spec.clone(),
            DistributionField::Compact(text) => parse_distribution(text)?,
        };
        spec.build().map_err(CliError::usage)
    }
}

/// Accepts the compact syntax everywhere, and a JSON object wherever a
/// string that starts with `{` shows up (handy on the command line).
pub fn parse_distribution(text: &str) -> Result<DistributionSpec, CliError> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(CliError::usage)
    } else {
        DistributionSpec::parse(text).map_err(CliError::usage)
    }
}

fn default_delta() -> f64 {
    0.3
}

fn default_num_groups() -> usize {
    2
}

fn default_rule() -> SecondQuantityRule {
    SecondQuantityRule::Continuous
}

/// A full sweep description. Exactly one of `lambda_grid` (explicit
/// boundaries) and `lambda_fractions` (multiples of the optimal order
/// under the configured costs) must be present.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distribution: DistributionField,
    pub b_values: Vec<f64>,
    pub h: f64,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda_fractions: Option<Vec<f64>>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub cap: f64,
    #[serde(default)]
    pub seed: u64,
    /// Policy names; omitted means every known policy.
    #[serde(default)]
    pub policies: Option<Vec<String>>,
    #[serde(default = "default_num_groups")]
    pub num_groups: usize,
    #[serde(default = "default_rule")]
    pub second_quantity_rule: SecondQuantityRule,
    /// Where `cnv simulate` writes the report CSV; stdout when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(CliError::usage)
    }

    pub fn read(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Resolves the config into the harness sweep, applying an optional
    /// seed override from the command line.
    pub fn to_sweep(&self, seed_override: Option<u64>) -> Result<SweepConfig, CliError> {
        let distribution = self.distribution.build()?;
        let lambdas = match (&self.lambda_grid, &self.lambda_fractions) {
            (Some(grid), None) => grid.clone(),
            (None, Some(fractions)) => {
                // Fractions are multiples of the optimal order, which moves
                // with the critical ratio; restricting to one b value keeps
                // the grid well defined.
                let [b] = self.b_values[..] else {
                    return Err(CliError::Usage(
                        "lambda_fractions requires exactly one entry in b_values".into(),
                    ));
                };
                let cp = CostParameters::new(b, self.h).map_err(CliError::usage)?;
                let q_star = newsvendor::optimal_quantity(&distribution, &cp);
                if !(q_star > 0.0) {
                    return Err(CliError::Usage(format!(
                        "cannot scale lambda_fractions: the optimal order is {q_star}"
                    )));
                }
                fractions.iter().map(|f| f * q_star).collect()
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "give either lambda_grid or lambda_fractions, not both".into(),
                ));
            }
            (None, None) => {
                return Err(CliError::Usage(
                    "one of lambda_grid or lambda_fractions is required".into(),
                ));
            }
        };
        let policies = match &self.policies {
            None => PolicyKind::ALL.to_vec(),
            Some(names) => names
                .iter()
                .map(|name| name.parse::<PolicyKind>().map_err(CliError::usage))
                .collect::<Result<Vec<_>, _>>()?,
        };
        Ok(SweepConfig {
            distribution,
            b_values: self.b_values.clone(),
            h: self.h,
            lambdas,
            n_values: self.n_grid.clone(),
            replications: self.replications,
            delta: self.delta,
            cap: self.cap,
            seed: seed_override.unwrap_or(self.seed),
            policies,
            num_groups: self.num_groups,
            second_quantity_rule: self.second_quantity_rule,
        })
    }
}
