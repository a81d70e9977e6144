//! Dataset construction: synthetic censored histories, the on-disk dataset
//! format, and ingestion of real sales CSVs into empirical distributions.

use crate::distributions::{DemandDistribution, DistributionError, RngStream};
use crate::newsvendor::{CostParameters, NewsvendorError};
use crate::policies::{CensoredDataset, CensoredGroup, PolicyError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("ingest failed: {0}")]
    Ingest(String),
    #[error("invalid date '{0}': {1}")]
    Date(String, String),
    #[error("dataset file invalid: {0}")]
    File(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Costs(#[from] NewsvendorError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Elementwise `min(demand, q_off)`: what the seller records when stock
/// runs out. Preserves order and length. Callers keep `q_off >= 0`.
pub fn censor(demands: &[f64], q_off: f64) -> Vec<f64> {
    demands.iter().map(|&d| d.min(q_off)).collect()
}

/// How the non-boundary order quantities are drawn from `[lambda/4, 3 lambda/4]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondQuantityRule {
    /// Uniform on the real interval.
    Continuous,
    /// Uniform on the integers `{ceil(lambda/4), ..., floor(3 lambda/4)}`,
    /// for integer-valued demand data.
    Integer,
}

#[derive(Debug, Clone)]
pub struct GenerationConfig {
    pub distribution: DemandDistribution,
    /// Boundary order quantity; the first group always orders this much.
    pub lambda: f64,
    /// Number of groups; each beyond the first gets its own drawn quantity.
    pub num_groups: usize,
    pub samples_per_group: usize,
    pub seed: u64,
    /// Substream index, so sweeps can give every replication fresh draws
    /// under one seed.
    pub stream: u64,
    pub second_quantity_rule: SecondQuantityRule,
}

/// A censored dataset together with the uncensored demands that produced
/// it, group-aligned. The shadow exists only for synthetic data; it feeds
/// the oracle baseline and paired tests.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub dataset: CensoredDataset,
    pub demands: Vec<Vec<f64>>,
}

impl GeneratedData {
    pub fn pooled_demands(&self) -> Vec<f64> {
        self.demands.iter().flatten().copied().collect()
    }
}

/// Draws a synthetic censored history: group 1 orders exactly `lambda`,
/// every further group orders a fresh draw from the second-quantity rule,
/// and each group records `samples_per_group` censored demands.
/// Deterministic under (seed, stream); the order quantities are drawn
/// before any demand.
pub fn generate_dataset(cfg: &GenerationConfig) -> Result<GeneratedData, DataError> {
    if cfg.num_groups == 0 {
        return Err(DataError::InvalidConfig("need at least one group".into()));
    }
    if cfg.samples_per_group == 0 {
        return Err(DataError::InvalidConfig("need at least one sample per group".into()));
    }
    if !(cfg.lambda > 0.0) || !cfg.lambda.is_finite() {
        return Err(DataError::InvalidConfig(format!(
            "boundary {} must be finite and positive",
            cfg.lambda
        )));
    }
    let mut rng = RngStream::new(cfg.seed, cfg.stream);

    let mut quantities = vec![cfg.lambda];
    for _ in 1..cfg.num_groups {
        let q = match cfg.second_quantity_rule {
            SecondQuantityRule::Continuous => {
                rng.uniform_range(cfg.lambda / 4.0, 3.0 * cfg.lambda / 4.0)
            }
            SecondQuantityRule::Integer => {
                let lo = (cfg.lambda / 4.0).ceil();
                let hi = (3.0 * cfg.lambda / 4.0).floor();
                if lo > hi {
                    return Err(DataError::InvalidConfig(format!(
                        "no integers in [{}, {}] to draw an order quantity from",
                        cfg.lambda / 4.0,
                        3.0 * cfg.lambda / 4.0
                    )));
                }
                rng.uniform_int(lo as u64, hi as u64) as f64
            }
        };
        quantities.push(q);
    }

    let mut groups = Vec::with_capacity(cfg.num_groups);
    let mut shadow = Vec::with_capacity(cfg.num_groups);
    for &q_off in &quantities {
        let demands = cfg.distribution.sample(&mut rng, cfg.samples_per_group);
        let sales = censor(&demands, q_off);
        groups.push(CensoredGroup::new(q_off, sales)?);
        shadow.push(demands);
    }
    Ok(GeneratedData {
        dataset: CensoredDataset::new(groups)?,
        demands: shadow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostRecord {
    pub b: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRecord {
    pub order_quantity: f64,
    pub sales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowRecord {
    pub order_quantity: f64,
    pub demands: Vec<f64>,
}

/// The on-disk dataset format. Field names are part of the format:
/// `{"cost": {"b", "h"}, "cap", "groups": [{"order_quantity", "sales"}],
/// "uncensored": optional [{"order_quantity", "demands"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub cost: CostRecord,
    pub cap: f64,
    pub groups: Vec<GroupRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncensored: Option<Vec<ShadowRecord>>,
}

impl DatasetFile {
    pub fn from_parts(
        data: &GeneratedData,
        cost: &CostParameters,
        cap: f64,
        include_shadow: bool,
    ) -> Self {
        let groups = data
            .dataset
            .groups()
            .iter()
            .map(|g| GroupRecord {
                order_quantity: g.order_quantity(),
                sales: g.sales().to_vec(),
            })
            .collect();
        let uncensored = include_shadow.then(|| {
            data.dataset
                .groups()
                .iter()
                .zip(&data.demands)
                .map(|(g, demands)| ShadowRecord {
                    order_quantity: g.order_quantity(),
                    demands: demands.clone(),
                })
                .collect()
        });
        Self {
            cost: CostRecord { b: cost.b(), h: cost.h() },
            cap,
            groups,
            uncensored,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String, DataError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &std::path::Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn cost_parameters(&self) -> Result<CostParameters, DataError> {
        Ok(CostParameters::new(self.cost.b, self.cost.h)?)
    }

    pub fn censored_dataset(&self) -> Result<CensoredDataset, DataError> {
        let groups = self
            .groups
            .iter()
            .map(|g| CensoredGroup::new(g.order_quantity, g.sales.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CensoredDataset::new(groups)?)
    }

    /// Uncensored demands aligned with `groups`, when the file carries them.
    pub fn shadow_demands(&self) -> Option<Vec<Vec<f64>>> {
        self.uncensored
            .as_ref()
            .map(|recs| recs.iter().map(|r| r.demands.clone()).collect())
    }

    /// Structural checks beyond what serde enforces: a positive finite cap,
    /// and a shadow (if present) that mirrors the groups and censors back
    /// to the stored sales exactly.
    pub fn validate(&self) -> Result<(), DataError> {
        if !self.cap.is_finite() || self.cap <= 0.0 {
            return Err(DataError::File(format!(
                "cap {} must be finite and positive",
                self.cap
            )));
        }
        let Some(shadow) = &self.uncensored else {
            return Ok(());
        };
        if shadow.len() != self.groups.len() {
            return Err(DataError::File(format!(
                "uncensored mirror has {} groups, dataset has {}",
                shadow.len(),
                self.groups.len()
            )));
        }
        for (i, (g, s)) in self.groups.iter().zip(shadow).enumerate() {
            if g.order_quantity != s.order_quantity {
                return Err(DataError::File(format!(
                    "group {i}: order quantity {} does not match mirror {}",
                    g.order_quantity, s.order_quantity
                )));
            }
            if censor(&s.demands, s.order_quantity) != g.sales {
                return Err(DataError::File(format!(
                    "group {i}: censoring the mirrored demands does not reproduce the sales"
                )));
            }
        }
        Ok(())
    }
}

/// A calendar date with civil-calendar arithmetic; enough to tell weekends
/// and holidays apart without pulling in a time library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CivilDate {
    year: i32,
    month: u8,
    day: u8,
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            let leap = year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
            if leap { 29 } else { 28 }
        }
        _ => 0,
    }
}

impl CivilDate {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self, DataError> {
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return Err(DataError::Date(
                format!("{year:04}-{month:02}-{day:02}"),
                "no such calendar day".into(),
            ));
        }
        Ok(Self { year, month, day })
    }

    /// Parses with a pattern of `%Y` (year), `%m` (month), `%d` (day) and
    /// literal separators, e.g. `%Y-%m-%d` or `%m/%d/%Y`. Month and day
    /// accept one or two digits.
    pub fn parse(text: &str, format: &str) -> Result<Self, DataError> {
        let bad = |why: &str| DataError::Date(text.to_string(), why.to_string());
        let bytes = text.as_bytes();
        let mut pos = 0usize;
        let mut year: Option<i32> = None;
        let mut month: Option<u8> = None;
        let mut day: Option<u8> = None;

        let mut fmt = format.chars().peekable();
        while let Some(c) = fmt.next() {
            if c == '%' {
                let spec = fmt.next().ok_or_else(|| bad("dangling % in format"))?;
                let max_digits = match spec {
                    'Y' => 4,
                    'm' | 'd' => 2,
                    other => {
                        return Err(DataError::Date(
                            text.to_string(),
                            format!("unsupported format specifier %{other}"),
                        ));
                    }
                };
                let start = pos;
                while pos < bytes.len()
                    && pos - start < max_digits
                    && bytes[pos].is_ascii_digit()
                {
                    pos += 1;
                }
                if pos == start {
                    return Err(bad("expected digits"));
                }
                let value: u32 = text[start..pos].parse().map_err(|_| bad("bad number"))?;
                match spec {
                    'Y' => year = Some(value as i32),
                    'm' => month = Some(value.try_into().map_err(|_| bad("month too large"))?),
                    'd' => day = Some(value.try_into().map_err(|_| bad("day too large"))?),
                    _ => unreachable!(),
                }
            } else {
                if pos >= bytes.len() || bytes[pos] != c as u8 {
                    return Err(bad("separator mismatch"));
                }
                pos += 1;
            }
        }
        if pos != bytes.len() {
            return Err(bad("trailing characters"));
        }
        match (year, month, day) {
            (Some(y), Some(m), Some(d)) => Self::new(y, m, d),
            _ => Err(bad("format must contain %Y, %m, and %d")),
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn day(&self) -> u8 {
        self.day
    }

    /// Days since 1970-01-01, negative before it.
    pub fn days_from_epoch(&self) -> i64 {
        let y = i64::from(self.year) - i64::from(self.month <= 2);
        let era = if y >= 0 { y } else { y - 399 } / 400;
        let yoe = y - era * 400;
        let m = i64::from(self.month);
        let d = i64::from(self.day);
        let doy = (153 * (m + if m > 2 { -3 } else { 9 }) + 2) / 5 + d - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146097 + doe - 719468
    }

    /// 0 = Sunday through 6 = Saturday.
    pub fn weekday(&self) -> u8 {
        ((self.days_from_epoch() + 4).rem_euclid(7)) as u8
    }

    pub fn is_weekend(&self) -> bool {
        matches!(self.weekday(), 0 | 6)
    }
}

impl std::fmt::Display for CivilDate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

/// One row of a sales CSV after parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalesRecord {
    pub date: CivilDate,
    pub category: String,
    pub quantity: u64,
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    /// Product category to keep; all other rows are ignored.
    pub category: String,
    pub date_column: String,
    pub category_column: String,
    pub quantity_column: String,
    pub date_format: String,
    /// Calendar days to drop on top of weekends.
    pub holidays: Vec<CivilDate>,
    /// Keep at most this many business days, sampled uniformly without
    /// replacement; `None` keeps them all.
    pub max_days: Option<usize>,
    pub seed: u64,
}

impl IngestConfig {
    pub fn new(category: impl Into<String>) -> Self {
        Self {
            category: category.into(),
            date_column: "order_date".into(),
            category_column: "category".into(),
            quantity_column: "quantity".into(),
            date_format: "%Y-%m-%d".into(),
            holidays: Vec::new(),
            max_days: None,
            seed: 0,
        }
    }
}

/// Reads a sales CSV, sums quantities per calendar day within the chosen
/// category, drops weekends and configured holidays, optionally subsamples
/// the surviving daily totals, and returns their empirical distribution.
/// Deterministic under the config seed.
pub fn ingest_sales_csv<R: Read>(
    reader: R,
    cfg: &IngestConfig,
) -> Result<DemandDistribution, DataError> {
    let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let column = |name: &str| -> Result<usize, DataError> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            DataError::Ingest(format!(
                "column '{name}' not found (available: {})",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let date_idx = column(&cfg.date_column)?;
    let category_idx = column(&cfg.category_column)?;
    let quantity_idx = column(&cfg.quantity_column)?;

    let mut daily: BTreeMap<CivilDate, u64> = BTreeMap::new();
    let mut seen_category = false;
    for (row_number, record) in csv_reader.records().enumerate() {
        let record = record?;
        let field = |idx: usize| -> Result<&str, DataError> {
            record.get(idx).ok_or_else(|| {
                DataError::Ingest(format!("row {}: too few fields", row_number + 2))
            })
        };
        if field(category_idx)? != cfg.category {
            continue;
        }
        seen_category = true;
        let date = CivilDate::parse(field(date_idx)?, &cfg.date_format)?;
        let quantity: u64 = field(quantity_idx)?.parse().map_err(|_| {
            DataError::Ingest(format!(
                "row {}: quantity '{}' is not a nonnegative integer",
                row_number + 2,
                field(quantity_idx).unwrap_or_default()
            ))
        })?;
        *daily.entry(date).or_insert(0) += quantity;
    }
    if !seen_category {
        return Err(DataError::Ingest(format!(
            "no rows in category '{}'",
            cfg.category
        )));
    }

    let mut totals: Vec<f64> = daily
        .iter()
        .filter(|(date, _)| !date.is_weekend() && !cfg.holidays.contains(date))
        .map(|(_, &q)| q as f64)
        .collect();
    if totals.is_empty() {
        return Err(DataError::Ingest(
            "every matching day was a weekend or holiday".into(),
        ));
    }

    if let Some(k) = cfg.max_days {
        if k == 0 {
            return Err(DataError::Ingest("max_days must be positive".into()));
        }
        if k < totals.len() {
            // Partial Fisher-Yates: the first k slots end up a uniform
            // sample without replacement.
            let mut rng = RngStream::new(cfg.seed, 0);
            let n = totals.len();
            for i in 0..k {
                let j = rng.uniform_int(i as u64, (n - 1) as u64) as usize;
                totals.swap(i, j);
            }
            totals.truncate(k);
        }
    }
    Ok(DemandDistribution::empirical_from_samples(&totals)?)
}
