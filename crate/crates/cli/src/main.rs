use censored_newsvendor::data::{
    CivilDate, DataError, DatasetFile, GenerationConfig, IngestConfig, SecondQuantityRule,
    generate_dataset, ingest_sales_csv,
};
use censored_newsvendor::evaluation::{PolicyKind, reports_to_csv, run_replications};
use censored_newsvendor::minimax::{
    HardRegime, Instance, lower_bound, minimax_risk, q_dagger, worst_case_regret,
};
use censored_newsvendor::newsvendor::CostParameters;
use censored_newsvendor::policies;
use censored_newsvendor_cli::experiment::{ExperimentConfig, parse_distribution};
use censored_newsvendor_cli::{CliError, oracle};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "cnv",
    version,
    about = "Newsvendor ordering when historical demand is censored at past stock levels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact minimax regret of an order under demand-censoring ambiguity
    Risk(InstanceArgs),
    /// Worst-case regret across an order-quantity grid, as CSV
    RegretCurve {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Number of grid intervals between 0 and the cap
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one ordering policy on a dataset file and print its decision
    Decide(DecideArgs),
    /// Run a replication sweep from a config file and emit the report CSV
    Simulate {
        /// Experiment config JSON
        config: PathBuf,
        /// Worker threads for replications; output is identical for any value
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the config's master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; falls back to the config's `output`, then stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a censored dataset file from a raw sales CSV
    Ingest(IngestArgs),
    /// Minimax lower bounds from the two-point hard instance families
    LowerBound {
        /// id | ke | ui (or the full regime names); all three when omitted
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        cap: f64,
        /// Sample size the bound is evaluated at
        #[arg(long)]
        n: usize,
    },
    /// Verify the closed-form regret against the brute-force oracle
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// Candidate distributions per probe
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Demand law: compact form like 'exponential(80)', 'uniform(0,100)',
    /// 'poisson(80)', 'normal(80,30)', 'point-mass(0:0.4,10:0.6)',
    /// 'empirical(1,2,3)', or a JSON object
    #[arg(long)]
    distribution: String,
    /// Largest historical order quantity (the observation boundary)
    #[arg(long)]
    lambda: f64,
    /// Unit underage (lost sale) cost
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Unit overage (holding) cost
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Known upper bound on demand
    #[arg(long)]
    cap: f64,
}

impl InstanceArgs {
    fn build(&self) -> Result<Instance, CliError> {
        let d = parse_distribution(&self.distribution)?.build().map_err(CliError::usage)?;
        let cp = CostParameters::new(self.b, self.h).map_err(CliError::usage)?;
        Instance::new(d, self.lambda, self.cap, cp).map_err(CliError::usage)
    }
}

#[derive(Args)]
struct DecideArgs {
    /// Dataset JSON file
    dataset: PathBuf,
    /// rcn | rcn-plus | naive-saa | subsample-saa | kaplan-meier | true-saa
    #[arg(long)]
    policy: String,
    /// Confidence level for the robust policies
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
    /// Override the dataset's unit underage cost
    #[arg(long)]
    b: Option<f64>,
    /// Override the dataset's unit overage cost
    #[arg(long)]
    h: Option<f64>,
    /// Override the dataset's demand cap
    #[arg(long)]
    cap: Option<f64>,
}

#[derive(Args)]
struct IngestArgs {
    /// Raw sales CSV with one row per transaction
    csv: PathBuf,
    /// Product category to keep
    #[arg(long)]
    category: String,
    /// Observation boundary for the generated groups
    #[arg(long)]
    lambda: Option<f64>,
    /// Boundary as a fraction of the optimal order for the ingested demand
    #[arg(long)]
    lambda_frac: Option<f64>,
    /// Sales observations per group
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Number of ordering groups (the first sits at the boundary)
    #[arg(long, default_value_t = 2)]
    groups: usize,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Demand cap; twice the largest daily total when omitted
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "order_date")]
    date_column: String,
    #[arg(long, default_value = "category")]
    category_column: String,
    #[arg(long, default_value = "quantity")]
    quantity_column: String,
    /// Date layout using %Y, %m, %d
    #[arg(long, default_value = "%Y-%m-%d")]
    date_format: String,
    /// Comma-separated dates (in the same format) to drop as holidays
    #[arg(long)]
    holidays: Option<String>,
    /// Keep at most this many business days, sampled without replacement
    #[arg(long)]
    max_days: Option<usize>,
    /// Embed the uncensored demands alongside the sales
    #[arg(long)]
    include_uncensored: bool,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Risk(args) => cmd_risk(&args),
        Command::RegretCurve { instance, grid, out } => cmd_regret_curve(&instance, grid, &out),
        Command::Decide(args) => cmd_decide(&args),
        Command::Simulate { config, jobs, seed, out } => cmd_simulate(&config, jobs, seed, &out),
        Command::Ingest(args) => cmd_ingest(&args),
        Command::LowerBound { regime, b, h, lambda, cap, n } => {
            cmd_lower_bound(regime.as_deref(), b, h, lambda, cap, n)
        }
        Command::OracleCheck { instances, grid, seed, jobs } => {
            cmd_oracle_check(instances, grid, seed, jobs)
        }
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn with_jobs<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--jobs must be positive".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(CliError::runtime)?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_risk(args: &InstanceArgs) -> Result<(), CliError> {
    let inst = args.build()?;
    let sol = minimax_risk(&inst);
    let out = serde_json::json!({
        "regime": sol.regime,
        "q_delta": sol.q_delta,
        "delta": sol.delta,
        "q_dagger": q_dagger(&inst).ok(),
        "g_minus_lambda": inst.g_minus_lambda(),
    });
    println!("{}", serde_json::to_string_pretty(&out).map_err(CliError::runtime)?);
    Ok(())
}

fn cmd_regret_curve(
    args: &InstanceArgs,
    grid: usize,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if grid < 1 {
        return Err(CliError::Usage("--grid must be positive".into()));
    }
    let inst = args.build()?;
    let cap = inst.cap();
    let mut qs: Vec<f64> = (0..=grid).map(|i| cap * (i as f64 / grid as f64)).collect();
    // Make sure the interesting corners are exact rows, not grid neighbors.
    if inst.lambda() <= cap {
        qs.push(inst.lambda());
    }
    if let Ok(hedge) = q_dagger(&inst) {
        qs.push(hedge);
    }
    qs.sort_by(f64::total_cmp);
    qs.dedup();

    let mut csv = String::from("q,regret\n");
    for q in qs {
        let regret = worst_case_regret(&inst, q).map_err(CliError::usage)?;
        csv.push_str(&format!("{q},{regret}\n"));
    }
    write_output(out, &csv)
}

fn cmd_decide(args: &DecideArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.dataset)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", args.dataset.display())))?;
    let file = DatasetFile::from_json(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.dataset.display())))?;
    file.validate().map_err(CliError::usage)?;

    let cp = CostParameters::new(
        args.b.unwrap_or(file.cost.b),
        args.h.unwrap_or(file.cost.h),
    )
    .map_err(CliError::usage)?;
    let cap = args.cap.unwrap_or(file.cap);
    let data = file.censored_dataset().map_err(CliError::usage)?;
    let kind: PolicyKind = args.policy.parse().map_err(CliError::usage)?;

    let decision = match kind {
        PolicyKind::Rcn => policies::rcn(&data, &cp, cap, args.delta),
        PolicyKind::RcnPlus => policies::rcn_plus(&data, &cp, cap, args.delta),
        PolicyKind::NaiveSaa => policies::naive_saa(&data, cp.rho()),
        PolicyKind::SubsampleSaa => policies::subsample_saa(&data, cp.rho()),
        PolicyKind::KaplanMeier => policies::kaplan_meier(&data, cp.rho()),
        PolicyKind::TrueSaa => {
            let shadow = file.shadow_demands().ok_or_else(|| {
                CliError::Usage(
                    "true-saa needs the uncensored demands, but the dataset has none".into(),
                )
            })?;
            let pooled: Vec<f64> = shadow.into_iter().flatten().collect();
            policies::true_saa(&pooled, cp.rho())
        }
    }
    .map_err(CliError::usage)?;

    println!("{}", serde_json::to_string_pretty(&decision).map_err(CliError::runtime)?);
    Ok(())
}

fn cmd_simulate(
    config: &PathBuf,
    jobs: Option<usize>,
    seed: Option<u64>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = ExperimentConfig::read(config)?;
    let sweep = cfg.to_sweep(seed)?;
    let output = with_jobs(jobs, || run_replications(&sweep))?.map_err(CliError::usage)?;
    for failure in &output.failures {
        eprintln!("warning: {failure}");
    }
    if output.reports.is_empty() {
        return Err(CliError::Runtime(
            "no grid point produced a report; see warnings above".into(),
        ));
    }
    let destination = out.clone().or_else(|| cfg.output.clone());
    write_output(&destination, &reports_to_csv(&output.reports))
}

fn classify_data_error(e: DataError) -> CliError {
    match e {
        DataError::Io(_) => CliError::Runtime(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

fn cmd_ingest(args: &IngestArgs) -> Result<(), CliError> {
    let mut cfg = IngestConfig::new(args.category.clone());
    cfg.date_column = args.date_column.clone();
    cfg.category_column = args.category_column.clone();
    cfg.quantity_column = args.quantity_column.clone();
    cfg.date_format = args.date_format.clone();
    cfg.max_days = args.max_days;
    cfg.seed = args.seed;
    if let Some(list) = &args.holidays {
        for item in list.split(',') {
            cfg.holidays.push(
                CivilDate::parse(item.trim(), &args.date_format).map_err(CliError::usage)?,
            );
        }
    }

    let reader = std::fs::File::open(&args.csv)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", args.csv.display())))?;
    let demand = ingest_sales_csv(reader, &cfg).map_err(classify_data_error)?;

    let cp = CostParameters::new(args.b, args.h).map_err(CliError::usage)?;
    let lambda = match (args.lambda, args.lambda_frac) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either --lambda or --lambda-frac, not both".into(),
            ));
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --lambda or --lambda-frac is required".into(),
            ));
        }
        (Some(lambda), None) => lambda,
        (None, Some(frac)) => {
            let q_star = censored_newsvendor::newsvendor::optimal_quantity(&demand, &cp);
            if !(q_star > 0.0) {
                return Err(CliError::Usage(format!(
                    "cannot scale --lambda-frac: the optimal order is {q_star}"
                )));
            }
            frac * q_star
        }
    };

    let data = generate_dataset(&GenerationConfig {
        distribution: demand.clone(),
        lambda,
        num_groups: args.groups,
        samples_per_group: args.n,
        seed: args.seed,
        stream: 0,
        second_quantity_rule: SecondQuantityRule::Integer,
    })
    .map_err(classify_data_error)?;

    let cap = match args.cap {
        Some(cap) => cap,
        None => {
            let max = demand.quantile(1.0).map_err(CliError::usage)?;
            if !(max > 0.0) {
                return Err(CliError::Usage(
                    "every daily total is zero; give --cap explicitly".into(),
                ));
            }
            2.0 * max
        }
    };

    let file = DatasetFile::from_parts(&data, &cp, cap, args.include_uncensored);
    let json = file.to_json().map_err(CliError::runtime)? + "\n";
    write_output(&args.out, &json)
}

fn cmd_lower_bound(
    regime: Option<&str>,
    b: f64,
    h: f64,
    lambda: f64,
    cap: f64,
    n: usize,
) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let cp = CostParameters::new(b, h).map_err(CliError::usage)?;
    let out = match regime {
        Some(name) => {
            let regime: HardRegime = name.parse().map_err(CliError::usage)?;
            serde_json::json!({
                "regime": regime,
                "n": n,
                "lower_bound": lower_bound(regime, &cp, lambda, cap, n),
            })
        }
        None => {
            let mut bounds = serde_json::Map::new();
            for regime in HardRegime::ALL {
                bounds.insert(
                    regime.name().to_string(),
                    lower_bound(regime, &cp, lambda, cap, n).into(),
                );
            }
            serde_json::json!({ "n": n, "bounds": bounds })
        }
    };
    println!("{}", serde_json::to_string_pretty(&out).map_err(CliError::runtime)?);
    Ok(())
}

fn cmd_oracle_check(
    instances: usize,
    grid: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    if instances == 0 {
        return Err(CliError::Usage("--instances must be positive".into()));
    }
    if grid < 2 {
        return Err(CliError::Usage("--grid needs at least 2 points".into()));
    }
    let report = with_jobs(jobs, || oracle::check_instances(instances, grid, seed))?;
    for failure in &report.failures {
        eprintln!("{failure}");
    }
    println!("{}", report.summary_line());
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} of {} instances disagreed with the oracle",
            report.instances - report.passed,
            report.instances
        )))
    }
}
