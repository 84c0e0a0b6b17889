//! `devine` command line: `run`, `compare` and `validate`.
//!
//! Every output directory gets a `manifest.json` holding the fully
//! resolved configuration; passing that manifest back as `--config`
//! reproduces the CSV outputs byte for byte.
//!
//! `series.csv` columns: time, arrivals, accepted, acceptance_ratio,
//! revenue, cost, revenue_to_cost, cpu_utilization, link_utilization,
//! live_requests, mean_messages.
//!
//! `arrivals.csv` columns: index, request_id, time, primary, virtual_nodes,
//! virtual_links, vnr_hash, accepted, revenue, cost, embedding_messages,
//! embedded_messages, acceptance_ratio. `compare` prefixes algorithm and
//! seed.

pub mod format;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use devine_core::generate::{NormalParams, SpreadKind};
use devine_core::sim::{compare_algorithms, run_simulation, Algorithm, SimConfig, SimReport};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use format::{arrival_row, round_json, sig6, write_arrivals, write_json, write_series, ARRIVAL_COLUMNS};

pub const OUT_DIR_ENV: &str = "DEVINE_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "devine", version, about = "Decentralized virtual network embedding simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write series.csv, arrivals.csv, summary.json,
    /// manifest.json and (devine only) trace.jsonl.
    Run(RunArgs),
    /// Run every (algorithm, seed) pair over shared workloads and write
    /// comparison.csv, aggregate.csv, plot.csv, arrivals.csv, manifest.json.
    Compare(CompareArgs),
    /// Print the resolved configuration without running anything.
    Validate(ConfigArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON config (a SimConfig document or a manifest.json from a previous run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub servers: Option<usize>,
    #[arg(long)]
    pub link_prob: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub arrival_rate: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<u32>,
    #[arg(long)]
    pub leaders: Option<usize>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    /// Forbid co-locating virtual nodes of one request.
    #[arg(long)]
    pub injective: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated; defaults to every implemented algorithm.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Vec<String>,
    /// Comma-separated master seeds; defaults to the config's seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub config: SimConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Loads `--config` (plain config or manifest) and applies flag overrides.
/// Returns the manifest too when one was given.
pub fn resolve(args: &ConfigArgs) -> Result<(SimConfig, Option<RunManifest>), CliError> {
    let (mut cfg, manifest) = match &args.config {
        None => (SimConfig::default(), None),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let value: Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if value.get("tool").is_some() && value.get("config").is_some() {
                let m: RunManifest =
                    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                (m.config.clone(), Some(m))
            } else {
                let c =
                    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                (c, None)
            }
        }
    };
    if let Some(a) = &args.algorithm {
        cfg.algorithm = a.parse().map_err(CliError::Config)?;
    }
    let g = &mut cfg.generator;
    if let Some(v) = args.seed {
        g.seed = v;
    }
    if let Some(v) = args.servers {
        g.server_count = v;
    }
    if let Some(v) = args.link_prob {
        g.link_probability = v;
    }
    if let Some(v) = args.arrival_rate {
        g.arrival_rate = v;
    }
    if let Some(v) = args.duration {
        cfg.duration = v;
    }
    if let Some(v) = args.alpha {
        cfg.embed.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.embed.beta = v;
    }
    if let Some(v) = args.leaders {
        cfg.leaders = v;
    }
    if let Some(v) = args.x {
        cfg.embed.x = v;
    }
    if let Some(v) = args.y {
        cfg.embed.y = v;
    }
    if args.injective {
        cfg.embed.injective = true;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok((cfg, manifest))
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn summary_json(report: &SimReport) -> Result<Value, CliError> {
    Ok(round_json(serde_json::to_value(&report.summary).map_err(runtime)?))
}

pub fn cmd_run(args: &RunArgs) -> Result<SimReport, CliError> {
    let (cfg, _) = resolve(&args.config)?;
    let dir = &args.out_dir;
    prepare_dir(dir)?;
    let started_unix = unix_now();
    let clock = Instant::now();
    let report = run_simulation(&cfg).map_err(runtime)?;

    write_series(&dir.join("series.csv"), &report).map_err(runtime)?;
    write_arrivals(&dir.join("arrivals.csv"), &report).map_err(runtime)?;
    write_json(&dir.join("summary.json"), &summary_json(&report)?).map_err(runtime)?;
    if cfg.algorithm == Algorithm::Devine {
        let mut jsonl = String::new();
        for event in report.traces.iter().flat_map(|t| &t.events) {
            let v = round_json(serde_json::to_value(event).map_err(runtime)?);
            jsonl.push_str(&v.to_string());
            jsonl.push('\n');
        }
        fs::write(dir.join("trace.jsonl"), jsonl).map_err(runtime)?;
    }
    let manifest = RunManifest {
        tool: "devine".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "run".into(),
        master_seed: cfg.seed(),
        config: cfg,
        algorithms: vec![],
        seeds: vec![],
        started_unix,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("manifest.json"), &serde_json::to_value(&manifest).map_err(runtime)?).map_err(runtime)?;

    let s = &report.summary;
    println!(
        "{} seed {}: {} arrivals, acceptance {}, revenue/cost {}, outputs in {}",
        s.algorithm,
        s.seed,
        s.arrivals,
        sig6(s.acceptance_ratio),
        sig6(s.revenue_to_cost),
        dir.display()
    );
    Ok(report)
}

pub const COMPARISON_COLUMNS: [&str; 8] = [
    "algorithm",
    "seed",
    "acceptance",
    "revenue",
    "cost",
    "revenue_to_cost",
    "mean_cpu_utilization",
    "mean_link_utilization",
];

const METRICS: [&str; 6] =
    ["acceptance", "revenue", "cost", "revenue_to_cost", "mean_cpu_utilization", "mean_link_utilization"];

fn metric_values(r: &SimReport) -> [f64; 6] {
    let s = &r.summary;
    [s.acceptance_ratio, s.revenue, s.cost, s.revenue_to_cost, s.mean_cpu_utilization, s.mean_link_utilization]
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[m - 1] + xs[m]) / 2.0
    } else {
        xs[m]
    }
}

/// Fails when two algorithms saw different requests for the same seed.
fn check_workloads(reports: &[SimReport]) -> Result<(), CliError> {
    let mut first: BTreeMap<u64, &SimReport> = BTreeMap::new();
    for r in reports {
        let Some(base) = first.get(&r.summary.seed) else {
            first.insert(r.summary.seed, r);
            continue;
        };
        let same = base.arrivals.len() == r.arrivals.len()
            && base
                .arrivals
                .iter()
                .zip(&r.arrivals)
                .all(|(a, b)| a.vnr_hash == b.vnr_hash && a.primary == b.primary && a.time == b.time);
        if !same {
            return Err(CliError::Runtime(format!(
                "seed {}: {} and {} saw different workloads",
                r.summary.seed, base.summary.algorithm, r.summary.algorithm
            )));
        }
    }
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Vec<SimReport>, CliError> {
    let (cfg, manifest) = resolve(&args.config)?;
    let algorithms: Vec<Algorithm> = if !args.algorithms.is_empty() {
        args.algorithms.iter().map(|a| a.trim().parse()).collect::<Result<_, _>>().map_err(CliError::Config)?
    } else {
        match &manifest {
            Some(m) if !m.algorithms.is_empty() => m.algorithms.clone(),
            _ => Algorithm::ALL.to_vec(),
        }
    };
    let seeds: Vec<u64> = if !args.seeds.is_empty() {
        args.seeds.clone()
    } else {
        match &manifest {
            Some(m) if !m.seeds.is_empty() => m.seeds.clone(),
            _ => vec![cfg.seed()],
        }
    };
    let dir = &args.out_dir;
    prepare_dir(dir)?;
    let started_unix = unix_now();
    let clock = Instant::now();

    let mut cfgs = Vec::new();
    for &algorithm in &algorithms {
        for &seed in &seeds {
            let mut c = cfg.clone();
            c.algorithm = algorithm;
            c.generator.seed = seed;
            cfgs.push(c);
        }
    }
    let reports = compare_algorithms(&cfgs).map_err(runtime)?;
    check_workloads(&reports)?;

    let mut table = csv::Writer::from_path(dir.join("comparison.csv")).map_err(runtime)?;
    table.write_record(COMPARISON_COLUMNS).map_err(runtime)?;
    for r in &reports {
        let mut row = vec![r.summary.algorithm.to_string(), r.summary.seed.to_string()];
        row.extend(metric_values(r).iter().map(|&v| sig6(v)));
        table.write_record(row).map_err(runtime)?;
    }
    table.flush().map_err(runtime)?;

    let mut agg = csv::Writer::from_path(dir.join("aggregate.csv")).map_err(runtime)?;
    agg.write_record(["algorithm", "metric", "runs", "mean", "median", "min", "max"]).map_err(runtime)?;
    println!(
        "{:<10} {:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "algorithm", "runs", "acceptance", "revenue", "cost", "rev/cost", "cpu_util", "link_util"
    );
    for &algorithm in &algorithms {
        let runs: Vec<&SimReport> = reports.iter().filter(|r| r.summary.algorithm == algorithm).collect();
        let mut medians = Vec::new();
        for (i, metric) in METRICS.iter().enumerate() {
            let xs: Vec<f64> = runs.iter().map(|r| metric_values(r)[i]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let med = median(xs);
            medians.push(med);
            agg.write_record([
                algorithm.to_string(),
                metric.to_string(),
                runs.len().to_string(),
                sig6(mean),
                sig6(med),
                sig6(min),
                sig6(max),
            ])
            .map_err(runtime)?;
        }
        print!("{:<10} {:>5}", algorithm.to_string(), runs.len());
        for m in medians {
            print!(" {:>12}", sig6(m));
        }
        println!();
    }
    agg.flush().map_err(runtime)?;

    let mut plot = csv::Writer::from_path(dir.join("plot.csv")).map_err(runtime)?;
    plot.write_record(["algorithm", "seed", "time", "metric", "value"]).map_err(runtime)?;
    for r in &reports {
        for e in &r.series.epochs {
            let values = [
                ("acceptance_ratio", e.acceptance_ratio),
                ("revenue", e.revenue),
                ("cost", e.cost),
                ("revenue_to_cost", e.revenue_to_cost),
                ("cpu_utilization", e.cpu_utilization),
                ("link_utilization", e.link_utilization),
            ];
            for (name, v) in values {
                plot.write_record([
                    r.summary.algorithm.to_string(),
                    r.summary.seed.to_string(),
                    sig6(e.time),
                    name.to_string(),
                    sig6(v),
                ])
                .map_err(runtime)?;
            }
        }
    }
    plot.flush().map_err(runtime)?;

    let mut arrivals = csv::Writer::from_path(dir.join("arrivals.csv")).map_err(runtime)?;
    let mut header = vec!["algorithm", "seed"];
    header.extend(ARRIVAL_COLUMNS);
    arrivals.write_record(header).map_err(runtime)?;
    for r in &reports {
        for a in &r.arrivals {
            let mut row = vec![r.summary.algorithm.to_string(), r.summary.seed.to_string()];
            row.extend(arrival_row(a));
            arrivals.write_record(row).map_err(runtime)?;
        }
    }
    arrivals.flush().map_err(runtime)?;

    let manifest = RunManifest {
        tool: "devine".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "compare".into(),
        master_seed: cfg.seed(),
        config: cfg,
        algorithms,
        seeds,
        started_unix,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("manifest.json"), &serde_json::to_value(&manifest).map_err(runtime)?).map_err(runtime)?;
    Ok(reports)
}

fn describe(name: &str, p: &NormalParams, kind: SpreadKind) -> String {
    let how = match kind {
        SpreadKind::Variance => "variance",
        SpreadKind::StdDev => "standard deviation",
    };
    format!(
        "  {name:<14} N({}, {}) with spread read as {how}: std dev {}",
        sig6(p.mean),
        sig6(p.spread),
        sig6(p.std_dev(kind))
    )
}

/// Resolved config as pretty JSON followed by the distribution readings.
pub fn validate_report(cfg: &SimConfig) -> String {
    let g = &cfg.generator;
    let mut out = serde_json::to_string_pretty(cfg).expect("config serializes");
    out.push_str("\n\ndistributions (truncated below at ");
    out.push_str(&sig6(g.draw_floor));
    out.push_str(&format!(", lifetimes at {}):\n", sig6(g.lifetime_floor)));
    for (name, p) in [
        ("node cpu", &g.node_cpu),
        ("node memory", &g.node_memory),
        ("node gpu", &g.node_gpu),
        ("link bandwidth", &g.link_bandwidth),
        ("vnr cpu", &g.vnr_cpu),
        ("vnr memory", &g.vnr_memory),
        ("vnr gpu", &g.vnr_gpu),
        ("vnr bandwidth", &g.vnr_bandwidth),
        ("lifetime", &g.lifetime),
    ] {
        out.push_str(&describe(name, p, g.spread_kind));
        out.push('\n');
    }
    out
}

pub fn cmd_validate(args: &ConfigArgs) -> Result<SimConfig, CliError> {
    let (cfg, _) = resolve(args)?;
    print!("{}", validate_report(&cfg));
    Ok(cfg)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| ()),
        Command::Compare(a) => cmd_compare(a).map(|_| ()),
        Command::Validate(a) => cmd_validate(a).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("devine: {e}");
            e.exit_code()
        }
    }
}
