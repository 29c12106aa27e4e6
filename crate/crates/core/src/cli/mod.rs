//! Command-line front end: `run`, `matrix`, `tables` and `verify`.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O failure, 3 a verify
//! property failed.

pub mod config;
pub mod output;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{delay_evolution, delay_vs_epidemic, CellKey, RunSummary, TableRow};
use crate::engine::{RunStats, ScenarioConfig, Simulation};
use crate::metrics::MetricKind;
use crate::routing::Policy;

use config::{parse_config, parse_metric, ConfigError, ConfigFile};

pub const DEFAULT_D_VALUES: [f64; 3] = [1.1, 1.5, 2.0];
/// Knowledge levels below full knowledge; full (`l = N`) is always included.
pub const PARTIAL_LEVELS: [usize; 4] = [4, 3, 2, 1];
pub const METRIC_NAMES: [&str; 4] = ["euclidean", "angle", "canberra", "matching"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0} propert(y/ies) failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::VerifyFailed(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<crate::error::Error> for CliError {
    fn from(e: crate::error::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "pattern-dtn", version, about = "Mobility-pattern routing simulator for delay-tolerant networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario (requires d and policy) over `runs` seeds.
    Run(RunArgs),
    /// Simulate the experiment grid and write records, tables and series.
    Matrix(ScenarioArgs),
    /// Rebuild tables.csv from the record files in --out.
    Tables {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the property suite.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct ScenarioArgs {
    /// Scenario file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// epidemic | opportunistic | random | pattern
    #[arg(long)]
    pub policy: Option<String>,
    /// euclidean | canberra | angle | matching
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub d: Option<f64>,
    /// Number of principal pattern components known (l).
    #[arg(long)]
    pub knowledge: Option<usize>,
    /// First master seed; runs use seed, seed+1, ...
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Concurrent simulations (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Also write every node move to traces/<run_id>.csv.
    #[arg(long)]
    pub trace: bool,
}

impl ScenarioArgs {
    /// File values overlaid with command-line flags.
    pub fn config_file(&self) -> Result<ConfigFile, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            policy: self.policy.clone(),
            metric: self.metric.clone(),
            d: self.d,
            knowledge: self.knowledge,
            seed: self.seed,
            runs: self.runs,
            ..ConfigFile::default()
        };
        Ok(file.overlay(&flags))
    }
}

/// Parses `args` and executes; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(args) => cmd_run(&args).map(|_| ()),
        Command::Matrix(args) => cmd_matrix(&args).map(|_| ()),
        Command::Tables { out } => cmd_tables(&out).map(|_| ()),
        Command::Verify { seed } => cmd_verify(seed),
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        b = b.num_threads(j);
    }
    b.build().map_err(|e| CliError::Validation(e.to_string()))
}

fn seeds(base: &ScenarioConfig) -> Result<Vec<u64>, CliError> {
    if base.runs == 0 {
        return Err(CliError::Validation("runs must be at least 1".into()));
    }
    Ok((0..base.runs as u64).map(|i| base.seed.wrapping_add(i)).collect())
}

fn print_table(rows: &[TableRow]) {
    println!(
        "{:<14} {:<10} {:>5} {:>3} {:>18} {:>14} {:>7}",
        "policy", "metric", "d", "l", "delay", "hops", "ratio"
    );
    let ci = |m: f64, h: f64| if h.is_finite() { format!("{m:.1} ± {h:.1}") } else { format!("{m:.1}") };
    for r in rows {
        println!(
            "{:<14} {:<10} {:>5} {:>3} {:>18} {:>14} {:>7.4}",
            r.key.policy,
            r.key.metric,
            r.key.d(),
            r.key.l,
            ci(r.delay.mean, r.delay.half_width),
            ci(r.hops.mean, r.hops.half_width),
            r.delivery_ratio
        );
    }
}

fn simulate(cfg: &ScenarioConfig, out: &Path, trace: bool) -> Result<RunStats, CliError> {
    let sim = Simulation::new(cfg)?;
    let sim = if trace { sim.record_trace() } else { sim };
    let (stats, moves) = sim.run()?;
    output::write_records(out, &stats)?;
    if let Some(moves) = moves {
        let id = output::run_id(&CellKey::new(&stats.policy, stats.d, stats.knowledge), stats.seed);
        output::write_trace(out, &id, &moves)?;
    }
    Ok(stats)
}

pub fn cmd_run(args: &RunArgs) -> Result<Vec<TableRow>, CliError> {
    let scenario = args.scenario.config_file()?.scenario()?;
    scenario.validate()?;
    let out = &args.scenario.out;
    output::ensure_dir(&out.join(output::RECORDS_DIR))?;
    let configs: Vec<ScenarioConfig> = seeds(&scenario)?
        .into_iter()
        .map(|seed| ScenarioConfig { seed, ..scenario.clone() })
        .collect();
    let summaries = pool(args.scenario.jobs)?.install(|| {
        configs
            .par_iter()
            .map(|c| simulate(c, out, args.trace).map(|s| RunSummary::of(&s)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let rows = output::emit_table(out, &summaries)?;
    print_table(&rows);
    Ok(rows)
}

/// The policy grid: baselines, then every metric at full and partial
/// knowledge, narrowed by whatever the config pins down.
pub fn policy_grid(file: &ConfigFile, base: &ScenarioConfig) -> Result<Vec<Policy>, CliError> {
    let names: Vec<&str> = match file.policy.as_deref() {
        Some(p) => vec![p],
        None => vec!["epidemic", "opportunistic", "random", "pattern"],
    };
    let metrics: Vec<MetricKind> = match file.metric.as_deref() {
        Some(m) => vec![parse_metric(m, base.delta)?],
        None => METRIC_NAMES.iter().map(|m| parse_metric(m, base.delta)).collect::<Result<_, _>>()?,
    };
    let levels: Vec<usize> = match file.knowledge {
        Some(l) => vec![l],
        None => std::iter::once(base.n_locations)
            .chain(PARTIAL_LEVELS.into_iter().filter(|&l| l < base.n_locations))
            .collect(),
    };
    let mut grid = Vec::new();
    for name in names {
        match name {
            "epidemic" => grid.push(Policy::Epidemic),
            "opportunistic" => grid.push(Policy::Opportunistic),
            "random" => grid.push(Policy::Random),
            "pattern" => {
                for &metric in &metrics {
                    for &knowledge in &levels {
                        grid.push(Policy::Pattern { metric, knowledge });
                    }
                }
            }
            other => return Err(ConfigError::InvalidValue { key: "policy".into(), value: other.into() }.into()),
        }
    }
    Ok(grid)
}

/// Runs the grid one (d, seed) group at a time so only one group's records
/// are in memory. Delay-vs-epidemic histograms and evolution series are
/// written for the first seed of each `d`.
pub fn cmd_matrix(args: &ScenarioArgs) -> Result<Vec<TableRow>, CliError> {
    let file = args.config_file()?;
    let base = file.base_scenario()?;
    let d_values: Vec<f64> = file.d.map_or(DEFAULT_D_VALUES.to_vec(), |d| vec![d]);
    let policies = policy_grid(&file, &base)?;
    let seeds = seeds(&base)?;
    for &d in &d_values {
        for &policy in &policies {
            ScenarioConfig { d, policy, ..base.clone() }.validate()?;
        }
    }
    let out = &args.out;
    output::ensure_dir(&out.join(output::RECORDS_DIR))?;
    let pool = pool(args.jobs)?;
    let total = d_values.len() * seeds.len() * policies.len();
    let mut summaries = Vec::with_capacity(total);
    for &d in &d_values {
        for (si, &seed) in seeds.iter().enumerate() {
            let configs: Vec<ScenarioConfig> = policies
                .iter()
                .map(|&policy| ScenarioConfig { d, policy, seed, ..base.clone() })
                .collect();
            let group: Vec<RunStats> = pool.install(|| {
                configs
                    .par_iter()
                    .map(|c| simulate(c, out, false))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            for s in &group {
                let sum = RunSummary::of(s);
                eprintln!(
                    "[{}/{}] {} delay {} hops {}",
                    summaries.len() + 1,
                    total,
                    output::run_id(&sum.key, seed),
                    sum.mean_delay.map_or("-".into(), |x| format!("{x:.2}")),
                    sum.mean_hops.map_or("-".into(), |x| format!("{x:.2}")),
                );
                summaries.push(sum);
            }
            if si == 0 {
                write_series(out, &group)?;
            }
        }
    }
    let rows = output::emit_table(out, &summaries)?;
    print_table(&rows);
    Ok(rows)
}

fn write_series(out: &Path, group: &[RunStats]) -> Result<(), CliError> {
    let epidemic = group.iter().find(|s| s.policy == Policy::Epidemic);
    for s in group {
        let id = output::run_id(&CellKey::new(&s.policy, s.d, s.knowledge), s.seed);
        output::write_evolution(out, &id, &delay_evolution(s))?;
        if let Some(epi) = epidemic.filter(|_| s.policy != Policy::Epidemic) {
            output::write_histogram(out, &id, &delay_vs_epidemic(s, epi)?)?;
        }
    }
    Ok(())
}

pub fn cmd_tables(out: &Path) -> Result<Vec<TableRow>, CliError> {
    let summaries = output::read_all_summaries(out)?;
    let rows = output::emit_table(out, &summaries)?;
    print_table(&rows);
    Ok(rows)
}

pub fn cmd_verify(seed: u64) -> Result<(), CliError> {
    let outcomes = verify::run_properties(seed);
    let mut failed = 0;
    for o in &outcomes {
        match &o.result {
            Ok(()) => println!("PASS  {}", o.name),
            Err(why) => {
                failed += 1;
                println!("FAIL  {}: {why}", o.name);
            }
        }
    }
    if failed > 0 {
        Err(CliError::VerifyFailed(failed))
    } else {
        Ok(())
    }
}
