//! Command-line front end: dataset generation, strategy runs and CSV reports.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for data or I/O
//! errors.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::dataset::{generate_synthetic, parse_trace_file, write_trace_file, SynthParams, TraceSet};
use crate::metrics::{
    comparison_row, incomplete_path_distribution, missed_report, quantile, redundancy_distribution,
    ComparisonRow, IncompleteDistribution, MissedReport, RedundancyDistribution,
};
use crate::model::Ttl;
use crate::probing::{run_strategy, tune_h, ProbeParams, SearchStopRule, Strategy, StrategyResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Destination count used by `--scaled`.
pub const SCALED_DESTINATIONS: usize = 50_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Io { .. } => EXIT_DATA,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "backtrace-sim", version, about = "Replay route-tracing strategies against trace datasets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic trace file.
    Gen {
        #[command(flatten)]
        synth: SynthArgs,
        /// Output trace file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run strategies and write CSV reports.
    Run(RunArgs),
    /// Print quantiles of a file holding one integer per line.
    Quantiles {
        values_file: PathBuf,
        /// Fractions in [0, 1]; defaults to the nine plotted levels.
        #[arg(long = "q", value_delimiter = ',')]
        q: Vec<f64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long = "destinations", default_value_t = 5_000)]
    pub n_destinations: usize,
    /// Use the 50,000-destination corpus size.
    #[arg(long)]
    pub scaled: bool,
    #[arg(long, default_value_t = 17.0)]
    pub mean_depth: f64,
    #[arg(long, default_value_t = 3.0)]
    pub depth_spread: f64,
    #[arg(long = "branching", default_value_t = 2.0)]
    pub branching_factor: f64,
    #[arg(long = "dest-nonresponse", default_value_t = 0.4)]
    pub dest_nonresponse_rate: f64,
    #[arg(long = "hop-nonresponse", default_value_t = 0.05)]
    pub hop_nonresponse_rate: f64,
    #[arg(long, env = "BACKTRACE_SEED", default_value_t = 1)]
    pub seed: u64,
}

impl SynthArgs {
    pub fn params(&self) -> SynthParams {
        SynthParams {
            n_destinations: if self.scaled {
                SCALED_DESTINATIONS
            } else {
                self.n_destinations
            },
            mean_depth: self.mean_depth,
            depth_spread: self.depth_spread,
            branching_factor: self.branching_factor,
            dest_nonresponse_rate: self.dest_nonresponse_rate,
            hop_nonresponse_rate: self.hop_nonresponse_rate,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchStopArg {
    /// Stop a destination on any stop-set hit.
    Any,
    /// Let forward probing run to the silence gap; only backward hits stop.
    Backward,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Trace file to replay.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    pub input: Option<PathBuf>,
    /// Generate the dataset instead of reading one.
    #[arg(long)]
    pub gen: bool,
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Strategy name or `all`.
    #[arg(long, default_value = "all")]
    pub strategy: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub probes_per_hop: u32,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub gap_limit: u32,
    /// Warm-up traces for tuning h (default: 2% of destinations, at most 1000).
    #[arg(long = "warmup", value_parser = clap::value_parser!(u64).range(1..))]
    pub warmup: Option<u64>,
    /// Fixed start hop for the searching strategies.
    #[arg(long = "h", value_parser = clap::value_parser!(u32).range(1..=255))]
    pub h: Option<u32>,
    #[arg(long = "search-stop", value_enum, default_value_t = SearchStopArg::Backward)]
    pub search_stop: SearchStopArg,
    /// Reorder destinations with this seed before probing.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: DataSource,
    pub strategies: Vec<Strategy>,
    pub params: ProbeParams,
    pub fixed_h: Option<Ttl>,
    pub shuffle_seed: Option<u64>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(SynthParams),
}

impl RunArgs {
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let source = match &self.input {
            Some(path) => DataSource::File(path.clone()),
            None => DataSource::Synthetic(self.synth.params()),
        };
        let strategies = if self.strategy == "all" {
            Strategy::ALL.to_vec()
        } else {
            vec![self
                .strategy
                .parse::<Strategy>()
                .map_err(|e| CliError::Usage(e.to_string()))?]
        };
        let params = ProbeParams {
            probes_per_hop: self.probes_per_hop,
            gap_limit: self.gap_limit,
            warmup_count: self.warmup.map(|w| w as usize),
            search_stop: match self.search_stop {
                SearchStopArg::Any => SearchStopRule::AnyPhase,
                SearchStopArg::Backward => SearchStopRule::BackwardOnly,
            },
        };
        Ok(RunConfig {
            source,
            strategies,
            params,
            fixed_h: self.h,
            shuffle_seed: self.shuffle_seed,
            out_dir: self.out.clone(),
        })
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Gen { synth, out: path } => cmd_gen(&synth.params(), &path, out),
        Command::Run(args) => args.config().and_then(|cfg| cmd_run(&cfg, out)),
        Command::Quantiles { values_file, q } => cmd_quantiles(&values_file, &q, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_gen(params: &SynthParams, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let ts = generate_synthetic(params).map_err(|e| CliError::Usage(e.to_string()))?;
    fs::write(path, write_trace_file(&ts)).map_err(io_err(path))?;
    writeln!(out, "{}", dataset_summary(&ts)).map_err(io_err(path))?;
    Ok(())
}

fn dataset_summary(ts: &TraceSet) -> String {
    let responding: Vec<Ttl> = ts.paths().iter().filter_map(|p| p.dest_hop()).collect();
    let mean_depth = if responding.is_empty() {
        0.0
    } else {
        responding.iter().map(|&d| f64::from(d)).sum::<f64>() / responding.len() as f64
    };
    let incomplete = if ts.is_empty() {
        0.0
    } else {
        (ts.len() - responding.len()) as f64 / ts.len() as f64
    };
    format!(
        "paths={} mean_depth={mean_depth:.2} incomplete_fraction={incomplete:.4}",
        ts.len()
    )
}

fn load(source: &DataSource) -> Result<TraceSet, CliError> {
    match source {
        DataSource::File(path) => {
            let bytes = fs::read(path).map_err(io_err(path))?;
            parse_trace_file(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        }
        DataSource::Synthetic(p) => generate_synthetic(p).map_err(|e| CliError::Usage(e.to_string())),
    }
}

/// Runs one strategy the way the CLI reports it: the standalone searching
/// strategy only sees destinations that never replied.
fn execute(ts: &TraceSet, strategy: Strategy, cfg: &RunConfig) -> StrategyResult {
    let mut strategy = strategy;
    if let Some(h) = cfg.fixed_h {
        strategy = strategy.with_start_hop(h);
    }
    match strategy {
        Strategy::Searching(h) => {
            let h = h.unwrap_or_else(|| tune_h(ts, cfg.params.warmup_for(ts.len())));
            let incomplete = ts.filtered(|p| !p.dest_responded());
            run_strategy(&incomplete, Strategy::Searching(Some(h)), &cfg.params, &mut ())
        }
        other => run_strategy(ts, other, &cfg.params, &mut ()),
    }
}

/// Runs the reference and the selected strategies concurrently.
pub fn run_all(ts: &TraceSet, cfg: &RunConfig) -> (StrategyResult, Vec<StrategyResult>) {
    let mut selected: Vec<Strategy> = vec![Strategy::Standard];
    selected.extend(cfg.strategies.iter().filter(|s| **s != Strategy::Standard));
    let mut results: Vec<StrategyResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = selected
            .iter()
            .map(|&s| scope.spawn(move || execute(ts, s, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("strategy thread panicked"))
            .collect()
    });
    let reference = results.remove(0);
    (reference, results)
}

pub fn cmd_run(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let mut ts = load(&cfg.source)?;
    if let Some(seed) = cfg.shuffle_seed {
        ts = ts.shuffled(seed);
    }
    let (reference, others) = run_all(&ts, cfg);

    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: String, body: String| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))
    };

    let mut rows = Vec::new();
    for r in std::iter::once(&reference).chain(&others) {
        write(
            format!("redundancy_{}.csv", r.strategy_name),
            redundancy_csv(&redundancy_distribution(r)),
        )?;
        write(
            format!("missed_{}.csv", r.strategy_name),
            missed_csv(&missed_report(r, &reference)),
        )?;
        rows.push(comparison_row(r, &reference));
    }
    rows.sort_by(|a, b| a.strategy_name.cmp(&b.strategy_name));
    write("summary.csv".into(), summary_csv(&rows))?;
    write(
        "incomplete.csv".into(),
        incomplete_csv(&incomplete_path_distribution(&ts)),
    )?;

    let table = comparison_text(&rows);
    out.write_all(table.as_bytes()).map_err(io_err(dir))?;
    Ok(())
}

pub fn cmd_quantiles(path: &Path, levels: &[f64], out: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: i64 = line.parse().map_err(|_| {
            CliError::Data(format!("{}: line {}: not an integer: {line:?}", path.display(), i + 1))
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{}: no values", path.display())));
    }
    values.sort_unstable();
    let default_levels = crate::metrics::QuantileSummary::LEVELS;
    let levels = if levels.is_empty() { &default_levels[..] } else { levels };
    for &q in levels {
        let v = quantile(&values, q).map_err(|e| CliError::Usage(e.to_string()))?;
        writeln!(out, "{q} {v}").map_err(io_err(path))?;
    }
    Ok(())
}

pub fn redundancy_csv(d: &RedundancyDistribution) -> String {
    let mut s = String::from("distance,interface_count,min,p5,p10,q1,median,q3,p90,p95,max\n");
    for (ttl, bin) in &d.per_distance {
        write!(s, "{ttl},{}", bin.interface_count).unwrap();
        for v in bin.summary.values() {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn missed_csv(m: &MissedReport) -> String {
    format!(
        "total_interfaces,discovered_interfaces,pct_interfaces_missed,total_links,discovered_links,pct_links_missed\n\
         {},{},{:.2},{},{},{:.2}\n",
        m.total_interfaces,
        m.discovered_interfaces,
        m.pct_interfaces_missed,
        m.total_links,
        m.discovered_links,
        m.pct_links_missed
    )
}

fn mean_visits_text(row: &ComparisonRow) -> String {
    row.mean_visits.map_or_else(|| "NA".to_string(), |m| format!("{m:.2}"))
}

pub fn summary_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("strategy,mean_visits,prop_missed,probes_sent,discovered_interfaces\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{:.2},{},{}",
            r.strategy_name,
            mean_visits_text(r),
            r.prop_missed,
            r.probes_sent,
            r.discovered_interfaces
        )
        .unwrap();
    }
    s
}

pub fn incomplete_csv(d: &IncompleteDistribution) -> String {
    let mut s = String::from("ttl,count\n");
    for (ttl, n) in &d.by_last_hop {
        writeln!(s, "{ttl},{n}").unwrap();
    }
    writeln!(s, "none,{}", d.no_responder).unwrap();
    s
}

pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let mut s = format!(
        "{:<30} {:>11} {:>12} {:>12} {:>11}\n",
        "strategy", "mean visits", "prop. missed", "probes", "interfaces"
    );
    for r in rows {
        writeln!(
            s,
            "{:<30} {:>11} {:>12.2} {:>12} {:>11}",
            r.strategy_name,
            mean_visits_text(r),
            r.prop_missed,
            r.probes_sent,
            r.discovered_interfaces
        )
        .unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(main_with_args(["backtrace-sim", "bogus"], &mut out, &mut err), EXIT_USAGE);
        assert_eq!(
            main_with_args(["backtrace-sim", "run", "--gen", "--out", "x", "--strategy", "nope"], &mut out, &mut err),
            EXIT_USAGE
        );
        assert_eq!(
            main_with_args(["backtrace-sim", "run", "--out", "x"], &mut out, &mut err),
            EXIT_USAGE
        );
    }

    #[test]
    fn help_exits_zero() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(main_with_args(["backtrace-sim", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(!out.is_empty());
    }

    #[test]
    fn fixed_h_reaches_both_search_strategies() {
        let args = RunArgs::try_parse_from_run(&["--gen", "--h", "12", "--out", "x"]);
        let cfg = args.config().unwrap();
        assert_eq!(cfg.fixed_h, Some(12));
        assert_eq!(cfg.strategies.len(), 5);
    }

    impl RunArgs {
        fn try_parse_from_run(rest: &[&str]) -> RunArgs {
            let mut argv = vec!["backtrace-sim", "run"];
            argv.extend_from_slice(rest);
            match Cli::try_parse_from(argv).unwrap().command {
                Command::Run(a) => a,
                _ => unreachable!(),
            }
        }
    }
}
