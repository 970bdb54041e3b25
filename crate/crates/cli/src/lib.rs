//! The `agfit` command line: `check`, `fit` and `simulate`.

pub mod error;
pub mod input;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use agfit::fit::{DEFAULT_MAX_CYCLES, DEFAULT_TOLERANCE};
use agfit::mseparation::{self, DEFAULT_VERTEX_LIMIT};
use agfit::sim::{self, CycleSpec, ExperimentReport};
use agfit::stats::{self, SampleStats};
use agfit::{AncestralGraph, FitConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;
use input::GraphInput;
use report::FitReport;

#[derive(Debug, Parser)]
#[command(name = "agfit", version, about = "Fit Gaussian ancestral graph models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a graph file and list the independences it implies.
    Check {
        /// Adjacency matrix CSV (0 none, 1 for i - j or i -> j, 2 for i <-> j).
        graph: PathBuf,
    },
    /// Fit a model by iterative conditional fitting.
    Fit(FitArgs),
    /// Run the bidirected-cycle scaling experiment.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, env = "AGFIT_TOLERANCE", default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, env = "AGFIT_MAX_CYCLES", default_value_t = DEFAULT_MAX_CYCLES)]
    pub max_cycles: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Raw data CSV, one observation per row.
    #[arg(long, conflicts_with = "cov", required_unless_present = "cov")]
    pub data: Option<PathBuf>,
    /// Covariance or correlation matrix CSV; needs --n.
    #[arg(long, requires = "n")]
    pub cov: Option<PathBuf>,
    /// Sample size behind --cov.
    #[arg(long)]
    pub n: Option<usize>,
    /// Treat the data as already centered (divide by n, no mean removal).
    #[arg(long, conflicts_with = "mean_adjusted")]
    pub centered: bool,
    /// Subtract sample means before forming the covariance (the default).
    #[arg(long)]
    pub mean_adjusted: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Decimals in text output.
    #[arg(long, default_value_t = 2)]
    pub precision: usize,
    /// Extra random starting points.
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub convergence: ConvergenceArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 10)]
    pub p_min: usize,
    #[arg(long, default_value_t = 100)]
    pub p_max: usize,
    #[arg(long, default_value_t = 10)]
    pub step: usize,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub convergence: ConvergenceArgs,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                4
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = match cli.command {
        Command::Check { graph } => cmd_check(&graph, out),
        Command::Fit(args) => cmd_fit(&args, out),
        Command::Simulate(args) => cmd_simulate(&args, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn stdout_error(source: std::io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source }
}

fn label_set(g: &AncestralGraph, vs: &[usize]) -> String {
    let names: Vec<&str> = vs.iter().map(|&v| g.label(v)).collect();
    format!("{{{}}}", names.join(", "))
}

/// Exit 0 for a valid maximal graph, 1 for valid but not maximal, 2 for an
/// invalid graph.
pub fn cmd_check(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let g = match input::read_graph(path)? {
        GraphInput::Valid(g) => g,
        GraphInput::Invalid { labels, error } => {
            let detail = match &error {
                agfit::Error::SelfLoop(v) => format!("self-loop at {}", labels[*v]),
                agfit::Error::ConditionOneViolated(v) => {
                    format!("{} has a neighbor and also a parent or spouse", labels[*v])
                }
                agfit::Error::ConditionTwoViolated(v) => {
                    format!("{} is an ancestor of one of its parents or spouses", labels[*v])
                }
                other => other.to_string(),
            };
            writeln!(out, "invalid: {detail}").map_err(stdout_error)?;
            return Ok(2);
        }
    };

    // The exhaustive search lists smallest separators; beyond the vertex
    // limit the anterior separator ant({i, j}) \ {i, j} is reported instead.
    let exhaustive = g.p() <= DEFAULT_VERTEX_LIMIT;
    let mut lines = Vec::new();
    let mut maximal = true;
    for i in 0..g.p() {
        for j in (i + 1)..g.p() {
            if g.adjacent(i, j) {
                continue;
            }
            let separator: Option<Vec<usize>> = if exhaustive {
                mseparation::first_separator(&g, i, j).map(|s| s.into_iter().collect())
            } else {
                mseparation::anterior_separator(&g, i, j).map(|s| s.into_iter().collect())
            };
            match separator {
                Some(c) => lines.push(format!("  {} _||_ {} | {}", g.label(i), g.label(j), label_set(&g, &c))),
                None => {
                    maximal = false;
                    lines.push(format!("  {} and {} have no separating set", g.label(i), g.label(j)));
                }
            }
        }
    }

    let mut text = format!("valid ancestral graph: {} vertices, {} edges\n", g.p(), g.edge_count());
    text += &format!("maximal: {}\n", if maximal { "yes" } else { "no" });
    text += &format!("un_G = {}\n", label_set(&g, &g.un()));
    text += &format!("db_G = {}\n", label_set(&g, &g.db()));
    text += "pairwise independences:\n";
    if lines.is_empty() {
        text += "  none (complete graph)\n";
    }
    for l in lines {
        text += &l;
        text += "\n";
    }
    out.write_all(text.as_bytes()).map_err(stdout_error)?;
    Ok(if maximal { 0 } else { 1 })
}

fn config_from(conv: &ConvergenceArgs, restarts: usize, seed: u64) -> Result<FitConfig, CliError> {
    let config = FitConfig {
        tolerance: conv.tolerance,
        max_cycles: conv.max_cycles,
        restarts,
        seed,
        ..FitConfig::default()
    };
    config.validate().map_err(|e| CliError::Flag(e.to_string()))?;
    Ok(config)
}

/// Puts the graph in the variable order of the data, dropping data columns
/// the graph does not mention.
fn reconcile(g: &AncestralGraph, data_labels: &[String]) -> Result<(AncestralGraph, Vec<usize>), CliError> {
    let missing: Vec<String> =
        g.labels().iter().filter(|l| !data_labels.contains(l)).cloned().collect();
    if !missing.is_empty() {
        return Err(CliError::LabelMismatch(missing));
    }
    let data_idx: Vec<usize> = (0..data_labels.len()).filter(|&k| g.labels().contains(&data_labels[k])).collect();
    let order: Vec<usize> = data_idx
        .iter()
        .map(|&k| g.labels().iter().position(|l| *l == data_labels[k]).expect("label present"))
        .collect();
    Ok((g.permuted(&order)?, data_idx))
}

/// Exit 0 when ICF converged, 1 when the cycle budget ran out.
pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let config = config_from(&args.convergence, args.restarts, args.seed)?;
    let g = match input::read_graph(&args.graph)? {
        GraphInput::Valid(g) => g,
        GraphInput::Invalid { error, .. } => return Err(error.into()),
    };
    let mean_adjusted = !args.centered;
    let (labels, stats) = match (&args.data, &args.cov) {
        (Some(path), _) => {
            let (labels, y) = input::read_data(path)?;
            (labels, stats::empirical_covariance(&y, mean_adjusted)?)
        }
        (None, Some(path)) => {
            let (labels, s) = input::read_covariance(path)?;
            let n = args.n.ok_or_else(|| CliError::Flag("--cov needs --n".into()))?;
            (labels, SampleStats::from_covariance(s, n, mean_adjusted)?)
        }
        (None, None) => return Err(CliError::Flag("one of --data or --cov is required".into())),
    };
    let (g, data_idx) = reconcile(&g, &labels)?;
    let stats = stats.select(&data_idx)?;
    let res = agfit::fit(&g, &stats, &config)?;
    let report = FitReport::new(g.labels().to_vec(), stats.n(), &res, &config)?;
    let text = match args.format {
        Format::Text => report.to_text(args.precision),
        Format::Json => report.to_json() + "\n",
    };
    out.write_all(text.as_bytes()).map_err(stdout_error)?;
    Ok(if res.converged { 0 } else { 1 })
}

fn write_csv(report: &ExperimentReport, w: impl Write) -> csv::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["p", "replicate", "iterations", "converged", "cpu_seconds", "deviance"])?;
    for r in &report.records {
        csv.write_record([
            r.p.to_string(),
            r.replicate.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            format!("{:.6}", r.cpu_seconds),
            r.deviance.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Exit 0 when every replicate converged, 1 otherwise.
pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let config = config_from(&args.convergence, 0, 0)?;
    if args.p_min < 3 {
        return Err(CliError::Flag(format!("--p-min must be at least 3, got {}", args.p_min)));
    }
    if args.step == 0 {
        return Err(CliError::Flag("--step must be positive".into()));
    }
    if args.p_max < args.p_min {
        return Err(CliError::Flag(format!("--p-max {} is below --p-min {}", args.p_max, args.p_min)));
    }
    let p_values: Vec<usize> = (args.p_min..=args.p_max).step_by(args.step).collect();
    for &p in &p_values {
        let spec = CycleSpec::new(p, args.rho).map_err(|e| CliError::Flag(e.to_string()))?;
        if sim::cycle_covariance(spec).is_err() {
            return Err(CliError::Flag(format!(
                "--rho {} gives a cycle covariance that is not positive definite at p = {p}",
                args.rho
            )));
        }
    }

    let report = sim::run_scaling_experiment(&p_values, args.replicates, args.rho, args.seed, &config)?;
    let csv_result = match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(io_error(path))?;
            write_csv(&report, file).map_err(|e| CliError::Io { path: path.clone(), source: e.into() })
        }
        None => write_csv(&report, &mut *out).map_err(|e| stdout_error(e.into())),
    };
    csv_result?;

    let _ = writeln!(err, "{:>5} {:>10} {:>10} {:>5} {:>5} {:>12} {:>8}", "p", "replicates", "mean_it", "min", "max", "mean_cpu_s", "failures");
    for s in &report.summaries {
        let _ = writeln!(
            err,
            "{:>5} {:>10} {:>10.3} {:>5} {:>5} {:>12.6} {:>8}",
            s.p, s.replicates, s.mean_iterations, s.min_iterations, s.max_iterations, s.mean_cpu_seconds, s.failures
        );
    }
    Ok(if report.failures() == 0 { 0 } else { 1 })
}
