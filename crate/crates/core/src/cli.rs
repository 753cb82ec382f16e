//! Command-line front end: `optimize` and `info` over g2o files.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 parse, 5 optimizer failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::io::{load_file, DatasetBundle, LoadOptions};
use crate::liegroups::{Pose2, Pose3};
use crate::loss::RobustKernel;
use crate::optimizer::{
    optimize, Algorithm, IterationRecord, LinearSolverKind, OptimizationResult, OptimizationStatus,
    OptimizerParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PARSE: i32 = 4;
pub const EXIT_OPTIMIZER: i32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Gn,
    Lm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Cholesky,
    Pcg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RobustArg {
    None,
    Huber,
    Cauchy,
}

#[derive(Debug, Parser)]
#[command(name = "fgopt", version, about = "Pose-graph optimization over g2o files")]
pub struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a pose graph and write the results
    Optimize(OptimizeArgs),
    /// Print a dataset summary and its initial cost
    Info(InfoArgs),
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub no_auto_prior: bool,
    #[arg(long)]
    pub permute_3d_info: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Optimized graph in g2o format
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lm")]
    pub algorithm: AlgorithmArg,
    #[arg(long, value_enum, default_value = "cholesky")]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Run exactly N accepted iterations with convergence tests off
    #[arg(long, value_name = "N")]
    pub fixed_iters: Option<usize>,
    /// Robust kernel for edges (never the gauge prior)
    #[arg(long, value_enum, default_value = "none")]
    pub robust: RobustArg,
    /// Kernel width; defaults to 1.345 (Huber) or 1.0 (Cauchy)
    #[arg(long)]
    pub robust_param: Option<f64>,
    #[arg(long)]
    pub no_auto_prior: bool,
    /// Read 3D information blocks as (rotation, translation)
    #[arg(long)]
    pub permute_3d_info: bool,
    /// Per-iteration statistics as JSON
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Optimized poses as CSV
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

/// Validated settings of one `optimize` run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub algorithm: Algorithm,
    pub solver: LinearSolverKind,
    pub max_iterations: usize,
    pub fixed_iterations: bool,
    pub kernel: RobustKernel,
    pub auto_prior: bool,
    pub permute_3d_info: bool,
    pub stats: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub verbosity: u8,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            output: None,
            algorithm: Algorithm::LevenbergMarquardt,
            solver: LinearSolverKind::Cholesky,
            max_iterations: 100,
            fixed_iterations: false,
            kernel: RobustKernel::None,
            auto_prior: true,
            permute_3d_info: false,
            stats: None,
            trajectory: None,
            verbosity: 0,
        }
    }

    pub fn from_args(args: OptimizeArgs, verbosity: u8) -> Result<Self, String> {
        let kernel = match (args.robust, args.robust_param) {
            (RobustArg::None, None) => RobustKernel::None,
            (RobustArg::None, Some(_)) => return Err("--robust-param needs --robust huber|cauchy".into()),
            (RobustArg::Huber, k) => RobustKernel::huber(k.unwrap_or(1.345)).map_err(|e| e.to_string())?,
            (RobustArg::Cauchy, k) => RobustKernel::cauchy(k.unwrap_or(1.0)).map_err(|e| e.to_string())?,
        };
        let (max_iterations, fixed_iterations) = match args.fixed_iters {
            Some(n) => (n, true),
            None => (args.max_iters, false),
        };
        if max_iterations == 0 {
            return Err("iteration count must be at least 1".into());
        }
        Ok(Self {
            input: args.input,
            output: args.output,
            algorithm: match args.algorithm {
                AlgorithmArg::Gn => Algorithm::GaussNewton,
                AlgorithmArg::Lm => Algorithm::LevenbergMarquardt,
            },
            solver: match args.solver {
                SolverArg::Cholesky => LinearSolverKind::Cholesky,
                SolverArg::Pcg => LinearSolverKind::Pcg,
            },
            max_iterations,
            fixed_iterations,
            kernel,
            auto_prior: !args.no_auto_prior,
            permute_3d_info: args.permute_3d_info,
            stats: args.stats,
            trajectory: args.trajectory,
            verbosity,
        })
    }

    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            auto_prior: self.auto_prior,
            edge_kernel: self.kernel,
            permute_3d_info: self.permute_3d_info,
        }
    }

    pub fn params(&self) -> OptimizerParams {
        OptimizerParams {
            algorithm: self.algorithm,
            solver: self.solver,
            max_iterations: self.max_iterations,
            fixed_iterations: self.fixed_iterations,
            ..OptimizerParams::default()
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::Parse { .. } | Error::UnknownVertex { .. } => EXIT_PARSE,
        Error::InvalidParameter(_) => EXIT_USAGE,
        _ => EXIT_OPTIMIZER,
    }
}

fn load(input: &Path, options: &LoadOptions, err: &mut dyn Write) -> Result<DatasetBundle, i32> {
    load_file(input, options).map_err(|e| {
        let _ = writeln!(err, "error: {}: {e}", input.display());
        exit_code(&e)
    })
}

#[derive(Serialize)]
struct StatsRecord {
    iteration: usize,
    cost_before: f64,
    cost: f64,
    lambda: Option<f64>,
    step_norm: f64,
    linear_residual: f64,
    accepted: bool,
}

impl From<&IterationRecord> for StatsRecord {
    fn from(r: &IterationRecord) -> Self {
        Self {
            iteration: r.iteration,
            cost_before: r.cost_before,
            cost: r.cost_after,
            lambda: r.lambda,
            step_norm: r.step_norm,
            linear_residual: r.linear_residual,
            accepted: r.accepted,
        }
    }
}

#[derive(Serialize)]
struct Stats<'a> {
    input: String,
    vertices: usize,
    edges: usize,
    algorithm: Algorithm,
    solver: LinearSolverKind,
    status: OptimizationStatus,
    message: Option<&'a str>,
    iterations: usize,
    rejections: usize,
    initial_cost: f64,
    final_cost: f64,
    records: Vec<StatsRecord>,
}

fn write_stats(path: &Path, config: &RunConfig, bundle: &DatasetBundle, result: &OptimizationResult) -> Result<(), Error> {
    let stats = Stats {
        input: config.input.display().to_string(),
        vertices: bundle.vertex_count,
        edges: bundle.edge_count,
        algorithm: config.algorithm,
        solver: config.solver,
        status: result.status,
        message: result.message.as_deref(),
        iterations: result.iterations(),
        rejections: result.rejections(),
        initial_cost: result.initial_cost,
        final_cost: result.final_cost,
        records: result.records.iter().map(StatsRecord::from).collect(),
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &stats).map_err(std::io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// CSV of every pose, in id order: `id,x,y,theta` for 2D or
/// `id,x,y,z,qx,qy,qz,qw` for 3D.
pub fn write_trajectory<W: Write>(values: &crate::graph::Variables, mut out: W) -> Result<(), Error> {
    let mut header_written = false;
    for (k, v) in values.iter() {
        if let Some(p) = v.as_any().downcast_ref::<Pose2>() {
            if !header_written {
                writeln!(out, "id,x,y,theta")?;
                header_written = true;
            }
            writeln!(out, "{},{},{},{}", k.index(), p.x(), p.y(), p.theta())?;
        } else if let Some(p) = v.as_any().downcast_ref::<Pose3>() {
            if !header_written {
                writeln!(out, "id,x,y,z,qx,qy,qz,qw")?;
                header_written = true;
            }
            let t = p.translation();
            let [w, x, y, z] = p.rotation().coords();
            writeln!(out, "{},{},{},{},{x},{y},{z},{w}", k.index(), t.x, t.y, t.z)?;
        } else {
            return Err(Error::Unsupported(format!("variable {k} is not a pose")));
        }
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), Error>) -> Result<(), Error> {
    let mut out = BufWriter::new(File::create(path)?);
    f(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Loads, optimizes and writes the requested outputs. Prints the status name
/// on `out`; diagnostics go to `err`.
pub fn run_optimize(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let bundle = match load(&config.input, &config.load_options(), err) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let started = std::time::Instant::now();
    let result = optimize(&bundle.graph, &bundle.initials, &config.params());
    log::info!("optimized in {:.3} s", started.elapsed().as_secs_f64());

    let _ = writeln!(out, "{}", bundle.summary());
    let _ = writeln!(
        out,
        "status: {} after {} iterations ({} rejected), cost {:e} -> {:e}",
        result.status,
        result.iterations(),
        result.rejections(),
        result.initial_cost,
        result.final_cost
    );
    if let Some(msg) = &result.message {
        let _ = writeln!(err, "{}: {msg}", result.status);
    }

    let written = (|| -> Result<(), Error> {
        if let Some(path) = &config.stats {
            write_stats(path, config, &bundle, &result)?;
        }
        if !matches!(result.status, OptimizationStatus::Success | OptimizationStatus::MaxIterations) {
            return Ok(());
        }
        if let Some(path) = &config.output {
            write_file(path, |w| bundle.save_with_values(&result.values, w))?;
        }
        if let Some(path) = &config.trajectory {
            write_file(path, |w| write_trajectory(&result.values, w))?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return exit_code(&e).max(EXIT_IO);
    }
    match result.status {
        OptimizationStatus::Success | OptimizationStatus::MaxIterations => EXIT_OK,
        _ => EXIT_OPTIMIZER,
    }
}

/// Prints the dataset summary, gauge handling and initial cost.
pub fn run_info(args: &InfoArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let options = LoadOptions {
        auto_prior: !args.no_auto_prior,
        permute_3d_info: args.permute_3d_info,
        ..LoadOptions::default()
    };
    let bundle = match load(&args.input, &options, err) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let cost = match bundle.graph.total_cost(&bundle.initials) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let mut text = format!("{}\n", bundle.summary());
    if bundle.skipped > 0 {
        text += &format!("skipped {} unsupported records\n", bundle.skipped);
    }
    if let Some(i) = bundle.anchor {
        let k = bundle.graph.get(i).expect("anchor index is valid").keys()[0];
        text += &format!("gauge: unit prior on {k}\n");
    }
    text += &format!("initial cost: {cost:e}\n");
    match out.write_all(text.as_bytes()) {
        Ok(()) => EXIT_OK,
        Err(_) => EXIT_IO,
    }
}

/// Parses `args` (including the program name). On `--help`/`--version` or a
/// usage error, prints the message and returns the exit code.
pub fn parse<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> Result<Cli, i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map_err(|e| {
        let text = e.render().to_string();
        if e.use_stderr() {
            let _ = write!(err, "{text}");
            EXIT_USAGE
        } else {
            let _ = write!(out, "{text}");
            EXIT_OK
        }
    })
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Info(args) => run_info(&args, out, err),
        Command::Optimize(args) => match RunConfig::from_args(args, cli.verbose) {
            Ok(config) => run_optimize(&config, out, err),
            Err(msg) => {
                let _ = writeln!(err, "error: {msg}");
                EXIT_USAGE
            }
        },
    }
}

/// [`parse`] followed by [`run`].
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse(args, out, err) {
        Ok(cli) => run(cli, out, err),
        Err(code) => code,
    }
}

/// Log level for a `-v` count.
pub fn log_level(verbosity: u8) -> log::LevelFilter {
    match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    }
}
