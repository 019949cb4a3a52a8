//! The `obcd` command line tool.
//!
//! Exit codes: 0 success, 2 malformed arguments, 3 data errors, 4 solver
//! errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::driver::{obcd_run, stationarity_measure, BlockSample, SolverConfig, SolverMode, Trace, TraceRecord};
use crate::error::Error;
use crate::linalg::{compose_factors, gram_residual, jacobi_givens_decompose, DenseMatrix, StiefelPoint};
use crate::problems::data::{covariance, gen_randn, load_csv};
use crate::problems::init::{init_identity, init_nonneg_orthogonal, init_random_orthogonal};
use crate::problems::{make_l0_spca, make_l1_spca, make_nlep, make_nn_pca, make_pca, NlepData, Problem};
use crate::working_set::{WssKind, WssStrategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "obcd", version, about = "Block coordinate descent under orthogonality constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver and write a JSON-lines trace.
    Solve(SolveArgs),
    /// Factor an orthogonal matrix into planar rotations and reflections.
    Decompose(DecomposeArgs),
    /// Report the stationarity measure and feasibility of a point.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Pca,
    L0pca,
    L1pca,
    Nnpca,
    Nlep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WssArg {
    Random,
    Cyclic,
    Sv,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Identity,
    Randorth,
    Nonneg,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemKind,
    /// Regularization weight (required for l0pca, l1pca and nlep).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub r: usize,
    /// Data matrix A as CSV; the covariance is AᵀA.
    #[arg(long, conflicts_with = "randn")]
    pub data: Option<PathBuf>,
    /// Gaussian data of size M,N.
    #[arg(long, value_parser = parse_dims)]
    pub randn: Option<(usize, usize)>,
    /// Linear term E (n × r) for nlep; zero when absent.
    #[arg(long)]
    pub linear: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = WssArg::Random)]
    pub wss: WssArg,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 1e-5)]
    pub theta: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitArg::Identity)]
    pub init: InitArg,
    /// Pairs scored per greedy iteration (default min(n, 200)).
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Score all pairs in greedy selection.
    #[arg(long)]
    pub full_scan: bool,
    /// Trace destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    /// Square orthogonal matrix as CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Factor list destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Multiply the factors back and print the reconstruction error.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// The point X (n × r) as CSV.
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 1e-5)]
    pub theta: f64,
    /// Average over all pairs instead of a sample.
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = 200)]
    pub sample_size: usize,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (m, n) = s.split_once(',').ok_or_else(|| format!("expected M,N, got {s:?}"))?;
    let m = m.trim().parse().map_err(|e| format!("bad M in {s:?}: {e}"))?;
    let n = n.trim().parse().map_err(|e| format!("bad N in {s:?}: {e}"))?;
    Ok((m, n))
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLine {
    pub iter: usize,
    pub elapsed_s: f64,
    #[serde(rename = "F")]
    pub objective: f64,
    pub block_i: usize,
    pub block_j: usize,
    pub step_norm: f64,
    pub feas: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
}

impl From<&TraceRecord> for TraceLine {
    fn from(r: &TraceRecord) -> Self {
        Self {
            iter: r.iter,
            elapsed_s: r.elapsed_s,
            objective: r.objective,
            block_i: r.block.i,
            block_j: r.block.j,
            step_norm: r.step_norm,
            feas: r.feas,
            score: r.score,
        }
    }
}

/// The final line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryLine {
    #[serde(rename = "F_final")]
    pub f_final: f64,
    pub iters: usize,
    pub stationarity_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceEvent {
    Record(TraceLine),
    Summary(SummaryLine),
}

/// Parses one JSON line of a trace file.
pub fn parse_trace_line(line: &str) -> Result<TraceEvent, serde_json::Error> {
    serde_json::from_str(line)
}

enum Failure {
    Usage(String),
    Data(Error),
    Solver(Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Solver(_) => EXIT_SOLVER,
        }
    }
}

fn data_err(e: impl Into<Error>) -> Failure {
    Failure::Data(e.into())
}

fn io_err(e: io::Error) -> Failure {
    Failure::Data(e.into())
}

/// Parses `args` (including the program name) without running anything.
pub fn parse_args<I, T>(args: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args)
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code.
pub fn run(args: &[String]) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match parse_args(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Decompose(a) => cmd_decompose(&a),
        Command::Check(a) => cmd_check(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => {
                    eprintln!("error: {msg}\n");
                    let mut cmd = <Cli as clap::CommandFactory>::command();
                    let _ = cmd.print_help();
                }
                Failure::Data(e) => eprintln!("data error: {e}"),
                Failure::Solver(e) => eprintln!("solver error: {e}"),
            }
            f.code()
        }
    }
}

fn build_problem(a: &ProblemArgs) -> Result<Box<dyn Problem>, Failure> {
    let needs_lambda = matches!(a.problem, ProblemKind::L0pca | ProblemKind::L1pca | ProblemKind::Nlep);
    let lambda = match (needs_lambda, a.lambda) {
        (true, None) => return Err(Failure::Usage(format!("--lambda is required for --problem {:?}", a.problem).to_lowercase())),
        (_, Some(l)) if !(l >= 0.0 && l.is_finite()) => return Err(Failure::Usage(format!("--lambda must be ≥ 0, got {l}"))),
        (_, l) => l.unwrap_or(0.0),
    };
    let data = match (&a.data, a.randn) {
        (Some(path), None) => load_csv(path).map_err(data_err)?,
        (None, Some((m, n))) => gen_randn(m, n, a.seed),
        _ => return Err(Failure::Usage("exactly one of --data or --randn is required".into())),
    };
    let c = covariance(&data);
    let r = a.r;
    let problem: Box<dyn Problem> = match a.problem {
        ProblemKind::Pca => Box::new(make_pca(&c, r).map_err(data_err)?),
        ProblemKind::L0pca => Box::new(make_l0_spca(&c, lambda, r).map_err(data_err)?),
        ProblemKind::L1pca => Box::new(make_l1_spca(&c, lambda, r).map_err(data_err)?),
        ProblemKind::Nnpca => Box::new(make_nn_pca(&c, r).map_err(data_err)?),
        ProblemKind::Nlep => {
            let n = c.rows();
            let e = match &a.linear {
                Some(path) => load_csv(path).map_err(data_err)?,
                None => DenseMatrix::zeros(n, r),
            };
            let nd = NlepData::new(c, e, lambda).map_err(data_err)?;
            Box::new(make_nlep(nd, r).map_err(data_err)?)
        }
    };
    Ok(problem)
}

fn mode_of(m: Option<ModeArg>) -> Option<SolverMode> {
    m.map(|m| match m {
        ModeArg::Exact => SolverMode::Exact,
        ModeArg::Approx => SolverMode::Approx,
    })
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(io_err)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Failure> {
    if !(a.theta > 0.0 && a.theta.is_finite()) {
        return Err(Failure::Usage(format!("--theta must be positive, got {}", a.theta)));
    }
    if let Some(t) = a.time_limit {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Failure::Usage(format!("--time-limit must be ≥ 0, got {t}")));
        }
    }
    let problem = build_problem(&a.problem)?;
    let (n, r) = problem.dims();
    let seed = a.problem.seed;
    let x0 = match a.init {
        InitArg::Identity => init_identity(n, r),
        InitArg::Randorth => init_random_orthogonal(n, r, seed),
        InitArg::Nonneg => init_nonneg_orthogonal(n, r, seed),
    }
    .map_err(data_err)?;
    let kind = match a.wss {
        WssArg::Random => WssKind::Random,
        WssArg::Cyclic => WssKind::Cyclic,
        WssArg::Sv => WssKind::GreedySv,
        WssArg::Or => WssKind::GreedyOr,
    };
    let config = SolverConfig {
        theta_prox: a.theta,
        wss: WssStrategy { kind, sample_size: a.sample_size, full_scan: a.full_scan },
        mode: mode_of(a.mode),
        max_iters: a.max_iters,
        time_limit: a.time_limit.map(Duration::from_secs_f64),
        seed,
        ..SolverConfig::default()
    };
    let (x, trace) = obcd_run(problem.as_ref(), &config, x0).map_err(Failure::Solver)?;
    let mode = config.mode.unwrap_or_else(|| problem.default_mode());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5741);
    let estimate = stationarity_measure(problem.as_ref(), &x, a.theta, mode, BlockSample::Random(config.stationarity_sample), &mut rng)
        .map_err(Failure::Solver)?;
    let mut w = writer(&a.out)?;
    write_trace(&mut w, &trace, estimate).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Writes one line per record followed by the summary line.
pub fn write_trace(w: &mut dyn Write, trace: &Trace, stationarity_estimate: f64) -> io::Result<()> {
    for r in &trace.records {
        serde_json::to_writer(&mut *w, &TraceLine::from(r))?;
        w.write_all(b"\n")?;
    }
    let summary = SummaryLine { f_final: trace.final_objective(), iters: trace.records.len(), stationarity_estimate };
    serde_json::to_writer(&mut *w, &summary)?;
    w.write_all(b"\n")
}

fn cmd_decompose(a: &DecomposeArgs) -> Result<(), Failure> {
    let d = load_csv(&a.input).map_err(data_err)?;
    let factors = jacobi_givens_decompose(&d).map_err(data_err)?;
    let mut w = writer(&a.out)?;
    for (b, v) in &factors {
        writeln!(w, "{},{},{},{:?}", b.i, b.j, v.branch.as_str(), v.angle + 0.0).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    if a.verify {
        let back = compose_factors(d.rows(), &factors);
        let err = back.sub(&d).map_err(data_err)?.frobenius_norm();
        eprintln!("reconstruction error: {err:.3e}");
    }
    Ok(())
}

fn cmd_check(a: &CheckArgs) -> Result<(), Failure> {
    let problem = build_problem(&a.problem)?;
    let xm = load_csv(&a.x).map_err(data_err)?;
    if xm.shape() != problem.dims() {
        return Err(Failure::Data(Error::Shape(format!("X is {:?}, problem expects {:?}", xm.shape(), problem.dims()))));
    }
    let feas = gram_residual(&xm);
    let x = StiefelPoint::new(xm, f64::INFINITY).map_err(data_err)?;
    let mode = mode_of(a.mode).unwrap_or_else(|| problem.default_mode());
    let sample = if a.full { BlockSample::All } else { BlockSample::Random(a.sample_size) };
    let mut rng = ChaCha8Rng::seed_from_u64(a.problem.seed);
    let measure = stationarity_measure(problem.as_ref(), &x, a.theta, mode, sample, &mut rng).map_err(Failure::Solver)?;
    println!("stationarity_measure {measure:e}");
    println!("gram_residual {feas:e}");
    println!("objective {:?}", problem.objective(x.matrix()));
    Ok(())
}
