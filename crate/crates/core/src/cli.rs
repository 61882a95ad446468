//! Experiment harness: instance generation, single solves, method
//! comparisons and sample-count sweeps.
//!
//! Output formats:
//!
//! * solve report: trace table with header
//!   `iter,f_rho,comp,rank_x,trace_u,newton_iters,cg_iters,elapsed_ms`,
//!   followed by `# summary`, `# diagnostics` and `# eigenpairs` sections,
//!   each a small CSV table of its own;
//! * comparison table: one row per instance plus a final `mean` row;
//! * sweep table: one row per sample count with averaged ranks and times.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! table reads back to identical values.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 infeasible instance,
//! 3 inner-solver failure, 64 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, LevelFilter};
use rayon::prelude::*;

use crate::baseline::{baseline_report, DEFAULT_MU};
use crate::diagnostics::{DiagnosticsReport, EigenClass, EigenpairCheck};
use crate::error::{Error, Result};
use crate::palm::{solve, Continuation, PalmConfig, RhoSchedule, SolveReport, SolveStatus, TraceRow, UGradientPoint};
use crate::problems::{
    counterexample_instances, derive_seed, gen_edm_instance, load_instance, save_instance, Instance,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

pub const TRACE_HEADER: &str = "iter,f_rho,comp,rank_x,trace_u,newton_iters,cg_iters,elapsed_ms";
pub const COMPARE_HEADER: &str =
    "instance,rank_palm,rank_fast_palm,rank_baseline,time_palm_ms,time_fast_palm_ms,time_baseline_ms,iters_palm,iters_fast_palm";
pub const SWEEP_HEADER: &str =
    "n_samples,instances,mean_rank_palm,mean_rank_fast_palm,mean_rank_baseline,mean_time_palm_ms,mean_time_fast_palm_ms,mean_time_baseline_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Palm,
    FastPalm,
    Baseline,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Palm => "palm",
            Method::FastPalm => "fast-palm",
            Method::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, false).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    /// Projection of zero onto the constraint set, `U = 0`.
    Default,
    /// The optimum recorded in the instance file.
    KnownOptimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateKind {
    Edm,
    Counterexamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhoScheduleArg {
    OnSettle,
    EveryIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UGradientArg {
    Updated,
    Previous,
}

#[derive(Debug, Parser)]
#[command(name = "sdcmpcc", version, about = "Low-rank PSD matrix recovery via a complementarity penalty and PALM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write random EDM instances or the two 3x3 counterexamples.
    Generate(GenerateArgs),
    /// Solve one instance and write its trace.
    Solve(SolveArgs),
    /// Run PALM, Fast PALM and the baseline on a set of instances.
    Compare(CompareArgs),
    /// Average ranks as the number of sampled distances grows.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "edm")]
    pub kind: GenerateKind,
    #[arg(long, default_value_t = 50)]
    pub n_points: usize,
    #[arg(long, default_value_t = 150)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub rho_x: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Force momentum on (same as `--method fast-palm`).
    #[arg(long)]
    pub momentum: bool,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol_obj: Option<f64>,
    #[arg(long)]
    pub tol_comp: Option<f64>,
    #[arg(long)]
    pub rank_threshold: Option<f64>,
    /// Upper limit for penalty continuation; enables continuation.
    #[arg(long)]
    pub rho_max: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub rho_factor: f64,
    #[arg(long, value_enum, default_value = "on-settle")]
    pub rho_schedule: RhoScheduleArg,
    #[arg(long, value_enum)]
    pub u_gradient: Option<UGradientArg>,
    #[arg(long)]
    pub max_newton_iters: Option<usize>,
    /// Tikhonov weight of the trace-minimization baseline.
    #[arg(long, default_value_t = DEFAULT_MU)]
    pub mu: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "fast-palm")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "default")]
    pub init: InitKind,
    /// Report CSV path; omitted means no file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    #[arg(long, default_value_t = 50)]
    pub n_points: usize,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the number of available cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Instance files; when empty, EDM instances are generated from `--seed`.
    pub instances: Vec<PathBuf>,
    #[arg(long, default_value_t = 150)]
    pub n_samples: usize,
    #[command(flatten)]
    pub batch: BatchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 150)]
    pub from: usize,
    #[arg(long, default_value_t = 195)]
    pub to: usize,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub step: u64,
    #[command(flatten)]
    pub batch: BatchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Resolved description of one harness invocation.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub command: &'static str,
    /// Instance files; empty when instances are generated.
    pub instances: Vec<PathBuf>,
    pub config: PalmConfig,
    pub mu: f64,
    pub out: Option<PathBuf>,
    /// Generated instances per sample level.
    pub repetitions: u64,
    pub jobs: Option<usize>,
}

impl RunPlan {
    fn new(command: &'static str, solver: &SolverArgs, out: Option<&Path>) -> Result<Self> {
        let run = Self {
            command,
            instances: Vec::new(),
            config: solver.config(Method::Palm)?,
            mu: solver.mu,
            out: out.map(Path::to_path_buf),
            repetitions: 1,
            jobs: None,
        };
        run.prepare_output()?;
        Ok(run)
    }

    /// Creates the directory holding `out`.
    pub fn prepare_output(&self) -> Result<()> {
        if let Some(dir) = self.out.as_deref().and_then(Path::parent).filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidArgument("--jobs must be positive".into()));
        }
        Ok(())
    }

    /// Writes `text` to `out`, or to stdout when no path was given.
    pub fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

impl SolverArgs {
    /// Applies the overrides on top of the defaults for `method`.
    pub fn config(&self, method: Method) -> Result<PalmConfig> {
        let mut c = match method {
            Method::FastPalm => PalmConfig::fast(),
            _ => PalmConfig::default(),
        };
        if self.momentum {
            if method == Method::Baseline {
                return Err(Error::InvalidArgument("--momentum does not apply to the baseline".into()));
            }
            c.momentum = true;
        }
        if let Some(v) = self.rho {
            c.rho = v;
        }
        if let Some(v) = self.rho_x {
            c.rho_x = v;
        }
        if let Some(v) = self.gamma1 {
            c.gamma1 = v;
        }
        if let Some(v) = self.gamma2 {
            c.gamma2 = v;
        }
        if let Some(v) = self.max_iters {
            c.max_iters = v;
        }
        if let Some(v) = self.tol_obj {
            c.tol_obj = v;
        }
        if let Some(v) = self.tol_comp {
            c.tol_comp = v;
        }
        if let Some(v) = self.rank_threshold {
            c.rank_threshold = v;
        }
        if let Some(v) = self.max_newton_iters {
            c.prox_params.max_newton_iters = v;
        }
        if let Some(rho_max) = self.rho_max {
            let schedule = match self.rho_schedule {
                RhoScheduleArg::OnSettle => RhoSchedule::OnSettle,
                RhoScheduleArg::EveryIteration => RhoSchedule::EveryIteration,
            };
            c.continuation = Some(Continuation {
                rho_max,
                factor: self.rho_factor,
                schedule,
            });
        }
        if let Some(g) = self.u_gradient {
            c.u_gradient = match g {
                UGradientArg::Updated => UGradientPoint::Updated,
                UGradientArg::Previous => UGradientPoint::Previous,
            };
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidArgument(format!("--mu must be positive, got {}", self.mu)));
        }
        c.validate()?;
        Ok(c)
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::NonConvergence { .. } | Error::Stall { .. } => EXIT_SOLVER,
        _ => EXIT_IO,
    }
}

pub fn exit_code_for_status(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged | SolveStatus::MaxIters => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::SubproblemFailure => EXIT_SOLVER,
    }
}

/// `SDCMPCC_LOG`: `off` (default), `summary` or `trace`.
fn init_logging() {
    let level = match std::env::var("SDCMPCC_LOG").as_deref() {
        Ok("summary") => LevelFilter::Info,
        Ok("trace") => LevelFilter::Trace,
        _ => LevelFilter::Off,
    };
    let _ = env_logger::Builder::new()
        .filter_module("sdcmpcc", level)
        .format_timestamp_millis()
        .try_init();
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<i32> {
    fs::create_dir_all(&args.out)?;
    let mut written = Vec::new();
    match args.kind {
        GenerateKind::Edm => {
            for i in 0..args.count {
                let seed = derive_seed(args.seed, i);
                let (inst, _) = gen_edm_instance(args.n_points, args.n_samples, args.dim, seed)?;
                let path = args.out.join(format!("edm_{i:03}.txt"));
                save_instance(&inst, &path)?;
                written.push((path, seed));
            }
        }
        GenerateKind::Counterexamples => {
            for inst in counterexample_instances() {
                let path = args.out.join(format!("{}.txt", inst.meta.kind.as_str()));
                save_instance(&inst, &path)?;
                written.push((path, 0));
            }
        }
    }
    for (path, seed) in &written {
        println!("{} seed={seed}", path.display());
    }
    Ok(EXIT_OK)
}

/// Starting point requested by `init`.
fn initial_point(
    inst: &Instance,
    init: InitKind,
) -> Result<(Option<crate::SymmetricMatrix>, Option<crate::SymmetricMatrix>)> {
    match init {
        InitKind::Default => Ok((None, None)),
        InitKind::KnownOptimum => {
            let opt = inst
                .optimum
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("instance records no optimum".into()))?;
            Ok((Some(opt.x.clone()), opt.u.clone()))
        }
    }
}

/// Runs one method on one instance; the returned report carries wall time.
pub fn run_method(
    inst: &Instance,
    method: Method,
    solver: &SolverArgs,
    init: InitKind,
) -> Result<(SolveReport, f64)> {
    let config = solver.config(method)?;
    let started = Instant::now();
    let report = match method {
        Method::Baseline => baseline_report(&inst.op, solver.mu, &config.prox_params, config.rank_threshold)?,
        _ => {
            let (x0, u0) = initial_point(inst, init)?;
            solve(&inst.op, &config, x0, u0)?
        }
    };
    Ok((report, started.elapsed().as_secs_f64() * 1e3))
}

pub fn summary_line(method: Method, report: &SolveReport, wall_ms: f64) -> String {
    let last = report.final_row();
    format!(
        "method={} status={} iterations={} rank={} objective={} complementarity={:e} trace_u={} rho={} wall_ms={:.1}",
        method.as_str(),
        report.status.as_str(),
        report.iterations(),
        last.rank_x,
        last.f_rho,
        last.comp,
        last.trace_u,
        report.rho_final,
        wall_ms
    )
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let mut run = RunPlan::new("solve", &args.solver, args.out.as_deref())?;
    run.instances = vec![args.instance.clone()];
    let inst = load_instance(&args.instance)?;
    let (report, wall_ms) = run_method(&inst, args.method, &args.solver, args.init)?;
    if let Some(out) = &run.out {
        fs::write(out, write_report_csv(&report, args.method, wall_ms))?;
    }
    if let Some(msg) = &report.failure {
        eprintln!("solver: {msg}");
    }
    println!("{}", summary_line(args.method, &report, wall_ms));
    Ok(exit_code_for_status(report.status))
}

/// Per-instance outcome of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub instance: String,
    pub rank_palm: f64,
    pub rank_fast_palm: f64,
    pub rank_baseline: f64,
    pub time_palm_ms: f64,
    pub time_fast_palm_ms: f64,
    pub time_baseline_ms: f64,
    pub iters_palm: f64,
    pub iters_fast_palm: f64,
}

impl CompareRow {
    fn values(&self) -> [f64; 8] {
        [
            self.rank_palm,
            self.rank_fast_palm,
            self.rank_baseline,
            self.time_palm_ms,
            self.time_fast_palm_ms,
            self.time_baseline_ms,
            self.iters_palm,
            self.iters_fast_palm,
        ]
    }

    fn from_values(instance: String, v: &[f64]) -> Self {
        Self {
            instance,
            rank_palm: v[0],
            rank_fast_palm: v[1],
            rank_baseline: v[2],
            time_palm_ms: v[3],
            time_fast_palm_ms: v[4],
            time_baseline_ms: v[5],
            iters_palm: v[6],
            iters_fast_palm: v[7],
        }
    }

    /// Column-wise mean, labelled `mean`.
    pub fn mean(rows: &[CompareRow]) -> CompareRow {
        let mut acc = [0.0; 8];
        for r in rows {
            for (a, v) in acc.iter_mut().zip(r.values()) {
                *a += v;
            }
        }
        let n = rows.len().max(1) as f64;
        CompareRow::from_values("mean".into(), &acc.map(|a| a / n))
    }
}

/// Outcome of the three methods on one instance, plus the worst exit code.
fn compare_instance(name: String, inst: &Instance, solver: &SolverArgs) -> Result<(CompareRow, i32)> {
    let mut out = [(0.0, 0.0, 0.0); 3];
    let mut code = EXIT_OK;
    for (slot, method) in out.iter_mut().zip([Method::Palm, Method::FastPalm, Method::Baseline]) {
        let (rep, ms) = run_method(inst, method, solver, InitKind::Default)?;
        code = code.max(exit_code_for_status(rep.status));
        *slot = (rep.final_row().rank_x as f64, ms, rep.iterations() as f64);
    }
    let row = CompareRow {
        instance: name,
        rank_palm: out[0].0,
        rank_fast_palm: out[1].0,
        rank_baseline: out[2].0,
        time_palm_ms: out[0].1,
        time_fast_palm_ms: out[1].1,
        time_baseline_ms: out[2].1,
        iters_palm: out[0].2,
        iters_fast_palm: out[1].2,
    };
    info!("{}: ranks {} / {} / {}", row.instance, row.rank_palm, row.rank_fast_palm, row.rank_baseline);
    Ok((row, code))
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidArgument("--jobs must be positive".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Compares all methods on `instances` in parallel; rows keep input order.
pub fn compare_instances(
    instances: &[(String, Instance)],
    solver: &SolverArgs,
    jobs: Option<usize>,
) -> Result<(Vec<CompareRow>, i32)> {
    let results: Vec<Result<(CompareRow, i32)>> = with_pool(jobs, || {
        instances
            .par_iter()
            .map(|(name, inst)| compare_instance(name.clone(), inst, solver))
            .collect()
    })?;
    let mut rows = Vec::with_capacity(results.len());
    let mut code = EXIT_OK;
    for r in results {
        let (row, c) = r?;
        code = code.max(c);
        rows.push(row);
    }
    Ok((rows, code))
}

fn generated_instances(batch: &BatchArgs, n_samples: usize) -> Result<Vec<(String, Instance)>> {
    (0..batch.count)
        .map(|i| {
            let seed = derive_seed(batch.seed, i);
            let (inst, _) = gen_edm_instance(batch.n_points, n_samples, batch.dim, seed)?;
            Ok((format!("edm_{i:03}"), inst))
        })
        .collect()
}

fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<i32> {
    let mut run = RunPlan::new("compare", &args.solver, args.out.as_deref())?;
    run.instances = args.instances.clone();
    run.repetitions = args.batch.count;
    run.jobs = args.batch.jobs;
    run.prepare_output()?;
    let instances = if args.instances.is_empty() {
        generated_instances(&args.batch, args.n_samples)?
    } else {
        args.instances
            .iter()
            .map(|p| Ok((instance_name(p), load_instance(p)?)))
            .collect::<Result<Vec<_>>>()?
    };
    let (rows, code) = compare_instances(&instances, &args.solver, run.jobs)?;
    run.emit(&write_compare_csv(&rows))?;
    Ok(code)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n_samples: usize,
    pub instances: usize,
    pub mean: CompareRow,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let mut run = RunPlan::new("sweep", &args.solver, args.out.as_deref())?;
    run.repetitions = args.batch.count;
    run.jobs = args.batch.jobs;
    run.prepare_output()?;
    if args.from > args.to {
        return Err(Error::InvalidArgument(format!("--from {} exceeds --to {}", args.from, args.to)));
    }
    let mut rows = Vec::new();
    let mut code = EXIT_OK;
    for n_samples in (args.from..=args.to).step_by(args.step as usize) {
        let instances = generated_instances(&args.batch, n_samples)?;
        let (level, c) = compare_instances(&instances, &args.solver, run.jobs)?;
        code = code.max(c);
        info!("sweep level {n_samples} done");
        rows.push(SweepRow {
            n_samples,
            instances: level.len(),
            mean: CompareRow::mean(&level),
        });
    }
    run.emit(&write_sweep_csv(&rows))?;
    Ok(code)
}

/// Solve report as read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub trace: Vec<TraceRow>,
    pub method: Method,
    pub status: String,
    pub rho_final: f64,
    pub wall_ms: f64,
    pub max_prox_grad_norm: f64,
    pub failure: Option<String>,
    pub diagnostics: Option<DiagnosticsReport>,
}

pub fn write_report_csv(report: &SolveReport, method: Method, wall_ms: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{TRACE_HEADER}");
    for r in &report.trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.iter, r.f_rho, r.comp, r.rank_x, r.trace_u, r.newton_iters, r.cg_iters, r.elapsed_ms
        );
    }
    let _ = writeln!(s, "# summary");
    let _ = writeln!(s, "key,value");
    let _ = writeln!(s, "method,{}", method.as_str());
    let _ = writeln!(s, "status,{}", report.status.as_str());
    let _ = writeln!(s, "rho_final,{}", report.rho_final);
    let _ = writeln!(s, "wall_ms,{wall_ms}");
    let _ = writeln!(s, "max_prox_grad_norm,{}", report.max_prox_grad_norm);
    if let Some(f) = &report.failure {
        let _ = writeln!(s, "failure,{}", f.replace([',', '\n'], ";"));
    }
    if let Some(d) = &report.diagnostics {
        let _ = writeln!(s, "# diagnostics");
        let _ = writeln!(s, "key,value");
        let _ = writeln!(s, "complementarity,{}", d.complementarity);
        let _ = writeln!(s, "rank_x,{}", d.rank_x);
        let _ = writeln!(s, "trace_u,{}", d.trace_u);
        let _ = writeln!(s, "stat_res_x,{}", d.stat_res_x);
        let _ = writeln!(s, "stat_res_u,{}", d.stat_res_u);
        let _ = writeln!(s, "# eigenpairs");
        let _ = writeln!(s, "sigma,vxv,class,satisfied");
        for e in &d.eigenpairs {
            let _ = writeln!(s, "{},{},{},{}", e.sigma, e.vxv, e.class.as_str(), e.satisfied);
        }
    }
    s
}

fn num<T: std::str::FromStr>(line: usize, field: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid number `{field}`")))
}

/// Splits a report into `(section name, [(line number, line)])` blocks.
fn sections(text: &str) -> Vec<(String, Vec<(usize, &str)>)> {
    let mut out: Vec<(String, Vec<(usize, &str)>)> = vec![("trace".into(), Vec::new())];
    for (i, line) in text.lines().enumerate() {
        if let Some(name) = line.strip_prefix("# ") {
            out.push((name.trim().to_string(), Vec::new()));
        } else if !line.trim().is_empty() {
            out.last_mut().expect("nonempty").1.push((i + 1, line));
        }
    }
    out
}

fn key_values<'a>(lines: &[(usize, &'a str)]) -> Result<Vec<(usize, &'a str, &'a str)>> {
    let mut it = lines.iter();
    match it.next() {
        Some((_, "key,value")) => {}
        Some((n, _)) => return Err(Error::parse(*n, "expected `key,value` header")),
        None => return Ok(Vec::new()),
    }
    it.map(|(n, l)| {
        l.split_once(',')
            .map(|(k, v)| (*n, k, v))
            .ok_or_else(|| Error::parse(*n, "expected `key,value`"))
    })
    .collect()
}

pub fn read_report_csv(text: &str) -> Result<ParsedReport> {
    let secs = sections(text);
    let trace_lines = &secs[0].1;
    match trace_lines.first() {
        Some((_, h)) if *h == TRACE_HEADER => {}
        Some((n, _)) => return Err(Error::parse(*n, "unexpected trace header")),
        None => return Err(Error::parse(1, "empty report")),
    }
    let mut trace = Vec::new();
    for (n, line) in &trace_lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::parse(*n, format!("expected 8 fields, found {}", f.len())));
        }
        trace.push(TraceRow {
            iter: num(*n, f[0])?,
            f_rho: num(*n, f[1])?,
            comp: num(*n, f[2])?,
            rank_x: num(*n, f[3])?,
            trace_u: num(*n, f[4])?,
            newton_iters: num(*n, f[5])?,
            cg_iters: num(*n, f[6])?,
            elapsed_ms: num(*n, f[7])?,
        });
    }

    let find = |name: &str| secs.iter().find(|(s, _)| s == name).map(|(_, l)| l.as_slice());
    let summary = key_values(find("summary").ok_or_else(|| Error::parse(0, "missing summary section"))?)?;
    let get = |key: &str| {
        summary
            .iter()
            .find(|(_, k, _)| *k == key)
            .map(|(n, _, v)| (*n, *v))
            .ok_or_else(|| Error::parse(0, format!("summary lacks `{key}`")))
    };
    let (mn, m) = get("method")?;
    let method = Method::parse(m).ok_or_else(|| Error::parse(mn, format!("unknown method `{m}`")))?;
    let (rn, r) = get("rho_final")?;
    let (wn, w) = get("wall_ms")?;
    let (gn, g) = get("max_prox_grad_norm")?;

    let diagnostics = match find("diagnostics") {
        None => None,
        Some(lines) => {
            let kv = key_values(lines)?;
            let d = |key: &str| {
                kv.iter()
                    .find(|(_, k, _)| *k == key)
                    .map(|(n, _, v)| (*n, *v))
                    .ok_or_else(|| Error::parse(0, format!("diagnostics lacks `{key}`")))
            };
            let f = |key: &str| -> Result<f64> {
                let (n, v) = d(key)?;
                num(n, v)
            };
            let (rkn, rk) = d("rank_x")?;
            let mut eigenpairs = Vec::new();
            if let Some(lines) = find("eigenpairs") {
                for (n, line) in lines.iter().skip(1) {
                    let p: Vec<&str> = line.split(',').collect();
                    if p.len() != 4 {
                        return Err(Error::parse(*n, "expected 4 eigenpair fields"));
                    }
                    eigenpairs.push(EigenpairCheck {
                        sigma: num(*n, p[0])?,
                        vxv: num(*n, p[1])?,
                        class: EigenClass::parse(p[2]).ok_or_else(|| Error::parse(*n, "unknown eigen class"))?,
                        satisfied: num(*n, p[3])?,
                    });
                }
            }
            Some(DiagnosticsReport {
                complementarity: f("complementarity")?,
                rank_x: num(rkn, rk)?,
                trace_u: f("trace_u")?,
                stat_res_x: f("stat_res_x")?,
                stat_res_u: f("stat_res_u")?,
                eigenpairs,
            })
        }
    };

    Ok(ParsedReport {
        trace,
        method,
        status: get("status")?.1.to_string(),
        rho_final: num(rn, r)?,
        wall_ms: num(wn, w)?,
        max_prox_grad_norm: num(gn, g)?,
        failure: get("failure").ok().map(|(_, v)| v.to_string()),
        diagnostics,
    })
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Per-instance rows followed by the `mean` row.
pub fn write_compare_csv(rows: &[CompareRow]) -> String {
    let mut s = format!("{COMPARE_HEADER}\n");
    for r in rows.iter().chain(std::iter::once(&CompareRow::mean(rows))) {
        let _ = writeln!(s, "{},{}", r.instance, join(&r.values()));
    }
    s
}

/// Reads a comparison table; the trailing `mean` row is returned separately.
pub fn read_compare_csv(text: &str) -> Result<(Vec<CompareRow>, CompareRow)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h == COMPARE_HEADER => {}
        _ => return Err(Error::parse(1, "unexpected comparison header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let (name, rest) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(i + 1, "missing fields"))?;
        let v = rest
            .split(',')
            .map(|f| num(i + 1, f))
            .collect::<Result<Vec<f64>>>()?;
        if v.len() != 8 {
            return Err(Error::parse(i + 1, format!("expected 9 fields, found {}", v.len() + 1)));
        }
        rows.push(CompareRow::from_values(name.to_string(), &v));
    }
    match rows.pop() {
        Some(mean) if mean.instance == "mean" => Ok((rows, mean)),
        _ => Err(Error::parse(text.lines().count(), "missing `mean` row")),
    }
}

pub fn write_sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let m = &r.mean;
        let _ = writeln!(
            s,
            "{},{},{}",
            r.n_samples,
            r.instances,
            join(&[
                m.rank_palm,
                m.rank_fast_palm,
                m.rank_baseline,
                m.time_palm_ms,
                m.time_fast_palm_ms,
                m.time_baseline_ms
            ])
        );
    }
    s
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h == SWEEP_HEADER => {}
        _ => return Err(Error::parse(1, "unexpected sweep header")),
    }
    lines
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::parse(i + 1, format!("expected 8 fields, found {}", f.len())));
            }
            let v = f[2..].iter().map(|x| num(i + 1, x)).collect::<Result<Vec<f64>>>()?;
            Ok(SweepRow {
                n_samples: num(i + 1, f[0])?,
                instances: num(i + 1, f[1])?,
                mean: CompareRow {
                    instance: "mean".into(),
                    rank_palm: v[0],
                    rank_fast_palm: v[1],
                    rank_baseline: v[2],
                    time_palm_ms: v[3],
                    time_fast_palm_ms: v[4],
                    time_baseline_ms: v[5],
                    iters_palm: 0.0,
                    iters_fast_palm: 0.0,
                },
            })
        })
        .collect()
}
