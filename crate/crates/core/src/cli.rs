//! The `sraar` command line: simulate, reconstruct, evaluate, export-pgm.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::grid::{
    validate_size, ComplexImage, KSpaceData, MotionBounds, ReconConfig, SolverKind, SparsityBudget,
};
use crate::io::{self, DType};
use crate::metrics::{image_metrics, trajectory_error, EvalReport};
use crate::motion::{naive_reconstruct, LineWeights};
use crate::projections::DEFAULT_GRID_STEP;
use crate::simulation::{self, TrajectoryGenConfig};
use crate::solvers::{reconstruct, Reconstruction, SolverTrace};
use crate::transforms::{dft2, wavelet_l1};

pub const GT_FILE: &str = "ground_truth.srr";
pub const KSPACE_FILE: &str = "kspace.srr";
pub const TRUE_TRAJ_FILE: &str = "trajectory_true.txt";
pub const RECON_FILE: &str = "recon.srr";
pub const EST_TRAJ_FILE: &str = "trajectory_est.txt";
pub const TRACE_FILE: &str = "trace.csv";

/// Default budget fractions when neither `--c` nor `--c-grid` is given.
pub const DEFAULT_C_GRID: [f64; 3] = [0.3, 0.5, 0.7];

#[derive(Debug, Parser)]
#[command(name = "sraar", version, about = "Sparsity-driven MRI motion correction")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate ground truth, a random trajectory and corrupted k-space.
    Simulate(SimulateArgs),
    /// Jointly estimate image and motion from corrupted k-space.
    Reconstruct(ReconstructArgs),
    /// Compare a reconstruction against the ground truth.
    Evaluate(EvaluateArgs),
    /// Render a raw array as a 16-bit PGM.
    ExportPgm(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Phantom {
    SheppLogan,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, conflicts_with = "input")]
    pub phantom: Option<Phantom>,
    /// Ground-truth image in the raw array format.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 5.0)]
    pub max_shift_x: f64,
    #[arg(long, default_value_t = 5.0)]
    pub max_shift_y: f64,
    /// Trajectory correlation length in lines.
    #[arg(long, default_value_t = 16)]
    pub smoothness: usize,
    #[arg(long)]
    pub snr_db: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Er,
    Sraar,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub kspace: PathBuf,
    #[arg(long, value_enum, default_value = "sraar")]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 0.9)]
    pub theta: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Fixed l1 budget C.
    #[arg(long, conflicts_with = "c_grid")]
    pub c: Option<f64>,
    /// Budget fractions of the naive image's l1 norm, e.g. 0.3,0.5,0.7.
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5.0)]
    pub max_shift_x: f64,
    #[arg(long, default_value_t = 5.0)]
    pub max_shift_y: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    #[arg(long)]
    pub no_amplitude_replacement: bool,
    /// Haar depth (default: full).
    #[arg(long)]
    pub wavelet_levels: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub recon: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, requires = "true_traj")]
    pub est_traj: Option<PathBuf>,
    #[arg(long, requires = "est_traj")]
    pub true_traj: Option<PathBuf>,
    /// Observed k-space, used for the naive baseline.
    #[arg(long)]
    pub kspace: Option<PathBuf>,
    /// Trace CSV of the run, used for iteration count and wall time.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn bounds(x: f64, y: f64) -> CliResult<MotionBounds> {
    MotionBounds::new(x, y).map_err(|e| usage(e.to_string()))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Run(Error::io(dir, e)))
}

pub fn simulate(args: &SimulateArgs) -> CliResult<String> {
    let gt = match (&args.phantom, &args.input) {
        (Some(_), Some(_)) => return Err(usage("--phantom and --input are mutually exclusive")),
        (None, None) => return Err(usage("one of --phantom or --input is required")),
        (Some(Phantom::SheppLogan), None) => {
            let n = args.size.unwrap_or(256);
            validate_size(n).map_err(|e| usage(e.to_string()))?;
            simulation::shepp_logan(n)?
        }
        (None, Some(path)) => {
            let img = simulation::load_ground_truth(path)?;
            if let Some(n) = args.size {
                if n != img.size() {
                    return Err(usage(format!(
                        "--size {n} does not match the {0}x{0} input",
                        img.size()
                    )));
                }
            }
            img
        }
    };
    if args.smoothness == 0 {
        return Err(usage("--smoothness must be at least 1"));
    }
    if let Some(snr) = args.snr_db {
        if !snr.is_finite() {
            return Err(usage("--snr-db must be finite"));
        }
    }
    let gen = TrajectoryGenConfig {
        bounds: bounds(args.max_shift_x, args.max_shift_y)?,
        smoothness: args.smoothness,
        seed: args.seed,
    };
    let traj = simulation::generate_centered_trajectory(&gen, &gt)?;
    let motion_only = simulation::corrupt(&gt, &traj, None, 0)?;
    let observed = match args.snr_db {
        Some(snr) => simulation::add_noise(&motion_only, snr, noise_seed(args.seed))?,
        None => motion_only.clone(),
    };

    create_dir(&args.out_dir)?;
    io::write_raw(args.out_dir.join(GT_FILE), &gt, DType::Float32)?;
    io::write_trajectory(args.out_dir.join(TRUE_TRAJ_FILE), &traj)?;
    io::write_raw(args.out_dir.join(KSPACE_FILE), &observed, DType::Complex64)?;

    Ok(format!(
        "size={} l1_gt={:.6} l1_motion={:.6} l1_observed={:.6}",
        gt.size(),
        wavelet_l1(&gt, None)?,
        wavelet_l1(&naive_reconstruct(&motion_only), None)?,
        wavelet_l1(&naive_reconstruct(&observed), None)?,
    ))
}

fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x05ee_d0f4_015e
}

pub fn recon_config(args: &ReconstructArgs) -> CliResult<ReconConfig> {
    let solver = match args.solver {
        SolverArg::Er => SolverKind::Er,
        SolverArg::Sraar => SolverKind::Sraar,
    };
    let budget = match (&args.c, &args.c_grid) {
        (Some(c), None) => SparsityBudget::Fixed(*c),
        (None, Some(grid)) => SparsityBudget::Grid(grid.clone()),
        (None, None) if solver == SolverKind::Er => {
            return Err(usage("--solver er needs --c or --c-grid"))
        }
        (None, None) => SparsityBudget::Grid(DEFAULT_C_GRID.to_vec()),
        (Some(_), Some(_)) => return Err(usage("--c and --c-grid are mutually exclusive")),
    };
    let cfg = ReconConfig {
        solver,
        theta: args.theta,
        iterations: args.iters,
        budget,
        bounds: bounds(args.max_shift_x, args.max_shift_y)?,
        amplitude_replacement: !args.no_amplitude_replacement,
        grid_step: args.grid_step,
        wavelet_levels: args.wavelet_levels,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

pub fn format_trace_csv(trace: &SolverTrace) -> String {
    let mut out = String::from("iter,misfit,l1,seconds\n");
    for r in &trace.records {
        writeln!(out, "{},{},{},{}", r.iteration, r.misfit, r.l1, r.seconds).unwrap();
    }
    out
}

pub fn reconstruct_cmd(args: &ReconstructArgs) -> CliResult<(String, Reconstruction)> {
    let cfg = recon_config(args)?;
    let observed: KSpaceData = io::read_square(&args.kspace)?;
    if let Some(levels) = cfg.wavelet_levels {
        if levels > crate::transforms::max_levels(observed.size()) {
            return Err(usage(format!(
                "--wavelet-levels {levels} too deep for a {0}x{0} array",
                observed.size()
            )));
        }
    }
    let rec = reconstruct(&observed, &cfg)?;

    create_dir(&args.out_dir)?;
    io::write_raw(args.out_dir.join(RECON_FILE), &rec.image, DType::Complex64)?;
    io::write_trajectory(args.out_dir.join(EST_TRAJ_FILE), &rec.estimate.trajectory)?;
    let trace_path = args.out_dir.join(TRACE_FILE);
    fs::write(&trace_path, format_trace_csv(&rec.trace)).map_err(|e| Error::io(&trace_path, e))?;

    let summary = format!(
        "solver={:?} iterations={} c={:.6} misfit_first={:.6e} misfit_last={:.6e} l1_recon={:.6}",
        cfg.solver,
        rec.trace.len(),
        rec.budget,
        rec.trace.first_misfit().unwrap_or(f64::NAN),
        rec.trace.last_misfit().unwrap_or(f64::NAN),
        wavelet_l1(&rec.image, cfg.wavelet_levels)?,
    );
    Ok((summary, rec))
}

fn trace_stats(path: &Path) -> CliResult<(usize, f64)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.is_empty()).collect();
    let seconds = match rows.last() {
        Some(last) => last
            .rsplit(',')
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| Error::Format(format!("bad trace row '{last}'")))?,
        None => 0.0,
    };
    Ok((rows.len(), seconds))
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<EvalReport> {
    let recon: ComplexImage = io::read_square(&args.recon)?;
    let gt: ComplexImage = io::read_square(&args.gt)?;
    recon.ensure_same_shape(&gt)?;
    let m = image_metrics(&recon, &gt)?;
    let mut report = EvalReport {
        rmse_rel: m.rmse_rel,
        psnr_db: m.psnr_db,
        l1_gt: wavelet_l1(&gt, None)?,
        l1_recon: wavelet_l1(&recon, None)?,
        ..Default::default()
    };
    let weights = match &args.kspace {
        Some(path) => {
            let observed: KSpaceData = io::read_square(path)?;
            observed.ensure_same_shape(&gt)?;
            let naive = naive_reconstruct(&observed);
            let nm = image_metrics(&naive, &gt)?;
            report.l1_corrupted = Some(wavelet_l1(&naive, None)?);
            report.naive_rmse_rel = Some(nm.rmse_rel);
            report.naive_psnr_db = Some(nm.psnr_db);
            LineWeights::from_kspace(&observed)
        }
        None => LineWeights::from_kspace(&dft2(&gt)),
    };
    if let (Some(est), Some(truth)) = (&args.est_traj, &args.true_traj) {
        let est = io::read_trajectory(est)?;
        let truth = io::read_trajectory(truth)?;
        report.trajectory = Some(trajectory_error(&est, &truth, &weights)?);
    }
    if let Some(trace) = &args.trace {
        let (iters, secs) = trace_stats(trace)?;
        report.iterations = Some(iters);
        report.wall_time_s = Some(secs);
    }
    let text = report.to_key_value();
    fs::write(&args.out, &text).map_err(|e| Error::io(&args.out, e))?;
    Ok(report)
}

pub fn export_pgm(args: &ExportArgs) -> CliResult<String> {
    let raw = io::read_raw(&args.input)?;
    let (rows, cols) = (raw.rows, raw.cols);
    let array: ComplexImage = raw.into_square()?;
    io::write_pgm(&args.out, &array)?;
    Ok(format!("wrote {}x{} PGM to {}", cols, rows, args.out.display()))
}

fn dispatch(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Reconstruct(a) => reconstruct_cmd(a).map(|(s, _)| s),
        Command::Evaluate(a) => evaluate(a).map(|r| r.to_key_value().trim_end().to_string()),
        Command::ExportPgm(a) => export_pgm(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
