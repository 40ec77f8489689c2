//! Joint image/motion recovery by iterated projections.
//!
//! Both solvers start from the naive reconstruction `F^-1 M_obs` and run a
//! fixed number of iterations:
//!
//! * ER:    `m <- P2 P1 m`
//! * SRAAR: `m <- theta/2 (R1 R2 + I) m + (1 - theta) P2 m`, with reflectors
//!   `R_i = 2 P_i - I`. `R2` and the relaxation term share one evaluation of
//!   `P2 m`, and the final iterate is passed through `P2` once more so the
//!   returned image is consistent with the data.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, KSpaceData, MotionTrajectory, ReconConfig, SolverKind, SparsityBudget};
use crate::motion::naive_reconstruct;
use crate::projections::{project_fourier, project_sparse_levels, MotionEstimate};
use crate::transforms::wavelet_l1;

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `||M_obs - T_beta F m_sparse||_F` for the sparse iterate of this step
    /// and the motion estimated in it.
    pub misfit: f64,
    /// Wavelet l1 norm of the data-consistent iterate.
    pub l1: f64,
    /// Seconds since the solve started.
    pub seconds: f64,
    pub trajectory: Option<MotionTrajectory>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_misfit(&self) -> Option<f64> {
        self.records.first().map(|r| r.misfit)
    }

    pub fn last_misfit(&self) -> Option<f64> {
        self.records.last().map(|r| r.misfit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub image: ComplexImage,
    pub estimate: MotionEstimate,
    pub trace: SolverTrace,
    /// The l1 budget `C` the image was produced with.
    pub budget: f64,
}

struct TraceRecorder {
    start: Instant,
    keep_trajectories: bool,
    trace: SolverTrace,
}

impl TraceRecorder {
    fn new(keep_trajectories: bool) -> Self {
        Self {
            start: Instant::now(),
            keep_trajectories,
            trace: SolverTrace::default(),
        }
    }

    fn record(
        &mut self,
        iteration: usize,
        sparse: &ComplexImage,
        consistent: &ComplexImage,
        estimate: &MotionEstimate,
        levels: Option<usize>,
    ) -> Result<()> {
        // T_beta F is unitary, so the k-space misfit equals the image-domain
        // distance between the sparse iterate and its data-consistent twin.
        let misfit = sparse.distance(consistent);
        self.trace.records.push(IterationRecord {
            iteration,
            misfit,
            l1: wavelet_l1(consistent, levels)?,
            seconds: self.start.elapsed().as_secs_f64(),
            trajectory: self
                .keep_trajectories
                .then(|| estimate.trajectory.clone()),
        });
        Ok(())
    }
}

/// Error-reduction recursion `m <- P2 P1 m` from the naive reconstruction.
pub fn solve_er(observed: &KSpaceData, cfg: &ReconConfig) -> Result<Reconstruction> {
    solve_er_traced(observed, cfg, false)
}

pub fn solve_er_traced(
    observed: &KSpaceData,
    cfg: &ReconConfig,
    keep_trajectories: bool,
) -> Result<Reconstruction> {
    cfg.validate()?;
    let c = cfg.fixed_budget()?;
    let mut m = naive_reconstruct(observed);
    let mut recorder = TraceRecorder::new(keep_trajectories);
    let mut estimate = None;
    for j in 0..cfg.iterations {
        let sparse = project_sparse_levels(&m, c, cfg.wavelet_levels)?;
        let (next, est) = project_fourier(&sparse, observed, cfg)?;
        recorder.record(j, &sparse, &next, &est, cfg.wavelet_levels)?;
        m = next;
        estimate = Some(est);
    }
    Ok(Reconstruction {
        image: m,
        estimate: estimate.expect("at least one iteration"),
        trace: recorder.trace,
        budget: c,
    })
}

/// One SRAAR update. Returns the new iterate together with `P2 m` and the
/// motion estimated for it.
pub fn sraar_step(
    m: &ComplexImage,
    observed: &KSpaceData,
    cfg: &ReconConfig,
    c: f64,
) -> Result<(ComplexImage, ComplexImage, ComplexImage, MotionEstimate)> {
    let theta = cfg.theta;
    let (p2, est) = project_fourier(m, observed, cfg)?;
    let r2 = p2.combine(2.0, m, -1.0);
    let p1 = project_sparse_levels(&r2, c, cfg.wavelet_levels)?;
    let r1r2 = p1.combine(2.0, &r2, -1.0);
    let next = r1r2
        .axpy(1.0, m)
        .combine(0.5 * theta, &p2, 1.0 - theta);
    Ok((next, p2, p1, est))
}

/// Sparse RAAR with relaxation `cfg.theta`.
pub fn solve_sraar(observed: &KSpaceData, cfg: &ReconConfig) -> Result<Reconstruction> {
    solve_sraar_traced(observed, cfg, false)
}

pub fn solve_sraar_traced(
    observed: &KSpaceData,
    cfg: &ReconConfig,
    keep_trajectories: bool,
) -> Result<Reconstruction> {
    cfg.validate()?;
    let c = cfg.fixed_budget()?;
    let mut m = naive_reconstruct(observed);
    let mut recorder = TraceRecorder::new(keep_trajectories);
    for j in 0..cfg.iterations {
        let (next, p2, p1, est) = sraar_step(&m, observed, cfg, c)?;
        recorder.record(j, &p1, &p2, &est, cfg.wavelet_levels)?;
        m = next;
    }
    let (image, estimate) = project_fourier(&m, observed, cfg)?;
    Ok(Reconstruction {
        image,
        estimate,
        trace: recorder.trace,
        budget: c,
    })
}

fn solve_fixed(observed: &KSpaceData, cfg: &ReconConfig, keep: bool) -> Result<Reconstruction> {
    match cfg.solver {
        SolverKind::Er => solve_er_traced(observed, cfg, keep),
        SolverKind::Sraar => solve_sraar_traced(observed, cfg, keep),
    }
}

/// Runs the configured solver once per candidate budget
/// `C = f * ||W m_naive||_1` and keeps the run whose final image has the
/// smallest wavelet l1 norm (ties go to the smaller `C`).
pub fn tune_sparsity_budget(observed: &KSpaceData, cfg: &ReconConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    let fractions = match &cfg.budget {
        SparsityBudget::Grid(f) => f.clone(),
        SparsityBudget::Fixed(_) => {
            return Err(Error::Config(
                "tune_sparsity_budget needs a grid of budget fractions".into(),
            ))
        }
    };
    let initial_l1 = wavelet_l1(&naive_reconstruct(observed), cfg.wavelet_levels)?;
    let runs: Vec<Result<(f64, Reconstruction)>> = fractions
        .par_iter()
        .map(|f| {
            let run_cfg = ReconConfig {
                budget: SparsityBudget::Fixed(f * initial_l1),
                ..cfg.clone()
            };
            let rec = solve_fixed(observed, &run_cfg, false)?;
            let l1 = wavelet_l1(&rec.image, cfg.wavelet_levels)?;
            Ok((l1, rec))
        })
        .collect();
    let mut best: Option<(f64, Reconstruction)> = None;
    for run in runs {
        let (l1, rec) = run?;
        let better = match &best {
            None => true,
            Some((best_l1, best_rec)) => {
                l1 < *best_l1 || (l1 == *best_l1 && rec.budget < best_rec.budget)
            }
        };
        if better {
            best = Some((l1, rec));
        }
    }
    Ok(best.expect("grid is non-empty").1)
}

/// Solves with a fixed budget, or tunes it when `cfg` carries a grid.
pub fn reconstruct(observed: &KSpaceData, cfg: &ReconConfig) -> Result<Reconstruction> {
    match cfg.budget {
        SparsityBudget::Fixed(_) => solve_fixed(observed, cfg, false),
        SparsityBudget::Grid(_) => tune_sparsity_budget(observed, cfg),
    }
}
