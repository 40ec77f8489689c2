//! Sparsity-driven motion correction for MRI k-space corrupted by per-line
//! rigid translation.
//!
//! The observed k-space is modelled as `M_obs = T_beta F m`, where `F` is the
//! unitary centered 2D DFT and `T_beta` applies one phase ramp per readout
//! line. Among all image/motion pairs consistent with the data, the solvers
//! look for the one whose orthonormal Haar coefficients have the smallest l1
//! norm, alternating between the sparse set `{m : ||W m||_1 <= C}` and the
//! data-consistent set `{m : M_obs = T_beta F m}`.
//!
//! ```no_run
//! use sraar::{simulation, solvers, grid::ReconConfig, transforms::wavelet_l1};
//!
//! let gt = simulation::shepp_logan(128).unwrap();
//! let traj = simulation::generate_centered_trajectory(
//!     &simulation::TrajectoryGenConfig {
//!         bounds: Default::default(),
//!         smoothness: 16,
//!         seed: 1,
//!     },
//!     &gt,
//! )
//! .unwrap();
//! let observed = simulation::corrupt(&gt, &traj, None, 0).unwrap();
//! let cfg = ReconConfig::with_budget(wavelet_l1(&gt, None).unwrap());
//! let rec = solvers::solve_sraar(&observed, &cfg).unwrap();
//! println!("{}", rec.trace.last_misfit().unwrap());
//! ```

pub mod cli;
pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod projections;
pub mod simulation;
pub mod solvers;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{
    new_complex_image, ComplexImage, Displacement, FrequencyGrid, KSpaceData, MotionBounds,
    MotionTrajectory, ReconConfig, SolverKind, SparsityBudget,
};
