//! C ABI over `sraar`.
//!
//! Objects cross the boundary as opaque handles created by `sraar_*_new` or
//! returned through out-pointers, and released with the matching
//! `sraar_*_free`. Every fallible call returns an [`SraarStatus`]; the text of
//! the most recent error on the calling thread is available from
//! [`sraar_last_error_message`]. Panics never unwind into the caller.
//!
//! Complex data is exchanged as separate real and imaginary `double` buffers
//! of length `n * n`, row-major.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use sraar::grid::{ComplexImage, KSpaceData, MotionBounds, ReconConfig, SolverKind, SparsityBudget};
use sraar::io::DType;
use sraar::simulation::TrajectoryGenConfig;
use sraar::solvers::Reconstruction;
use sraar::{Error, MotionTrajectory};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SraarStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    Bounds = 3,
    Config = 4,
    Format = 5,
    Io = 6,
    UndefinedMetric = 7,
    BufferTooSmall = 8,
    InvalidArgument = 9,
    Panic = 10,
}

/// Solver selector for [`SraarReconConfig`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SraarSolver {
    Er = 0,
    Sraar = 1,
}

/// Reconstruction settings. Obtain defaults from
/// [`sraar_recon_config_default`].
///
/// When `c_grid` is non-null and `c_grid_len > 0` the budget is tuned over
/// those fractions of the naive image's l1 norm; otherwise `c` is used as a
/// fixed budget. `wavelet_levels == 0` selects full depth.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SraarReconConfig {
    pub solver: SraarSolver,
    pub theta: f64,
    pub iterations: usize,
    pub c: f64,
    pub c_grid: *const f64,
    pub c_grid_len: usize,
    pub max_shift_x: f64,
    pub max_shift_y: f64,
    pub grid_step: f64,
    pub amplitude_replacement: bool,
    pub wavelet_levels: usize,
}

/// Opaque square complex array (image or k-space samples).
pub struct SraarArray {
    inner: ComplexImage,
}

/// Opaque per-line motion trajectory.
pub struct SraarTrajectory {
    inner: MotionTrajectory,
}

/// Opaque reconstruction result.
pub struct SraarReconstruction {
    inner: Reconstruction,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> SraarStatus {
    match err {
        Error::Dimension(_) => SraarStatus::Dimension,
        Error::Bounds { .. } => SraarStatus::Bounds,
        Error::Config(_) => SraarStatus::Config,
        Error::Format(_) => SraarStatus::Format,
        Error::UndefinedMetric(_) => SraarStatus::UndefinedMetric,
        Error::Io { .. } => SraarStatus::Io,
    }
}

struct Failure(SraarStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: SraarStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SraarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SraarStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SraarStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(SraarStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(SraarStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Failure> {
    if p.is_null() {
        return Err(fail(SraarStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| fail(SraarStatus::InvalidArgument, "path is not valid UTF-8"))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
#[no_mangle]
pub unsafe extern "C" fn sraar_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds an `n x n` array from real and imaginary buffers of `n * n`
/// doubles. `im` may be null for real data.
#[no_mangle]
pub unsafe extern "C" fn sraar_array_new(
    n: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut SraarArray,
) -> SraarStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if re.is_null() {
            return Err(fail(SraarStatus::NullPointer, "re is null"));
        }
        sraar::grid::validate_size(n)?;
        let len = n * n;
        let re = std::slice::from_raw_parts(re, len);
        let data = if im.is_null() {
            re.iter().map(|&r| Complex64::new(r, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, len);
            re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect()
        };
        *out = boxed(SraarArray {
            inner: ComplexImage::from_vec(n, data)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sraar_array_free(array: *mut SraarArray) {
    if !array.is_null() {
        drop(Box::from_raw(array));
    }
}

/// Side length `n` of the array, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sraar_array_size(array: *const SraarArray) -> usize {
    array.as_ref().map_or(0, |a| a.inner.size())
}

/// Copies the samples into caller buffers of at least `n * n` doubles each.
/// `im` may be null.
#[no_mangle]
pub unsafe extern "C" fn sraar_array_copy(
    array: *const SraarArray,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SraarStatus {
    guard(|| {
        let a = deref(array, "array")?;
        let data = a.inner.data();
        if len < data.len() {
            return Err(fail(
                SraarStatus::BufferTooSmall,
                format!("buffer holds {len} samples, need {}", data.len()),
            ));
        }
        if re.is_null() {
            return Err(fail(SraarStatus::NullPointer, "re is null"));
        }
        for (i, z) in data.iter().enumerate() {
            *re.add(i) = z.re;
            if !im.is_null() {
                *im.add(i) = z.im;
            }
        }
        Ok(())
    })
}

/// Shepp-Logan phantom of side `n`.
#[no_mangle]
pub unsafe extern "C" fn sraar_shepp_logan(n: usize, out: *mut *mut SraarArray) -> SraarStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(SraarArray {
            inner: sraar::simulation::shepp_logan(n)?,
        });
        Ok(())
    })
}

/// Unitary centered forward DFT.
#[no_mangle]
pub unsafe extern "C" fn sraar_dft2(image: *const SraarArray, out: *mut *mut SraarArray) -> SraarStatus {
    guard(|| {
        let img = deref(image, "image")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(SraarArray {
            inner: sraar::transforms::dft2(&img.inner).retag(),
        });
        Ok(())
    })
}

/// Inverse of [`sraar_dft2`].
#[no_mangle]
pub unsafe extern "C" fn sraar_idft2(kspace: *const SraarArray, out: *mut *mut SraarArray) -> SraarStatus {
    guard(|| {
        let k = deref(kspace, "kspace")?;
        let out = out_ptr(out, "out")?;
        let ksp: KSpaceData = k.inner.clone().retag();
        *out = boxed(SraarArray {
            inner: sraar::transforms::idft2(&ksp),
        });
        Ok(())
    })
}

/// Full-depth Haar l1 norm of an image.
#[no_mangle]
pub unsafe extern "C" fn sraar_wavelet_l1(image: *const SraarArray, out: *mut f64) -> SraarStatus {
    guard(|| {
        let img = deref(image, "image")?;
        *out_ptr(out, "out")? = sraar::transforms::wavelet_l1(&img.inner, None)?;
        Ok(())
    })
}

/// Reads a raw `SRR1` file.
#[no_mangle]
pub unsafe extern "C" fn sraar_array_read(path: *const c_char, out: *mut *mut SraarArray) -> SraarStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_ptr(out, "out")?;
        *out = boxed(SraarArray {
            inner: sraar::io::read_square(path)?,
        });
        Ok(())
    })
}

/// Writes a raw `SRR1` file, as complex64 when `complex` is true and as
/// float32 real parts otherwise.
#[no_mangle]
pub unsafe extern "C" fn sraar_array_write(
    array: *const SraarArray,
    path: *const c_char,
    complex: bool,
) -> SraarStatus {
    guard(|| {
        let a = deref(array, "array")?;
        let path = path_arg(path)?;
        let dtype = if complex { DType::Complex64 } else { DType::Float32 };
        sraar::io::write_raw(path, &a.inner, dtype)?;
        Ok(())
    })
}

/// Trajectory from per-line displacement buffers of length `n_lines`.
#[no_mangle]
pub unsafe extern "C" fn sraar_trajectory_new(
    xs: *const f64,
    ys: *const f64,
    n_lines: usize,
    out: *mut *mut SraarTrajectory,
) -> SraarStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if xs.is_null() || ys.is_null() {
            return Err(fail(SraarStatus::NullPointer, "displacement buffer is null"));
        }
        let xs = std::slice::from_raw_parts(xs, n_lines);
        let ys = std::slice::from_raw_parts(ys, n_lines);
        *out = boxed(SraarTrajectory {
            inner: MotionTrajectory::from_components(xs, ys)?,
        });
        Ok(())
    })
}

/// Random smooth trajectory for `ground_truth`, placed in the estimator's
/// gauge and confined to `|beta_x| <= max_shift_x`, `|beta_y| <= max_shift_y`.
#[no_mangle]
pub unsafe extern "C" fn sraar_trajectory_generate(
    ground_truth: *const SraarArray,
    max_shift_x: f64,
    max_shift_y: f64,
    smoothness: usize,
    seed: u64,
    out: *mut *mut SraarTrajectory,
) -> SraarStatus {
    guard(|| {
        let gt = deref(ground_truth, "ground_truth")?;
        let out = out_ptr(out, "out")?;
        let cfg = TrajectoryGenConfig {
            bounds: MotionBounds::new(max_shift_x, max_shift_y)?,
            smoothness,
            seed,
        };
        *out = boxed(SraarTrajectory {
            inner: sraar::simulation::generate_centered_trajectory(&cfg, &gt.inner)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sraar_trajectory_free(traj: *mut SraarTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of lines, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sraar_trajectory_len(traj: *const SraarTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.len())
}

/// Copies displacements into buffers of at least `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn sraar_trajectory_copy(
    traj: *const SraarTrajectory,
    xs: *mut f64,
    ys: *mut f64,
    len: usize,
) -> SraarStatus {
    guard(|| {
        let t = deref(traj, "trajectory")?;
        if len < t.inner.len() {
            return Err(fail(
                SraarStatus::BufferTooSmall,
                format!("buffer holds {len} lines, need {}", t.inner.len()),
            ));
        }
        if xs.is_null() || ys.is_null() {
            return Err(fail(SraarStatus::NullPointer, "output buffer is null"));
        }
        for (i, d) in t.inner.lines().iter().enumerate() {
            *xs.add(i) = d.x;
            *ys.add(i) = d.y;
        }
        Ok(())
    })
}

/// Motion-corrupted k-space of `ground_truth`. Pass NaN as `snr_db` for
/// noise-free data.
#[no_mangle]
pub unsafe extern "C" fn sraar_corrupt(
    ground_truth: *const SraarArray,
    traj: *const SraarTrajectory,
    snr_db: f64,
    seed: u64,
    out: *mut *mut SraarArray,
) -> SraarStatus {
    guard(|| {
        let gt = deref(ground_truth, "ground_truth")?;
        let t = deref(traj, "trajectory")?;
        let out = out_ptr(out, "out")?;
        let snr = if snr_db.is_nan() { None } else { Some(snr_db) };
        let k = sraar::simulation::corrupt(&gt.inner, &t.inner, snr, seed)?;
        *out = boxed(SraarArray { inner: k.retag() });
        Ok(())
    })
}

/// Fills `cfg` with the library defaults (SRAAR, theta 0.9, 100 iterations,
/// 5 px bounds, 0.25 px search step, amplitude replacement on). The budget
/// defaults to a fixed `c = 0`; set `c` or `c_grid` before use.
#[no_mangle]
pub unsafe extern "C" fn sraar_recon_config_default(cfg: *mut SraarReconConfig) -> SraarStatus {
    guard(|| {
        let cfg = out_ptr(cfg, "cfg")?;
        let d = ReconConfig::default();
        *cfg = SraarReconConfig {
            solver: SraarSolver::Sraar,
            theta: d.theta,
            iterations: d.iterations,
            c: 0.0,
            c_grid: ptr::null(),
            c_grid_len: 0,
            max_shift_x: d.bounds.max_abs_x(),
            max_shift_y: d.bounds.max_abs_y(),
            grid_step: d.grid_step,
            amplitude_replacement: d.amplitude_replacement,
            wavelet_levels: 0,
        };
        Ok(())
    })
}

unsafe fn to_config(c: &SraarReconConfig) -> Result<ReconConfig, Failure> {
    let budget = if !c.c_grid.is_null() && c.c_grid_len > 0 {
        SparsityBudget::Grid(std::slice::from_raw_parts(c.c_grid, c.c_grid_len).to_vec())
    } else {
        SparsityBudget::Fixed(c.c)
    };
    let cfg = ReconConfig {
        solver: match c.solver {
            SraarSolver::Er => SolverKind::Er,
            SraarSolver::Sraar => SolverKind::Sraar,
        },
        theta: c.theta,
        iterations: c.iterations,
        budget,
        bounds: MotionBounds::new(c.max_shift_x, c.max_shift_y)?,
        amplitude_replacement: c.amplitude_replacement,
        grid_step: c.grid_step,
        wavelet_levels: (c.wavelet_levels > 0).then_some(c.wavelet_levels),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the configured solver on observed k-space.
#[no_mangle]
pub unsafe extern "C" fn sraar_reconstruct(
    kspace: *const SraarArray,
    cfg: *const SraarReconConfig,
    out: *mut *mut SraarReconstruction,
) -> SraarStatus {
    guard(|| {
        let k = deref(kspace, "kspace")?;
        let cfg = to_config(deref(cfg, "cfg")?)?;
        let out = out_ptr(out, "out")?;
        let observed: KSpaceData = k.inner.clone().retag();
        *out = boxed(SraarReconstruction {
            inner: sraar::solvers::reconstruct(&observed, &cfg)?,
        });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sraar_reconstruction_free(rec: *mut SraarReconstruction) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// New handle holding a copy of the reconstructed image.
#[no_mangle]
pub unsafe extern "C" fn sraar_reconstruction_image(
    rec: *const SraarReconstruction,
    out: *mut *mut SraarArray,
) -> SraarStatus {
    guard(|| {
        let r = deref(rec, "reconstruction")?;
        *out_ptr(out, "out")? = boxed(SraarArray {
            inner: r.inner.image.clone(),
        });
        Ok(())
    })
}

/// New handle holding a copy of the estimated trajectory.
#[no_mangle]
pub unsafe extern "C" fn sraar_reconstruction_trajectory(
    rec: *const SraarReconstruction,
    out: *mut *mut SraarTrajectory,
) -> SraarStatus {
    guard(|| {
        let r = deref(rec, "reconstruction")?;
        *out_ptr(out, "out")? = boxed(SraarTrajectory {
            inner: r.inner.estimate.trajectory.clone(),
        });
        Ok(())
    })
}

/// The l1 budget the result was produced with (NaN for a null handle).
#[no_mangle]
pub unsafe extern "C" fn sraar_reconstruction_budget(rec: *const SraarReconstruction) -> f64 {
    rec.as_ref().map_or(f64::NAN, |r| r.inner.budget)
}

/// Number of trace records (one per iteration).
#[no_mangle]
pub unsafe extern "C" fn sraar_reconstruction_trace_len(rec: *const SraarReconstruction) -> usize {
    rec.as_ref().map_or(0, |r| r.inner.trace.len())
}

/// Copies per-iteration data misfit and l1 norm into buffers of at least
/// `len` doubles. Either buffer may be null.
#[no_mangle]
pub unsafe extern "C" fn sraar_reconstruction_trace_copy(
    rec: *const SraarReconstruction,
    misfit: *mut f64,
    l1: *mut f64,
    len: usize,
) -> SraarStatus {
    guard(|| {
        let r = deref(rec, "reconstruction")?;
        let records = &r.inner.trace.records;
        if len < records.len() {
            return Err(fail(
                SraarStatus::BufferTooSmall,
                format!("buffer holds {len} records, need {}", records.len()),
            ));
        }
        for (i, rec) in records.iter().enumerate() {
            if !misfit.is_null() {
                *misfit.add(i) = rec.misfit;
            }
            if !l1.is_null() {
                *l1.add(i) = rec.l1;
            }
        }
        Ok(())
    })
}

/// Relative RMSE and PSNR (dB, +inf when exact) of `x` against `gt`, on
/// pixel moduli.
#[no_mangle]
pub unsafe extern "C" fn sraar_image_metrics(
    x: *const SraarArray,
    gt: *const SraarArray,
    rmse_rel: *mut f64,
    psnr_db: *mut f64,
) -> SraarStatus {
    guard(|| {
        let x = deref(x, "x")?;
        let gt = deref(gt, "gt")?;
        let m = sraar::metrics::image_metrics(&x.inner, &gt.inner)?;
        *out_ptr(rmse_rel, "rmse_rel")? = m.rmse_rel;
        *out_ptr(psnr_db, "psnr_db")? = m.psnr_db;
        Ok(())
    })
}
