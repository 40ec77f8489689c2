//! Ground truth, random motion and noise for synthetic experiments.

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{
    validate_size, ComplexImage, Displacement, FrequencyGrid, KSpaceData, MotionBounds,
    MotionTrajectory,
};
use crate::io;
use crate::motion::{apply_translation, LineWeights};
use crate::transforms::dft2;

/// One phantom ellipse: intensity, semi-axes, centre and rotation (degrees)
/// in the `[-1, 1]^2` field of view with `y` pointing up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub intensity: f64,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub y0: f64,
    pub phi_deg: f64,
}

impl Ellipse {
    const fn new(intensity: f64, a: f64, b: f64, x0: f64, y0: f64, phi_deg: f64) -> Self {
        Self {
            intensity,
            a,
            b,
            x0,
            y0,
            phi_deg,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.phi_deg.to_radians().sin_cos();
        let dx = x - self.x0;
        let dy = y - self.y0;
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

/// The ten ellipses of the Shepp-Logan head phantom with the
/// contrast-enhanced intensities that keep values in `[0, 1]`.
pub const SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse::new(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    Ellipse::new(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    Ellipse::new(-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    Ellipse::new(-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    Ellipse::new(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    Ellipse::new(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    Ellipse::new(0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Centre of pixel `(row, col)` in the `[-1, 1]^2` field of view.
pub fn pixel_center(n: usize, row: usize, col: usize) -> (f64, f64) {
    let n_i = n as i64;
    let x = (2 * col as i64 + 1 - n_i) as f64 / n as f64;
    let y = (n_i - 1 - 2 * row as i64) as f64 / n as f64;
    (x, y)
}

/// Renders a set of ellipses by point sampling at pixel centres.
pub fn render_ellipses(n: usize, ellipses: &[Ellipse]) -> Result<ComplexImage> {
    validate_size(n)?;
    ComplexImage::from_fn(n, |r, c| {
        let (x, y) = pixel_center(n, r, c);
        let v: f64 = ellipses
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity)
            .sum();
        Complex64::new(v, 0.0)
    })
}

pub fn shepp_logan(n: usize) -> Result<ComplexImage> {
    render_ellipses(n, &SHEPP_LOGAN)
}

/// Loads a raw image file and scales it to unit peak modulus.
pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<ComplexImage> {
    let img: ComplexImage = io::read_square(path)?;
    let peak = img.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Format("ground truth image is identically zero".into()));
    }
    Ok(img.scaled(1.0 / peak))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGenConfig {
    pub bounds: MotionBounds,
    /// Moving-average window in lines.
    pub smoothness: usize,
    pub seed: u64,
}

impl TrajectoryGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.smoothness == 0 {
            return Err(Error::Config("trajectory smoothness must be at least 1".into()));
        }
        Ok(())
    }
}

fn smoothed_walk(rng: &mut ChaCha8Rng, n_lines: usize, window: usize) -> Vec<f64> {
    let len = n_lines + window - 1;
    let mut walk = Vec::with_capacity(len);
    let mut pos = 0.0;
    for _ in 0..len {
        let step: f64 = StandardNormal.sample(rng);
        pos += step;
        walk.push(pos);
    }
    walk.windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_increment(v: &[f64]) -> f64 {
    v.windows(2).fold(0.0, |m, w| m.max((w[1] - w[0]).abs()))
}

/// Largest factor that keeps `|v| <= bound` and adjacent increments
/// `<= bound / window`.
fn fit_scale(v: &[f64], bound: f64, window: usize) -> f64 {
    let peak = max_abs(v);
    if bound == 0.0 || peak == 0.0 {
        return 0.0;
    }
    let mut scale = bound / peak;
    let inc = max_increment(v);
    if inc > 0.0 {
        scale = scale.min(bound / window as f64 / inc);
    }
    scale
}

/// Smoothed Gaussian random walk per axis, rescaled into the bounds.
///
/// Each component is a unit-step random walk averaged over `smoothness`
/// lines and scaled by the largest factor satisfying both `|beta| <= bound`
/// and `|beta[r+1] - beta[r]| <= bound / smoothness`.
pub fn generate_trajectory(cfg: &TrajectoryGenConfig, n_lines: usize) -> Result<MotionTrajectory> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let xs = smoothed_walk(&mut rng, n_lines, cfg.smoothness);
    let ys = smoothed_walk(&mut rng, n_lines, cfg.smoothness);
    let sx = fit_scale(&xs, cfg.bounds.max_abs_x(), cfg.smoothness);
    let sy = fit_scale(&ys, cfg.bounds.max_abs_y(), cfg.smoothness);
    let xs: Vec<f64> = xs.iter().map(|v| v * sx).collect();
    let ys: Vec<f64> = ys.iter().map(|v| v * sy).collect();
    MotionTrajectory::from_components(&xs, &ys)
}

/// Moves a trajectory into the canonical gauge of `weights` (zero weighted
/// mean per axis), then shrinks it if needed so it stays inside `bounds`.
///
/// Reconstructions are only defined up to a global shift; placing the
/// simulated truth in the same gauge the estimator uses makes recovered
/// images directly comparable to the ground truth.
pub fn center_trajectory(
    traj: &MotionTrajectory,
    weights: &LineWeights,
    bounds: &MotionBounds,
) -> Result<MotionTrajectory> {
    let centred = weights.remove_mean(traj)?;
    let peak = centred.max_abs();
    let shrink = |limit: f64, peak: f64| if peak > limit { limit / peak } else { 1.0 };
    let sx = shrink(bounds.max_abs_x(), peak.x);
    let sy = shrink(bounds.max_abs_y(), peak.y);
    MotionTrajectory::new(
        centred
            .lines()
            .iter()
            .map(|d| Displacement::new(d.x * sx, d.y * sy))
            .collect(),
    )
}

/// Generates a trajectory for `ground_truth` already placed in the
/// estimator's gauge.
pub fn generate_centered_trajectory(
    cfg: &TrajectoryGenConfig,
    ground_truth: &ComplexImage,
) -> Result<MotionTrajectory> {
    let raw = generate_trajectory(cfg, ground_truth.rows())?;
    let weights = LineWeights::from_kspace(&dft2(ground_truth));
    center_trajectory(&raw, &weights, &cfg.bounds)
}

/// Adds circularly-symmetric white Gaussian noise at the given SNR (dB),
/// measured against the energy of `ksp`.
pub fn add_noise(ksp: &KSpaceData, snr_db: f64, seed: u64) -> Result<KSpaceData> {
    if !snr_db.is_finite() {
        return Err(Error::Config(format!("SNR must be finite, got {snr_db}")));
    }
    let samples = ksp.data().len() as f64;
    let noise_power = ksp.norm_sqr() / 10f64.powf(snr_db / 10.0) / samples;
    let sigma = (noise_power / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ksp.clone();
    for z in out.data_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z += Complex64::new(re, im) * sigma;
    }
    Ok(out)
}

/// Motion-corrupted (and optionally noisy) k-space of `ground_truth`.
pub fn corrupt(
    ground_truth: &ComplexImage,
    traj: &MotionTrajectory,
    noise_snr_db: Option<f64>,
    seed: u64,
) -> Result<KSpaceData> {
    if traj.len() != ground_truth.rows() {
        return Err(Error::Dimension(format!(
            "trajectory has {} lines but the image has {} rows",
            traj.len(),
            ground_truth.rows()
        )));
    }
    let clean = dft2(ground_truth);
    let grid = FrequencyGrid::for_array(&clean);
    let moved = apply_translation(&clean, traj, &grid)?;
    match noise_snr_db {
        Some(snr) => add_noise(&moved, snr, seed),
        None => Ok(moved),
    }
}
