//! Image and trajectory error metrics. Image metrics compare pixel moduli so
//! a global phase picked up during reconstruction is ignored.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, MotionTrajectory};
use crate::motion::LineWeights;
use crate::transforms::wavelet_l1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageMetrics {
    /// `|| |x| - |gt| ||_2 / || gt ||_2`.
    pub rmse_rel: f64,
    /// Root mean square of `|x| - |gt|` over pixels.
    pub rmse_abs: f64,
    /// `20 log10(peak / rmse_abs)` with `peak = max |gt|`; infinite when
    /// the images agree exactly.
    pub psnr_db: f64,
}

impl ImageMetrics {
    pub fn is_exact(&self) -> bool {
        self.rmse_abs == 0.0
    }
}

pub fn image_metrics(x: &ComplexImage, gt: &ComplexImage) -> Result<ImageMetrics> {
    x.ensure_same_shape(gt)?;
    let gt_norm = gt.norm();
    if gt_norm == 0.0 {
        return Err(Error::UndefinedMetric("ground truth is identically zero".into()));
    }
    let peak = gt.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sq_err: f64 = x
        .data()
        .iter()
        .zip(gt.data())
        .map(|(a, b)| (a.norm() - b.norm()).powi(2))
        .sum();
    let rmse_abs = (sq_err / x.data().len() as f64).sqrt();
    let psnr_db = if rmse_abs == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (peak / rmse_abs).log10()
    };
    Ok(ImageMetrics {
        rmse_rel: sq_err.sqrt() / gt_norm,
        rmse_abs,
        psnr_db,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryError {
    pub rms_x: f64,
    pub rms_y: f64,
}

/// Gauge-fixed RMS error per axis.
///
/// The weighted mean of `est - truth` is removed first; the RMS is then taken
/// over the lines with positive weight on that axis, so lines that carry no
/// information about an axis (the DC row for `y`) do not count.
pub fn trajectory_error(
    est: &MotionTrajectory,
    truth: &MotionTrajectory,
    weights: &LineWeights,
) -> Result<TrajectoryError> {
    if est.len() != truth.len() || est.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "trajectory lengths differ: estimate {}, truth {}, weights {}",
            est.len(),
            truth.len(),
            weights.len()
        )));
    }
    let diff = est.added(&truth.negated())?;
    let offset = weights.weighted_mean(&diff)?;
    let rms = |w: &[f64], v: &mut dyn Iterator<Item = f64>| {
        let (mut sum, mut count) = (0.0, 0usize);
        for (wi, vi) in w.iter().zip(v) {
            if *wi > 0.0 {
                sum += vi * vi;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            (sum / count as f64).sqrt()
        }
    };
    Ok(TrajectoryError {
        rms_x: rms(&weights.x, &mut diff.lines().iter().map(|d| d.x - offset.x)),
        rms_y: rms(&weights.y, &mut diff.lines().iter().map(|d| d.y - offset.y)),
    })
}

/// `(||W gt||_1, ||W corrupted||_1, ||W recon||_1)`.
pub fn sparsity_comparison(
    gt: &ComplexImage,
    corrupted: &ComplexImage,
    reconstructed: &ComplexImage,
) -> Result<(f64, f64, f64)> {
    gt.ensure_same_shape(corrupted)?;
    gt.ensure_same_shape(reconstructed)?;
    Ok((
        wavelet_l1(gt, None)?,
        wavelet_l1(corrupted, None)?,
        wavelet_l1(reconstructed, None)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rmse_rel: f64,
    pub psnr_db: f64,
    pub l1_gt: f64,
    pub l1_recon: f64,
    pub l1_corrupted: Option<f64>,
    pub naive_rmse_rel: Option<f64>,
    pub naive_psnr_db: Option<f64>,
    pub trajectory: Option<TrajectoryError>,
    pub iterations: Option<usize>,
    pub wall_time_s: Option<f64>,
}

fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() {
        "exact".to_string()
    } else {
        format!("{v}")
    }
}

impl EvalReport {
    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        writeln!(out, "rmse_rel={}", self.rmse_rel).unwrap();
        writeln!(out, "psnr_db={}", fmt_psnr(self.psnr_db)).unwrap();
        writeln!(out, "l1_gt={}", self.l1_gt).unwrap();
        if let Some(v) = self.l1_corrupted {
            writeln!(out, "l1_corrupted={v}").unwrap();
        }
        writeln!(out, "l1_recon={}", self.l1_recon).unwrap();
        if let Some(v) = self.naive_rmse_rel {
            writeln!(out, "naive_rmse_rel={v}").unwrap();
        }
        if let Some(v) = self.naive_psnr_db {
            writeln!(out, "naive_psnr_db={}", fmt_psnr(v)).unwrap();
        }
        if let Some(t) = self.trajectory {
            writeln!(out, "traj_rms_x={}", t.rms_x).unwrap();
            writeln!(out, "traj_rms_y={}", t.rms_y).unwrap();
        }
        if let Some(v) = self.iterations {
            writeln!(out, "iterations={v}").unwrap();
        }
        if let Some(v) = self.wall_time_s {
            writeln!(out, "wall_time_s={v}").unwrap();
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_key_value())
    }
}

/// Parses the `key=value` report back into a map.
pub fn parse_key_value(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Format(format!("report line without '=': {l}")))
        })
        .collect()
}
