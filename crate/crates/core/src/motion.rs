//! The translational operator `T_beta`: a per-line phase ramp in k-space.
//!
//! Line `r` acquired while the object sits at `beta[r]` picks up the phase
//! `exp(-i 2 pi (k_x beta_x + k_y beta_y))` on every sample; moduli are
//! untouched. The operator is unitary, `T_0 = I` and `T_beta^-1 = T_-beta`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, Displacement, FrequencyGrid, KSpaceData, MotionTrajectory};
use crate::transforms::idft2;

fn check_lengths(ksp: &KSpaceData, traj: &MotionTrajectory, grid: &FrequencyGrid) -> Result<()> {
    if traj.len() != ksp.rows() {
        return Err(Error::Dimension(format!(
            "trajectory has {} lines but k-space has {} rows",
            traj.len(),
            ksp.rows()
        )));
    }
    if grid.size() != ksp.size() {
        return Err(Error::Dimension(format!(
            "frequency grid of size {} does not match {}x{} k-space",
            grid.size(),
            ksp.size(),
            ksp.size()
        )));
    }
    Ok(())
}

/// Multiplies one readout line by its motion phase ramp.
pub(crate) fn phase_line(
    line: &mut [Complex64],
    ky: f64,
    d: Displacement,
    grid: &FrequencyGrid,
) {
    if d.x == 0.0 && d.y == 0.0 {
        return;
    }
    for (c, v) in line.iter_mut().enumerate() {
        let phase = -2.0 * PI * (grid.coord_unchecked(c) * d.x + ky * d.y);
        *v *= Complex64::from_polar(1.0, phase);
    }
}

fn translate(ksp: &KSpaceData, traj: &MotionTrajectory, grid: &FrequencyGrid, sign: f64) -> KSpaceData {
    let n = ksp.size();
    let mut out = ksp.clone();
    out.data_mut()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(r, line)| {
            let d = traj.get(r);
            let d = Displacement::new(sign * d.x, sign * d.y);
            phase_line(line, grid.coord_unchecked(r), d, grid);
        });
    out
}

/// `T_beta M`.
pub fn apply_translation(
    ksp: &KSpaceData,
    traj: &MotionTrajectory,
    grid: &FrequencyGrid,
) -> Result<KSpaceData> {
    check_lengths(ksp, traj, grid)?;
    Ok(translate(ksp, traj, grid, 1.0))
}

/// `T_beta^-1 M = T_-beta M`.
pub fn invert_translation(
    ksp: &KSpaceData,
    traj: &MotionTrajectory,
    grid: &FrequencyGrid,
) -> Result<KSpaceData> {
    check_lengths(ksp, traj, grid)?;
    Ok(translate(ksp, traj, grid, -1.0))
}

/// The artifact-bearing image `F^-1 M` obtained by ignoring motion.
pub fn naive_reconstruct(ksp: &KSpaceData) -> ComplexImage {
    idft2(ksp)
}

/// Per-line weights used to pin the global-translation gauge.
///
/// A constant displacement on every line only shifts the image, so it can
/// not be identified from the data. Trajectories are compared and
/// re-centred after subtracting a weighted mean. Along the readout axis the
/// weight is the line's k-space energy. Along the phase-encode axis the line
/// only constrains `beta_y` through the phase `2 pi k_y beta_y`, so the
/// energy is scaled by `k_y^2` (zero on the DC row).
#[derive(Debug, Clone, PartialEq)]
pub struct LineWeights {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl LineWeights {
    pub fn uniform(n_lines: usize) -> Self {
        Self {
            x: vec![1.0; n_lines],
            y: vec![1.0; n_lines],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Weights derived from the line energies of `ksp`.
    pub fn from_kspace(ksp: &KSpaceData) -> Self {
        let grid = FrequencyGrid::for_array(ksp);
        let x: Vec<f64> = ksp
            .rows_iter()
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let y = x
            .iter()
            .enumerate()
            .map(|(r, e)| {
                let ky = grid.coord_unchecked(r);
                e * ky * ky
            })
            .collect();
        Self { x, y }
    }

    /// Weighted mean displacement of `traj`; an axis with zero total weight
    /// has mean zero.
    pub fn weighted_mean(&self, traj: &MotionTrajectory) -> Result<Displacement> {
        if traj.len() != self.len() {
            return Err(Error::Dimension(format!(
                "trajectory has {} lines, weights have {}",
                traj.len(),
                self.len()
            )));
        }
        let mean = |w: &[f64], v: &mut dyn Iterator<Item = f64>| {
            let (mut num, mut den) = (0.0, 0.0);
            for (wi, vi) in w.iter().zip(v) {
                num += wi * vi;
                den += wi;
            }
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        };
        let mx = mean(&self.x, &mut traj.lines().iter().map(|d| d.x));
        let my = mean(&self.y, &mut traj.lines().iter().map(|d| d.y));
        Ok(Displacement::new(mx, my))
    }

    /// Subtracts the weighted mean so the trajectory sits in the canonical
    /// gauge.
    pub fn remove_mean(&self, traj: &MotionTrajectory) -> Result<MotionTrajectory> {
        let mean = self.weighted_mean(traj)?;
        Ok(traj.offset(-mean))
    }
}
