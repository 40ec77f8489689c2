//! Projections onto the sparse domain `S1 = {m : ||W m||_1 <= C}` and the
//! Fourier domain `S2 = {m : M_obs = T_beta F m, beta in D_beta}`.
//!
//! `P1` is exact: with orthonormal `W` and unitary `T_beta F` the data-fit
//! problem reduces to projecting the wavelet coefficients onto an l1 ball.
//! `P2` is approximate: every readout line of the observation is treated as
//! a navigator and matched against the corresponding line of the current
//! k-space estimate.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{
    ComplexImage, Displacement, FrequencyGrid, KSpaceData, MotionBounds, MotionTrajectory,
    ReconConfig,
};
use crate::motion::{invert_translation, LineWeights};
use crate::transforms::{dft2, haar_forward_levels, haar_inverse, idft2};

pub const DEFAULT_GRID_STEP: f64 = 0.25;

/// Refinement stops once the parabolic bracket is narrower than this (px).
const REFINE_TOL: f64 = 1e-7;
const MAX_REFINE_ROUNDS: usize = 200;

/// Soft threshold `tau` that brings `sum max(|z| - tau, 0)` down to
/// `radius`. Returns 0 when the moduli already fit.
pub fn l1_ball_threshold(moduli: &[f64], radius: f64) -> f64 {
    let total: f64 = moduli.iter().sum();
    if total <= radius {
        return 0.0;
    }
    let mut sorted = moduli.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if u > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    tau.max(0.0)
}

/// Projects complex coefficients onto the l1 ball of the given radius in
/// place. Phases of surviving coefficients are preserved.
pub fn project_l1_ball(coeffs: &mut [Complex64], radius: f64) {
    if radius <= 0.0 {
        coeffs.iter_mut().for_each(|z| *z = Complex64::default());
        return;
    }
    let moduli: Vec<f64> = coeffs.iter().map(|z| z.norm()).collect();
    let tau = l1_ball_threshold(&moduli, radius);
    if tau == 0.0 {
        return;
    }
    for (z, m) in coeffs.iter_mut().zip(moduli) {
        *z = if m > tau {
            *z * ((m - tau) / m)
        } else {
            Complex64::default()
        };
    }
}

/// `P1`: `W^-1 proj_{||.||_1 <= c}(W m)` with full-depth Haar.
pub fn project_sparse(m: &ComplexImage, c: f64) -> ComplexImage {
    project_sparse_levels(m, c, None).expect("full-depth haar is always valid")
}

/// `P1` at a configurable Haar depth. Feasible inputs are returned as-is.
pub fn project_sparse_levels(
    m: &ComplexImage,
    c: f64,
    levels: Option<usize>,
) -> Result<ComplexImage> {
    let mut w = haar_forward_levels(m, levels)?;
    let l1: f64 = w.data().iter().map(|z| z.norm()).sum();
    if l1 <= c {
        return Ok(m.clone());
    }
    project_l1_ball(w.data_mut(), c);
    Ok(haar_inverse(&w))
}

/// Result of matching one observed readout line against its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineShift {
    pub displacement: Displacement,
    /// `|sum obs conj(ref) ramp| / sum |obs| |ref|`, in `[0, 1]`.
    pub score: f64,
}

/// Cross-spectrum of one line pair evaluated as a function of `beta_x`.
struct CrossSpectrum<'a> {
    products: Vec<Complex64>,
    grid: &'a FrequencyGrid,
}

impl CrossSpectrum<'_> {
    fn at(&self, beta_x: f64) -> Complex64 {
        // exp(i 2 pi coord(c) beta_x) advanced by a constant phasor per
        // sample; the accumulated rounding stays far below the refinement
        // tolerance for the sizes in use.
        let step = Complex64::from_polar(1.0, 2.0 * PI * beta_x / self.grid.size() as f64);
        let mut phasor = Complex64::from_polar(1.0, 2.0 * PI * self.grid.coord_unchecked(0) * beta_x);
        let mut acc = Complex64::default();
        for p in &self.products {
            acc += p * phasor;
            phasor *= step;
        }
        acc
    }

    fn objective(&self, beta_x: f64) -> f64 {
        self.at(beta_x).norm()
    }
}

/// Coarse candidates on `[-bound, bound]`, ordered by increasing magnitude so
/// ties resolve toward the smaller displacement.
fn search_grid(bound: f64, step: f64) -> Vec<f64> {
    if bound <= 0.0 {
        return vec![0.0];
    }
    let k_max = (bound / step + 1e-9).floor() as i64;
    let mut pts = vec![0.0];
    for k in 1..=k_max {
        let v = (k as f64 * step).min(bound);
        pts.push(v);
        pts.push(-v);
    }
    if (k_max as f64 * step) < bound - 1e-12 {
        pts.push(bound);
        pts.push(-bound);
    }
    pts
}

/// Maximizes `J` on a bounded interval: coarse scan, then successive
/// parabolic refinement with a halving bracket.
fn maximize_bounded(f: impl Fn(f64) -> f64, bound: f64, step: f64) -> f64 {
    let grid = search_grid(bound, step);
    let mut best = grid[0];
    let mut best_val = f(best);
    for &x in &grid[1..] {
        let v = f(x);
        if v > best_val {
            best = x;
            best_val = v;
        }
    }
    if bound <= 0.0 {
        return 0.0;
    }

    let eval = |x: f64| {
        if x < -bound || x > bound {
            f64::NEG_INFINITY
        } else {
            f(x)
        }
    };
    let mut h = step;
    let mut x = best;
    let mut fx = best_val;
    for _ in 0..MAX_REFINE_ROUNDS {
        if h < REFINE_TOL {
            break;
        }
        let fm = eval(x - h);
        let fp = eval(x + h);
        if fm > fx && fm >= fp {
            x -= h;
            fx = fm;
            continue;
        }
        if fp > fx {
            x += h;
            fx = fp;
            continue;
        }
        let denom = fm - 2.0 * fx + fp;
        if denom.is_finite() && denom < 0.0 {
            let delta = 0.5 * h * (fm - fp) / denom;
            let cand = (x + delta).clamp(-bound, bound);
            let fc = f(cand);
            if fc > fx {
                x = cand;
                fx = fc;
            }
        }
        h *= 0.5;
    }
    x
}

/// Phase-encode displacement from the cross-spectrum phase.
///
/// On line `k_y` the displacement only enters as the constant phase
/// `2 pi k_y beta_y`, so it is determined modulo `1 / |k_y|`. The
/// minimum-norm alias is returned; if it lies outside the bound, the better
/// of the two endpoints is used. On the DC row the phase carries no
/// information and zero is returned.
fn phase_encode_shift(phase: f64, ky: f64, bound: f64) -> f64 {
    if ky == 0.0 {
        return 0.0;
    }
    let principal = -phase / (2.0 * PI * ky);
    if principal.abs() <= bound {
        return principal;
    }
    let fit = |y: f64| (phase + 2.0 * PI * ky * y).cos();
    if fit(bound) >= fit(-bound) {
        bound
    } else {
        -bound
    }
}

/// Matched-filter estimate of the rigid shift between an observed line and
/// its motion-free reference.
pub fn estimate_line_shift_with_step(
    observed: &[Complex64],
    reference: &[Complex64],
    ky: f64,
    grid: &FrequencyGrid,
    bounds: &MotionBounds,
    step: f64,
) -> LineShift {
    debug_assert_eq!(observed.len(), reference.len());
    let energy: f64 = observed
        .iter()
        .zip(reference)
        .map(|(o, r)| o.norm() * r.norm())
        .sum();
    if energy == 0.0 {
        return LineShift {
            displacement: Displacement::ZERO,
            score: 0.0,
        };
    }
    let spectrum = CrossSpectrum {
        products: observed
            .iter()
            .zip(reference)
            .map(|(o, r)| o * r.conj())
            .collect(),
        grid,
    };
    let beta_x = maximize_bounded(|b| spectrum.objective(b), bounds.max_abs_x(), step);
    let peak = spectrum.at(beta_x);
    let beta_y = phase_encode_shift(peak.arg(), ky, bounds.max_abs_y());
    LineShift {
        displacement: Displacement::new(beta_x, beta_y),
        score: (peak.norm() / energy).clamp(0.0, 1.0),
    }
}

pub fn estimate_line_shift(
    observed: &[Complex64],
    reference: &[Complex64],
    ky: f64,
    grid: &FrequencyGrid,
    bounds: &MotionBounds,
) -> LineShift {
    estimate_line_shift_with_step(observed, reference, ky, grid, bounds, DEFAULT_GRID_STEP)
}

/// Per-line motion estimate produced by `P2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionEstimate {
    pub trajectory: MotionTrajectory,
    pub scores: Vec<f64>,
}

/// `|observed| * sgn(predicted)` with `sgn(0) = 0`.
pub fn replace_amplitude(observed: &KSpaceData, predicted: &KSpaceData) -> KSpaceData {
    let data = observed
        .data()
        .iter()
        .zip(predicted.data())
        .map(|(o, p)| {
            let m = p.norm();
            if m == 0.0 {
                Complex64::default()
            } else {
                p * (o.norm() / m)
            }
        })
        .collect();
    KSpaceData::from_vec(observed.size(), data).expect("same shape as observed")
}

/// The alias `value + n * period` inside `[-bound, bound]` closest to
/// `target`, if any.
fn nearest_alias(value: f64, period: f64, bound: f64, target: f64) -> Option<f64> {
    let lo = ((-bound - value) / period).ceil() as i64;
    let hi = ((bound - value) / period).floor() as i64;
    (lo..=hi)
        .map(|k| value + k as f64 * period)
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

/// Resolves the per-line `beta_y` aliasing by continuity, walking outward
/// from the DC row, and fills lines that carry no information.
fn unwrap_trajectory(
    shifts: &[LineShift],
    grid: &FrequencyGrid,
    bounds: &MotionBounds,
) -> Vec<Displacement> {
    let n = shifts.len();
    let dc = grid.dc_index();
    let mut out: Vec<Displacement> = shifts.iter().map(|s| s.displacement).collect();
    let walk = |out: &mut Vec<Displacement>, order: &mut dyn Iterator<Item = usize>, step: isize| {
        for r in order {
            let prev = out[(r as isize - step) as usize];
            if shifts[r].score == 0.0 {
                out[r] = prev;
                continue;
            }
            let ky = grid.coord_unchecked(r);
            let period = 1.0 / ky.abs();
            if let Some(y) = nearest_alias(out[r].y, period, bounds.max_abs_y(), prev.y) {
                out[r].y = y;
            }
        }
    };
    walk(&mut out, &mut (dc + 1..n), 1);
    walk(&mut out, &mut (0..dc).rev(), -1);
    // beta_y is unidentifiable on the DC row.
    let above = out[dc - 1].y;
    let below = if dc + 1 < n { out[dc + 1].y } else { above };
    out[dc].y = 0.5 * (above + below);
    if shifts[dc].score == 0.0 {
        out[dc].x = 0.5 * (out[dc - 1].x + if dc + 1 < n { out[dc + 1].x } else { out[dc - 1].x });
    }
    out
}

/// Brings a re-centred trajectory back into the box. Along `y` an in-bounds
/// alias (same data on that line) is preferred over clamping.
fn confine(lines: &mut [Displacement], grid: &FrequencyGrid, bounds: &MotionBounds) {
    for (r, d) in lines.iter_mut().enumerate() {
        d.x = d.x.clamp(-bounds.max_abs_x(), bounds.max_abs_x());
        if d.y.abs() > bounds.max_abs_y() {
            let ky = grid.coord_unchecked(r);
            d.y = if ky != 0.0 {
                nearest_alias(d.y, 1.0 / ky.abs(), bounds.max_abs_y(), d.y)
                    .unwrap_or_else(|| d.y.clamp(-bounds.max_abs_y(), bounds.max_abs_y()))
            } else {
                d.y.clamp(-bounds.max_abs_y(), bounds.max_abs_y())
            };
        }
    }
}

/// Estimates the per-line motion between `observed` and the k-space of `m`.
pub fn estimate_motion(
    m: &ComplexImage,
    observed: &KSpaceData,
    cfg: &ReconConfig,
) -> Result<MotionEstimate> {
    m.ensure_same_shape(observed)?;
    let grid = FrequencyGrid::for_array(observed);
    let predicted = dft2(m);
    let reference = if cfg.amplitude_replacement {
        replace_amplitude(observed, &predicted)
    } else {
        predicted
    };
    let shifts: Vec<LineShift> = (0..observed.rows())
        .into_par_iter()
        .map(|r| {
            estimate_line_shift_with_step(
                observed.row(r),
                reference.row(r),
                grid.coord_unchecked(r),
                &grid,
                &cfg.bounds,
                cfg.grid_step,
            )
        })
        .collect();

    let lines = unwrap_trajectory(&shifts, &grid, &cfg.bounds);
    let weights = LineWeights::from_kspace(observed);
    let mut centred = weights.remove_mean(&MotionTrajectory::new(lines)?)?;
    confine(centred.lines_mut(), &grid, &cfg.bounds);
    Ok(MotionEstimate {
        trajectory: centred,
        scores: shifts.iter().map(|s| s.score).collect(),
    })
}

/// `P2`: the image consistent with `observed` under the motion estimated
/// against `m`.
pub fn project_fourier(
    m: &ComplexImage,
    observed: &KSpaceData,
    cfg: &ReconConfig,
) -> Result<(ComplexImage, MotionEstimate)> {
    let estimate = estimate_motion(m, observed, cfg)?;
    let grid = FrequencyGrid::for_array(observed);
    let corrected = invert_translation(observed, &estimate.trajectory, &grid)?;
    Ok((idft2(&corrected), estimate))
}
