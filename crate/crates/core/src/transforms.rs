//! Unitary centered 2D DFT and orthonormal multi-level 2D Haar transform.
//!
//! Both transforms are isometries, so the l1-ball projection in the wavelet
//! domain is the exact data-fit minimizer under `T_beta F`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexImage, KSpaceData, SquareArray};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// Centered unitary 1D transform of every row, in place.
///
/// The origin of both domains sits at index `N/2`, so each row is rotated by
/// `N/2` before and after the FFT (fftshift and ifftshift coincide for even
/// `N`).
fn transform_rows(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let scale = 1.0 / (n as f64).sqrt();
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, row| {
            row.rotate_left(n / 2);
            fft.process_with_scratch(row, scratch);
            row.rotate_left(n / 2);
            for v in row.iter_mut() {
                *v *= scale;
            }
        },
    );
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); n * n];
    for r in 0..n {
        for c in 0..n {
            out[c * n + r] = data[r * n + c];
        }
    }
    out
}

fn dft2_raw(data: &[Complex64], n: usize, dir: Direction) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let fft = match dir {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    };
    let mut work = data.to_vec();
    transform_rows(&mut work, n, &fft);
    let mut cols = transpose(&work, n);
    transform_rows(&mut cols, n, &fft);
    transpose(&cols, n)
}

/// Forward unitary centered 2D DFT. DC lands at `(N/2, N/2)`.
pub fn dft2(img: &ComplexImage) -> KSpaceData {
    let n = img.size();
    KSpaceData::from_vec(n, dft2_raw(img.data(), n, Direction::Forward))
        .expect("shape preserved by dft2")
}

/// Exact inverse of [`dft2`].
pub fn idft2(ksp: &KSpaceData) -> ComplexImage {
    let n = ksp.size();
    ComplexImage::from_vec(n, dft2_raw(ksp.data(), n, Direction::Inverse))
        .expect("shape preserved by idft2")
}

/// Multi-level 2D Haar coefficients in the usual pyramid layout: after `L`
/// levels the top-left `N/2^L` square holds the approximation band.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    n: usize,
    levels: usize,
    data: Vec<Complex64>,
}

impl WaveletCoeffs {
    pub fn from_vec(n: usize, levels: usize, data: Vec<Complex64>) -> Result<Self> {
        crate::grid::validate_size(n)?;
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} coefficients, got {}",
                n * n,
                data.len()
            )));
        }
        if levels == 0 || levels > max_levels(n) {
            return Err(Error::Config(format!(
                "haar depth {levels} invalid for size {n} (max {})",
                max_levels(n)
            )));
        }
        Ok(Self { n, levels, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Full decomposition depth, `log2(n)`.
pub fn max_levels(n: usize) -> usize {
    n.trailing_zeros() as usize
}

fn resolve_levels(n: usize, levels: Option<usize>) -> Result<usize> {
    let max = max_levels(n);
    match levels {
        None => Ok(max),
        Some(l) if l >= 1 && l <= max => Ok(l),
        Some(l) => Err(Error::Config(format!(
            "haar depth {l} invalid for size {n} (max {max})"
        ))),
    }
}

/// One orthonormal analysis step on `len` strided samples.
fn haar_step_forward(buf: &mut [Complex64], tmp: &mut [Complex64]) {
    let half = buf.len() / 2;
    for i in 0..half {
        let a = buf[2 * i];
        let b = buf[2 * i + 1];
        tmp[i] = (a + b) * FRAC_1_SQRT_2;
        tmp[half + i] = (a - b) * FRAC_1_SQRT_2;
    }
    buf.copy_from_slice(&tmp[..buf.len()]);
}

fn haar_step_inverse(buf: &mut [Complex64], tmp: &mut [Complex64]) {
    let half = buf.len() / 2;
    for i in 0..half {
        let s = buf[i];
        let d = buf[half + i];
        tmp[2 * i] = (s + d) * FRAC_1_SQRT_2;
        tmp[2 * i + 1] = (s - d) * FRAC_1_SQRT_2;
    }
    buf.copy_from_slice(&tmp[..buf.len()]);
}

/// In-place separable Haar analysis of a row-major `n x n` block.
/// Works for any power-of-two `n`, including 2.
pub(crate) fn haar2_forward_in_place(data: &mut [Complex64], n: usize, levels: usize) {
    let mut line = vec![Complex64::default(); n];
    let mut tmp = vec![Complex64::default(); n];
    let mut size = n;
    for _ in 0..levels {
        for r in 0..size {
            haar_step_forward(&mut data[r * n..r * n + size], &mut tmp);
        }
        for c in 0..size {
            for r in 0..size {
                line[r] = data[r * n + c];
            }
            haar_step_forward(&mut line[..size], &mut tmp);
            for r in 0..size {
                data[r * n + c] = line[r];
            }
        }
        size /= 2;
    }
}

pub(crate) fn haar2_inverse_in_place(data: &mut [Complex64], n: usize, levels: usize) {
    let mut line = vec![Complex64::default(); n];
    let mut tmp = vec![Complex64::default(); n];
    let mut size = n >> (levels - 1);
    for _ in 0..levels {
        for c in 0..size {
            for r in 0..size {
                line[r] = data[r * n + c];
            }
            haar_step_inverse(&mut line[..size], &mut tmp);
            for r in 0..size {
                data[r * n + c] = line[r];
            }
        }
        for r in 0..size {
            haar_step_inverse(&mut data[r * n..r * n + size], &mut tmp);
        }
        size *= 2;
    }
}

/// Orthonormal Haar analysis; `levels = None` decomposes to a single
/// approximation coefficient.
pub fn haar_forward_levels(img: &ComplexImage, levels: Option<usize>) -> Result<WaveletCoeffs> {
    let n = img.size();
    let levels = resolve_levels(n, levels)?;
    let mut data = img.data().to_vec();
    haar2_forward_in_place(&mut data, n, levels);
    Ok(WaveletCoeffs { n, levels, data })
}

/// Full-depth orthonormal Haar analysis.
pub fn haar_forward(img: &ComplexImage) -> WaveletCoeffs {
    haar_forward_levels(img, None).expect("full depth is always valid")
}

pub fn haar_inverse(coeffs: &WaveletCoeffs) -> ComplexImage {
    let mut data = coeffs.data.clone();
    haar2_inverse_in_place(&mut data, coeffs.n, coeffs.levels);
    ComplexImage::from_vec(coeffs.n, data).expect("shape preserved by haar_inverse")
}

/// Sum of complex moduli of all coefficients.
pub fn l1_norm(coeffs: &WaveletCoeffs) -> f64 {
    coeffs.data.iter().map(|z| z.norm()).sum()
}

/// `||W m||_1` for the Haar transform at the given depth.
pub fn wavelet_l1(img: &ComplexImage, levels: Option<usize>) -> Result<f64> {
    Ok(l1_norm(&haar_forward_levels(img, levels)?))
}

/// Hermitian inner product `sum a * conj(b)`.
pub fn inner<D>(a: &SquareArray<D>, b: &SquareArray<D>) -> Complex64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y.conj()).sum()
}
