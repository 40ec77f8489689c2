//! Core data types: square complex arrays in the image and frequency
//! domains, the centered frequency grid, per-line motion trajectories and
//! reconstruction configuration.
//!
//! Readout lines are rows. Row `r` holds a single phase-encode coordinate
//! `k_y = coord(r)` and the readout coordinate `k_x = coord(c)` varies along
//! the row. With `coord(i) = (i - N/2) / N` a displacement of one pixel is
//! exactly one cyclic sample shift of the image.

use std::marker::PhantomData;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MIN_SIZE: usize = 4;

/// Checks that `n` is a power of two and at least [`MIN_SIZE`].
pub fn validate_size(n: usize) -> Result<()> {
    if n < MIN_SIZE || !n.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "size {n} must be a power of two and at least {MIN_SIZE}"
        )));
    }
    Ok(())
}

/// Marker for image-domain arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageDomain {}

/// Marker for (centered) k-space arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyDomain {}

/// An `N x N` row-major complex array tagged with its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareArray<D> {
    n: usize,
    data: Vec<Complex64>,
    _domain: PhantomData<D>,
}

/// Image-domain array (m, m-hat, m-tilde).
pub type ComplexImage = SquareArray<ImageDomain>;

/// Centered k-space array; DC sits at `(N/2, N/2)`.
pub type KSpaceData = SquareArray<FrequencyDomain>;

impl<D> SquareArray<D> {
    pub fn new(n: usize, fill: Complex64) -> Result<Self> {
        validate_size(n)?;
        Ok(Self {
            n,
            data: vec![fill; n * n],
            _domain: PhantomData,
        })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, Complex64::new(0.0, 0.0))
    }

    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Result<Self> {
        validate_size(n)?;
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} samples for a {n}x{n} array, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self {
            n,
            data,
            _domain: PhantomData,
        })
    }

    pub fn from_real(n: usize, values: &[f64]) -> Result<Self> {
        Self::from_vec(n, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Builds an array by evaluating `f(row, col)` at every sample.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        validate_size(n)?;
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        Self::from_vec(n, data)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.n + col] = value;
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Complex64] {
        &mut self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn rows_iter(&self) -> std::slice::ChunksExact<'_, Complex64> {
        self.data.chunks_exact(self.n)
    }

    /// Reinterprets the samples as living in another domain.
    pub fn retag<E>(self) -> SquareArray<E> {
        SquareArray {
            n: self.n,
            data: self.data,
            _domain: PhantomData,
        }
    }

    pub fn ensure_same_shape<E>(&self, other: &SquareArray<E>) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "shape mismatch: {0}x{0} vs {1}x{1}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    /// Frobenius (l2) norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `self + scale * other`, element-wise.
    pub fn axpy(&self, scale: f64, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b * scale)
            .collect();
        Self {
            n: self.n,
            data,
            _domain: PhantomData,
        }
    }

    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| z * scale).collect(),
            _domain: PhantomData,
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x * a + y * b)
                .collect(),
            _domain: PhantomData,
        }
    }

    /// Frobenius distance to `other`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest element-wise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Creates an `n x n` image filled with `fill`.
pub fn new_complex_image(n: usize, fill: Complex64) -> Result<ComplexImage> {
    ComplexImage::new(n, fill)
}

/// Centered normalized frequency axis, identical along rows and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyGrid {
    size: usize,
}

impl FrequencyGrid {
    pub fn new(size: usize) -> Result<Self> {
        validate_size(size)?;
        Ok(Self { size })
    }

    pub fn for_array<D>(array: &SquareArray<D>) -> Self {
        Self { size: array.size() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dc_index(&self) -> usize {
        self.size / 2
    }

    /// `(index - N/2) / N` in cycles per pixel.
    pub fn coord(&self, index: usize) -> Result<f64> {
        if index >= self.size {
            return Err(Error::Bounds {
                index,
                size: self.size,
            });
        }
        Ok(self.coord_unchecked(index))
    }

    #[inline]
    pub(crate) fn coord_unchecked(&self, index: usize) -> f64 {
        (index as f64 - (self.size / 2) as f64) / self.size as f64
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.size).map(|i| self.coord_unchecked(i)).collect()
    }
}

pub fn frequency_coord(grid: &FrequencyGrid, index: usize) -> Result<f64> {
    grid.coord(index)
}

/// One in-plane displacement in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Displacement {
    pub x: f64,
    pub y: f64,
}

impl Displacement {
    pub const ZERO: Displacement = Displacement { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl std::ops::Neg for Displacement {
    type Output = Displacement;

    fn neg(self) -> Displacement {
        Displacement::new(-self.x, -self.y)
    }
}

impl std::ops::Add for Displacement {
    type Output = Displacement;

    fn add(self, rhs: Displacement) -> Displacement {
        Displacement::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Displacement {
    type Output = Displacement;

    fn sub(self, rhs: Displacement) -> Displacement {
        Displacement::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// One displacement per readout line, in acquisition (row) order.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionTrajectory {
    lines: Vec<Displacement>,
}

impl MotionTrajectory {
    pub fn new(lines: Vec<Displacement>) -> Result<Self> {
        if let Some(i) = lines
            .iter()
            .position(|d| !d.x.is_finite() || !d.y.is_finite())
        {
            return Err(Error::Dimension(format!(
                "trajectory entry {i} is not finite"
            )));
        }
        Ok(Self { lines })
    }

    pub fn zeros(n_lines: usize) -> Self {
        Self {
            lines: vec![Displacement::ZERO; n_lines],
        }
    }

    /// The same displacement on every line (a rigid global shift).
    pub fn uniform(n_lines: usize, d: Displacement) -> Self {
        Self {
            lines: vec![d; n_lines],
        }
    }

    pub fn from_components(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Dimension(format!(
                "component lengths differ: {} vs {}",
                xs.len(),
                ys.len()
            )));
        }
        Self::new(
            xs.iter()
                .zip(ys)
                .map(|(&x, &y)| Displacement::new(x, y))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn lines(&self) -> &[Displacement] {
        &self.lines
    }

    pub fn get(&self, line: usize) -> Displacement {
        self.lines[line]
    }

    pub fn xs(&self) -> Vec<f64> {
        self.lines.iter().map(|d| d.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.lines.iter().map(|d| d.y).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            lines: self.lines.iter().map(|&d| -d).collect(),
        }
    }

    /// Element-wise sum of two trajectories of equal length.
    pub fn added(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "trajectory lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self {
            lines: self
                .lines
                .iter()
                .zip(&other.lines)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn offset(&self, d: Displacement) -> Self {
        Self {
            lines: self.lines.iter().map(|&l| l + d).collect(),
        }
    }

    pub fn max_abs(&self) -> Displacement {
        self.lines.iter().fold(Displacement::ZERO, |acc, d| {
            Displacement::new(acc.x.max(d.x.abs()), acc.y.max(d.y.abs()))
        })
    }

    pub(crate) fn lines_mut(&mut self) -> &mut [Displacement] {
        &mut self.lines
    }
}

/// Box-shaped feasible motion domain, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionBounds {
    max_abs_x: f64,
    max_abs_y: f64,
}

impl MotionBounds {
    pub fn new(max_abs_x: f64, max_abs_y: f64) -> Result<Self> {
        for (axis, v) in [("x", max_abs_x), ("y", max_abs_y)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "motion bound along {axis} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self {
            max_abs_x,
            max_abs_y,
        })
    }

    pub fn symmetric(max_abs: f64) -> Result<Self> {
        Self::new(max_abs, max_abs)
    }

    pub fn max_abs_x(&self) -> f64 {
        self.max_abs_x
    }

    pub fn max_abs_y(&self) -> f64 {
        self.max_abs_y
    }

    pub fn contains(&self, d: Displacement) -> bool {
        d.x.abs() <= self.max_abs_x && d.y.abs() <= self.max_abs_y
    }

    pub fn clamp(&self, d: Displacement) -> Displacement {
        Displacement::new(
            d.x.clamp(-self.max_abs_x, self.max_abs_x),
            d.y.clamp(-self.max_abs_y, self.max_abs_y),
        )
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.max_abs_x * factor, self.max_abs_y * factor)
    }
}

impl Default for MotionBounds {
    fn default() -> Self {
        Self {
            max_abs_x: 5.0,
            max_abs_y: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Error reduction: alternating projections `P2 P1`.
    Er,
    /// Sparse relaxed averaged alternating reflections.
    Sraar,
}

/// The l1 budget `C` of the sparse domain.
#[derive(Debug, Clone, PartialEq)]
pub enum SparsityBudget {
    Fixed(f64),
    /// Fractions of the initial image's wavelet l1 norm, each in (0, 1).
    Grid(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconConfig {
    pub solver: SolverKind,
    pub theta: f64,
    pub iterations: usize,
    pub budget: SparsityBudget,
    pub bounds: MotionBounds,
    pub amplitude_replacement: bool,
    /// Coarse search step of the per-line estimator, in pixels.
    pub grid_step: f64,
    /// Haar decomposition depth; `None` means full depth.
    pub wavelet_levels: Option<usize>,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            solver: SolverKind::Sraar,
            theta: 0.9,
            iterations: 100,
            budget: SparsityBudget::Grid(vec![0.3, 0.5, 0.7]),
            bounds: MotionBounds::default(),
            amplitude_replacement: true,
            grid_step: 0.25,
            wavelet_levels: None,
        }
    }
}

impl ReconConfig {
    pub fn with_budget(c: f64) -> Self {
        Self {
            budget: SparsityBudget::Fixed(c),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!(
                "theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return Err(Error::Config(format!(
                "grid step must be positive, got {}",
                self.grid_step
            )));
        }
        match &self.budget {
            SparsityBudget::Fixed(c) => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::Config(format!(
                        "sparsity budget must be non-negative, got {c}"
                    )));
                }
            }
            SparsityBudget::Grid(fractions) => {
                if fractions.is_empty() {
                    return Err(Error::Config("sparsity grid is empty".into()));
                }
                if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
                    return Err(Error::Config(format!(
                        "sparsity grid fraction {f} must lie in (0, 1)"
                    )));
                }
            }
        }
        if self.wavelet_levels == Some(0) {
            return Err(Error::Config("wavelet levels must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn fixed_budget(&self) -> Result<f64> {
        match self.budget {
            SparsityBudget::Fixed(c) => Ok(c),
            SparsityBudget::Grid(_) => Err(Error::Config(
                "this solver needs a fixed sparsity budget; use tune_sparsity_budget for a grid"
                    .into(),
            )),
        }
    }
}
