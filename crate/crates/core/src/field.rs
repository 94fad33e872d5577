//! Complex samples of a function on a [`Grid`].

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Row-major complex samples on a grid; row is the `y` index, column the `x`
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidArgument("field contains non-finite samples".into()));
        }
        Ok(ComplexField { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ComplexField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        ComplexField { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f(z)` at every lattice point.
    pub fn from_fn(grid: Grid, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = grid.points_iter().map(f).collect();
        ComplexField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.grid.points() + col]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ComplexField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ComplexField { grid: self.grid, values }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// `z -> -z` through the lattice involution of [`Grid::reflect_index`].
    pub fn reflect(&self) -> Self {
        let values = (0..self.values.len()).map(|i| self.values[self.grid.reflect_index(i)]).collect();
        ComplexField { grid: self.grid, values }
    }

    /// `z -> z̄` through [`Grid::mirror_index`].
    pub fn mirror(&self) -> Self {
        let values = (0..self.values.len()).map(|i| self.values[self.grid.mirror_index(i)]).collect();
        ComplexField { grid: self.grid, values }
    }

    /// Discrete `L²` norm with the area weight `h²`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_area()).sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `‖self − other‖₂ / ‖other‖₂`; zero when both vanish.
    pub fn rel_l2_error(&self, reference: &Self) -> f64 {
        let diff = (self - reference).l2_norm();
        let denom = reference.l2_norm();
        if denom == 0.0 {
            diff
        } else {
            diff / denom
        }
    }

    /// Relative `L²` error restricted to the disk `|z| ≤ radius`.
    pub fn rel_l2_error_within(&self, reference: &Self, radius: f64) -> f64 {
        assert_eq!(self.grid, reference.grid);
        let n = self.grid.points();
        let (mut num, mut den) = (0.0, 0.0);
        for (i, (a, b)) in self.values.iter().zip(&reference.values).enumerate() {
            if self.grid.point(i / n, i % n).norm() <= radius {
                num += (a - b).norm_sqr();
                den += b.norm_sqr();
            }
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.grid, other.grid);
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Rectangle-rule area integral `Σ f h²`.
    pub fn integrate(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_area()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Mean value over the outermost ring of samples.
    pub fn boundary_mean(&self) -> Complex64 {
        let n = self.grid.points();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0usize;
        for row in 0..n {
            for col in 0..n {
                if row == 0 || col == 0 || row == n - 1 || col == n - 1 {
                    acc += self.at(row, col);
                    count += 1;
                }
            }
        }
        acc / count as f64
    }
}

/// The unimodular weight `e_k(z) = exp(k̄z̄ − kz) = exp(−2i Im(kz))`.
#[inline]
pub fn exp_weight(k: Complex64, z: Complex64) -> Complex64 {
    let phase = -2.0 * (k * z).im;
    Complex64::new(phase.cos(), phase.sin())
}

/// Samples `e_k(z)` over the grid at fixed `k`.
pub fn e_k(grid: Grid, k: Complex64) -> ComplexField {
    ComplexField::from_fn(grid, |z| exp_weight(k, z))
}

impl<'a> Add<&'a ComplexField> for &'a ComplexField {
    type Output = ComplexField;
    fn add(self, rhs: &'a ComplexField) -> ComplexField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a ComplexField> for &'a ComplexField {
    type Output = ComplexField;
    fn sub(self, rhs: &'a ComplexField) -> ComplexField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a ComplexField> for &'a ComplexField {
    type Output = ComplexField;
    fn mul(self, rhs: &'a ComplexField) -> ComplexField {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Neg for &ComplexField {
    type Output = ComplexField;
    fn neg(self) -> ComplexField {
        self.map(|v| -v)
    }
}
