//! Uniform square lattices used for both the physical `z` plane and the
//! spectral `k` plane.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest admissible number of points per side.
pub const MIN_POINTS: usize = 16;

/// A corner-anchored square lattice on `[-L, L)²` with `N` points per side.
///
/// Sample `(row, col)` sits at `x = -L + col·h`, `y = -L + row·h` with
/// `h = 2L / N`. The origin is the lattice point `(N/2, N/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    points: usize,
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if points < MIN_POINTS || !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per side must be even and at least {MIN_POINTS}, got {points}"
            )));
        }
        Ok(Grid { half_width, points })
    }

    /// Default physical grid: `L = 8`, `N = 256`.
    pub fn default_z() -> Self {
        Grid { half_width: 8.0, points: 256 }
    }

    /// Default spectral grid: `L = 6`, `N = 128`.
    pub fn default_k() -> Self {
        Grid { half_width: 6.0, points: 128 }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Area element `h²` of the rectangle rule.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Coordinate along one axis for lattice index `i`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    #[inline]
    pub fn point(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.coord(col), self.coord(row))
    }

    /// Iterator over all sample points in row-major order.
    pub fn points_iter(&self) -> impl Iterator<Item = Complex64> + '_ {
        let n = self.points;
        (0..n * n).map(move |idx| self.point(idx / n, idx % n))
    }

    /// Lattice involution `(i, j) -> (N - i mod N, N - j mod N)`, which is
    /// the exact reflection `z -> -z` on every point except the first row and
    /// column.
    #[inline]
    pub fn reflect_index(&self, idx: usize) -> usize {
        let n = self.points;
        let (row, col) = (idx / n, idx % n);
        ((n - row) % n) * n + (n - col) % n
    }

    /// Lattice involution `(i, j) -> (N - i mod N, j)`, the reflection
    /// `z -> z̄` on every row except the first.
    #[inline]
    pub fn mirror_index(&self, idx: usize) -> usize {
        let n = self.points;
        let (row, col) = (idx / n, idx % n);
        ((n - row) % n) * n + col
    }

    /// Index of the lattice point nearest to `z`, if `z` lies inside the grid.
    pub fn nearest_index(&self, z: Complex64) -> Option<usize> {
        let h = self.spacing();
        let col = ((z.re + self.half_width) / h).round();
        let row = ((z.im + self.half_width) / h).round();
        let n = self.points as f64;
        if col < 0.0 || row < 0.0 || col >= n || row >= n {
            return None;
        }
        Some(row as usize * self.points + col as usize)
    }
}
