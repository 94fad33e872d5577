//! Spectral derivatives `∂`, `∂̄` and the solid Cauchy transforms `∂̄⁻¹`,
//! `∂⁻¹` on a [`ComplexField`].
//!
//! With `∂ = ½(∂ₓ − i∂ᵧ)` the derivative acts on the discrete Fourier mode
//! with frequencies `(ξₓ, ξᵧ)` as the multiplier `½(iξₓ + ξᵧ)`, and `∂̄` as
//! `½(iξₓ − ξᵧ)`. The Nyquist component of each axis is set to zero so that
//! `∂̄ f̄ = conj(∂f)` holds exactly on the lattice.
//!
//! The Cauchy transforms are rectangle-rule discretizations of
//! `(1/π) ∫ f(ζ) / (z − ζ) dA(ζ)` (and its conjugate kernel), evaluated as an
//! aperiodic convolution through a doubled zero-padded grid. The singular cell
//! `ζ = z` contributes zero; its leading local term, `−(h²/π)∂f` for `∂̄⁻¹`
//! and `−(h²/π)∂̄f` for `∂⁻¹`, is restored by a central difference folded into
//! the four nearest kernel weights (each scaled by 5/4), which leaves an
//! `O(h⁴)` local error.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;

use crate::fft::{convolver, Fft2, Kernel};
use crate::field::ComplexField;
use crate::grid::Grid;

struct Spectral {
    fft: Fft2,
    d_mult: Vec<Complex64>,
}

static SPECTRAL: Lazy<Mutex<HashMap<(usize, u64), Arc<Spectral>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Angular frequency of FFT bin `q` on an axis with `n` points and period `2L`.
fn frequency(q: usize, n: usize, half_width: f64, keep_nyquist: bool) -> f64 {
    let m = if q < n / 2 { q as isize } else { q as isize - n as isize };
    if !keep_nyquist && m == -(n as isize / 2) {
        return 0.0;
    }
    2.0 * PI * m as f64 / (2.0 * half_width)
}

fn spectral(grid: &Grid) -> Arc<Spectral> {
    let key = (grid.points(), grid.half_width().to_bits());
    if let Some(s) = SPECTRAL.lock().unwrap().get(&key) {
        return s.clone();
    }
    let n = grid.points();
    let mut d_mult = Vec::with_capacity(n * n);
    for row in 0..n {
        let xi_y = frequency(row, n, grid.half_width(), false);
        for col in 0..n {
            let xi_x = frequency(col, n, grid.half_width(), false);
            d_mult.push(Complex64::new(xi_y, xi_x) * 0.5);
        }
    }
    let built = Arc::new(Spectral { fft: Fft2::new(n), d_mult });
    SPECTRAL.lock().unwrap().entry(key).or_insert(built).clone()
}

/// Which derivative multiplier to apply in Fourier space.
#[derive(Debug, Clone, Copy)]
enum Deriv {
    D(u32),
    Dbar(u32),
}

fn apply_multiplier(f: &ComplexField, which: Deriv) -> ComplexField {
    let grid = *f.grid();
    let spec = spectral(&grid);
    let n = grid.points();
    let norm = 1.0 / (n * n) as f64;
    let mut data = f.values().to_vec();
    spec.fft.forward(&mut data);
    for (v, &d) in data.iter_mut().zip(&spec.d_mult) {
        // ∂̄ multiplier ½(iξₓ − ξᵧ) = −conj(½(iξₓ + ξᵧ))
        let m = match which {
            Deriv::D(p) => d.powu(p),
            Deriv::Dbar(p) => (-d.conj()).powu(p),
        };
        *v *= m * norm;
    }
    spec.fft.inverse(&mut data);
    ComplexField::from_vec_unchecked(grid, data)
}

/// `∂f = ½(∂ₓ − i∂ᵧ) f`, spectrally.
pub fn d_z(f: &ComplexField) -> ComplexField {
    apply_multiplier(f, Deriv::D(1))
}

/// `∂̄f = ½(∂ₓ + i∂ᵧ) f`, spectrally.
pub fn dbar_z(f: &ComplexField) -> ComplexField {
    apply_multiplier(f, Deriv::Dbar(1))
}

/// `∂ⁿ f` in a single multiplier application.
pub fn d_pow(f: &ComplexField, n: u32) -> ComplexField {
    apply_multiplier(f, Deriv::D(n))
}

/// `∂̄ⁿ f` in a single multiplier application.
pub fn dbar_pow(f: &ComplexField, n: u32) -> ComplexField {
    apply_multiplier(f, Deriv::Dbar(n))
}

fn cauchy(f: &ComplexField, kernel: Kernel) -> ComplexField {
    let grid = *f.grid();
    let conv = convolver(grid.points(), grid.spacing());
    let mut ws = conv.scratch();
    let mut out = vec![Complex64::default(); grid.len()];
    conv.apply(kernel, f.values(), &mut out, &mut ws);
    ComplexField::from_vec_unchecked(grid, out)
}

/// Solid Cauchy transform `(∂̄⁻¹ f)(z) = (1/π) ∫ f(ζ) / (z − ζ) dA(ζ)`.
pub fn dbar_inv(f: &ComplexField) -> ComplexField {
    cauchy(f, Kernel::DbarInv)
}

/// `(∂⁻¹ f)(z) = (1/π) ∫ f(ζ) / (z̄ − ζ̄) dA(ζ)`.
pub fn d_inv(f: &ComplexField) -> ComplexField {
    cauchy(f, Kernel::DInv)
}
