//! The direct and inverse scattering transforms, their linearizations at zero,
//! and the reflection/conjugation symmetries of the direct map.
//!
//! ```text
//! R(u)(k) = (1/π) ∫ e_k(z) u(z) conj(μ₁(z,k)) dA(z)
//! I(r)(z) = (1/π) ∫ e_{−k}(z) r(k) ν₁(z,k) dA(k)
//! ```
//!
//! Both integrals are rectangle-rule sums. The per-node solves are
//! independent and run on the rayon pool; results are gathered in node order,
//! so the output does not depend on scheduling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{transpose, Chirp};
use crate::field::{exp_weight, ComplexField};
use crate::grid::Grid;
use crate::solver::{BlockFamily, SolverConfig};

/// Grids and solver settings shared by both transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformConfig {
    pub z_grid: Grid,
    pub k_grid: Grid,
    pub solver: SolverConfig,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig { z_grid: Grid::default_z(), k_grid: Grid::default_k(), solver: SolverConfig::default() }
    }
}

impl TransformConfig {
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.z_grid.half_width(), self.z_grid.points())?;
        Grid::new(self.k_grid.half_width(), self.k_grid.points())?;
        self.solver.validate()
    }
}

fn expect_grid(f: &ComplexField, grid: &Grid, what: &str) -> Result<()> {
    if f.grid() != grid {
        return Err(Error::GridMismatch(format!(
            "{what} lives on {:?}, expected {:?}",
            f.grid(),
            grid
        )));
    }
    Ok(())
}

/// Per-node solver diagnostics of one transform.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransformStats {
    /// `iterations[i]` is the number of nodes whose solve took `i` iterations.
    pub iterations: Vec<usize>,
    /// Largest final relative residual over all nodes.
    pub max_residual: f64,
}

impl TransformStats {
    pub fn nodes(&self) -> usize {
        self.iterations.iter().sum()
    }
}

/// Runs one block solve per node of `nodes` and returns `(1/π) Σ integrand`.
/// `weight(node, point)` is the unimodular factor multiplying the amplitude.
fn transform(
    family: &BlockFamily,
    nodes: &Grid,
    solver: &SolverConfig,
    weight: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
    integrand: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
) -> Result<(ComplexField, TransformStats)> {
    let points: Vec<Complex64> = nodes.points_iter().collect();
    let results: Vec<Result<(Complex64, usize, f64)>> = points
        .par_iter()
        .map(|&node| {
            let coeff: Vec<Complex64> =
                family.points().iter().zip(family.amp()).map(|(&p, &a)| weight(node, p) * a).collect();
            family.integrate(&coeff, solver, node, &integrand)
        })
        .collect();
    let mut stats = TransformStats::default();
    let mut values = Vec::with_capacity(points.len());
    for r in results {
        let (s, it, res) = r?;
        values.push(s / PI);
        if stats.iterations.len() <= it {
            stats.iterations.resize(it + 1, 0);
        }
        stats.iterations[it] += 1;
        stats.max_residual = stats.max_residual.max(res);
    }
    Ok((ComplexField::from_vec_unchecked(*nodes, values), stats))
}

/// The direct transform `R(u)` sampled on the k-grid.
///
/// Fails with [`Error::NonConvergence`] naming the first `k` (in node order)
/// whose solve did not converge.
pub fn forward_scatter(u: &ComplexField, cfg: &TransformConfig) -> Result<ComplexField> {
    forward_scatter_stats(u, cfg).map(|(r, _)| r)
}

/// [`forward_scatter`] together with its solver diagnostics.
pub fn forward_scatter_stats(u: &ComplexField, cfg: &TransformConfig) -> Result<(ComplexField, TransformStats)> {
    cfg.validate()?;
    expect_grid(u, &cfg.z_grid, "potential")?;
    let family = BlockFamily::new(u);
    // a = e_k(z) u(z), integrand e_k u conj(μ₁) = a conj(f)
    transform(&family, &cfg.k_grid, &cfg.solver, exp_weight, |a, f| a * f.conj())
}

/// The inverse transform `I(r)` sampled on the z-grid.
pub fn inverse_scatter(r: &ComplexField, cfg: &TransformConfig) -> Result<ComplexField> {
    inverse_scatter_stats(r, cfg).map(|(u, _)| u)
}

/// [`inverse_scatter`] together with its solver diagnostics.
pub fn inverse_scatter_stats(r: &ComplexField, cfg: &TransformConfig) -> Result<(ComplexField, TransformStats)> {
    cfg.validate()?;
    expect_grid(r, &cfg.k_grid, "scattering data")?;
    let family = BlockFamily::new(&r.conj());
    // a = e_k(z) r̄(k), integrand e_{−k} r ν₁ = ā ν₁
    transform(&family, &cfg.z_grid, &cfg.solver, |z, k| exp_weight(k, z), |a, f| a.conj() * f)
}

/// `(h²/π) Σ_w f(w) exp(i s (p₁ w₂ + p₂ w₁))` for every output point `p`.
/// The output row coordinate pairs with the input column coordinate and vice
/// versa, which is how `Im(kz) = k₁y + k₂x` couples the two planes.
fn paired_sum(f: &ComplexField, output: &Grid, sign: f64) -> ComplexField {
    let input = *f.grid();
    let (n, m) = (input.points(), output.points());
    let (a0, da) = (-input.half_width(), input.spacing());
    let (b0, db) = (-output.half_width(), output.spacing());
    // exp(i s aₙ b_j) = exp(i s a0 b0) exp(i s a0 db j) exp(i s b0 da n) exp(i s da db n j)
    let chirp = Chirp::new(n, m, sign * da * db);
    let pre: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, sign * b0 * da * i as f64)).collect();
    let post: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(1.0, sign * (a0 * b0 + a0 * db * j as f64)))
        .collect();
    let pass = |rows: &[Complex64], count: usize| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); count * m];
        let mut line = vec![Complex64::default(); n];
        for (r, dst) in out.chunks_mut(m).enumerate() {
            for ((l, v), p) in line.iter_mut().zip(&rows[r * n..(r + 1) * n]).zip(&pre) {
                *l = v * p;
            }
            chirp.apply(&line, dst);
            dst.iter_mut().zip(&post).for_each(|(d, p)| *d *= p);
        }
        out
    };
    // along input columns, giving [input row][output row]
    let first = pass(f.values(), n);
    let mut t = vec![Complex64::default(); n * m];
    transpose(&first, &mut t, n, m);
    // along input rows, giving [output row][output column]
    let mut values = pass(&t, m);
    let scale = input.cell_area() / PI;
    values.iter_mut().for_each(|v| *v *= scale);
    ComplexField::from_vec_unchecked(*output, values)
}

/// Linearized direct map `(F f)(k) = (1/π) Σ e_k(z) f(z) h²` on `k_grid`.
pub fn lin_forward(f: &ComplexField, k_grid: &Grid) -> ComplexField {
    // e_k(z) = exp(−2i (k₁y + k₂x))
    paired_sum(f, k_grid, -2.0)
}

/// Linearized inverse map `(F⁻¹ g)(z) = (1/π) Σ e_{−k}(z) g(k) h²` on `z_grid`.
pub fn lin_inverse(g: &ComplexField, z_grid: &Grid) -> ComplexField {
    paired_sum(g, z_grid, 2.0)
}

/// Max-norm discrepancies of the symmetries of the direct map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    /// `R(−u) = −R(u)`.
    pub negation: f64,
    /// `u♭(z) = −u(−z)` gives `r♭(k) = −r(−k)`.
    pub reflection: f64,
    /// `u♭ = ū` gives `r♭(k) = conj(r(−k))`.
    pub conjugation: f64,
    /// `u♭(z) = conj(u(z̄))` gives `r♭(k) = conj(r(k̄))`.
    pub mirrored_conjugation: f64,
}

impl SymmetryReport {
    /// Largest discrepancy.
    pub fn max(&self) -> f64 {
        self.negation.max(self.reflection).max(self.conjugation).max(self.mirrored_conjugation)
    }
}

/// Evaluates the symmetry relations for `u`; `z → −z`, `k → −k` and
/// `z → z̄`, `k → k̄` use the lattice involutions of [`Grid::reflect_index`]
/// and [`Grid::mirror_index`].
pub fn check_symmetries(u: &ComplexField, cfg: &TransformConfig) -> Result<SymmetryReport> {
    let r = forward_scatter(u, cfg)?;
    let negated = forward_scatter(&-u, cfg)?;
    let reflected = forward_scatter(&(-&u.reflect()), cfg)?;
    let conjugated = forward_scatter(&u.conj(), cfg)?;
    let mirrored = forward_scatter(&u.mirror().conj(), cfg)?;
    let r_minus = r.reflect();
    Ok(SymmetryReport {
        negation: negated.max_abs_diff(&-&r),
        reflection: reflected.max_abs_diff(&-&r_minus),
        conjugation: conjugated.max_abs_diff(&r_minus.conj()),
        mirrored_conjugation: mirrored.max_abs_diff(&r.mirror().conj()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn direct_forward(f: &ComplexField, k_grid: &Grid) -> ComplexField {
        let h2 = f.grid().cell_area();
        let pts: Vec<Complex64> = f.grid().points_iter().collect();
        ComplexField::from_fn(*k_grid, |k| {
            pts.iter().zip(f.values()).map(|(&z, v)| exp_weight(k, z) * v).sum::<Complex64>() * h2 / PI
        })
    }

    #[test]
    fn linear_forward_of_gaussian() {
        let (gz, gk) = (Grid::default_z(), Grid::default_k());
        let f = ComplexField::from_fn(gz, |z| c((-z.norm_sqr()).exp(), 0.0));
        let exact = ComplexField::from_fn(gk, |k| c((-k.norm_sqr()).exp(), 0.0));
        assert!(lin_forward(&f, &gk).max_abs_diff(&exact) < 1e-6);
    }

    #[test]
    fn chirp_path_matches_direct_quadrature() {
        let gz = Grid::new(4.0, 32).unwrap();
        let gk = Grid::new(3.0, 16).unwrap();
        let f = ComplexField::from_fn(gz, |z| (z + c(0.3, -0.1)) * (-(z - c(0.5, 0.2)).norm_sqr()).exp());
        let fast = lin_forward(&f, &gk);
        assert!(fast.max_abs_diff(&direct_forward(&f, &gk)) < 1e-12);
    }

    #[test]
    fn linear_pair_inverts_and_preserves_norm() {
        let (gz, gk) = (Grid::default_z(), Grid::default_k());
        let f = ComplexField::from_fn(gz, |z| c(0.7, 0.2) * (-(z - c(0.4, -0.3)).norm_sqr() * 1.5).exp());
        let ff = lin_forward(&f, &gk);
        assert!(lin_inverse(&ff, &gz).max_abs_diff(&f) < 1e-10);
        assert!((ff.l2_norm() - f.l2_norm()).abs() < 1e-10 * f.l2_norm());
    }

    #[test]
    fn derivative_multipliers() {
        // ∫ e_k ∂f = −∫ f ∂e_k and ∂e_k = −k e_k
        use crate::operators::{d_z, dbar_z};
        let (gz, gk) = (Grid::default_z(), Grid::default_k());
        let f = ComplexField::from_fn(gz, |z| c(1.0, 0.4) * (-(z - c(0.2, 0.1)).norm_sqr()).exp());
        let ff = lin_forward(&f, &gk);
        let kf = &ComplexField::from_fn(gk, |k| k) * &ff;
        let kbar_f = &ComplexField::from_fn(gk, |k| -k.conj()) * &ff;
        assert!(lin_forward(&d_z(&f), &gk).rel_l2_error(&kf) < 1e-8);
        assert!(lin_forward(&dbar_z(&f), &gk).rel_l2_error(&kbar_f) < 1e-8);
    }

    #[test]
    fn zero_data_transforms_to_zero() {
        let cfg = TransformConfig {
            z_grid: Grid::new(4.0, 32).unwrap(),
            k_grid: Grid::new(3.0, 16).unwrap(),
            ..Default::default()
        };
        assert_eq!(forward_scatter(&ComplexField::zeros(cfg.z_grid), &cfg).unwrap().max_norm(), 0.0);
        assert_eq!(inverse_scatter(&ComplexField::zeros(cfg.k_grid), &cfg).unwrap().max_norm(), 0.0);
        let rep = check_symmetries(&ComplexField::zeros(cfg.z_grid), &cfg).unwrap();
        assert_eq!(rep.max(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let cfg = TransformConfig {
            z_grid: Grid::new(4.0, 32).unwrap(),
            k_grid: Grid::new(3.0, 16).unwrap(),
            ..Default::default()
        };
        let wrong = ComplexField::zeros(Grid::new(4.0, 16).unwrap());
        assert!(matches!(forward_scatter(&wrong, &cfg), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn symmetries_of_asymmetric_potential() {
        let cfg = TransformConfig {
            z_grid: Grid::new(6.0, 64).unwrap(),
            k_grid: Grid::new(5.0, 48).unwrap(),
            ..Default::default()
        };
        let u = ComplexField::from_fn(cfg.z_grid, |z| {
            Complex64::new(0.3, 0.1) * (-(z - Complex64::new(0.4, -0.2)).norm_sqr()).exp()
                + Complex64::new(0.0, 0.15) * (-(z + Complex64::new(0.7, 0.5)).norm_sqr() / 0.5).exp()
        });
        let rep = check_symmetries(&u, &cfg).unwrap();
        assert_eq!(rep.negation, 0.0);
        assert!(rep.max() < 5e-6, "{rep:?}");
    }

    #[test]
    fn inverse_undoes_forward() {
        let cfg = TransformConfig {
            z_grid: Grid::new(6.0, 64).unwrap(),
            k_grid: Grid::new(5.0, 48).unwrap(),
            ..Default::default()
        };
        let u = ComplexField::from_fn(cfg.z_grid, |z| c(0.4, 0.3) * (-(z - c(0.3, -0.2)).norm_sqr()).exp());
        let back = inverse_scatter(&forward_scatter(&u, &cfg).unwrap(), &cfg).unwrap();
        let err = back.rel_l2_error(&u);
        assert!(err < 1e-3, "{err}");
    }

    fn small_cfg() -> TransformConfig {
        TransformConfig {
            z_grid: Grid::new(5.0, 64).unwrap(),
            k_grid: Grid::new(4.0, 32).unwrap(),
            ..Default::default()
        }
    }

    #[test]
    fn forward_matches_full_solver() {
        use crate::solver::solve_mu;
        let cfg = small_cfg();
        let u = ComplexField::from_fn(cfg.z_grid, |z| c(0.4, 0.1) * (-(z - c(0.3, 0.0)).norm_sqr()).exp());
        let r = forward_scatter(&u, &cfg).unwrap();
        let n = cfg.k_grid.points();
        for (row, col) in [(3, 5), (16, 16), (20, 9)] {
            let k = cfg.k_grid.point(row, col);
            let mu = solve_mu(&u, k, &cfg.solver).unwrap();
            let direct = (&(&crate::field::e_k(cfg.z_grid, k) * &u) * &mu.first.conj()).integrate() / PI;
            assert!((direct - r.values()[row * n + col]).norm() < 1e-9);
        }
    }

    #[test]
    fn small_data_is_nearly_linear() {
        let cfg = small_cfg();
        let eps = 0.01;
        let g = ComplexField::from_fn(cfg.z_grid, |z| c((-z.norm_sqr()).exp(), 0.0));
        let r = forward_scatter(&g.scale_re(eps), &cfg).unwrap();
        let lin = lin_forward(&g, &cfg.k_grid).scale_re(eps);
        assert!(r.max_abs_diff(&lin) <= 1e-3 * eps);
        let back = inverse_scatter(&lin, &cfg).unwrap();
        let lin_back = lin_inverse(&lin, &cfg.z_grid);
        assert!(back.max_abs_diff(&lin_back) <= 1e-3 * eps);
    }

    #[test]
    fn negation_is_exact() {
        let cfg = small_cfg();
        let u = ComplexField::from_fn(cfg.z_grid, |z| c(0.3, 0.0) * (-(z - c(0.5, 0.0)).norm_sqr()).exp());
        let r = forward_scatter(&u, &cfg).unwrap();
        let rn = forward_scatter(&-&u, &cfg).unwrap();
        assert!(rn.max_abs_diff(&-&r) < 1e-14);
    }
}
