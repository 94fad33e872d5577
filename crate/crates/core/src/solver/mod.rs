//! The conjugate-linear d-bar systems of the scattering theory.
//!
//! All three problems (`μ` in `z` at fixed `k`, `ν` and `ν♯` in `k` at fixed
//! `z`) share one shape:
//!
//! ```text
//! ∂̄ f₁ = ½ a f̄₂,    ∂̄ f₂ = ½ a f̄₁,    (f₁, f₂) → (1, 0)
//! ```
//!
//! with a coefficient `a` that is `e_k u`, `e_k r̄` or `e_{−k} r`. In integral
//! form `f₁ = 1 + ½ ∂̄⁻¹(a f̄₂)`, `f₂ = ½ ∂̄⁻¹(a f̄₁)`. Eliminating `f₂` through
//! `f̄₂ = ½ ∂⁻¹(ā f₁)` leaves the complex-linear equation `(I − T) f₁ = 1`
//! with `T f = ¼ ∂̄⁻¹(a ∂⁻¹(ā f))`.
//!
//! Every product with `a` vanishes where the coefficient does, so the
//! iteration runs on the smallest square block of lattice points that holds
//! the support of `a`; the full-grid fields are assembled afterwards from the
//! block solution with one more transform per component.

mod krylov;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{convolver, ConvScratch, Convolver, Kernel};
use crate::field::{exp_weight, ComplexField};
use crate::grid::Grid;
use crate::operators::{dbar_inv, dbar_z};

pub(crate) use krylov::gmres;

/// Samples of `a` below this fraction of `max |a|` are treated as outside the
/// support.
const SUPPORT_CUTOFF: f64 = 1e-14;

const GMRES_RESTART: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Neumann series `f ← 1 + T f`; falls back to GMRES when it stalls.
    Born,
    /// GMRES on `(I − T) f = 1`.
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative `L²` residual target.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub method: Method,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tolerance: 1e-10, max_iterations: 200, method: Method::Born }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// `(f₁, f₂)` of one solve together with its diagnostics.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub first: ComplexField,
    pub second: ComplexField,
    /// Applications of `T` spent by the iteration.
    pub iterations: usize,
    /// A-posteriori relative residual of the integral equations on the full
    /// grid (the larger of the two components).
    pub residual_norm: f64,
}

/// Square block `[row0, row0 + m) × [col0, col0 + m)` of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Block {
    pub row0: usize,
    pub col0: usize,
    pub m: usize,
}

impl Block {
    /// Smallest square block containing every sample with
    /// `|w| > SUPPORT_CUTOFF · max |w|`. `None` when `w` vanishes.
    pub(crate) fn support(grid: &Grid, weight: &[f64]) -> Option<Self> {
        let n = grid.points();
        let peak = weight.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return None;
        }
        let cut = peak * SUPPORT_CUTOFF;
        let (mut r0, mut r1, mut c0, mut c1) = (n, 0, n, 0);
        for (idx, &w) in weight.iter().enumerate() {
            if w > cut {
                let (r, c) = (idx / n, idx % n);
                r0 = r0.min(r);
                r1 = r1.max(r);
                c0 = c0.min(c);
                c1 = c1.max(c);
            }
        }
        let m = (r1 - r0 + 1).max(c1 - c0 + 1).max(2);
        let m = m.min(n);
        let row0 = r0.min(n - m);
        let col0 = c0.min(n - m);
        Some(Block { row0, col0, m })
    }

    pub(crate) fn len(&self) -> usize {
        self.m * self.m
    }

    /// Grid index of block entry `i`.
    #[inline]
    pub(crate) fn grid_index(&self, grid: &Grid, i: usize) -> usize {
        (self.row0 + i / self.m) * grid.points() + self.col0 + i % self.m
    }

    pub(crate) fn gather(&self, grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
        (0..self.len()).map(|i| values[self.grid_index(grid, i)]).collect()
    }

    pub(crate) fn scatter(&self, grid: &Grid, block: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); grid.len()];
        for (i, v) in block.iter().enumerate() {
            out[self.grid_index(grid, i)] = *v;
        }
        out
    }
}

/// `T f = ¼ ∂̄⁻¹(a ∂⁻¹(ā f))` on one block, with owned scratch space.
pub(crate) struct BlockOperator<'a> {
    conv: &'a Convolver,
    coeff: &'a [Complex64],
    tmp: Vec<Complex64>,
    ws: ConvScratch,
}

impl<'a> BlockOperator<'a> {
    pub(crate) fn new(conv: &'a Convolver, coeff: &'a [Complex64]) -> Self {
        debug_assert_eq!(coeff.len(), conv.side() * conv.side());
        BlockOperator { conv, coeff, tmp: vec![Complex64::default(); coeff.len()], ws: conv.scratch() }
    }

    /// `f̄₂ = ½ ∂⁻¹(ā f₁)`, written into `out`.
    pub(crate) fn conj_second(&mut self, f1: &[Complex64], out: &mut [Complex64]) {
        for ((t, a), f) in self.tmp.iter_mut().zip(self.coeff).zip(f1) {
            *t = a.conj() * f * 0.5;
        }
        self.conv.apply(Kernel::DInv, &self.tmp, out, &mut self.ws);
    }

    pub(crate) fn apply_t(&mut self, f: &[Complex64], out: &mut [Complex64]) {
        let mut g = std::mem::take(&mut self.tmp);
        for ((t, a), fi) in g.iter_mut().zip(self.coeff).zip(f) {
            *t = a.conj() * fi;
        }
        self.conv.apply(Kernel::DInv, &g, out, &mut self.ws);
        for ((t, a), o) in g.iter_mut().zip(self.coeff).zip(out.iter()) {
            *t = a * o * 0.25;
        }
        self.conv.apply(Kernel::DbarInv, &g, out, &mut self.ws);
        self.tmp = g;
    }
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Block solution of `(I − T) f₁ = 1`: returns `(f₁, T-applications, residual)`.
pub(crate) fn solve_block(
    op: &mut BlockOperator<'_>,
    cfg: &SolverConfig,
    node: Complex64,
) -> Result<(Vec<Complex64>, usize, f64)> {
    cfg.validate()?;
    let len = op.coeff.len();
    let one = vec![Complex64::new(1.0, 0.0); len];
    let mut spent = 0;

    if cfg.method == Method::Born {
        let mut f = one.clone();
        let mut tf = vec![Complex64::default(); len];
        let mut last = f64::INFINITY;
        let mut stalls = 0;
        while spent < cfg.max_iterations {
            op.apply_t(&f, &mut tf);
            spent += 1;
            // residual of the current iterate: f − 1 − T f
            let mut num = 0.0;
            for ((fi, ti), oi) in f.iter_mut().zip(&tf).zip(&one) {
                let next = oi + ti;
                num += (*fi - next).norm_sqr();
                *fi = next;
            }
            let res = num.sqrt() / l2(&f);
            if res <= cfg.tolerance {
                return Ok((f, spent, res));
            }
            if res >= last * 0.95 {
                stalls += 1;
            }
            if res > 1.0 || stalls >= 3 {
                break;
            }
            last = res;
        }
    }

    let remaining = cfg.max_iterations.saturating_sub(spent).max(1);
    let mut x = one.clone();
    let outcome = gmres(
        |v, out| {
            op.apply_t(v, out);
            out.iter_mut().zip(v).for_each(|(o, vi)| *o = vi - *o);
        },
        &one,
        &mut x,
        cfg.tolerance,
        remaining,
        GMRES_RESTART,
    );
    spent += outcome.matvecs;
    if !outcome.converged {
        return Err(Error::NonConvergence { node, iterations: spent, residual: outcome.residual });
    }
    Ok((x, spent, outcome.residual))
}

/// Relative residuals of the two integral equations for a candidate solution.
pub fn integral_residuals(
    coeff: &ComplexField,
    first: &ComplexField,
    second: &ComplexField,
) -> (f64, f64) {
    let r1 = &dbar_inv(&(coeff * &second.conj())).scale_re(0.5)
        + &ComplexField::constant(*coeff.grid(), Complex64::new(1.0, 0.0));
    let r2 = dbar_inv(&(coeff * &first.conj())).scale_re(0.5);
    let scale = first.l2_norm().max(f64::MIN_POSITIVE);
    ((first - &r1).l2_norm() / scale, (second - &r2).l2_norm() / scale)
}

/// Full solve for a coefficient field `a` sampled on its grid.
pub fn solve_system(coeff: &ComplexField, cfg: &SolverConfig, node: Complex64) -> Result<ScatteringSolution> {
    cfg.validate()?;
    let grid = *coeff.grid();
    let weight: Vec<f64> = coeff.values().iter().map(|v| v.norm()).collect();
    let Some(block) = Block::support(&grid, &weight) else {
        return Ok(ScatteringSolution {
            first: ComplexField::constant(grid, Complex64::new(1.0, 0.0)),
            second: ComplexField::zeros(grid),
            iterations: 1,
            residual_norm: 0.0,
        });
    };
    let conv = convolver(block.m, grid.spacing());
    let a_block = block.gather(&grid, coeff.values());
    let mut op = BlockOperator::new(&conv, &a_block);
    let (f1_block, iterations, _) = solve_block(&mut op, cfg, node)?;
    let mut f2_conj = vec![Complex64::default(); block.len()];
    op.conj_second(&f1_block, &mut f2_conj);

    // assemble on the full grid from the block solution
    let src1: Vec<Complex64> = a_block.iter().zip(&f2_conj).map(|(a, g)| a * g * 0.5).collect();
    let src2: Vec<Complex64> = a_block.iter().zip(&f1_block).map(|(a, f)| a * f.conj() * 0.5).collect();
    let first = &dbar_inv(&ComplexField::from_vec_unchecked(grid, block.scatter(&grid, &src1)))
        + &ComplexField::constant(grid, Complex64::new(1.0, 0.0));
    let second = dbar_inv(&ComplexField::from_vec_unchecked(grid, block.scatter(&grid, &src2)));
    let (r1, r2) = integral_residuals(coeff, &first, &second);
    Ok(ScatteringSolution { first, second, iterations, residual_norm: r1.max(r2) })
}

/// Solves for a family of coefficients `a = w · amp` with unimodular `w`,
/// which all share the support of the fixed amplitude `amp`. Only the block
/// values of `f₁` are formed, which is all the transform integrals need.
pub(crate) struct BlockFamily {
    grid: Grid,
    block: Option<Block>,
    amp: Vec<Complex64>,
    points: Vec<Complex64>,
    conv: Option<Arc<Convolver>>,
}

impl BlockFamily {
    pub(crate) fn new(amp: &ComplexField) -> Self {
        let grid = *amp.grid();
        let weight: Vec<f64> = amp.values().iter().map(|v| v.norm()).collect();
        let block = Block::support(&grid, &weight);
        let (amp_block, points, conv) = match block {
            Some(b) => {
                let n = grid.points();
                let points = (0..b.len())
                    .map(|i| {
                        let idx = b.grid_index(&grid, i);
                        grid.point(idx / n, idx % n)
                    })
                    .collect();
                (b.gather(&grid, amp.values()), points, Some(convolver(b.m, grid.spacing())))
            }
            None => (Vec::new(), Vec::new(), None),
        };
        BlockFamily { grid, block, amp: amp_block, points, conv }
    }

    /// Lattice points of the block, in block order.
    pub(crate) fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Amplitude samples on the block.
    pub(crate) fn amp(&self) -> &[Complex64] {
        &self.amp
    }

    /// `Σ integrand(aᵢ, f₁ᵢ) h²` over the block for the solution of the
    /// system with block coefficient `coeff`; zero when the amplitude vanishes.
    pub(crate) fn integrate(
        &self,
        coeff: &[Complex64],
        cfg: &SolverConfig,
        node: Complex64,
        integrand: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<(Complex64, usize, f64)> {
        let (Some(_), Some(conv)) = (self.block, self.conv.as_ref()) else {
            return Ok((Complex64::default(), 0, 0.0));
        };
        let mut op = BlockOperator::new(conv, coeff);
        let (f1, iterations, residual) = solve_block(&mut op, cfg, node)?;
        let sum: Complex64 = coeff.iter().zip(&f1).map(|(&a, &f)| integrand(a, f)).sum();
        Ok((sum * self.grid.cell_area(), iterations, residual))
    }
}

fn check_node(p: Complex64) -> Result<()> {
    if !(p.re.is_finite() && p.im.is_finite()) {
        return Err(Error::InvalidArgument("non-finite node".into()));
    }
    Ok(())
}

/// One application of the real-linear pair operator
/// `K(f₁, f₂) = (½ ∂̄⁻¹(a f̄₂), ½ ∂̄⁻¹(a f̄₁))`. `K²` restricted to the first
/// component is `T`.
pub fn pair_operator(
    coeff: &ComplexField,
    f1: &ComplexField,
    f2: &ComplexField,
) -> (ComplexField, ComplexField) {
    (
        dbar_inv(&(coeff * &f2.conj())).scale_re(0.5),
        dbar_inv(&(coeff * &f1.conj())).scale_re(0.5),
    )
}

/// `K` acting on the stacked real vector `(Re f₁, Im f₁, Re f₂, Im f₂)`.
pub fn pair_operator_real(coeff: &ComplexField, stacked: &[f64]) -> Vec<f64> {
    let g = *coeff.grid();
    let n = g.len();
    assert_eq!(stacked.len(), 4 * n);
    let unstack = |off: usize| {
        let v = (0..n).map(|i| Complex64::new(stacked[off + i], stacked[off + n + i])).collect();
        ComplexField::from_vec_unchecked(g, v)
    };
    let (g1, g2) = pair_operator(coeff, &unstack(0), &unstack(2 * n));
    let mut out = Vec::with_capacity(4 * n);
    for f in [&g1, &g2] {
        out.extend(f.values().iter().map(|v| v.re));
        out.extend(f.values().iter().map(|v| v.im));
    }
    out
}

/// `T f = ¼ ∂̄⁻¹(a ∂⁻¹(ā f))` on the full grid, composed from the public
/// transforms.
pub fn t_operator(coeff: &ComplexField, f: &ComplexField) -> ComplexField {
    dbar_inv(&(coeff * &crate::operators::d_inv(&(&coeff.conj() * f)))).scale_re(0.25)
}

/// Coefficient `e_k u` of the direct problem at fixed `k`.
pub fn mu_coefficient(u: &ComplexField, k: Complex64) -> ComplexField {
    let g = *u.grid();
    let n = g.points();
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| exp_weight(k, g.point(i / n, i % n)) * v)
        .collect();
    ComplexField::from_vec_unchecked(g, values)
}

/// Coefficient `e_k(z) r̄(k)` of the inverse problem at fixed `z`.
pub fn nu_coefficient(r: &ComplexField, z: Complex64) -> ComplexField {
    let g = *r.grid();
    let n = g.points();
    let values = r
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| exp_weight(g.point(i / n, i % n), z) * v.conj())
        .collect();
    ComplexField::from_vec_unchecked(g, values)
}

/// Coefficient `e_{−k}(z) r(k)` of the `♯` problem evaluated at `−z`.
pub fn nu_sharp_coefficient(r: &ComplexField, z: Complex64) -> ComplexField {
    let g = *r.grid();
    let n = g.points();
    let values = r
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| exp_weight(-g.point(i / n, i % n), z) * v)
        .collect();
    ComplexField::from_vec_unchecked(g, values)
}

/// `(μ₁, μ₂)(·, k)` for the potential `u` on the `z` grid.
pub fn solve_mu(u: &ComplexField, k: Complex64, cfg: &SolverConfig) -> Result<ScatteringSolution> {
    check_node(k)?;
    solve_system(&mu_coefficient(u, k), cfg, k)
}

/// `(ν₁, ν₂)(z, ·)` for scattering data `r` on the `k` grid.
pub fn solve_nu(r: &ComplexField, z: Complex64, cfg: &SolverConfig) -> Result<ScatteringSolution> {
    check_node(z)?;
    solve_system(&nu_coefficient(r, z), cfg, z)
}

/// `(ν₁♯, ν₂♯)(−z, ·)`, the functions that enter `η(z, ·)`.
pub fn solve_nu_sharp(r: &ComplexField, z: Complex64, cfg: &SolverConfig) -> Result<ScatteringSolution> {
    check_node(z)?;
    solve_system(&nu_sharp_coefficient(r, z), cfg, z)
}

/// The four solves that enter `η(z, ·)`.
#[derive(Debug, Clone)]
pub struct EtaParts {
    pub nu: ScatteringSolution,
    pub nu_sharp: ScatteringSolution,
    pub eta: ComplexField,
}

/// `η(z,k) = ν₂♯(−z,k) ½ e_k r̄ conj(ν₂(z,k)) + ½ e_{−k}(z) r conj(ν₁♯(−z,k)) ν₁(z,k)`
/// together with the solutions it is built from.
pub fn eta_parts(r: &ComplexField, z: Complex64, cfg: &SolverConfig) -> Result<EtaParts> {
    let nu = solve_nu(r, z, cfg)?;
    let nu_sharp = solve_nu_sharp(r, z, cfg)?;
    let a = nu_coefficient(r, z);
    let b = nu_sharp_coefficient(r, z);
    let g = *r.grid();
    let values = (0..g.len())
        .map(|i| {
            let t1 = nu_sharp.second.values()[i] * 0.5 * a.values()[i] * nu.second.values()[i].conj();
            let t2 = 0.5 * b.values()[i] * nu_sharp.first.values()[i].conj() * nu.first.values()[i];
            t1 + t2
        })
        .collect();
    Ok(EtaParts { nu, nu_sharp, eta: ComplexField::from_vec_unchecked(g, values) })
}

/// Relative `L²` discrepancies of `∂̄_k[ν₂♯ν₁] = η` and `∂̄_k[ν₁♯ν₂] = η̄`.
///
/// Both products decay only like `c/k`, which the periodic spectral derivative
/// cannot resolve at the grid edge. The slowly decaying part is removed by
/// differentiating `g − ∂̄⁻¹(target)` instead of `g`: the two agree up to a
/// function that vanishes at infinity exactly when the identity holds, and
/// `∂̄ ∂̄⁻¹ = I` restores the target.
pub fn eta_identity_errors(parts: &EtaParts) -> (f64, f64) {
    let check = |product: ComplexField, target: &ComplexField| {
        let rest = &product - &dbar_inv(target);
        let lhs = &dbar_z(&rest) + target;
        lhs.rel_l2_error(target)
    };
    let p1 = &parts.nu_sharp.second * &parts.nu.first;
    let p2 = &parts.nu_sharp.first * &parts.nu.second;
    (check(p1, &parts.eta), check(p2, &parts.eta.conj()))
}

pub fn eta(r: &ComplexField, z: Complex64, cfg: &SolverConfig) -> Result<ComplexField> {
    Ok(eta_parts(r, z, cfg)?.eta)
}

/// Residue extraction `(1/π) Σ_{|k| ≤ R} kⁿ (∂̄g)(k) h²`, which recovers the
/// coefficient `gₙ` of `g ∼ a₀ + Σ g_ℓ / k^{ℓ+1}`.
pub fn extract_coeff(dbar_g: &ComplexField, n: u32, radius: f64) -> Result<Complex64> {
    let g = dbar_g.grid();
    if n == 0 {
        return Err(Error::InvalidArgument("coefficient index must be at least 1".into()));
    }
    if !(radius > 0.0) || radius > g.half_width() {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} must lie in (0, {}]",
            g.half_width()
        )));
    }
    let pts = g.points();
    let r2 = radius * radius;
    let sum: Complex64 = dbar_g
        .values()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| {
            let k = g.point(i / pts, i % pts);
            (k.norm_sqr() <= r2).then(|| k.powu(n) * v)
        })
        .sum();
    Ok(sum * g.cell_area() / std::f64::consts::PI)
}

/// `∂̄g` for `g = (1 − χ)/(k − a)`, where `χ` is a smooth radial cutoff about
/// `a` equal to one for `|k − a| ≤ inner` and zero beyond `outer`. The
/// expansion coefficients of `g` are `aⁿ`.
pub fn mollified_pole(grid: Grid, a: Complex64, inner: f64, outer: f64) -> ComplexField {
    // χ = S(s), s = |k − a|; ∂̄χ = S'(s)(k − a)/(2s), so ∂̄g = −S'(s)/(2s)
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let df = |x: f64| if x > 0.0 { (-1.0 / x).exp() / (x * x) } else { 0.0 };
    let width = outer - inner;
    ComplexField::from_fn(grid, |k| {
        let s = (k - a).norm();
        if s <= inner || s >= outer {
            return Complex64::new(0.0, 0.0);
        }
        // S(s) = ψ(x), x = (outer − s)/width, ψ = f(x)/(f(x) + f(1 − x))
        let x = (outer - s) / width;
        let (p, q) = (f(x), f(1.0 - x));
        let dpsi = (df(x) * q + p * df(1.0 - x)) / ((p + q) * (p + q));
        let ds = -dpsi / width;
        Complex64::new(-ds / (2.0 * s), 0.0)
    })
}

/// Default extraction radius `0.75 L`.
pub fn default_radius(grid: &Grid) -> f64 {
    0.75 * grid.half_width()
}
