//! Time evolution through the scattering data, `u(t) = I(e^{itφ} R(u₀))`, the
//! cubic mNV nonlinearity and the PDE residual of the evolved field.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::operators::{d_inv, d_pow, d_z, dbar_inv, dbar_pow, dbar_z};
use crate::scattering::{forward_scatter, inverse_scatter, TransformConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    /// `φ(k) = k² + k̄²`.
    Ds,
    /// `φ(k) = (−i)(k̄³ − k³)`.
    Mnv,
}

impl PhaseKind {
    /// Real value of the phase at `k`.
    pub fn at(self, k: Complex64) -> f64 {
        match self {
            PhaseKind::Ds => 2.0 * (k.re * k.re - k.im * k.im),
            // k̄³ − k³ = −2i Im(k³)
            PhaseKind::Mnv => -2.0 * k.powu(3).im,
        }
    }
}

pub fn phase_field(k_grid: &Grid, kind: PhaseKind) -> ComplexField {
    ComplexField::from_fn(*k_grid, |k| Complex64::new(kind.at(k), 0.0))
}

/// `e^{itφ} r`.
pub fn modulate(r: &ComplexField, t: f64, kind: PhaseKind) -> ComplexField {
    let g = *r.grid();
    let n = g.points();
    let values = r
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::from_polar(1.0, t * kind.at(g.point(i / n, i % n))))
        .collect();
    ComplexField::from_vec_unchecked(g, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub phase: PhaseKind,
    pub transform: TransformConfig,
    /// Half-width `δ` of the central time difference.
    pub fd_step: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig { phase: PhaseKind::Mnv, transform: TransformConfig::default(), fd_step: 1e-3 }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::InvalidArgument("fd_step must be positive".into()));
        }
        self.transform.validate()
    }
}

/// `u(t) = I(e^{itφ} R(u₀))`.
pub fn evolve(u0: &ComplexField, t: f64, cfg: &EvolutionConfig) -> Result<ComplexField> {
    cfg.validate()?;
    let r = forward_scatter(u0, &cfg.transform)?;
    evolve_data(&r, t, cfg)
}

/// `I(e^{itφ} r)` for scattering data that is already known.
pub fn evolve_data(r: &ComplexField, t: f64, cfg: &EvolutionConfig) -> Result<ComplexField> {
    inverse_scatter(&modulate(r, t, cfg.phase), &cfg.transform)
}

/// The four unit-coefficient terms
/// `u ∂̄⁻¹(∂(ū ∂u)) + ∂u ∂̄⁻¹(∂|u|²) + u ∂⁻¹(∂̄(ū ∂̄u)) + ∂̄u ∂⁻¹(∂̄|u|²)`,
/// which equal `(4/3) N(u)`.
pub fn nmnv_bracket(u: &ComplexField) -> ComplexField {
    let ub = u.conj();
    let du = d_z(u);
    let dbu = dbar_z(u);
    let modulus = u * &ub;
    let t1 = u * &dbar_inv(&d_z(&(&ub * &du)));
    let t2 = &du * &dbar_inv(&d_z(&modulus));
    let t3 = u * &d_inv(&dbar_z(&(&ub * &dbu)));
    let t4 = &dbu * &d_inv(&dbar_z(&modulus));
    &(&t1 + &t2) + &(&t3 + &t4)
}

/// The cubic nonlinearity `N(u) = ¾ · nmnv_bracket(u)`.
pub fn nmnv(u: &ComplexField) -> ComplexField {
    nmnv_bracket(u).scale_re(0.75)
}

/// The eight-term form before like terms are combined, each with weight ¾.
pub fn nmnv_expanded(u: &ComplexField) -> ComplexField {
    let ub = u.conj();
    let (du, dbu) = (d_z(u), dbar_z(u));
    let (dub, dbub) = (d_z(&ub), dbar_z(&ub));
    let terms = [
        u * &dbar_inv(&(&ub * &d_pow(u, 2))),
        &du * &dbar_inv(&(u * &dub)),
        u * &dbar_inv(&(&du * &dub)),
        &du * &dbar_inv(&(&ub * &du)),
        &dbu * &d_inv(&(&ub * &dbu)),
        &dbu * &d_inv(&(u * &dbub)),
        u * &d_inv(&(&dbub * &dbu)),
        u * &d_inv(&(&ub * &dbar_pow(u, 2))),
    ];
    let sum = terms.iter().skip(1).fold(terms[0].clone(), |acc, t| &acc + t);
    sum.scale_re(0.75)
}

/// Norms behind an mNV residual evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub residual_norm: f64,
    pub dispersive_norm: f64,
    pub nonlinear_norm: f64,
    /// `‖res‖ / max(‖∂³u‖, ‖N(u)‖)`, zero when all three vanish.
    pub ratio: f64,
    pub fd_step: f64,
}

/// `[u(t+δ) − u(t−δ)]/(2δ) + ∂³u + ∂̄³u − N(u)` at `u = u(t)`, where `u(·)`
/// evolves `u0` under the mNV phase.
pub fn mnv_residual(u0: &ComplexField, t: f64, cfg: &EvolutionConfig) -> Result<(ComplexField, ResidualReport)> {
    residual_with(u0, t, cfg, true)
}

/// As [`mnv_residual`], optionally with the nonlinearity dropped, which
/// checks the dispersive part alone.
pub fn residual_with(
    u0: &ComplexField,
    t: f64,
    cfg: &EvolutionConfig,
    nonlinear: bool,
) -> Result<(ComplexField, ResidualReport)> {
    let cfg = EvolutionConfig { phase: PhaseKind::Mnv, ..*cfg };
    cfg.validate()?;
    let r = forward_scatter(u0, &cfg.transform)?;
    residual_from_data(&r, t, &cfg, nonlinear)
}

/// As [`residual_with`], starting from scattering data `r = R(u₀)`.
pub fn residual_from_data(
    r: &ComplexField,
    t: f64,
    cfg: &EvolutionConfig,
    nonlinear: bool,
) -> Result<(ComplexField, ResidualReport)> {
    let cfg = EvolutionConfig { phase: PhaseKind::Mnv, ..*cfg };
    cfg.validate()?;
    let delta = cfg.fd_step;
    let ahead = evolve_data(r, t + delta, &cfg)?;
    let behind = evolve_data(r, t - delta, &cfg)?;
    let u = evolve_data(r, t, &cfg)?;
    let ut = (&ahead - &behind).scale_re(0.5 / delta);
    let d3 = d_pow(&u, 3);
    let n = if nonlinear { nmnv(&u) } else { ComplexField::zeros(*u.grid()) };
    let residual = &(&(&ut + &d3) + &dbar_pow(&u, 3)) - &n;
    let scale = d3.l2_norm().max(n.l2_norm());
    let residual_norm = residual.l2_norm();
    let ratio = if scale == 0.0 { residual_norm } else { residual_norm / scale };
    let report = ResidualReport {
        residual_norm,
        dispersive_norm: d3.l2_norm(),
        nonlinear_norm: n.l2_norm(),
        ratio,
        fd_step: delta,
    };
    Ok((residual, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn phase_values() {
        assert_eq!(PhaseKind::Ds.at(c(1.0, 0.0)), 2.0);
        assert_eq!(PhaseKind::Mnv.at(c(1.0, 0.0)), 0.0);
        assert!((PhaseKind::Ds.at(c(0.0, 1.0)) + 2.0).abs() < 1e-15);
        assert!((PhaseKind::Mnv.at(c(0.0, 1.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn phase_matches_complex_formula() {
        let g = Grid::default_k();
        for (kind, f) in [
            (PhaseKind::Ds, Box::new(|k: Complex64| k * k + k.conj() * k.conj()) as Box<dyn Fn(Complex64) -> Complex64>),
            (PhaseKind::Mnv, Box::new(|k: Complex64| c(0.0, -1.0) * (k.conj().powu(3) - k.powu(3)))),
        ] {
            let exact = ComplexField::from_fn(g, f);
            assert!(exact.values().iter().all(|v| v.im.abs() < 1e-12));
            let field = phase_field(&g, kind);
            assert!(field.max_abs_diff(&exact.map(|v| c(v.re, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn modulation_is_unimodular() {
        let g = Grid::default_k();
        let r = ComplexField::from_fn(g, |k| c(0.3, 0.1) * (-k.norm_sqr()).exp());
        for kind in [PhaseKind::Ds, PhaseKind::Mnv] {
            for t in [0.1, 1.0] {
                let m = modulate(&r, t, kind);
                let worst = m
                    .values()
                    .iter()
                    .zip(r.values())
                    .map(|(a, b)| (a.norm() - b.norm()).abs())
                    .fold(0.0, f64::max);
                assert!(worst < 1e-16);
                assert!((m.l2_norm() - r.l2_norm()).abs() <= 1e-15 * r.l2_norm());
            }
        }
        // group property at the data level
        let a = modulate(&modulate(&r, 0.3, PhaseKind::Mnv), 0.4, PhaseKind::Mnv);
        let b = modulate(&r, 0.7, PhaseKind::Mnv);
        assert!(a.max_abs_diff(&b) < 1e-15);
    }

    fn bump(grid: Grid, amp: f64) -> ComplexField {
        ComplexField::from_fn(grid, |z| c(amp, 0.2 * amp) * (-(z - c(0.3, -0.2)).norm_sqr()).exp())
    }

    #[test]
    fn nonlinearity_scaling_and_grouping() {
        let g = Grid::new(8.0, 128).unwrap();
        assert_eq!(nmnv(&ComplexField::zeros(g)).max_norm(), 0.0);
        let u = bump(g, 0.3);
        let n = nmnv(&u);
        let n2 = nmnv(&u.scale_re(2.0));
        assert!(n2.max_abs_diff(&n.scale_re(8.0)) <= 1e-10 * n2.max_norm());
        assert!(n.scale_re(4.0 / 3.0).max_abs_diff(&nmnv_bracket(&u)) <= 1e-12 * n.max_norm());
    }

    #[test]
    fn expanded_form_agrees() {
        let g = Grid::default_z();
        let u = bump(g, 0.3);
        assert!(nmnv_expanded(&u).rel_l2_error(&nmnv(&u)) < 1e-6);
    }

    #[test]
    fn invalid_step_rejected() {
        let cfg = EvolutionConfig { fd_step: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
