//! Acceptance run: one PASS/FAIL line per criterion, with measured values
//! and wall time against the time budget. Exits nonzero if an accuracy
//! check fails; an exceeded time budget is reported but does not fail the run.

use std::process::ExitCode;
use std::time::Instant;

use mnv_core::checks::{
    eta_errors, eta_sample_points, expansion_errors, golden_checks, loglog_slope, residue_errors,
};
use mnv_core::evolution::{evolve_data, modulate, nmnv, EvolutionConfig, PhaseKind};
use mnv_core::operators::{d_pow, dbar_pow};
use mnv_core::scattering::{check_symmetries, forward_scatter, inverse_scatter, lin_forward, lin_inverse, TransformConfig};
use mnv_core::symbolic::{derive_mnv, golden, parse, Coeff};
use mnv_core::{ComplexField, Grid, SolverConfig};
use num_complex::Complex64;

struct Line {
    id: usize,
    accurate: bool,
    /// Set when the criterion as written cannot hold; the reason is printed.
    literal_fails: Option<String>,
    seconds: f64,
    budget: f64,
    detail: String,
}

impl Line {
    fn print(&self) {
        let on_time = self.seconds <= self.budget;
        let pass = self.accurate && on_time && self.literal_fails.is_none();
        let mut notes = Vec::new();
        if !self.accurate {
            notes.push("accuracy check failed".to_string());
        }
        if !on_time {
            notes.push(format!("over time budget on {} core(s)", rayon::current_num_threads()));
        }
        if let Some(why) = &self.literal_fails {
            notes.push(why.clone());
        }
        println!(
            "C{:<2} {} {} [{:.1} s / budget {:.0} s]{}",
            self.id,
            if pass { "PASS" } else { "FAIL" },
            self.detail,
            self.seconds,
            self.budget,
            if notes.is_empty() { String::new() } else { format!(" ({})", notes.join("; ")) }
        );
    }
}

fn gaussian(grid: Grid, amp: f64, centre: Complex64) -> ComplexField {
    ComplexField::from_fn(grid, |z| Complex64::new(amp, 0.0) * (-(z - centre).norm_sqr()).exp())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn golden_equality() -> Line {
    let (checks, secs) = timed(golden_checks);
    let matched = checks.iter().filter(|c| c.matches).count();
    let variants: Vec<String> = checks.iter().filter_map(|c| c.via_variant.clone()).collect();
    Line {
        id: 1,
        accurate: matched == checks.len(),
        literal_fails: None,
        seconds: secs,
        budget: 5.0,
        detail: format!(
            "golden equality: {matched}/{} coefficients structurally equal (corrected display used: {})",
            checks.len(),
            if variants.is_empty() { "none".to_string() } else { variants.join(", ") }
        ),
    }
}

fn cancellation() -> Line {
    let (result, secs) = timed(|| {
        let d = derive_mnv()?;
        let orders_vanish = [&d.bracket_plain, &d.bracket_sharp]
            .iter()
            .all(|b| b.order_part(5).is_zero() && b.order_part(7).is_zero());
        let linear_ok = d.linear == parse("d(d(d(u))) + db(db(db(u)))")?.neg();
        let four = d.grouped.len() == 4 && d.grouped.iter().all(|t| t.coeff == Coeff::new(3, 4));
        let normalized = golden("mnv_bracket").is_some_and(|g| *g == d.unit_bracket());
        mnv_core::Result::Ok((orders_vanish, linear_ok, four, normalized, d.grouped.len()))
    });
    let (accurate, detail) = match result {
        Ok((a, b, c, e, n)) => (
            a && b && c && e,
            format!(
                "cancellation: orders 5/7 zero {a}; linear part -(d^3+db^3) {b}; {n} terms at 3/4 {c}; (4/3) normalization {e}"
            ),
        ),
        Err(e) => (false, format!("cancellation: derivation failed: {e}")),
    };
    Line { id: 2, accurate, literal_fails: None, seconds: secs, budget: 5.0, detail }
}

fn linearization(tc: &TransformConfig) -> Line {
    let (result, secs) = timed(|| -> mnv_core::Result<_> {
        let unit = gaussian(tc.z_grid, 1.0, Complex64::new(0.0, 0.0));
        let f = lin_forward(&unit, &tc.k_grid);
        let oracle = ComplexField::from_fn(tc.k_grid, |k| Complex64::new((-k.norm_sqr()).exp(), 0.0));
        let quad = f.max_abs_diff(&oracle);
        let mut rem = Vec::new();
        for eps in [0.04, 0.02, 0.01] {
            let r = forward_scatter(&unit.scale_re(eps), tc)?;
            rem.push((eps, (&r - &f.scale_re(eps)).max_norm()));
        }
        Ok((quad, rem))
    });
    let (quad, rem) = result.expect("linearization transforms");
    let sq: Vec<f64> = rem.iter().map(|(e, r)| r / (e * e)).collect();
    let cu: Vec<f64> = rem.iter().map(|(e, r)| r / (e * e * e)).collect();
    let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::MAX, f64::min);
    let literal = spread(&sq) <= 1.5;
    Line {
        id: 3,
        accurate: quad < 1e-6 && spread(&cu) <= 1.5,
        literal_fails: (!literal).then(|| {
            format!(
                "remainder/eps^2 spread {:.2}: R is odd, so the remainder is cubic; remainder/eps^3 spread {:.5}",
                spread(&sq),
                spread(&cu)
            )
        }),
        seconds: secs,
        budget: 120.0,
        detail: format!(
            "linearization: |F(gaussian) - exp(-|k|^2)|_inf = {quad:.1e}; remainder/eps^2 = {:.3e}, {:.3e}, {:.3e}; remainder/eps^3 = {:.4e}, {:.4e}, {:.4e}",
            sq[0], sq[1], sq[2], cu[0], cu[1], cu[2]
        ),
    }
}

struct Shared {
    r: ComplexField,
    u_back: ComplexField,
}

fn roundtrip(tc: &TransformConfig) -> (Line, Shared) {
    let mut errors = Vec::new();
    let mut shared = None;
    let (_, secs) = timed(|| {
        for amp in [0.1, 0.3, 0.5] {
            let u = gaussian(tc.z_grid, amp, Complex64::new(0.0, 0.0));
            let r = forward_scatter(&u, tc).expect("forward transform");
            let back = inverse_scatter(&r, tc).expect("inverse transform");
            errors.push(back.rel_l2_error(&u));
            if amp == 0.3 {
                shared = Some(Shared { r, u_back: back });
            }
        }
    });
    let line = Line {
        id: 4,
        accurate: errors.iter().all(|&e| e < 1e-2),
        literal_fails: None,
        seconds: secs,
        budget: 600.0,
        detail: format!(
            "roundtrip: relative L2 error {:.2e}, {:.2e}, {:.2e} for amplitudes 0.1, 0.3, 0.5",
            errors[0], errors[1], errors[2]
        ),
    };
    (line, shared.expect("amplitude 0.3 ran"))
}

fn symmetries(tc: &TransformConfig) -> Line {
    let (rep, secs) =
        timed(|| check_symmetries(&gaussian(tc.z_grid, 0.3, Complex64::new(0.5, 0.0)), tc).expect("transforms"));
    Line {
        id: 5,
        accurate: rep.max() < 1e-6,
        literal_fails: None,
        seconds: secs,
        budget: 300.0,
        detail: format!(
            "symmetries: negation {:.1e}, reflection {:.1e}, conjugation {:.1e}, mirrored conjugation {:.1e}",
            rep.negation, rep.reflection, rep.conjugation, rep.mirrored_conjugation
        ),
    }
}

fn residue() -> Line {
    let a = Complex64::new(0.3, 0.2);
    let ((errs, spread), secs) = timed(|| residue_errors(Grid::default_k(), a, (5.0, 4.0)).expect("extraction"));
    Line {
        id: 6,
        accurate: errs.iter().all(|&e| e < 1e-4) && spread < 1e-10,
        literal_fails: None,
        seconds: secs,
        budget: 10.0,
        detail: format!(
            "residue: |extracted - a^n| = {:.2e}, {:.2e}, {:.2e}; radius independence {spread:.1e}",
            errs[0], errs[1], errs[2]
        ),
    }
}

fn eta_identity(k_grid: Grid, solver: &SolverConfig) -> Line {
    let r = gaussian(k_grid, 0.3, Complex64::new(0.0, 0.0));
    let zs = eta_sample_points();
    let (errs, secs) = timed(|| eta_errors(&r, &zs, solver).expect("eta solves"));
    let worst = errs.iter().fold(0.0f64, |m, &(a, b)| m.max(a).max(b));
    Line {
        id: 7,
        accurate: worst < 1e-3,
        literal_fails: None,
        seconds: secs,
        budget: 300.0,
        detail: format!("eta identity: worst relative L2 discrepancy {worst:.2e} at {} points", zs.len()),
    }
}

fn bridge(solver: &SolverConfig) -> Line {
    let grid = Grid::new(4.0, 256).unwrap();
    let u = gaussian(grid, 0.3, Complex64::new(0.2, -0.1));
    let moduli = [3.0, 4.0, 5.0, 6.0];
    let (errs, secs) = timed(|| expansion_errors(&u, 0.6, &moduli, solver).expect("solves"));
    let slope = loglog_slope(&moduli, &errs);
    Line {
        id: 8,
        accurate: (slope + 4.0).abs() <= 0.5,
        literal_fails: None,
        seconds: secs,
        budget: 300.0,
        detail: format!(
            "expansion bridge: tail {:.2e}, {:.2e}, {:.2e}, {:.2e} at |k| = 3..6, log-log slope {slope:.3}",
            errs[0], errs[1], errs[2], errs[3]
        ),
    }
}

/// `(‖res‖, ‖∂³u‖, ‖N‖, ratio)` at `t = 0` from `u = I(r)` and the shifted evolutions.
fn residual_ratio(r: &ComplexField, u: &ComplexField, cfg: &EvolutionConfig) -> (f64, f64, f64, f64) {
    let delta = cfg.fd_step;
    let ahead = evolve_data(r, delta, cfg).expect("evolution");
    let behind = evolve_data(r, -delta, cfg).expect("evolution");
    let ut = (&ahead - &behind).scale_re(0.5 / delta);
    let d3 = d_pow(u, 3);
    let n = nmnv(u);
    let res = &(&(&ut + &d3) + &dbar_pow(u, 3)) - &n;
    let scale = d3.l2_norm().max(n.l2_norm());
    (res.l2_norm(), d3.l2_norm(), n.l2_norm(), res.l2_norm() / scale)
}

/// Relative error of the central difference alone, on the linear flow of `u0`.
fn differencing_floor(u0: &ComplexField, k_grid: &Grid, delta: f64) -> f64 {
    let z_grid = *u0.grid();
    let r = lin_forward(u0, k_grid);
    let u = lin_inverse(&r, &z_grid);
    let ahead = lin_inverse(&modulate(&r, delta, PhaseKind::Mnv), &z_grid);
    let behind = lin_inverse(&modulate(&r, -delta, PhaseKind::Mnv), &z_grid);
    let ut = (&ahead - &behind).scale_re(0.5 / delta);
    let d3 = d_pow(&u, 3);
    (&(&ut + &d3) + &dbar_pow(&u, 3)).l2_norm() / d3.l2_norm()
}

fn mnv_residual(default: &TransformConfig, shared: &Shared, head_start: f64) -> Line {
    let cfg = |tc: TransformConfig| EvolutionConfig { phase: PhaseKind::Mnv, transform: tc, fd_step: 1e-3 };
    let (result, secs) = timed(|| {
        let fine = residual_ratio(&shared.r, &shared.u_back, &cfg(*default));
        let coarse_tc = TransformConfig { z_grid: Grid::new(8.0, 192).unwrap(), ..*default };
        let u0 = gaussian(coarse_tc.z_grid, 0.3, Complex64::new(0.0, 0.0));
        let r = forward_scatter(&u0, &coarse_tc).expect("forward transform");
        let u = inverse_scatter(&r, &coarse_tc).expect("inverse transform");
        let coarse = residual_ratio(&r, &u, &cfg(coarse_tc));
        (coarse, fine)
    });
    let (coarse, fine) = result;
    let floor = differencing_floor(&gaussian(default.z_grid, 0.3, Complex64::new(0.0, 0.0)), &default.k_grid, 1e-3);
    Line {
        id: 9,
        accurate: fine.3 <= 0.05,
        literal_fails: (fine.3 >= coarse.3).then(|| {
            format!(
                "ratio does not decrease from N=192 to N=256: the central difference alone gives {floor:.3e} on the linear flow at any z-grid"
            )
        }),
        seconds: secs + head_start,
        budget: 1800.0,
        detail: format!(
            "mNV residual: N=256 |res| {:.3e}, |d^3 u| {:.3e}, |N| {:.3e}, ratio {:.3e}; N=192 ratio {:.3e}; differencing floor {floor:.3e}",
            fine.0, fine.1, fine.2, fine.3, coarse.3
        ),
    }
}

fn conservation(r: &ComplexField) -> Line {
    let (worst, secs) = timed(|| {
        let mut worst: f64 = 0.0;
        for phase in [PhaseKind::Ds, PhaseKind::Mnv] {
            for t in [0.1, 1.0] {
                worst = worst.max((modulate(r, t, phase).l2_norm() - r.l2_norm()).abs() / r.l2_norm());
            }
        }
        worst
    });
    Line {
        id: 10,
        accurate: worst <= 4.0 * f64::EPSILON,
        literal_fails: None,
        seconds: secs,
        budget: 1.0,
        detail: format!("conservation: largest relative change of |r|_2 {worst:.1e} (ds, mnv; t = 0.1, 1.0)"),
    }
}

fn main() -> ExitCode {
    let tc = TransformConfig::default();
    println!(
        "acceptance: z-grid L={} N={}, k-grid L={} N={}, {} worker thread(s)",
        tc.z_grid.half_width(),
        tc.z_grid.points(),
        tc.k_grid.half_width(),
        tc.k_grid.points(),
        rayon::current_num_threads()
    );
    let mut lines = Vec::new();
    let mut emit = |line: Line| {
        line.print();
        lines.push(line);
    };
    emit(golden_equality());
    emit(cancellation());
    emit(linearization(&tc));
    let (rt, shared) = roundtrip(&tc);
    // the 0.3 transform pair of C4 is reused by C9 and C10
    let shared_secs = rt.seconds / 3.0;
    emit(rt);
    let sym_tc = TransformConfig { z_grid: Grid::new(8.0, 128).unwrap(), k_grid: Grid::new(6.0, 64).unwrap(), ..tc };
    emit(symmetries(&sym_tc));
    emit(residue());
    emit(eta_identity(tc.k_grid, &tc.solver));
    emit(bridge(&tc.solver));
    emit(mnv_residual(&tc, &shared, shared_secs));
    emit(conservation(&shared.r));
    let failed: Vec<usize> = lines.iter().filter(|l| !l.accurate).map(|l| l.id).collect();
    if failed.is_empty() {
        println!("acceptance: all accuracy checks hold");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: accuracy failures in {failed:?}");
        ExitCode::FAILURE
    }
}
