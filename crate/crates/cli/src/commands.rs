use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use mnv_core::checks::{eta_errors, eta_sample_points, expansion_errors, golden_checks, loglog_slope, residue_errors};
use mnv_core::evolution::{modulate, residual_with, EvolutionConfig, PhaseKind};
use mnv_core::io::read_field;
use mnv_core::scattering::{
    check_symmetries, forward_scatter, forward_scatter_stats, inverse_scatter_stats, lin_forward, lin_inverse,
    TransformConfig,
};
use mnv_core::symbolic::{derive_mnv, golden, CoeffSeries, Family};
use mnv_core::{ComplexField, Grid};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{parse_phase, RunConfig};
use crate::potential::Potential;
use crate::report::{stats_json, write_outputs, Report};
use crate::Source;

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Compute `r = R(u)`.
    #[arg(long)]
    pub direct: bool,
    /// Compute `u = I(r)`; with `--direct`, reconstructs the input and
    /// reports the roundtrip error.
    #[arg(long)]
    pub inverse: bool,
    #[command(flatten)]
    pub source: Source,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub source: Source,
    /// `ds` or `mnv`.
    #[arg(long)]
    pub phase: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Also compare with the linear flow `F⁻¹(e^{itφ} F u₀)`.
    #[arg(long)]
    pub linear_oracle: bool,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Half-width of the central time difference.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Largest accepted ratio `‖res‖ / max(‖∂³u‖, ‖N(u)‖)`.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    /// Drop the nonlinearity.
    #[arg(long)]
    pub linear: bool,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Compare every coefficient and the final equation with the published forms.
    #[arg(long)]
    pub check_golden: bool,
    /// Print only this level.
    #[arg(long)]
    pub level: Option<usize>,
    /// `plain`, `sharp` or `all`.
    #[arg(long, default_value = "all")]
    pub family: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only these checks (comma-separated): golden, cancellation,
    /// residue, symmetry, eta, bridge, conservation, linear.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
}

/// Grids small enough for the whole suite to finish in minutes.
pub fn verify_defaults() -> RunConfig {
    RunConfig { z_l: 6.0, z_n: 64, k_l: 5.0, k_n: 48, ..RunConfig::default() }
}

fn load(source: &Source, cfg: &RunConfig, grid: Grid) -> anyhow::Result<ComplexField> {
    if let Some(path) = source.input.as_ref().or(cfg.input.as_ref()) {
        return read_field(path).with_context(|| format!("reading {}", path.display()));
    }
    let potential = match (&source.potential, source.amplitude, &cfg.potential) {
        (Some(p), _, _) => p.parse::<Potential>()?,
        (None, Some(a), _) => Potential::gaussian(a),
        (None, None, Some(p)) => p.parse::<Potential>()?,
        (None, None, None) => bail!("no input: pass --input, --potential or --amplitude"),
    };
    Ok(potential.sample(grid))
}

fn grid_json(g: &Grid) -> Value {
    json!({ "half_width": g.half_width(), "points": g.points() })
}

pub fn transform(cfg: RunConfig, args: TransformArgs) -> anyhow::Result<bool> {
    if !args.direct && !args.inverse {
        bail!("pass --direct, --inverse or both");
    }
    let mut tc = cfg.transform()?;
    let mut report = Report::new("transform", &cfg);
    if args.direct {
        let u = load(&args.source, &cfg, tc.z_grid)?;
        tc.z_grid = *u.grid();
        let (r, stats) = forward_scatter_stats(&u, &tc)?;
        report.set("direct", stats_json(&stats));
        report.set("outputs_direct", write_outputs(&cfg, "r", &r)?);
        if args.inverse {
            let (back, stats) = inverse_scatter_stats(&r, &tc)?;
            let err = back.rel_l2_error(&u);
            report.set("inverse", stats_json(&stats));
            report.set("roundtrip_rel_error", err);
            report.set("outputs_inverse", write_outputs(&cfg, "u", &back)?);
            println!("roundtrip relative L2 error {err:.3e}");
        }
        println!("|r|_2 = {:.6e}, max residual {:.3e}", r.l2_norm(), stats.max_residual);
    } else {
        let r = load(&args.source, &cfg, tc.k_grid)?;
        tc.k_grid = *r.grid();
        let (u, stats) = inverse_scatter_stats(&r, &tc)?;
        report.set("inverse", stats_json(&stats));
        report.set("outputs_inverse", write_outputs(&cfg, "u", &u)?);
        println!("|u|_2 = {:.6e}, max residual {:.3e}", u.l2_norm(), stats.max_residual);
    }
    report.set("z_grid", grid_json(&tc.z_grid));
    report.set("k_grid", grid_json(&tc.k_grid));
    report.write(&cfg.out, "transform")?;
    Ok(true)
}

pub fn evolve(cfg: RunConfig, args: EvolveArgs) -> anyhow::Result<bool> {
    let phase = match &args.phase {
        Some(p) => parse_phase(p)?,
        None => cfg.phase,
    };
    let t = args.t.unwrap_or(cfg.t);
    let tc = cfg.transform()?;
    let u0 = load(&args.source, &cfg, tc.z_grid)?;
    let tc = TransformConfig { z_grid: *u0.grid(), ..tc };
    let r = forward_scatter(&u0, &tc)?;
    let rt = modulate(&r, t, phase);
    let (ut, stats) = inverse_scatter_stats(&rt, &tc)?;
    let mut report = Report::new("evolve", &cfg);
    report.set("phase", if phase == PhaseKind::Ds { "ds" } else { "mnv" });
    report.set("t", t);
    report.set("inverse", stats_json(&stats));
    report.set("r_norm", r.l2_norm());
    report.set("rt_norm", rt.l2_norm());
    report.set("norm_drift", (rt.l2_norm() - r.l2_norm()).abs());
    println!("|r|_2 = {:.15e}, |e^(it phi) r|_2 = {:.15e}", r.l2_norm(), rt.l2_norm());
    if args.linear_oracle {
        let lin = lin_inverse(&modulate(&lin_forward(&u0, &tc.k_grid), t, phase), &tc.z_grid);
        let err = ut.rel_l2_error(&lin);
        report.set("linear_oracle_rel_error", err);
        println!("relative L2 distance to the linear flow {err:.3e}");
    }
    report.set("outputs", write_outputs(&cfg, "u_t", &ut)?);
    report.write(&cfg.out, "evolve")?;
    Ok(true)
}

pub fn residual(cfg: RunConfig, args: ResidualArgs) -> anyhow::Result<bool> {
    let tc = cfg.transform()?;
    let u0 = load(&args.source, &cfg, tc.z_grid)?;
    let tc = TransformConfig { z_grid: *u0.grid(), ..tc };
    let ecfg = EvolutionConfig { phase: PhaseKind::Mnv, transform: tc, fd_step: args.delta.unwrap_or(cfg.fd_step) };
    let t = args.t.unwrap_or(cfg.t);
    let (res, rep) = residual_with(&u0, t, &ecfg, !args.linear)?;
    let pass = rep.ratio <= args.tol;
    let mut report = Report::new("residual", &cfg);
    report.set("t", t);
    report.set("fd_step", rep.fd_step);
    report.set("residual_norm", rep.residual_norm);
    report.set("dispersive_norm", rep.dispersive_norm);
    report.set("nonlinear_norm", rep.nonlinear_norm);
    report.set("ratio", rep.ratio);
    report.set("tol", args.tol);
    report.set("pass", pass);
    report.set("outputs", write_outputs(&cfg, "residual", &res)?);
    report.write(&cfg.out, "residual")?;
    println!(
        "{} ratio {:.4e} (tol {:.1e}): |res| {:.4e}, |d^3 u| {:.4e}, |N| {:.4e}",
        if pass { "PASS" } else { "FAIL" },
        rep.ratio,
        args.tol,
        rep.residual_norm,
        rep.dispersive_norm,
        rep.nonlinear_norm
    );
    Ok(pass)
}

fn family_label(f: Family) -> &'static str {
    match f {
        Family::Nu1 => "nu1",
        Family::Nu2 => "nu2",
        Family::SharpNu1 => "sharp_nu1",
        Family::SharpNu2 => "sharp_nu2",
    }
}

pub fn derive(cfg: RunConfig, args: DeriveArgs) -> anyhow::Result<bool> {
    let families: &[Family] = match args.family.as_str() {
        "plain" => &[Family::Nu1, Family::Nu2],
        "sharp" => &[Family::SharpNu1, Family::SharpNu2],
        "all" => &[Family::Nu1, Family::Nu2, Family::SharpNu1, Family::SharpNu2],
        other => bail!("unknown family {other:?} (expected plain, sharp or all)"),
    };
    let levels: Vec<usize> = match args.level {
        Some(l) if l > 3 => bail!("levels 0..=3 are available"),
        Some(l) => vec![l],
        None => (0..=3).collect(),
    };
    let series = CoeffSeries::through(3);
    let mut coeffs = serde_json::Map::new();
    for &l in &levels {
        for &f in families {
            let name = format!("{}_{l}", family_label(f));
            let e = series.get(f, l)?;
            println!("{name} = {e}");
            coeffs.insert(name, json!(e.to_string()));
        }
    }
    let mut report = Report::new("derive", &cfg);
    report.set("coefficients", Value::Object(coeffs));
    let mut ok = true;
    if args.level.is_none() {
        let d = derive_mnv()?;
        println!("[nu1 nu2#]_3 = {}", d.bracket_plain);
        println!("[nu2 nu1#]_3 = {}", d.bracket_sharp);
        println!("orders 5 and 7 of both brackets vanish");
        println!("linear part: {}", d.linear);
        println!("u_t + d^3 u + db^3 u = {}", d.grouped_string());
        println!("final equation: {} terms, each with coefficient 3/4", d.grouped.len());
        report.set("bracket_plain", d.bracket_plain.to_string());
        report.set("bracket_sharp", d.bracket_sharp.to_string());
        report.set("linear", d.linear.to_string());
        report.set("rhs", d.grouped_string());
        report.set("final_terms", d.grouped.len());
        if args.check_golden {
            let unit = d.unit_bracket();
            let bracket_ok = golden("mnv_bracket").is_some_and(|g| *g == unit);
            println!("{} mnv_bracket", if bracket_ok { "PASS" } else { "FAIL" });
            ok &= bracket_ok;
        }
    }
    if args.check_golden {
        let mut entries = Vec::new();
        for c in golden_checks() {
            match &c.via_variant {
                Some(v) => println!("{} {} (printed form differs; matches {v})", if c.matches { "PASS" } else { "FAIL" }, c.name),
                None => println!("{} {}", if c.matches { "PASS" } else { "FAIL" }, c.name),
            }
            ok &= c.matches;
            entries.push(json!({ "name": c.name, "matches": c.matches, "via_variant": c.via_variant }));
        }
        report.set("golden", entries);
        report.set("pass", ok);
    }
    report.write(&cfg.out, "derive")?;
    Ok(ok)
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
    values: Value,
}

const CHECKS: [&str; 8] = ["golden", "cancellation", "residue", "symmetry", "eta", "bridge", "conservation", "linear"];

fn gaussian(grid: Grid, amp: f64, centre: Complex64) -> ComplexField {
    ComplexField::from_fn(grid, |z| Complex64::new(amp, 0.0) * (-(z - centre).norm_sqr()).exp())
}

fn run_check(name: &'static str, cfg: &RunConfig) -> anyhow::Result<Check> {
    let tc = cfg.transform()?;
    let solver = cfg.solver();
    let check = match name {
        "golden" => {
            let checks = golden_checks();
            let failed: Vec<&str> = checks.iter().filter(|c| !c.matches).map(|c| c.name.as_str()).collect();
            Check {
                name,
                pass: failed.is_empty(),
                detail: format!("{} of {} coefficients match", checks.len() - failed.len(), checks.len()),
                values: json!({ "failed": failed }),
            }
        }
        "cancellation" => match derive_mnv() {
            Ok(d) => {
                let bracket = golden("mnv_bracket").is_some_and(|g| *g == d.unit_bracket());
                Check {
                    name,
                    pass: bracket,
                    detail: format!("orders 5, 7 vanish; {} final terms at 3/4", d.grouped.len()),
                    values: json!({ "final_terms": d.grouped.len(), "bracket_matches": bracket }),
                }
            }
            Err(e) => Check { name, pass: false, detail: e.to_string(), values: Value::Null },
        },
        "residue" => {
            let a = Complex64::new(0.3, 0.2);
            let (errs, spread) = residue_errors(Grid::default_k(), a, (5.0, 4.0))?;
            Check {
                name,
                pass: errs.iter().all(|&e| e < 1e-4) && spread < 1e-10,
                detail: format!(
                    "|extracted - a^n| = {:.2e}, {:.2e}, {:.2e}; radius spread {spread:.1e}",
                    errs[0], errs[1], errs[2]
                ),
                values: json!({ "errors": errs, "radius_spread": spread }),
            }
        }
        "symmetry" => {
            let u = ComplexField::from_fn(tc.z_grid, |z| {
                Complex64::new(0.3, 0.1) * (-(z - Complex64::new(0.4, -0.2)).norm_sqr()).exp()
                    + Complex64::new(0.0, 0.15) * (-(z + Complex64::new(0.7, 0.5)).norm_sqr() / 0.5).exp()
            });
            let s = check_symmetries(&u, &tc)?;
            Check {
                name,
                pass: s.max() < 5e-6,
                detail: format!(
                    "negation {:.1e}, reflection {:.1e}, conjugation {:.1e}, mirrored conjugation {:.1e}",
                    s.negation, s.reflection, s.conjugation, s.mirrored_conjugation
                ),
                values: json!({
                    "negation": s.negation,
                    "reflection": s.reflection,
                    "mirrored_conjugation": s.mirrored_conjugation,
                    "conjugation": s.conjugation,
                }),
            }
        }
        "eta" => {
            let r = gaussian(tc.k_grid, 0.3, Complex64::new(0.0, 0.0));
            let errs = eta_errors(&r, &eta_sample_points(), &solver)?;
            let worst = errs.iter().fold(0.0f64, |m, &(a, b)| m.max(a).max(b));
            Check {
                name,
                pass: worst < 1e-3,
                detail: format!("worst relative discrepancy {worst:.2e} over {} points", errs.len()),
                values: json!({ "errors": errs }),
            }
        }
        "bridge" => {
            let grid = Grid::new(4.0, 256)?;
            let u = gaussian(grid, 0.3, Complex64::new(0.2, -0.1));
            let moduli = [3.0, 4.0, 5.0, 6.0];
            let errs = expansion_errors(&u, 0.6, &moduli, &solver)?;
            let slope = loglog_slope(&moduli, &errs);
            Check {
                name,
                pass: (slope + 4.0).abs() <= 0.5,
                detail: format!("log-log slope {slope:.3}"),
                values: json!({ "moduli": moduli, "errors": errs, "slope": slope }),
            }
        }
        "conservation" => {
            let r = gaussian(tc.k_grid, 0.3, Complex64::new(0.3, -0.2));
            let mut worst: f64 = 0.0;
            for phase in [PhaseKind::Ds, PhaseKind::Mnv] {
                for t in [0.1, 1.0] {
                    let drift = (modulate(&r, t, phase).l2_norm() - r.l2_norm()).abs() / r.l2_norm();
                    worst = worst.max(drift);
                }
            }
            Check {
                name,
                pass: worst < 1e-14,
                detail: format!("largest relative norm drift {worst:.1e}"),
                values: json!({ "max_drift": worst }),
            }
        }
        "linear" => {
            let unit = gaussian(tc.z_grid, 1.0, Complex64::new(0.0, 0.0));
            let f = lin_forward(&unit, &tc.k_grid);
            let oracle = ComplexField::from_fn(tc.k_grid, |k| Complex64::new((-k.norm_sqr()).exp(), 0.0));
            let quad = f.max_abs_diff(&oracle);
            // R is odd, so R(εu) − εF(u) is cubic in ε
            let mut quadratic = Vec::new();
            let mut cubic = Vec::new();
            for eps in [0.04, 0.02, 0.01] {
                let r = forward_scatter(&unit.scale_re(eps), &tc)?;
                let rem = (&r - &f.scale_re(eps)).max_norm();
                quadratic.push(rem / (eps * eps));
                cubic.push(rem / (eps * eps * eps));
            }
            let (lo, hi) = cubic.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            Check {
                name,
                pass: quad < 1e-6 && hi <= 1.5 * lo,
                detail: format!(
                    "|F(unit) - exp(-|k|^2)| = {quad:.1e}; remainder/eps^3 = {:.4e}, {:.4e}, {:.4e}; remainder/eps^2 = {:.2e}, {:.2e}, {:.2e}",
                    cubic[0], cubic[1], cubic[2], quadratic[0], quadratic[1], quadratic[2]
                ),
                values: json!({ "quadrature_error": quad, "remainder_over_eps3": cubic, "remainder_over_eps2": quadratic }),
            }
        }
        other => bail!("unknown check {other:?}"),
    };
    Ok(check)
}

pub fn verify(cfg: RunConfig, args: VerifyArgs) -> anyhow::Result<bool> {
    for name in &args.only {
        if !CHECKS.contains(&name.as_str()) {
            bail!("unknown check {name:?} (expected one of {})", CHECKS.join(", "));
        }
    }
    let selected: Vec<&'static str> =
        CHECKS.iter().copied().filter(|c| args.only.is_empty() || args.only.iter().any(|o| o == c)).collect();
    let mut entries = Vec::new();
    let mut all = true;
    for name in selected {
        let start = Instant::now();
        let c = run_check(name, &cfg)?;
        let secs = start.elapsed().as_secs_f64();
        println!("{} {:<12} {} ({secs:.1} s)", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        all &= c.pass;
        entries.push(json!({ "name": c.name, "pass": c.pass, "detail": c.detail, "values": c.values }));
    }
    let mut report = Report::new("verify", &cfg);
    report.set("checks", entries);
    report.set("pass", all);
    report.write(&cfg.out, "verify")?;
    Ok(all)
}
