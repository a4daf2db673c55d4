//! Acceptance criteria. Every criterion prints one `PASS`/`FAIL` line; the
//! binary exits non-zero when any of them fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use diamag_core::degennes::{fiber_ground, mu1, mu1_prime, theta0_minimize, DEFAULT_DT, DEFAULT_T_MAX};
use diamag_core::disc::{branch_crossings, disc_lambda1};
use diamag_core::fem::ground_state;
use diamag_core::geometry::{BoundaryCurve, Mesh, RadialShape};
use diamag_core::spectral::*;
use diamag_core::supercond::{bifurcation_scan, fem_energy, hc3_local, GlInit, GlOptions, Hc3Options};
use diamag_core::{Error, Result};

type Check = fn(&Ctx) -> Result<(bool, String)>;

/// Shared constants computed once.
struct Ctx {
    theta0: f64,
}

fn ellipse() -> BoundaryCurve {
    BoundaryCurve::new(RadialShape::ellipse(1.5, 1.0), 256).unwrap()
}

fn disc(r: f64) -> BoundaryCurve {
    BoundaryCurve::new(RadialShape::disc(r), 256).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c01_de_gennes_constant(_: &Ctx) -> Result<(bool, String)> {
    let t = Instant::now();
    let base = theta0_minimize(DEFAULT_DT, DEFAULT_T_MAX, 1e-7)?;
    let elapsed = t.elapsed().as_secs_f64();
    let fine = theta0_minimize(0.5 * DEFAULT_DT, DEFAULT_T_MAX, 1e-7)?;
    let long = theta0_minimize(DEFAULT_DT, 2.0 * DEFAULT_T_MAX, 1e-7)?;
    let drift = (fine.theta0 - base.theta0).abs().max((long.theta0 - base.theta0).abs());
    let pass = base.theta0 > 0.58 && base.theta0 < 0.60 && drift < 1e-5 && elapsed < 5.0;
    Ok((pass, format!("theta0 = {:.7}, drift = {drift:.1e}, runtime = {elapsed:.2} s", base.theta0)))
}

fn c02_stationarity(ctx: &Ctx) -> Result<(bool, String)> {
    let c = theta0_minimize(DEFAULT_DT, DEFAULT_T_MAX, 1e-7)?;
    let mode = fiber_ground(c.xi0, DEFAULT_DT, DEFAULT_T_MAX)?;
    let analytic = mu1_prime(&mode)?;
    // independent: central differences of μ₁
    let h = 1e-3;
    let fd = (mu1(c.xi0 + h, DEFAULT_DT, DEFAULT_T_MAX)? - mu1(c.xi0 - h, DEFAULT_DT, DEFAULT_T_MAX)?) / (2.0 * h);
    let gap = (c.xi0 * c.xi0 - ctx.theta0).abs();
    let pass = gap < 1e-3 && analytic.abs() < 1e-5 && fd.abs() < 1e-5;
    Ok((pass, format!("|xi0^2 - theta0| = {gap:.1e}, mu1'(xi0) = {analytic:.1e}, finite difference = {fd:.1e}")))
}

fn c03_disc_oracle(_: &Ctx) -> Result<(bool, String)> {
    let s = Setup::new("disc", disc(1.0)).with_potential(PotentialChoice::Standard);
    let mut worst: f64 = 0.0;
    for b in [5.0, 10.0, 20.0, 40.0] {
        let fem = s.solve(b)?.result.lambda1;
        let exact = disc_lambda1(b, 1.0)?.lambda1;
        worst = worst.max(rel(fem, exact));
    }
    Ok((worst <= 1e-2, format!("max relative deviation = {worst:.2e}")))
}

fn c04_gauge_robustness(_: &Ctx) -> Result<(bool, String)> {
    let b = 10.0;
    let mut diffs = vec![];
    for refine in [1.0, 0.7, 0.5] {
        let s = Setup::new("ellipse", ellipse()).with_mesh(MeshChoice::Reference { refine });
        let mesh = s.build_mesh(b)?;
        let solve = |p| -> Result<f64> {
            let pot = s.potential_on(&mesh, p)?;
            Ok(ground_state(&s.forms_on(&mesh, &pot, b)?, &s.eigen, None)?.lambda1)
        };
        let standard = solve(PotentialChoice::Standard)?;
        let tangential = solve(PotentialChoice::DomainTangential)?;
        diffs.push(rel(tangential, standard));
    }
    let pass = diffs[0] <= 1e-3 && diffs[1] < diffs[0] && diffs[2] < diffs[1];
    Ok((pass, format!("relative differences over refinements = {:?}", diffs.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>())))
}

fn c05_hellmann_feynman(_: &Ctx) -> Result<(bool, String)> {
    let step = 0.1;
    let mut worst: f64 = 0.0;
    for curve in [disc(1.0), ellipse()] {
        let s = Setup::new("domain", curve);
        for b in [10.0, 20.0] {
            let sol = s.solve(b)?;
            let hf = derivative_hf(&sol.mesh, &sol.forms, &sol.result.psi, &sol.potential, &sol.potential)?;
            let fd = richardson_fd(&sol.forms, &sol.result, step, &s.eigen)?;
            worst = worst.max(rel(hf, fd));
        }
    }
    Ok((worst <= 1e-3, format!("max relative HF/FD deviation = {worst:.2e} (step {step})")))
}

fn c06_two_term_asymptotics(ctx: &Ctx) -> Result<(bool, String)> {
    let b_hi = 160.0;
    let window = (b_hi / 4.0, b_hi);
    let grid: Vec<f64> = (0..=60).map(|i| window.0 + (window.1 - window.0) * i as f64 / 60.0).collect();
    let f1 = fit_asymptotics(&disc_curve(1.0, &grid)?, window)?;
    let f2 = fit_asymptotics(&disc_curve(2.0, &grid)?, window)?;
    let ratio = f1.b_hat / f2.b_hat;
    let pass = (f1.a_hat - ctx.theta0).abs() <= 0.02 && f1.b_hat < 0.0 && (ratio - 2.0).abs() <= 0.4;
    Ok((
        pass,
        format!("a_hat = {:.4}, b_hat(R=1) = {:.4}, b_hat(R=2) = {:.4}, ratio = {ratio:.3}, C_fit = {:.3}", f1.a_hat, f1.b_hat, f2.b_hat, f1.c_fit),
    ))
}

fn c07_derivative_limit(ctx: &Ctx) -> Result<(bool, String)> {
    let s = Setup::new("ellipse", ellipse());
    let mut dev = vec![];
    let mut values = vec![];
    for b in [10.0, 20.0, 40.0] {
        let sol = s.solve(b)?;
        let tubular = s.potential_on(&sol.mesh, PotentialChoice::Tubular { eps: None, s0: None })?;
        let d = derivative_hf(&sol.mesh, &sol.forms, &sol.result.psi, &sol.potential, &tubular)?;
        values.push(d);
        dev.push(rel(d, ctx.theta0));
    }
    let pass = dev[2] <= 0.1 && dev[1] < dev[0] && dev[2] < dev[1];
    Ok((pass, format!("derivatives at B = 10, 20, 40: {values:.4?}, relative deviation from theta0: {dev:.3?}")))
}

fn c08_disc_oscillation(ctx: &Ctx) -> Result<(bool, String)> {
    let grid: Vec<f64> = (0..=160).map(|i| 20.0 + 0.25 * i as f64).collect();
    let d = branch_crossings(&grid, 1.0)?;
    let (lo, hi) = d.slope_range();
    let ordered = d.crossings.iter().all(|c| c.slope_right <= c.slope_left);
    let pass = d.crossings.len() >= 3 && hi > ctx.theta0 && ctx.theta0 > lo && lo > 0.0 && ordered;
    Ok((pass, format!("{} crossings, slopes in [{lo:.4}, {hi:.4}], right <= left at every crossing: {ordered}", d.crossings.len())))
}

fn c09_agmon_scaling(_: &Ctx) -> Result<(bool, String)> {
    let curve = ellipse();
    let s = Setup::new("ellipse", curve.clone());
    let fields = [10.0, 20.0, 40.0, 80.0];
    let mut lengths = vec![];
    let mut m2 = vec![];
    for b in fields {
        let sol = s.solve(b)?;
        let p = agmon_profile(&sol.mesh, &sol.forms, &sol.result.psi, &curve)?;
        lengths.push(p.decay_length.ok_or_else(|| Error::Numeric("no decay length".into()))?);
        m2.push(p.moments[1]);
    }
    let exponent = power_law_exponent(&fields, &lengths)?;
    let ratios = [m2[2] / m2[0], m2[3] / m2[1]];
    let pass = (exponent + 0.5).abs() <= 0.1 && ratios.iter().all(|r| (r - 0.25).abs() <= 0.05);
    Ok((pass, format!("decay-length exponent = {exponent:.3}, second-moment ratios (10->40, 20->80) = {ratios:.3?}")))
}

fn c10_localization(_: &Ctx) -> Result<(bool, String)> {
    let curve = ellipse();
    let s = Setup::new("ellipse", curve.clone());
    let tail = |b: f64| -> Result<f64> {
        let sol = s.solve(b)?;
        localization_mass(&sol.mesh, &sol.forms, &sol.result.psi, &curve, &s.profile, s.eps0())
    };
    let (t10, t40) = (tail(10.0)?, tail(40.0)?);
    let d = Setup::new("disc", disc(1.0));
    let sol = d.solve(10.0)?;
    let graceful = matches!(localization_mass(&sol.mesh, &sol.forms, &sol.result.psi, &d.curve, &d.profile, 0.1), Err(Error::NotApplicable(_)));
    let pass = t40 * 10.0 <= t10 && graceful;
    Ok((
        pass,
        format!("tail mass beyond eps0 = {:.3}: B=10 {t10:.3e}, B=40 {t40:.3e} (factor {:.2}); disc not applicable: {graceful}", s.eps0(), t10 / t40),
    ))
}

fn c11_derivative_bound_term(_: &Ctx) -> Result<(bool, String)> {
    let s = Setup::new("ellipse", ellipse());
    let mut scaled = vec![];
    for b in [10.0, 20.0, 40.0] {
        let sol = s.solve(b)?;
        let tubular = s.potential_on(&sol.mesh, PotentialChoice::Tubular { eps: None, s0: None })?;
        scaled.push(b * derivative_bound_terms(&sol.mesh, &sol.forms, &sol.result.psi, &tubular)?);
    }
    let c_fit = scaled.iter().cloned().fold(0.0, f64::max);
    let pass = scaled.iter().all(|v| v.is_finite()) && scaled.windows(2).all(|w| w[1] <= w[0]);
    Ok((pass, format!("B * int |A|^2 |psi|^2 at B = 10, 20, 40: {scaled:.2?}; fitted C = {c_fit:.2}")))
}

fn c12_critical_field(ctx: &Ctx) -> Result<(bool, String)> {
    let mut ratios = vec![];
    let mut worst: f64 = 0.0;
    for kappa in [4.0, 8.0, 16.0] {
        let r = hc3_local(kappa, |b| Ok(disc_lambda1(b, 1.0)?.lambda1), &Hc3Options::default())?;
        worst = worst.max(r.residual.abs() / (kappa * kappa));
        ratios.push(r.h_loc * ctx.theta0 / kappa);
    }
    let pass = worst <= 1e-3 && (0.85..=1.15).contains(&ratios[2]) && (ratios[2] - 1.0).abs() < (ratios[0] - 1.0).abs();
    Ok((pass, format!("H_loc*theta0/kappa for kappa = 4, 8, 16: {ratios:.4?}; max |residual|/kappa^2 = {worst:.1e}")))
}

fn c13_local_equals_global(ctx: &Ctx) -> Result<(bool, String)> {
    let kappa = 8.0;
    let guess = kappa / ctx.theta0;
    let grid: Vec<f64> = (0..=10).map(|i| guess * (0.8 + 0.05 * i as f64)).collect();
    let step = 0.05 * guess;
    let mut pass = true;
    let mut detail = vec![];
    for (name, curve) in [("disc", disc(1.0)), ("ellipse", ellipse())] {
        // hc3 and the GL scan share one discretization
        let b_design = kappa * kappa / ctx.theta0;
        let s = Setup::new(name, curve).with_mesh(MeshChoice::ReferenceAt { b: b_design, refine: 2.0 });
        let mesh: Arc<Mesh> = Arc::new(s.build_mesh(b_design)?);
        let pot = s.potential_on(&mesh, PotentialChoice::DomainTangential)?;
        let forms = s.forms_on(&mesh, &pot, b_design)?;
        let hc = hc3_local(kappa, fem_energy(&forms, s.eigen), &Hc3Options { samples: 9, ..Default::default() })?;
        let scan = bifurcation_scan(&mesh, &forms, kappa, &grid, &GlInit::default(), &GlOptions::default(), &s.eigen)?;
        let above_normal = scan.rows.iter().filter(|r| r.h > hc.h_loc).all(|r| r.sup_psi <= 1e-4);
        let ok = (scan.underline_est - hc.h_loc).abs() <= step && (scan.overline_est - hc.h_loc).abs() <= step && above_normal;
        pass &= ok;
        detail.push(format!(
            "{name}: H_loc = {:.3}, scan [{:.3}, {:.3}], step {step:.3}, normal above: {above_normal}",
            hc.h_loc, scan.underline_est, scan.overline_est
        ));
    }
    Ok((pass, detail.join("; ")))
}

fn c14_monotone_tail(_: &Ctx) -> Result<(bool, String)> {
    let grid: Vec<f64> = (1..=40).map(|i| 0.5 * i as f64).collect();
    let mut pass = true;
    let mut detail = vec![];
    for (name, shape) in [("disc", RadialShape::disc(1.0)), ("ellipse", RadialShape::ellipse(1.5, 1.0)), ("star", RadialShape::star(3, 0.1))] {
        let s = Setup::new(name, BoundaryCurve::new(shape, 256)?).with_mesh(MeshChoice::ReferenceAt { b: 20.0, refine: 1.0 });
        let m = monotonicity_check(&sweep(&s, &grid, &SweepOptions::default())?);
        let ok = match m.b0 {
            Some(b0) => m.violations.iter().all(|v| *v < b0),
            None => false,
        };
        pass &= ok;
        detail.push(format!("{name}: B0 = {:?}, violations {:?}", m.b0, m.violations));
    }
    Ok((pass, detail.join("; ")))
}

fn main() {
    let criteria: [(&str, Check); 14] = [
        ("C01 de Gennes constant", c01_de_gennes_constant),
        ("C02 stationarity cross-check", c02_stationarity),
        ("C03 disc oracle agreement", c03_disc_oracle),
        ("C04 gauge robustness", c04_gauge_robustness),
        ("C05 Hellmann-Feynman vs finite differences", c05_hellmann_feynman),
        ("C06 two-term asymptotics", c06_two_term_asymptotics),
        ("C07 derivative limit", c07_derivative_limit),
        ("C08 disc oscillation", c08_disc_oscillation),
        ("C09 Agmon scaling", c09_agmon_scaling),
        ("C10 localization near curvature maxima", c10_localization),
        ("C11 derivative bound term", c11_derivative_bound_term),
        ("C12 local critical field", c12_critical_field),
        ("C13 local equals global field", c13_local_equals_global),
        ("C14 monotone tail", c14_monotone_tail),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let theta0 = theta0_minimize(DEFAULT_DT, DEFAULT_T_MAX, 1e-7).expect("de Gennes constant").theta0;
    let ctx = Ctx { theta0 };
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&ctx)));
        let secs = t.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {name}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
