use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context as _;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use diamag_core::degennes::{scan, theta0_minimize, write_scan_csv};
use diamag_core::disc::{branch_crossings, disc_lambda1};
use diamag_core::spectral::{
    agmon_profile, fit_asymptotics, localization_mass, localization_shares, monotonicity_check, sweep, write_profile_csv, MeshChoice, Setup,
    SweepOptions,
};
use diamag_core::supercond::{bifurcation_scan, fem_energy, hc3_local, CriticalFieldResult, GlInit, THETA0_GUESS};
use diamag_core::Error;

use crate::config::{ConfigError, Grid, Hc3Solver, RunConfig};

/// Effective inputs of one run and the record of what it wrote.
pub struct Run {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub timings: Vec<(String, f64)>,
    pub outputs: Vec<String>,
}

impl Run {
    fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let r = f();
        self.timings.push((label.to_string(), start.elapsed().as_secs_f64()));
        r
    }

    /// Creates `name` in the output directory; writes happen on this thread only.
    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>) -> anyhow::Result<()> {
        let path = self.out.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        f(&mut w)?;
        w.flush()?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn setup(&self) -> anyhow::Result<Setup> {
        let mut s = Setup::new(self.cfg.domain.name(), self.cfg.curve()?)
            .with_potential(self.cfg.potential)
            .with_order(self.cfg.order)
            .with_eigen(self.cfg.eigen_options(self.seed));
        if let Some(m) = self.cfg.mesh {
            s = s.with_mesh(m);
        }
        Ok(s)
    }

    fn kappas(&self, default: Vec<f64>) -> anyhow::Result<Vec<f64>> {
        self.cfg.grid(&self.cfg.kappa, "kappa", Grid::List(default))
    }
}

/// Every field value is printed with `{}` (shortest round-trip form).
fn fmt_field(b: f64) -> String {
    format!("{b}")
}

pub fn degennes(run: &mut Run) -> anyhow::Result<Value> {
    let d = run.cfg.degennes;
    let constants = run.time("theta0_minimize", || theta0_minimize(d.dt, d.t_max, d.tol_xi))?;
    let xis = Grid::range(d.xi_start, d.xi_stop, d.xi_step).values("xi grid")?;
    let rows = run.time("scan", || scan(&xis, d.dt, d.t_max))?;
    run.write("degennes_scan.csv", |w| Ok(write_scan_csv(&rows, w)?))?;
    Ok(serde_json::to_value(&constants)?)
}

pub fn disc_spectrum(run: &mut Run) -> anyhow::Result<Value> {
    let r = run.cfg.domain.disc_radius().ok_or_else(|| ConfigError("disc-spectrum needs a builtin disc domain".into()))?;
    let grid = run.cfg.grid(&run.cfg.b_grid, "B_grid", Grid::range(5.0, 40.0, 0.5))?;
    let diagram = run.time("branch_crossings", || branch_crossings(&grid, r))?;
    run.write("branches.csv", |w| Ok(diagram.write_csv(w)?))?;
    run.write_json("crossings.json", &diagram.crossings_json())?;
    run.write("envelope.csv", |w| {
        writeln!(w, "B,lambda1,m_star,slope")?;
        for g in &diagram.ground {
            writeln!(w, "{},{},{},{}", g.b, g.lambda1, g.m_star, g.slope)?;
        }
        Ok(())
    })?;
    let (lo, hi) = diagram.slope_range();
    Ok(json!({
        "R": r,
        "points": grid.len(),
        "crossings": diagram.crossings.len(),
        "slope_min": lo,
        "slope_max": hi,
    }))
}

pub fn eig2d(run: &mut Run) -> anyhow::Result<Value> {
    let b = run.cfg.b.unwrap_or(10.0);
    let setup = run.setup()?;
    let sol = run.time("solve", || setup.solve(b))?;
    let space = sol.forms.space().clone();
    let mut summary = sol.result.summary_json();
    let extra = json!({
        "B": b,
        "domain": setup.name,
        "potential_kind": sol.result.kind.label(),
        "shift": sol.result.shift,
        "gap_estimate": sol.result.gap_estimate,
        "dofs": space.n_dofs(),
        "nodes": sol.mesh.node_count(),
        "elements": sol.mesh.element_count(),
        "seed": run.seed,
    });
    summary.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    run.write_json("eigen.json", &summary)?;
    run.write("field.csv", |w| {
        writeln!(w, "x,y,re,im,abs2")?;
        for (x, u) in space.points().iter().zip(&sol.result.psi) {
            writeln!(w, "{},{},{},{},{}", x[0], x[1], u.re, u.im, u.norm_sqr())?;
        }
        Ok(())
    })?;
    run.write("potential.csv", |w| Ok(sol.potential.write_csv(&sol.mesh, w)?))?;
    Ok(summary)
}

/// `None` for diagnostics that do not apply to the domain.
fn optional<T>(r: diamag_core::Result<T>) -> diamag_core::Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NotApplicable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Serialize)]
struct LocalizationRow {
    b: f64,
    m1: f64,
    m2: f64,
    decay_length: Option<f64>,
    alpha_hat: Option<f64>,
    tail_mass: Option<f64>,
    shares: Option<Vec<f64>>,
    note: Option<String>,
}

pub fn sweep_cmd(run: &mut Run) -> anyhow::Result<Value> {
    let grid = run.cfg.grid(&run.cfg.b_grid, "B_grid", Grid::range(1.0, 20.0, 1.0))?;
    let setup = run.setup()?;
    let opts = SweepOptions { fd: run.cfg.fd, fd_step: run.cfg.fd_step };
    let curve = run.time("sweep", || sweep(&setup, &grid, &opts))?;
    run.write("sweep.csv", |w| Ok(curve.write_csv(w)?))?;

    let explicit = run.cfg.fit_window;
    let window = explicit.unwrap_or((grid[grid.len() / 2], grid[grid.len() - 1]));
    let fit = match fit_asymptotics(&curve, window) {
        Ok(f) => serde_json::to_value(&f)?,
        Err(e) if explicit.is_none() => json!({ "window": window, "error": e.to_string() }),
        Err(e) => return Err(e.into()),
    };
    run.write_json("fit.json", &json!({ "fit": fit, "seed": run.seed }))?;
    let mono = monotonicity_check(&curve);

    let mut localized = Value::Null;
    if run.cfg.localization.unwrap_or(true) {
        let eps0 = run.cfg.eps0.unwrap_or_else(|| setup.eps0());
        let rows = run.time("localization", || {
            grid.par_iter()
                .map(|&b| -> diamag_core::Result<_> {
                    let sol = setup.solve(b)?;
                    let (mesh, forms, psi) = (&sol.mesh, &sol.forms, &sol.result.psi);
                    let tail_mass = optional(localization_mass(mesh, forms, psi, &setup.curve, &setup.profile, eps0))?;
                    let shares = optional(localization_shares(mesh, forms, psi, &setup.curve, &setup.profile))?;
                    let (profile, note) = match agmon_profile(mesh, forms, psi, &setup.curve) {
                        Ok(p) => (Some(p), None),
                        // an unresolved tail is a diagnostic, not a failed run
                        Err(Error::Precondition(msg)) => (None, Some(msg)),
                        Err(e) => return Err(e),
                    };
                    Ok((b, profile, tail_mass, shares, note))
                })
                .collect::<diamag_core::Result<Vec<_>>>()
        })?;
        let mut table = Vec::new();
        for (b, profile, tail_mass, shares, note) in rows {
            let (m, l, a) = match &profile {
                Some(p) => (p.moments, p.decay_length, p.alpha_hat),
                None => ([f64::NAN; 2], None, None),
            };
            if let Some(p) = profile.as_ref().filter(|p| p.applicable) {
                run.write(&format!("profile_B{}.csv", fmt_field(b)), |w| Ok(write_profile_csv(p, w)?))?;
            }
            table.push(LocalizationRow { b, m1: m[0], m2: m[1], decay_length: l, alpha_hat: a, tail_mass, shares, note });
        }
        run.write("localization.csv", |w| {
            writeln!(w, "B,m1,m2,decay_length,alpha_hat,tail_mass")?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for r in &table {
                writeln!(w, "{},{},{},{},{},{}", r.b, r.m1, r.m2, opt(r.decay_length), opt(r.alpha_hat), opt(r.tail_mass))?;
            }
            Ok(())
        })?;
        localized = json!({ "eps0": eps0, "rows": table });
    }

    Ok(json!({
        "domain": curve.domain,
        "potential_kind": curve.potential_kind,
        "points": curve.points.len(),
        "lambda1_last": curve.points.last().map(|p| p.lambda1),
        "fit": fit,
        "monotonicity": mono,
        "localization": localized,
    }))
}

/// Mesh of the FEM solve for coupling `kappa`: a field-independent grading
/// designed for the expected threshold `κ²/Θ₀`.
fn fixed_mesh_choice(cfg: &RunConfig, design_b: f64) -> MeshChoice {
    match cfg.mesh {
        None => MeshChoice::ReferenceAt { b: design_b, refine: 1.0 },
        Some(MeshChoice::Reference { refine }) => MeshChoice::ReferenceAt { b: design_b, refine },
        Some(m) => m,
    }
}

pub fn hc3(run: &mut Run) -> anyhow::Result<Value> {
    let kappas = run.kappas(vec![4.0, 8.0])?;
    let opts = run.cfg.hc3;
    let mut results: Vec<CriticalFieldResult> = Vec::new();
    for &kappa in &kappas {
        let label = format!("hc3_kappa{}", fmt_field(kappa));
        let res = match run.cfg.hc3_solver {
            Hc3Solver::Disc => {
                let r = run.cfg.domain.disc_radius().ok_or_else(|| ConfigError("the disc solver needs a builtin disc domain".into()))?;
                run.time(&label, || hc3_local(kappa, |b| Ok(disc_lambda1(b, r)?.lambda1), &opts))?
            }
            Hc3Solver::Fem => {
                let design = kappa * kappa / THETA0_GUESS;
                let setup = run.setup()?.with_mesh(fixed_mesh_choice(&run.cfg, design));
                run.time(&label, || -> anyhow::Result<_> {
                    let mesh = setup.build_mesh(design)?;
                    let pot = setup.potential_on(&mesh, setup.potential)?;
                    let forms = setup.forms_on(&mesh, &pot, design)?;
                    Ok(hc3_local(kappa, fem_energy(&forms, setup.eigen), &opts)?)
                })?
            }
        };
        let mut doc = res.to_json();
        doc["seed"] = json!(run.seed);
        run.write_json(&format!("{label}.json"), &doc)?;
        results.push(res);
    }
    run.write("hc3.csv", |w| {
        writeln!(w, "kappa,H_loc,underline,overline,residual")?;
        for r in &results {
            writeln!(w, "{},{},{},{},{}", r.kappa, r.h_loc, r.underline, r.overline, r.residual)?;
        }
        Ok(())
    })?;
    Ok(json!({
        "solver": run.cfg.hc3_solver,
        "results": results.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    }))
}

pub fn gl_scan(run: &mut Run) -> anyhow::Result<Value> {
    let kappas = run.kappas(vec![8.0])?;
    let [kappa] = kappas[..] else {
        return Err(ConfigError("gl-scan takes a single kappa".into()).into());
    };
    let guess = kappa / THETA0_GUESS;
    let h_grid = run.cfg.grid(&run.cfg.h_grid, "H_grid", Grid::List((0..=10).map(|i| guess * (0.8 + 0.05 * i as f64)).collect()))?;
    let design = kappa * kappa / THETA0_GUESS;
    let setup = run.setup()?.with_mesh(fixed_mesh_choice(&run.cfg, design));
    let init = GlInit::Normal { seed: run.seed, amplitude: run.cfg.gl_init_amplitude.unwrap_or(1e-2) };
    let gl = run.cfg.gl;
    let scan = run.time("bifurcation_scan", || -> anyhow::Result<_> {
        let mesh = setup.build_mesh(design)?;
        let pot = setup.potential_on(&mesh, setup.potential)?;
        let forms = setup.forms_on(&mesh, &pot, design)?;
        Ok(bifurcation_scan(&mesh, &forms, kappa, &h_grid, &init, &gl, &setup.eigen)?)
    })?;
    run.write("gl_scan.csv", |w| Ok(scan.write_csv(w)?))?;
    let summary = json!({
        "kappa": kappa,
        "underline_est": scan.underline_est,
        "overline_est": scan.overline_est,
        "consistent": scan.consistent,
        "rows": scan.rows.len(),
        "seed": run.seed,
    });
    run.write_json("gl_scan.json", &summary)?;
    Ok(summary)
}
