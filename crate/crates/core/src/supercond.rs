//! Local third critical field from `λ₁(κH) = κ²`, and the Ginzburg–Landau
//! energy at a frozen vector potential with its normal-state bifurcation.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::sparse::Factor;
use crate::fem::{ground_state, AssembledForms, EigenOptions, ElementGeometry};
use crate::geometry::Mesh;
use crate::C64;

/// Rough value of the de Gennes constant, used only to seed field brackets.
pub const THETA0_GUESS: f64 = 0.59;

/// Ginzburg–Landau parameter and applied field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlParams {
    pub kappa: f64,
    pub h: f64,
}

impl GlParams {
    pub fn new(kappa: f64, h: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) || !(h > 0.0 && h.is_finite()) {
            return Err(Error::Precondition(format!("need kappa > 0 and H > 0, got kappa = {kappa}, H = {h}")));
        }
        Ok(Self { kappa, h })
    }

    /// Field strength `κH` of the linearized operator.
    pub fn b(&self) -> f64 {
        self.kappa * self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hc3Options {
    /// Stop when `|λ₁(κH) − κ²| ≤ tol·κ²`.
    pub tol: f64,
    /// Samples of the scan that locates sign changes of `λ₁(κH) − κ²`.
    pub samples: usize,
    pub kappa_min: f64,
}

impl Default for Hc3Options {
    fn default() -> Self {
        Self { tol: 1e-4, samples: 17, kappa_min: 4.0 }
    }
}

/// Solution of `λ₁(κH) = κ²`.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalFieldResult {
    pub kappa: f64,
    #[serde(rename = "H_loc")]
    pub h_loc: f64,
    /// Final bisection bracket `[H_lo, H_hi]`.
    pub bracket: [f64; 2],
    /// `λ₁(κ H_loc) − κ²`.
    pub residual: f64,
    /// `inf {H : λ₁(κH) ≥ κ²}`, resolved to the bisection tolerance.
    pub underline: f64,
    /// `inf {H : λ₁(κH′) ≥ κ² for all H′ > H}` on the scanned range.
    pub overline: f64,
    /// `λ₁(κH) − κ²` increased along every sampled point of the scan.
    pub monotone_samples: bool,
    pub evaluations: usize,
}

impl CriticalFieldResult {
    /// `{kappa, H_loc, underline, overline, residual}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kappa": self.kappa,
            "H_loc": self.h_loc,
            "underline": self.underline,
            "overline": self.overline,
            "residual": self.residual,
        })
    }
}

/// Local critical field for the ground-energy map `lambda1: B ↦ λ₁(B)`.
///
/// The range around `κ/Θ₀` is widened until `g(H) = λ₁(κH) − κ²` changes
/// sign, then sampled; each upward sign change is refined by bisection.
/// The first gives the lower local field, the last one the upper; when they
/// differ the window is returned as [`Error::NonUnique`].
pub fn hc3_local<F>(kappa: f64, lambda1: F, opts: &Hc3Options) -> Result<CriticalFieldResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(kappa >= opts.kappa_min) {
        return Err(Error::Precondition(format!("kappa = {kappa} is below kappa_min = {}", opts.kappa_min)));
    }
    if !(opts.tol > 0.0) || opts.samples < 2 {
        return Err(Error::Precondition("hc3 needs tol > 0 and at least two samples".into()));
    }
    let k2 = kappa * kappa;
    let evaluations = std::sync::atomic::AtomicUsize::new(0);
    let g = |h: f64| -> Result<f64> {
        evaluations.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        Ok(lambda1(kappa * h)? - k2)
    };
    let guess = kappa / THETA0_GUESS;
    let (mut lo, mut hi) = (0.5 * guess, 1.5 * guess);
    let mut widen = 0;
    while g(hi)? <= 0.0 {
        hi *= 1.5;
        widen += 1;
        if widen > 20 {
            return Err(Error::Numeric(format!("λ₁(κH) stays below κ² up to H = {hi}")));
        }
    }
    while g(lo)? >= 0.0 {
        lo /= 1.5;
        widen += 1;
        if widen > 40 {
            return Err(Error::Numeric(format!("λ₁(κH) stays above κ² down to H = {lo}")));
        }
    }
    let n = opts.samples;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values = grid.par_iter().map(|&h| g(h)).collect::<Result<Vec<_>>>()?;
    let monotone_samples = values.windows(2).all(|w| w[1] > w[0]);
    let ups: Vec<usize> = (1..n).filter(|&i| values[i - 1] < 0.0 && values[i] >= 0.0).collect();
    let first = *ups.first().ok_or_else(|| Error::Numeric("no sign change on the scan".into()))?;
    let last = *ups.last().unwrap();
    let tol = opts.tol * k2;
    let root = |i: usize| bisect(&g, grid[i - 1], grid[i], values[i - 1], values[i], tol);
    let (h_loc, bracket, residual) = root(last)?;
    let underline = if first == last { h_loc } else { root(first)?.0 };
    if first != last {
        return Err(Error::NonUnique { underline, overline: h_loc });
    }
    Ok(CriticalFieldResult { kappa, h_loc, bracket, residual, underline, overline: h_loc, monotone_samples, evaluations: evaluations.into_inner() })
}

/// Bisection for an upward sign change of `g` on `[a, b]`; returns the
/// point with the smallest `|g|` once it is below `tol`.
fn bisect(g: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64, tol: f64) -> Result<(f64, [f64; 2], f64)> {
    for _ in 0..200 {
        if gb.abs() <= tol {
            return Ok((b, [a, b], gb));
        }
        if ga.abs() <= tol {
            return Ok((a, [a, b], ga));
        }
        // regula falsi step kept inside the middle half of the bracket
        let t = (ga / (ga - gb)).clamp(0.25, 0.75);
        let m = a + t * (b - a);
        let gm = g(m)?;
        if gm < 0.0 {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
        if b - a <= 1e-14 * b {
            break;
        }
    }
    let (x, gx) = if ga.abs() < gb.abs() { (a, ga) } else { (b, gb) };
    if gx.abs() <= tol {
        Ok((x, [a, b], gx))
    } else {
        Err(Error::NoConvergence { iterations: 200, residual: gx.abs() })
    }
}

/// Ground energy of `forms` at any field, reusing the assembled matrices.
pub fn fem_energy(forms: &AssembledForms, opts: EigenOptions) -> impl Fn(f64) -> Result<f64> + Sync + '_ {
    move |b| Ok(ground_state(&forms.with_field(b), &opts, None)?.lambda1)
}

/// Per-element quadrature data for the quartic term.
struct QuarticQuadrature {
    /// `(element dofs, [(weight·area, shape values)])`.
    elements: Vec<(Vec<usize>, Vec<(f64, [f64; 6])>)>,
}

impl QuarticQuadrature {
    fn new(mesh: &Mesh, forms: &AssembledForms) -> Self {
        let space = forms.space();
        let elements = (0..mesh.element_count())
            .map(|e| {
                let g = ElementGeometry::new(mesh, e);
                let pts = space.quadrature().iter().map(|(l, w)| (w * g.area, space.shape(l))).collect();
                (space.element_dofs(e).to_vec(), pts)
            })
            .collect();
        Self { elements }
    }

    fn for_each(&self, mut f: impl FnMut(&[usize], f64, &[f64; 6])) {
        for (dofs, pts) in &self.elements {
            for (w, n) in pts {
                f(dofs, *w, n);
            }
        }
    }

    fn eval(dofs: &[usize], n: &[f64; 6], u: &[C64]) -> C64 {
        dofs.iter().zip(n).map(|(&j, s)| u[j] * s).sum()
    }

    /// `∫ |u|⁴`.
    fn quartic(&self, u: &[C64]) -> f64 {
        let mut s = 0.0;
        self.for_each(|dofs, w, n| s += w * Self::eval(dofs, n, u).norm_sqr().powi(2));
        s
    }

    /// `N_i = ∫ |u|² u φ_i`.
    fn cubic_load(&self, u: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); u.len()];
        self.for_each(|dofs, w, n| {
            let v = Self::eval(dofs, n, u);
            let c = v * (w * v.norm_sqr());
            for (&j, s) in dofs.iter().zip(n) {
                out[j] += c * s;
            }
        });
        out
    }

    /// Coefficients of `α ↦ ∫ |u + α d|⁴` in increasing powers.
    fn quartic_along(&self, u: &[C64], d: &[C64]) -> [f64; 5] {
        let mut c = [0.0; 5];
        self.for_each(|dofs, w, n| {
            let a = Self::eval(dofs, n, u);
            let b = Self::eval(dofs, n, d);
            let (p, q, r) = (a.norm_sqr(), (a.conj() * b).re, b.norm_sqr());
            c[0] += w * p * p;
            c[1] += w * 4.0 * p * q;
            c[2] += w * (4.0 * q * q + 2.0 * p * r);
            c[3] += w * 4.0 * q * r;
            c[4] += w * r * r;
        });
        c
    }
}

/// Discrete Ginzburg–Landau energy with the vector potential frozen to the
/// assembly potential (curl 1, so the field term vanishes):
/// `∫ |(−i∇ + κH A)ψ|² − κ²|ψ|² + (κ²/2)|ψ|⁴`.
pub struct GlProblem<'a> {
    mesh: &'a Mesh,
    forms: AssembledForms,
    params: GlParams,
    /// CSR values of `H_{κH} − κ² M`.
    linear: Vec<C64>,
    quad: QuarticQuadrature,
}

impl<'a> GlProblem<'a> {
    pub fn new(mesh: &'a Mesh, forms: &AssembledForms, params: GlParams) -> Result<Self> {
        if !forms.matches(mesh) {
            return Err(Error::Contract("forms were assembled on a different mesh".into()));
        }
        let forms = forms.with_field(params.b());
        let linear = forms.shifted(params.kappa * params.kappa);
        let quad = QuarticQuadrature::new(mesh, &forms);
        Ok(Self { mesh, forms, params, linear, quad })
    }

    pub fn params(&self) -> GlParams {
        self.params
    }

    pub fn forms(&self) -> &AssembledForms {
        &self.forms
    }

    fn apply_linear(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.forms.pattern().matvec(&self.linear, x, &mut y);
        y
    }

    pub fn energy(&self, psi: &[C64]) -> Result<f64> {
        self.forms.space().check_len(psi.len())?;
        let k2 = self.params.kappa.powi(2);
        Ok(dot(psi, &self.apply_linear(psi)).re + 0.5 * k2 * self.quad.quartic(psi))
    }

    /// `g` with `dE = 2 Re ⟨g, δψ⟩`; `g = 0` is the discrete GL equation.
    pub fn gradient(&self, psi: &[C64]) -> Vec<C64> {
        let k2 = self.params.kappa.powi(2);
        let mut g = self.apply_linear(psi);
        for (gi, ni) in g.iter_mut().zip(self.quad.cubic_load(psi)) {
            *gi += ni * k2;
        }
        g
    }

    /// Area `∫ 1` of the discrete domain.
    pub fn area(&self) -> f64 {
        let ones = vec![C64::new(1.0, 0.0); self.forms.n()];
        self.forms.m_inner(&ones, &ones).re
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }
}

/// `E(ψ)` for `ψ` on the space of `forms` (see [`GlProblem`]).
pub fn gl_energy(psi: &[C64], params: GlParams, mesh: &Mesh, forms: &AssembledForms) -> Result<f64> {
    GlProblem::new(mesh, forms, params)?.energy(psi)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Start of a minimization.
#[derive(Debug, Clone)]
pub enum GlInit {
    /// Seeded random perturbation of the normal state with the given sup-norm.
    Normal {
        seed: u64,
        amplitude: f64,
    },
    State(Vec<C64>),
}

impl Default for GlInit {
    fn default() -> Self {
        GlInit::Normal { seed: 0, amplitude: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlOptions {
    pub max_steps: usize,
    /// Stop when the preconditioned residual norm falls below
    /// `tol·κ²·|Ω|^{1/2}` (the scale of the residual of `ψ ≡ 1`).
    pub tol: f64,
    /// `‖ψ‖∞` below which a state counts as normal.
    pub normal_threshold: f64,
}

impl Default for GlOptions {
    fn default() -> Self {
        Self { max_steps: 5000, tol: 1e-8, normal_threshold: 1e-4 }
    }
}

/// Stationary point returned by [`gl_minimize_fixed_potential`].
#[derive(Debug, Clone, Serialize)]
pub struct GlState {
    #[serde(skip)]
    pub psi: Vec<C64>,
    pub energy: f64,
    /// Relative preconditioned residual at termination.
    pub grad_norm: f64,
    pub iterations: usize,
    pub sup_psi: f64,
}

/// Minimizes the frozen-potential GL energy by nonlinear conjugate gradients
/// (Polak–Ribière, restarted) preconditioned with `H_{κH} + M`; every step
/// minimizes the quartic energy exactly along the search direction.
pub fn gl_minimize_fixed_potential(problem: &GlProblem, init: &GlInit, opts: &GlOptions) -> Result<GlState> {
    let n = problem.forms.n();
    let mut psi = match init {
        GlInit::Normal { seed, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..n).map(|_| C64::from_polar(*amplitude * rng.random_range(0.5..1.0), rng.random_range(0.0..std::f64::consts::TAU))).collect::<Vec<_>>()
        }
        GlInit::State(v) => {
            problem.forms.space().check_len(v.len())?;
            v.clone()
        }
    };
    let pre = Factor::new(problem.forms.pattern(), &problem.forms.shifted(-1.0))?;
    let precondition = |g: &[C64]| {
        let mut z = g.to_vec();
        pre.solve_in_place(&mut z);
        z
    };
    let k2 = problem.params.kappa.powi(2);
    let scale = k2 * problem.area().sqrt();
    let mut g = problem.gradient(&psi);
    let mut z = precondition(&g);
    let mut gz = dot(&g, &z).re;
    let mut d: Vec<C64> = z.iter().map(|v| -v).collect();
    let mut iterations = 0;
    let mut energy = problem.energy(&psi)?;
    while gz.max(0.0).sqrt() > opts.tol * scale {
        if iterations >= opts.max_steps {
            return Err(Error::NoConvergence { iterations, residual: gz.max(0.0).sqrt() / scale });
        }
        iterations += 1;
        let mut slope = dot(&g, &d).re;
        if !(slope < 0.0) {
            d = z.iter().map(|v| -v).collect();
            slope = -gz;
        }
        // E(ψ + αd) = e0 + 2α Re⟨d, Lψ⟩ + α² ⟨d, Ld⟩ + (κ²/2) Q(α)
        let ld = problem.apply_linear(&d);
        let lin = 2.0 * (slope - k2 * dot(&d, &problem.quad.cubic_load(&psi)).re);
        let quad_c = dot(&d, &ld).re;
        let q = problem.quad.quartic_along(&psi, &d);
        let poly = [energy, lin + 0.5 * k2 * q[1], quad_c + 0.5 * k2 * q[2], 0.5 * k2 * q[3], 0.5 * k2 * q[4]];
        let alpha = quartic_argmin(&poly)?;
        psi.iter_mut().zip(&d).for_each(|(p, v)| *p += v * alpha);
        energy = problem.energy(&psi)?;
        let g_new = problem.gradient(&psi);
        let z_new = precondition(&g_new);
        let gz_new = dot(&g_new, &z_new).re;
        let beta = if iterations % 100 == 0 {
            0.0
        } else {
            let num: f64 = g_new.iter().zip(&z_new).zip(&z).map(|((a, b), c)| (a.conj() * (b - c)).re).sum();
            (num / gz).max(0.0)
        };
        d = z_new.iter().zip(&d).map(|(zn, dv)| -zn + dv * beta).collect();
        g = g_new;
        z = z_new;
        gz = gz_new;
    }
    let sup_psi = psi.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(GlState { psi, energy, grad_norm: gz.max(0.0).sqrt() / scale, iterations, sup_psi })
}

/// Global minimizer of the quartic `Σ cₖ αᵏ` with `c₄ ≥ 0` (or of the
/// quadratic when the quartic part vanishes).
fn quartic_argmin(c: &[f64; 5]) -> Result<f64> {
    let value = |a: f64| c[0] + a * (c[1] + a * (c[2] + a * (c[3] + a * c[4])));
    let deriv = |a: f64| c[1] + a * (2.0 * c[2] + a * (3.0 * c[3] + a * 4.0 * c[4]));
    if c[4] <= 1e-300 * c[2].abs().max(1.0) {
        return if c[2] > 0.0 { Ok(-c[1] / (2.0 * c[2])) } else { Err(Error::Numeric("energy unbounded along search direction".into())) };
    }
    // split the line at the critical points of the cubic derivative
    let (qa, qb, qc) = (12.0 * c[4], 6.0 * c[3], 2.0 * c[2]);
    let disc = qb * qb - 4.0 * qa * qc;
    let mut cuts = vec![];
    if disc > 0.0 {
        let s = disc.sqrt();
        cuts.push((-qb - s) / (2.0 * qa));
        cuts.push((-qb + s) / (2.0 * qa));
    }
    let reach = 1.0 + c.iter().skip(1).map(|v| (v / c[4]).abs()).fold(0.0, f64::max);
    let mut knots = vec![-reach];
    knots.extend(cuts);
    knots.push(reach);
    let mut best: Option<(f64, f64)> = None;
    for w in knots.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (da, db) = (deriv(a), deriv(b));
        if da > 0.0 || db < 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if deriv(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * (a.abs() + b.abs()).max(1e-300) {
                break;
            }
        }
        let x = 0.5 * (a + b);
        let v = value(x);
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((x, v));
        }
    }
    best.map(|(x, _)| x).ok_or_else(|| Error::Numeric("no minimizer along search direction".into()))
}

/// One cell of a field scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    #[serde(rename = "H")]
    pub h: f64,
    pub final_energy: f64,
    pub sup_psi: f64,
    pub normal_flag: bool,
    /// `λ₁(κH) − κ²`: the lowest eigenvalue of the second variation at `ψ = 0`
    /// (in the `M`-metric, up to the factor 2).
    pub second_variation: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Minimizes the GL energy at every `H` of the grid (cells in parallel).
pub fn scan_states(
    mesh: &Mesh,
    forms: &AssembledForms,
    kappa: f64,
    h_grid: &[f64],
    init: &GlInit,
    opts: &GlOptions,
    eigen: &EigenOptions,
) -> Result<Vec<ScanRow>> {
    h_grid
        .par_iter()
        .map(|&h| {
            let params = GlParams::new(kappa, h)?;
            let problem = GlProblem::new(mesh, forms, params)?;
            let state = gl_minimize_fixed_potential(&problem, init, opts)?;
            let lambda = ground_state(problem.forms(), eigen, None)?.lambda1;
            Ok(ScanRow {
                h,
                final_energy: state.energy,
                sup_psi: state.sup_psi,
                normal_flag: state.sup_psi <= opts.normal_threshold,
                second_variation: lambda - kappa * kappa,
                grad_norm: state.grad_norm,
                iterations: state.iterations,
            })
        })
        .collect()
}

/// Normal-state thresholds of a field scan.
#[derive(Debug, Clone, Serialize)]
pub struct BifurcationScan {
    pub kappa: f64,
    pub rows: Vec<ScanRow>,
    /// Smallest scanned `H` with a normal minimizer.
    pub underline_est: f64,
    /// Smallest scanned `H` from which on all minimizers are normal.
    pub overline_est: f64,
    /// Normal flag agrees with the sign of the second variation at every cell.
    pub consistent: bool,
}

impl BifurcationScan {
    /// Table `H, final_energy, sup_psi, normal_flag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["H", "final_energy", "sup_psi", "normal_flag"])?;
        for r in &self.rows {
            w.write_record([r.h.to_string(), r.final_energy.to_string(), r.sup_psi.to_string(), r.normal_flag.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scans `h_grid` (increasing, straddling the local critical field as judged
/// by the sign of `λ₁(κH) − κ²`) and reports where the minimizer turns normal.
pub fn bifurcation_scan(
    mesh: &Mesh,
    forms: &AssembledForms,
    kappa: f64,
    h_grid: &[f64],
    init: &GlInit,
    opts: &GlOptions,
    eigen: &EigenOptions,
) -> Result<BifurcationScan> {
    if h_grid.len() < 2 || h_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("field grid must be increasing with at least two points".into()));
    }
    let rows = scan_states(mesh, forms, kappa, h_grid, init, opts, eigen)?;
    let below = rows.iter().any(|r| r.second_variation < 0.0);
    let above = rows.iter().any(|r| r.second_variation > 0.0);
    if !(below && above) {
        return Err(Error::Precondition(format!(
            "field grid [{}, {}] does not straddle the local critical field",
            h_grid[0],
            h_grid[h_grid.len() - 1]
        )));
    }
    let underline_est = rows.iter().find(|r| r.normal_flag).map(|r| r.h);
    let last_super = rows.iter().rposition(|r| !r.normal_flag);
    let overline_est = match last_super {
        None => Some(rows[0].h),
        Some(i) => rows.get(i + 1).map(|r| r.h),
    };
    let (Some(underline_est), Some(overline_est)) = (underline_est, overline_est) else {
        return Err(Error::Precondition("no normal minimizer on the field grid".into()));
    };
    let consistent = rows.iter().all(|r| r.normal_flag == (r.second_variation > 0.0));
    Ok(BifurcationScan { kappa, rows, underline_est, overline_est, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::disc_lambda1;
    use crate::fem::assemble;
    use crate::gauge::domain_gauge;
    use crate::geometry::{build_mesh, BoundaryCurve, MeshParams, RadialShape};

    fn disc_forms() -> (Mesh, AssembledForms) {
        let c = BoundaryCurve::new(RadialShape::disc(1.0), 256).unwrap();
        let mesh = build_mesh(&c, &MeshParams::new(0.12, 0.3, 0.4)).unwrap();
        let pot = domain_gauge(&mesh, &c).unwrap();
        let forms = assemble(&mesh, &pot, 1.0).unwrap();
        (mesh, forms)
    }

    #[test]
    fn quartic_argmin_finds_global_minimum() {
        // (α − 1)² (α + 2)² + α has its global minimum near α = −2
        let c = [4.0, -4.0 + 1.0, -3.0, 2.0, 1.0];
        let a = quartic_argmin(&c).unwrap();
        assert!((a + 2.0).abs() < 0.1, "{a}");
        let d = 2.0 * -3.0 * a + 3.0 * 2.0 * a * a + 4.0 * a * a * a + c[1];
        assert!(d.abs() < 1e-9);
        assert!((quartic_argmin(&[0.0, -2.0, 1.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn energy_of_constant_state_on_disc() {
        let (mesh, forms) = disc_forms();
        let p = GlParams::new(3.0, 3.0).unwrap();
        let zero = vec![C64::new(0.0, 0.0); forms.n()];
        assert_eq!(gl_energy(&zero, p, &mesh, &forms).unwrap(), 0.0);
        let ones = vec![C64::new(1.0, 0.0); forms.n()];
        let e = gl_energy(&ones, p, &mesh, &forms).unwrap();
        let pi = std::f64::consts::PI;
        let exact = 81.0 * pi / 8.0 - 9.0 * pi / 2.0;
        // polygonal domain: relative area defect is O(h²)
        assert!((e - exact).abs() < 5e-3 * 81.0 * pi / 8.0, "{e} {exact}");
    }

    #[test]
    fn gradient_is_derivative_of_energy() {
        let (mesh, forms) = disc_forms();
        let p = GlParams::new(2.0, 1.5).unwrap();
        let prob = GlProblem::new(&mesh, &forms, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi: Vec<C64> = (0..forms.n()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let d: Vec<C64> = (0..forms.n()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let g = prob.gradient(&psi);
        let analytic = 2.0 * dot(&g, &d).re;
        let h = 1e-5;
        let shift = |s: f64| psi.iter().zip(&d).map(|(a, b)| a + b * s).collect::<Vec<_>>();
        let fd = (prob.energy(&shift(h)).unwrap() - prob.energy(&shift(-h)).unwrap()) / (2.0 * h);
        assert!((fd - analytic).abs() < 1e-6 * analytic.abs().max(1.0), "{fd} {analytic}");
    }

    #[test]
    fn minimizer_above_and_below_threshold() {
        let (mesh, forms) = disc_forms();
        let kappa = 2.0;
        let lambda = fem_energy(&forms, EigenOptions::default());
        let hc = hc3_local(kappa, &lambda, &Hc3Options { kappa_min: 1.0, ..Default::default() }).unwrap();
        let opts = GlOptions::default();
        let above = GlProblem::new(&mesh, &forms, GlParams::new(kappa, 1.5 * hc.h_loc).unwrap()).unwrap();
        let s = gl_minimize_fixed_potential(&above, &GlInit::default(), &opts).unwrap();
        assert!(s.sup_psi <= 1e-4, "{}", s.sup_psi);
        let below = GlProblem::new(&mesh, &forms, GlParams::new(kappa, 0.6 * hc.h_loc).unwrap()).unwrap();
        let s = gl_minimize_fixed_potential(&below, &GlInit::default(), &opts).unwrap();
        let ones = vec![C64::new(1.0, 0.0); forms.n()];
        assert!(s.energy < 0.0 && s.energy <= below.energy(&ones).unwrap());
        assert!(s.sup_psi > 0.05 && s.sup_psi <= 1.0 + 1e-3, "{}", s.sup_psi);
    }

    #[test]
    fn hc3_on_disc_oracle() {
        let r = hc3_local(4.0, |b| Ok(disc_lambda1(b, 1.0)?.lambda1), &Hc3Options::default()).unwrap();
        assert!(r.residual.abs() <= 1e-4 * 16.0);
        assert!(r.underline <= r.h_loc && r.h_loc <= r.overline);
        assert!(r.bracket[0] <= r.h_loc && r.h_loc <= r.bracket[1]);
        assert!(r.monotone_samples);
        assert!(hc3_local(2.0, Ok, &Hc3Options::default()).is_err());
    }

    #[test]
    fn non_monotone_map_reports_window() {
        // continuous, with a dip after B = 10: λ = 9 is crossed upwards at B = 9 and B = 12
        let f = |b: f64| -> Result<f64> {
            Ok(if b <= 10.0 {
                b
            } else if b <= 10.5 {
                10.0 - 8.0 * (b - 10.0)
            } else {
                6.0 + 2.0 * (b - 10.5)
            })
        };
        let r = hc3_local(3.0, f, &Hc3Options { kappa_min: 1.0, samples: 200, tol: 1e-6 });
        match r {
            Err(Error::NonUnique { underline, overline }) => {
                assert!((3.0 * underline - 9.0).abs() < 1e-3 && (3.0 * overline - 12.0).abs() < 1e-3, "{underline} {overline}");
            }
            other => panic!("{other:?}"),
        }
    }
}
