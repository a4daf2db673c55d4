//! Field sweeps of the ground energy and the quantities derived from them:
//! Hellmann–Feynman derivatives in any gauge, two-term fits, normal decay of
//! the ground state and its concentration near the curvature maxima.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disc;
use crate::error::{Error, Result};
use crate::fem::{assemble_with, ground_state, AssembledForms, EigenOptions, EigenResult, ElementOrder, FeSpace};
use crate::gauge::{domain_gauge, standard_potential, tubular_gauge, PotentialField};
use crate::geometry::{build_mesh, curvature_maxima, BoundaryCurve, CurvatureProfile, Mesh, MeshParams, TubularChart};
use crate::C64;

/// Which vector potential the Hamiltonian is assembled with.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialChoice {
    Standard,
    #[default]
    DomainTangential,
    /// Defaults: `s₀` from the curvature profile, `ε = min(t₀/2, ε₀)`.
    Tubular {
        #[serde(default)]
        eps: Option<f64>,
        #[serde(default)]
        s0: Option<f64>,
    },
}

impl PotentialChoice {
    pub fn label(&self) -> &'static str {
        match self {
            PotentialChoice::Standard => "standard",
            PotentialChoice::DomainTangential => "domain_tangential",
            PotentialChoice::Tubular { .. } => "tubular",
        }
    }
}

/// Mesh used at a given field strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshChoice {
    /// [`MeshParams::reference`] at each field, all spacings scaled by `refine`.
    Reference {
        refine: f64,
    },
    /// Reference grading of a fixed field, shared by all fields of a sweep.
    ReferenceAt {
        b: f64,
        refine: f64,
    },
    Fixed(MeshParams),
}

impl Default for MeshChoice {
    fn default() -> Self {
        MeshChoice::Reference { refine: 1.0 }
    }
}

/// Domain, discretization and solver settings for ground-state computations.
#[derive(Debug, Clone)]
pub struct Setup {
    pub name: String,
    pub curve: BoundaryCurve,
    pub profile: CurvatureProfile,
    pub potential: PotentialChoice,
    pub mesh: MeshChoice,
    pub order: ElementOrder,
    pub eigen: EigenOptions,
}

/// A solved ground state with everything needed to post-process it.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: Arc<Mesh>,
    pub potential: PotentialField,
    pub forms: AssembledForms,
    pub result: EigenResult,
}

impl Setup {
    pub fn new(name: impl Into<String>, curve: BoundaryCurve) -> Self {
        let profile = curvature_maxima(&curve, CurvatureProfile::default_tol(&curve));
        Self {
            name: name.into(),
            curve,
            profile,
            potential: PotentialChoice::default(),
            mesh: MeshChoice::default(),
            order: ElementOrder::default(),
            eigen: EigenOptions::default(),
        }
    }

    pub fn with_potential(mut self, p: PotentialChoice) -> Self {
        self.potential = p;
        self
    }

    pub fn with_mesh(mut self, m: MeshChoice) -> Self {
        self.mesh = m;
        self
    }

    pub fn with_order(mut self, o: ElementOrder) -> Self {
        self.order = o;
        self
    }

    pub fn with_eigen(mut self, e: EigenOptions) -> Self {
        self.eigen = e;
        self
    }

    /// Default `ε₀`: half of the profile margin.
    pub fn eps0(&self) -> f64 {
        0.5 * self.profile.eps0_margin
    }

    pub fn mesh_params(&self, b: f64) -> MeshParams {
        let scaled = |mut p: MeshParams, r: f64| {
            p.h_interior *= r;
            p.h_tangent = p.h_tangent.map(|h| h * r);
            p
        };
        match self.mesh {
            MeshChoice::Reference { refine } => scaled(MeshParams::reference(b, &self.curve), refine),
            MeshChoice::ReferenceAt { b, refine } => scaled(MeshParams::reference(b, &self.curve), refine),
            MeshChoice::Fixed(p) => p,
        }
    }

    pub fn build_mesh(&self, b: f64) -> Result<Mesh> {
        build_mesh(&self.curve, &self.mesh_params(b))
    }

    /// Tubular gauge parameters `(ε, s₀)` for this domain.
    pub fn tubular_parameters(&self, eps: Option<f64>, s0: Option<f64>) -> (f64, f64) {
        let t0 = TubularChart::new(&self.curve).t0();
        let limit = (0.5 * t0).min(0.5 * self.curve.perimeter());
        let default = if self.profile.is_disc { limit } else { self.eps0().min(limit) };
        (eps.unwrap_or(default), s0.unwrap_or(self.profile.s0))
    }

    pub fn potential_on(&self, mesh: &Mesh, choice: PotentialChoice) -> Result<PotentialField> {
        match choice {
            PotentialChoice::Standard => Ok(standard_potential()),
            PotentialChoice::DomainTangential => domain_gauge(mesh, &self.curve),
            PotentialChoice::Tubular { eps, s0 } => {
                let (eps, s0) = self.tubular_parameters(eps, s0);
                tubular_gauge(&self.curve, eps, s0)
            }
        }
    }

    /// Assembles the forms of this setup on `mesh` at field `b`.
    pub fn forms_on(&self, mesh: &Mesh, potential: &PotentialField, b: f64) -> Result<AssembledForms> {
        assemble_with(&FeSpace::new(mesh, self.order), mesh, potential, b)
    }

    /// Ground state at field `b` on the mesh chosen for `b`.
    pub fn solve(&self, b: f64) -> Result<Solution> {
        let mesh = Arc::new(self.build_mesh(b)?);
        let potential = self.potential_on(&mesh, self.potential)?;
        let forms = self.forms_on(&mesh, &potential, b)?;
        let result = ground_state(&forms, &self.eigen, None)?;
        Ok(Solution { mesh, potential, forms, result })
    }
}

/// Ground energy at `b` for the discretization `forms` (reassembly-free).
fn energy_at(forms: &AssembledForms, b: f64, opts: &EigenOptions, near: &EigenResult) -> Result<f64> {
    let shift = if near.lambda1 > 0.0 { 0.9 * near.lambda1 } else { -1.0 };
    Ok(ground_state(&forms.with_field(b), &opts.with_shift(Some(shift)), Some(&near.psi))?.lambda1)
}

/// Forward-difference derivative with one Richardson step:
/// `2·D(h/2) − D(h)` where `D(h) = (λ(B + h) − λ(B)) / h`.
pub fn richardson_fd(forms: &AssembledForms, ground: &EigenResult, step: f64, opts: &EigenOptions) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Precondition(format!("finite-difference step {step} must be positive")));
    }
    let b = forms.b();
    let l0 = ground.lambda1;
    let l_half = energy_at(forms, b + 0.5 * step, opts, ground)?;
    let l_full = energy_at(forms, b + step, opts, ground)?;
    let d_half = (l_half - l0) / (0.5 * step);
    let d_full = (l_full - l0) / step;
    Ok(2.0 * d_half - d_full)
}

/// `2 Re ∫ conj(Â ψ)·(−i∇ + B A)ψ` for a ground state `ψ` computed with the
/// potential `A` of `forms`. By the identity `p_{BÂ}(e^{iBφ}ψ) = e^{iBφ}p_{BA}ψ`
/// for `Â = A − ∇φ`, this is the Hellmann–Feynman derivative evaluated in the
/// gauge `Â` without forming the transformed state.
pub fn derivative_hf(mesh: &Mesh, forms: &AssembledForms, psi: &[C64], source: &PotentialField, target: &PotentialField) -> Result<f64> {
    check_state(mesh, forms, psi)?;
    source.check_mesh(mesh)?;
    target.check_mesh(mesh)?;
    let b = forms.b();
    let space = forms.space();
    let mass = space.integrate(mesh, psi, |_, _, u, _| u.norm_sqr());
    let value = space.integrate(mesh, psi, |e, x, u, du| {
        let a = source.eval(e, x);
        let t = target.eval(e, x);
        let i = C64::new(0.0, 1.0);
        let p = [-i * du[0] + b * a[0] * u, -i * du[1] + b * a[1] * u];
        2.0 * (u.conj() * (t[0] * p[0] + t[1] * p[1])).re
    });
    Ok(value / mass)
}

/// `∫ |Â|² |ψ|² / ∫ |ψ|²`.
pub fn derivative_bound_terms(mesh: &Mesh, forms: &AssembledForms, psi: &[C64], target: &PotentialField) -> Result<f64> {
    check_state(mesh, forms, psi)?;
    target.check_mesh(mesh)?;
    let space = forms.space();
    let mass = space.integrate(mesh, psi, |_, _, u, _| u.norm_sqr());
    let value = space.integrate(mesh, psi, |e, x, u, _| {
        let a = target.eval(e, x);
        (a[0] * a[0] + a[1] * a[1]) * u.norm_sqr()
    });
    Ok(value / mass)
}

fn check_state(mesh: &Mesh, forms: &AssembledForms, psi: &[C64]) -> Result<()> {
    if !forms.matches(mesh) {
        return Err(Error::Contract("forms were assembled on a different mesh".into()));
    }
    forms.space().check_len(psi.len())
}

/// One sample of a spectral curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub b: f64,
    pub lambda1: f64,
    /// Hellmann–Feynman derivative in the assembly gauge.
    pub dhf: f64,
    /// Richardson finite-difference derivative, when requested.
    pub dfd: Option<f64>,
    pub residual: f64,
    pub dofs: usize,
}

/// Sampled map `B ↦ λ₁(B)`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralCurve {
    pub domain: String,
    pub potential_kind: String,
    pub points: Vec<SpectralPoint>,
}

impl SpectralCurve {
    pub fn new(domain: impl Into<String>, potential_kind: impl Into<String>, points: Vec<SpectralPoint>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].b > w[0].b)) {
            return Err(Error::Precondition("field grid must be strictly increasing".into()));
        }
        if points.iter().any(|p| !p.lambda1.is_finite() || !p.dhf.is_finite()) {
            return Err(Error::Numeric("spectral curve has non-finite values".into()));
        }
        Ok(Self { domain: domain.into(), potential_kind: potential_kind.into(), points })
    }

    pub fn fields(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.b).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda1).collect()
    }

    /// Table `B, lambda1, dhf, dfd, potential_kind` (empty `dfd` when absent).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["B", "lambda1", "dhf", "dfd", "potential_kind"])?;
        for p in &self.points {
            w.write_record([
                p.b.to_string(),
                p.lambda1.to_string(),
                p.dhf.to_string(),
                p.dfd.map(|d| d.to_string()).unwrap_or_default(),
                self.potential_kind.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Options of [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Also compute Richardson finite differences.
    #[serde(default)]
    pub fd: bool,
    /// Finite-difference step; defaults to the grid spacing.
    #[serde(default)]
    pub fd_step: Option<f64>,
}

/// Ground energies over a field grid. With a field-independent mesh the
/// forms are assembled once and the solver is warm-started along the grid
/// (shift `0.9·λ` of the previous field); otherwise every field is meshed
/// and solved independently in parallel.
pub fn sweep(setup: &Setup, grid: &[f64], opts: &SweepOptions) -> Result<SpectralCurve> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(Error::Precondition("field grid must be non-empty, non-negative and increasing".into()));
    }
    let step_at = |i: usize| -> f64 {
        opts.fd_step.unwrap_or_else(|| {
            if grid.len() > 1 {
                if i + 1 < grid.len() {
                    grid[i + 1] - grid[i]
                } else {
                    grid[i] - grid[i - 1]
                }
            } else {
                0.1
            }
        })
    };
    let points = match setup.mesh {
        MeshChoice::Reference { .. } => grid
            .par_iter()
            .enumerate()
            .map(|(i, &b)| {
                let sol = setup.solve(b)?;
                point_from(setup, &sol, opts.fd.then(|| step_at(i)))
            })
            .collect::<Result<Vec<_>>>()?,
        MeshChoice::ReferenceAt { .. } | MeshChoice::Fixed(_) => {
            let b_max = *grid.last().unwrap();
            let mesh = Arc::new(setup.build_mesh(b_max)?);
            let potential = setup.potential_on(&mesh, setup.potential)?;
            let base = setup.forms_on(&mesh, &potential, grid[0])?;
            let mut out = Vec::with_capacity(grid.len());
            let mut prev: Option<EigenResult> = None;
            for (i, &b) in grid.iter().enumerate() {
                let forms = base.with_field(b);
                let eig = match &prev {
                    Some(p) => {
                        let shift = if p.lambda1 > 0.0 { 0.9 * p.lambda1 } else { -1.0 };
                        ground_state(&forms, &setup.eigen.with_shift(Some(shift)), Some(&p.psi))
                            .or_else(|_| ground_state(&forms, &setup.eigen, None))?
                    }
                    None => ground_state(&forms, &setup.eigen, None)?,
                };
                let sol = Solution { mesh: mesh.clone(), potential: potential.clone(), forms, result: eig };
                out.push(point_from(setup, &sol, opts.fd.then(|| step_at(i)))?);
                prev = Some(sol.result);
            }
            out
        }
    };
    SpectralCurve::new(setup.name.clone(), setup.potential.label(), points)
}

fn point_from(setup: &Setup, sol: &Solution, fd_step: Option<f64>) -> Result<SpectralPoint> {
    let r = &sol.result;
    let dfd = fd_step.map(|h| richardson_fd(&sol.forms, r, h, &setup.eigen)).transpose()?;
    Ok(SpectralPoint { b: r.b, lambda1: r.lambda1, dhf: sol.forms.field_derivative(&r.psi), dfd, residual: r.residual, dofs: sol.forms.n() })
}

/// Spectral curve of the disc of radius `r` from the separated radial
/// problems; derivatives are the slopes of the minimizing branches.
pub fn disc_curve(r: f64, grid: &[f64]) -> Result<SpectralCurve> {
    let points = grid
        .par_iter()
        .map(|&b| {
            let g = disc::disc_lambda1(b, r)?;
            Ok(SpectralPoint { b, lambda1: g.lambda1, dhf: g.slope, dfd: None, residual: 0.0, dofs: 0 })
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralCurve::new(format!("disc(R={r})"), "standard", points)
}

/// Least-squares fit `λ₁(B) ≈ â B + b̂ √B` on a window of the curve.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticFit {
    pub a_hat: f64,
    pub b_hat: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub residuals: Vec<f64>,
    /// `max |residual| / B^{1/3}` over the window.
    pub c_fit: f64,
}

pub fn fit_asymptotics(curve: &SpectralCurve, window: (f64, f64)) -> Result<AsymptoticFit> {
    let pts: Vec<&SpectralPoint> = curve.points.iter().filter(|p| p.b >= window.0 && p.b <= window.1).collect();
    if pts.len() < 4 {
        return Err(Error::Precondition(format!("fit window {window:?} holds {} samples, need at least 4", pts.len())));
    }
    // normal equations in the columns (B, √B)
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in &pts {
        let (x1, x2) = (p.b, p.b.sqrt());
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        r1 += x1 * p.lambda1;
        r2 += x2 * p.lambda1;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 1e-10 * s11 * s22) {
        return Err(Error::Numeric(format!("ill-conditioned fit on window {window:?}")));
    }
    let a_hat = (r1 * s22 - r2 * s12) / det;
    let b_hat = (s11 * r2 - s12 * r1) / det;
    let residuals: Vec<f64> = pts.iter().map(|p| p.lambda1 - a_hat * p.b - b_hat * p.b.sqrt()).collect();
    let c_fit = pts.iter().zip(&residuals).map(|(p, r)| r.abs() / p.b.cbrt()).fold(0.0, f64::max);
    Ok(AsymptoticFit { a_hat, b_hat, window, points: pts.len(), residuals, c_fit })
}

/// Normal decay of a ground state.
#[derive(Debug, Clone, Serialize)]
pub struct AgmonProfile {
    pub b: f64,
    /// False at fields too weak for boundary localization (`B < 1`).
    pub applicable: bool,
    /// Decay length `L` of the tangentially integrated density `ρ(t) ∝ e^{−2t/L}`.
    pub decay_length: Option<f64>,
    /// `1 / (L √B)`, the exponent of the weight `e^{α√B t}` matched by `ρ`.
    pub alpha_hat: Option<f64>,
    /// `∫ tᴺ |ψ|²` for `N = 1, 2` (normalized state).
    pub moments: [f64; 2],
    /// Fit band in `t`.
    pub window: Option<(f64, f64)>,
    /// `(t_center, mass)` of the distance bins.
    #[serde(skip)]
    pub bins: Vec<(f64, f64)>,
}

/// Distance of every quadrature point to the boundary together with the
/// quadrature weight of `|ψ|²` there.
fn density_samples(mesh: &Mesh, forms: &AssembledForms, psi: &[C64], curve: &BoundaryCurve) -> Vec<([f64; 2], f64, f64)> {
    let space = forms.space();
    let mut out = Vec::new();
    for e in 0..mesh.element_count() {
        let g = crate::fem::ElementGeometry::new(mesh, e);
        for (l, w) in space.quadrature() {
            let x = g.point(l);
            out.push((x, w * g.area * space.value(e, l, psi).norm_sqr(), 0.0));
        }
    }
    let dists: Vec<f64> = out.par_iter().map(|(x, _, _)| curve.closest_point(*x).1.max(0.0)).collect();
    for (o, d) in out.iter_mut().zip(dists) {
        o.2 = d;
    }
    out
}

/// Normal moments and decay length of a ground state. The density is
/// integrated along the boundary in bins of width `0.25 B^{-1/2}`, and
/// `log ρ(t)` is fitted linearly on the tail beyond the peak where
/// `ρ/max ρ ∈ [10⁻⁵, 0.3]`.
pub fn agmon_profile(mesh: &Mesh, forms: &AssembledForms, psi: &[C64], curve: &BoundaryCurve) -> Result<AgmonProfile> {
    check_state(mesh, forms, psi)?;
    let b = forms.b();
    let samples = density_samples(mesh, forms, psi, curve);
    let mass: f64 = samples.iter().map(|s| s.1).sum();
    let m1 = samples.iter().map(|s| s.2 * s.1).sum::<f64>() / mass;
    let m2 = samples.iter().map(|s| s.2 * s.2 * s.1).sum::<f64>() / mass;
    if b < 1.0 {
        return Ok(AgmonProfile { b, applicable: false, decay_length: None, alpha_hat: None, moments: [m1, m2], window: None, bins: Vec::new() });
    }
    let width = 0.25 / b.sqrt();
    let t_max = samples.iter().map(|s| s.2).fold(0.0, f64::max);
    let nbins = (t_max / width).ceil() as usize + 1;
    let mut hist = vec![0.0; nbins];
    for s in &samples {
        hist[((s.2 / width) as usize).min(nbins - 1)] += s.1 / mass;
    }
    let bins: Vec<(f64, f64)> = hist.iter().enumerate().map(|(i, m)| ((i as f64 + 0.5) * width, *m)).collect();
    let (peak, peak_mass) = bins.iter().enumerate().fold((0, 0.0), |acc, (i, b)| if b.1 > acc.1 { (i, b.1) } else { acc });
    let tail: Vec<(f64, f64)> =
        bins[peak..].iter().take_while(|(_, m)| *m >= 1e-5 * peak_mass).filter(|(_, m)| *m <= 0.3 * peak_mass).map(|(t, m)| (*t, m.ln())).collect();
    if tail.len() < 3 {
        return Err(Error::Precondition(format!("only {} resolved tail bins at B = {b}; refine the mesh", tail.len())));
    }
    let slope = linear_slope(&tail);
    if !(slope < 0.0) {
        return Err(Error::Numeric(format!("density does not decay away from the boundary at B = {b}")));
    }
    let l = -2.0 / slope;
    Ok(AgmonProfile {
        b,
        applicable: true,
        decay_length: Some(l),
        alpha_hat: Some(1.0 / (l * b.sqrt())),
        moments: [m1, m2],
        window: Some((tail[0].0, tail[tail.len() - 1].0)),
        bins,
    })
}

fn linear_slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Exponent `p` of a power law `y ≈ c xᵖ` fitted in log–log coordinates.
pub fn power_law_exponent(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Precondition("power-law fit needs at least two positive samples".into()));
    }
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    Ok(linear_slope(&pts))
}

/// Writes the distance bins `t, mass` of a profile.
pub fn write_profile_csv<W: Write>(profile: &AgmonProfile, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "mass"])?;
    for (t, m) in &profile.bins {
        w.serialize((t, m))?;
    }
    w.flush()?;
    Ok(())
}

/// Fraction of `∫|ψ|²` at distance at least `eps0` from every point of `Π`.
pub fn localization_mass(
    mesh: &Mesh,
    forms: &AssembledForms,
    psi: &[C64],
    curve: &BoundaryCurve,
    profile: &CurvatureProfile,
    eps0: f64,
) -> Result<f64> {
    check_state(mesh, forms, psi)?;
    if profile.is_disc {
        return Err(Error::NotApplicable("every boundary point has maximal curvature (disc)".into()));
    }
    if !(eps0 > 0.0) {
        return Err(Error::Precondition(format!("eps0 = {eps0} must be positive")));
    }
    let pi = profile.pi_points(curve);
    let space = forms.space();
    let total = space.integrate(mesh, psi, |_, _, u, _| u.norm_sqr());
    let far = space.integrate(mesh, psi, |_, x, u, _| {
        let d = pi.iter().map(|p| (x[0] - p[0]).hypot(x[1] - p[1])).fold(f64::INFINITY, f64::min);
        if d >= eps0 {
            u.norm_sqr()
        } else {
            0.0
        }
    });
    Ok((far / total).clamp(0.0, 1.0))
}

/// Share of `∫|ψ|²` in the Voronoi cell of each component of `Π`.
pub fn localization_shares(mesh: &Mesh, forms: &AssembledForms, psi: &[C64], curve: &BoundaryCurve, profile: &CurvatureProfile) -> Result<Vec<f64>> {
    check_state(mesh, forms, psi)?;
    if profile.is_disc {
        return Err(Error::NotApplicable("every boundary point has maximal curvature (disc)".into()));
    }
    let centers: Vec<[f64; 2]> = profile.pi.iter().map(|a| curve.point_at_s(a.midpoint()).pos).collect();
    let space = forms.space();
    let total = space.integrate(mesh, psi, |_, _, u, _| u.norm_sqr());
    let shares = (0..centers.len())
        .map(|k| {
            space.integrate(mesh, psi, |_, x, u, _| {
                let d = |c: &[f64; 2]| (x[0] - c[0]).hypot(x[1] - c[1]);
                let nearest = (0..centers.len()).min_by(|&i, &j| d(&centers[i]).total_cmp(&d(&centers[j]))).unwrap();
                if nearest == k {
                    u.norm_sqr()
                } else {
                    0.0
                }
            }) / total
        })
        .collect();
    Ok(shares)
}

/// Result of [`monotonicity_check`].
#[derive(Debug, Clone, Serialize)]
pub struct Monotonicity {
    /// Smallest sampled field after which every forward difference is positive.
    pub b0: Option<f64>,
    /// Left ends of the non-increasing steps.
    pub violations: Vec<f64>,
}

pub fn monotonicity_check(curve: &SpectralCurve) -> Monotonicity {
    let p = &curve.points;
    let violations: Vec<f64> = p.windows(2).filter(|w| !(w[1].lambda1 > w[0].lambda1)).map(|w| w[0].b).collect();
    let b0 = match violations.last() {
        None => p.first().map(|q| q.b),
        Some(&last) => {
            let idx = p.iter().position(|q| q.b == last).unwrap() + 1;
            // the tail after the last violation must contain at least one step
            (idx + 1 < p.len()).then(|| p[idx].b)
        }
    };
    Monotonicity { b0, violations }
}
