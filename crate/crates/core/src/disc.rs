//! The disc by separation of variables. On `{|x| < R}` with the standard
//! potential the operator splits over angular momenta `m ∈ ℤ` into radial
//! problems
//!
//! ```text
//! −u'' − u'/r + (m/r − B r/2)² u = μ u,   u'(R) = 0,
//! ```
//!
//! and `λ₁(B) = min_m μ(m, B)`.
//!
//! The radial operator is discretized on a uniform grid in the symmetric
//! finite-volume form `Σ r_{i+½}(u_{i+1} − u_i)²/h + Σ w_i V_i u_i²` against
//! the weights `w_i ≈ ∫ r dr` of the dual cells, so `∂μ/∂B = Σ w_i (B r_i²/2 − m) u_i²`
//! holds exactly for the discrete branch.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

/// Finest grid spacing relative to the magnetic length `B^{-1/2}`.
const LAYER_FRACTION: f64 = 0.01;
const MIN_INTERVALS: usize = 1000;

/// Radial problem for one angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialProblem {
    pub m: i64,
    pub b: f64,
    pub r: f64,
    /// Number of grid intervals on `[0, R]`.
    pub intervals: usize,
}

impl RadialProblem {
    /// Default resolution: spacing `≤ 0.01 B^{-1/2}` and at least 1000 intervals.
    pub fn new(m: i64, b: f64, r: f64) -> Self {
        Self { m, b, r, intervals: default_intervals(b, r) }
    }

    pub fn with_intervals(mut self, n: usize) -> Self {
        self.intervals = n;
        self
    }

    pub fn spacing(&self) -> f64 {
        self.r / self.intervals as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(Error::Precondition(format!("need R > 0 and finite B ≥ 0, got R = {}, B = {}", self.r, self.b)));
        }
        if self.intervals < 16 {
            return Err(Error::Precondition(format!("{} radial intervals is too coarse", self.intervals)));
        }
        if self.b > 0.0 && self.spacing() > 0.1 / self.b.sqrt() {
            return Err(Error::Precondition(format!(
                "radial spacing {:.3e} does not resolve the boundary layer 0.1·B^(-1/2) = {:.3e}",
                self.spacing(),
                0.1 / self.b.sqrt()
            )));
        }
        Ok(())
    }
}

fn default_intervals(b: f64, r: f64) -> usize {
    let n = (r * b.max(1.0).sqrt() / LAYER_FRACTION).ceil() as usize;
    n.max(MIN_INTERVALS)
}

/// Lowest radial eigenpair.
#[derive(Debug, Clone, Serialize)]
pub struct RadialMode {
    pub problem: RadialProblem,
    pub mu: f64,
    /// `∂μ/∂B` of the branch.
    pub slope: f64,
    /// Radii of the unknowns (the center is dropped for `m ≠ 0`).
    #[serde(skip)]
    pub radii: Vec<f64>,
    /// Values normalized in `Σ w u² = 1`.
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub weights: Vec<f64>,
}

struct Discretization {
    radii: Vec<f64>,
    weights: Vec<f64>,
    k_diag: Vec<f64>,
    k_off: Vec<f64>,
}

fn discretize(p: &RadialProblem) -> Discretization {
    let n = p.intervals;
    let h = p.spacing();
    let r_total = p.r;
    // u(0) = 0 is imposed for m ≠ 0 by dropping the center node
    let first = usize::from(p.m != 0);
    let m = p.m as f64;
    let mut radii = Vec::with_capacity(n + 1 - first);
    let mut weights = Vec::with_capacity(n + 1 - first);
    let mut k_diag = Vec::with_capacity(n + 1 - first);
    for i in first..=n {
        let r = i as f64 * h;
        let w = if i == 0 {
            h * h / 8.0
        } else if i == n {
            0.5 * h * (r_total - 0.25 * h)
        } else {
            r * h
        };
        // flux coefficients r_{i±½}/h
        let left = if i > 0 { (r - 0.5 * h) / h } else { 0.0 };
        let right = if i < n { (r + 0.5 * h) / h } else { 0.0 };
        let v = if i == 0 { 0.0 } else { (m / r - 0.5 * p.b * r).powi(2) };
        radii.push(r);
        weights.push(w);
        k_diag.push(left + right + w * v);
    }
    let k_off = ((first + 1)..=n).map(|i| -((i as f64 - 0.5) * h) / h).collect();
    Discretization { radii, weights, k_diag, k_off }
}

fn operator(p: &RadialProblem) -> Result<(Discretization, SymTridiagonal, Vec<f64>)> {
    p.validate()?;
    let d = discretize(p);
    let (sym, scale) = SymTridiagonal::from_weighted(&d.k_diag, &d.k_off, &d.weights);
    Ok((d, sym, scale))
}

/// `μ(m, B)` only.
pub fn radial_mu(p: &RadialProblem) -> Result<f64> {
    Ok(radial_ground(p)?.mu)
}

/// Rayleigh quotient in the unscaled flux form, which stays accurate when the
/// tiny center weight makes the symmetric scaling badly conditioned.
fn quotient(d: &Discretization, u: &[f64]) -> f64 {
    let n = u.len();
    let mut num = 0.0;
    for i in 0..n - 1 {
        num += -d.k_off[i] * (u[i + 1] - u[i]).powi(2);
    }
    // the diagonal minus the coupled fluxes leaves the potential (and, for a
    // dropped center, the Dirichlet flux)
    for i in 0..n {
        let left = if i > 0 { -d.k_off[i - 1] } else { 0.0 };
        let right = if i + 1 < n { -d.k_off[i] } else { 0.0 };
        num += (d.k_diag[i] - left - right) * u[i] * u[i];
    }
    let den: f64 = d.weights.iter().zip(u).map(|(w, u)| w * u * u).sum();
    num / den
}

/// Lowest eigenpair of the radial operator together with its branch slope.
pub fn radial_ground(p: &RadialProblem) -> Result<RadialMode> {
    let (d, sym, scale) = operator(p)?;
    let (mu_bisect, v) = sym.lowest();
    let tv = sym.matvec(&v);
    let residual = tv.iter().zip(&v).map(|(a, b)| (a - mu_bisect * b).powi(2)).sum::<f64>().sqrt();
    let (lo, hi) = sym.gershgorin();
    if !(residual < 1e-10 * (hi - lo).abs().max(1.0)) {
        return Err(Error::NoConvergence { iterations: 1, residual });
    }
    let mut u: Vec<f64> = v.iter().zip(&scale).map(|(a, s)| a * s).collect();
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    let mu = quotient(&d, &u);
    let m = p.m as f64;
    let slope = d.radii.iter().zip(&d.weights).zip(&u).map(|((r, w), u)| w * (0.5 * p.b * r * r - m) * u * u).sum();
    Ok(RadialMode { problem: *p, mu, slope, radii: d.radii, u, weights: d.weights })
}

/// Default angular-momentum window `|m − BR²/2| ≤ 3√B + 10`.
pub fn default_window(b: f64, r: f64) -> (i64, i64) {
    let center = 0.5 * b * r * r;
    let half = 3.0 * b.sqrt() + 10.0;
    ((center - half).floor() as i64, (center + half).ceil() as i64)
}

/// Ground energy of the disc and the minimizing branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscGround {
    pub b: f64,
    pub lambda1: f64,
    pub m_star: i64,
    /// Window that was searched.
    pub window: (i64, i64),
    /// `∂μ/∂B` of the minimizing branch.
    pub slope: f64,
}

fn window_minimum(b: f64, r: f64, intervals: usize, (lo, hi): (i64, i64)) -> Result<(i64, f64)> {
    let mut best = (lo, f64::INFINITY);
    for m in lo..=hi {
        let mu = radial_mu(&RadialProblem { m, b, r, intervals })?;
        if mu < best.1 {
            best = (m, mu);
        }
    }
    Ok(best)
}

/// `λ₁(B)` on the disc of radius `R`, minimizing over an angular-momentum
/// window that is widened once when the minimizer sits on its edge.
pub fn disc_lambda1(b: f64, r: f64) -> Result<DiscGround> {
    disc_lambda1_with(b, r, default_intervals(b, r))
}

pub fn disc_lambda1_with(b: f64, r: f64, intervals: usize) -> Result<DiscGround> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::Precondition(format!("field strength {b} must be finite and non-negative")));
    }
    if b == 0.0 {
        return Ok(DiscGround { b, lambda1: 0.0, m_star: 0, window: (0, 0), slope: 0.0 });
    }
    let mut window = default_window(b, r);
    for _ in 0..2 {
        let (m, mu) = window_minimum(b, r, intervals, window)?;
        if m > window.0 && m < window.1 {
            let slope = radial_ground(&RadialProblem { m, b, r, intervals })?.slope;
            return Ok(DiscGround { b, lambda1: mu, m_star: m, window, slope });
        }
        let half = window.1 - window.0;
        window = (window.0 - half, window.1 + half);
    }
    Err(Error::Numeric(format!("minimizing angular momentum at B = {b} stays on the edge of the window {window:?}")))
}

/// Switch of the minimizing branch from `m_left` to `m_right` at `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub b: f64,
    pub lambda1: f64,
    pub m_left: i64,
    pub m_right: i64,
    /// One-sided derivatives of `λ₁` at the crossing.
    pub slope_left: f64,
    pub slope_right: f64,
}

/// Branch values on a field grid and the crossings of the envelope.
#[derive(Debug, Clone, Serialize)]
pub struct BranchDiagram {
    pub r: f64,
    pub b_grid: Vec<f64>,
    /// `(B, m, μ)` for every evaluated branch.
    #[serde(skip)]
    pub table: Vec<(f64, i64, f64)>,
    pub ground: Vec<DiscGround>,
    pub crossings: Vec<Crossing>,
}

impl BranchDiagram {
    /// Largest and smallest one-sided slope of the envelope over the grid
    /// points and both sides of every crossing.
    pub fn slope_range(&self) -> (f64, f64) {
        let slopes = self.ground.iter().map(|g| g.slope).chain(self.crossings.iter().flat_map(|c| [c.slope_left, c.slope_right]));
        slopes.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
    }

    /// Long-format table `B, m, mu`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["B", "m", "mu"])?;
        for (b, m, mu) in &self.table {
            w.write_record([b.to_string(), m.to_string(), mu.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn crossings_json(&self) -> serde_json::Value {
        serde_json::json!({ "R": self.r, "crossings": self.crossings })
    }
}

/// Envelope on an increasing field grid with every branch switch located by
/// bisection on the difference of the two branches.
pub fn branch_crossings(b_grid: &[f64], r: f64) -> Result<BranchDiagram> {
    if b_grid.len() < 2 || b_grid.windows(2).any(|w| !(w[1] > w[0])) || b_grid[0] <= 0.0 {
        return Err(Error::Precondition("field grid must be positive and strictly increasing".into()));
    }
    // one resolution for the whole diagram keeps branches smooth in B
    let intervals = default_intervals(*b_grid.last().unwrap(), r);
    let rows: Vec<(DiscGround, Vec<(f64, i64, f64)>)> = b_grid
        .par_iter()
        .map(|&b| {
            let g = disc_lambda1_with(b, r, intervals)?;
            let near = (g.m_star - 3)..=(g.m_star + 3);
            let table = near.map(|m| Ok((b, m, radial_mu(&RadialProblem { m, b, r, intervals })?))).collect::<Result<Vec<_>>>()?;
            Ok((g, table))
        })
        .collect::<Result<Vec<_>>>()?;
    let ground: Vec<DiscGround> = rows.iter().map(|(g, _)| *g).collect();
    let table = rows.into_iter().flat_map(|(_, t)| t).collect();

    let mut crossings = Vec::new();
    for w in ground.windows(2) {
        locate_switches(w[0].b, w[0].m_star, w[1].b, w[1].m_star, r, intervals, &mut crossings, 0)?;
    }
    Ok(BranchDiagram { r, b_grid: b_grid.to_vec(), table, ground, crossings })
}

fn branch(m: i64, b: f64, r: f64, intervals: usize) -> Result<f64> {
    radial_mu(&RadialProblem { m, b, r, intervals })
}

fn locate_switches(b_lo: f64, m_lo: i64, b_hi: f64, m_hi: i64, r: f64, intervals: usize, out: &mut Vec<Crossing>, depth: usize) -> Result<()> {
    if m_lo == m_hi {
        return Ok(());
    }
    if (m_hi - m_lo).abs() > 1 && depth < 40 {
        // several switches in one cell: split at the midpoint
        let mid = 0.5 * (b_lo + b_hi);
        let m_mid = disc_lambda1_with(mid, r, intervals)?.m_star;
        locate_switches(b_lo, m_lo, mid, m_mid, r, intervals, out, depth + 1)?;
        return locate_switches(mid, m_mid, b_hi, m_hi, r, intervals, out, depth + 1);
    }
    let diff = |b: f64| -> Result<f64> { Ok(branch(m_lo, b, r, intervals)? - branch(m_hi, b, r, intervals)?) };
    let (mut a, mut c) = (b_lo, b_hi);
    let fa = diff(a)?;
    if fa > 0.0 || diff(c)? < 0.0 {
        return Err(Error::Numeric(format!("branches {m_lo} and {m_hi} do not cross on [{b_lo}, {b_hi}]")));
    }
    while c - a > 1e-11 * c.max(1.0) {
        let mid = 0.5 * (a + c);
        if diff(mid)? <= 0.0 {
            a = mid;
        } else {
            c = mid;
        }
    }
    let b = 0.5 * (a + c);
    let left = radial_ground(&RadialProblem { m: m_lo, b, r, intervals })?;
    let right = radial_ground(&RadialProblem { m: m_hi, b, r, intervals })?;
    out.push(Crossing { b, lambda1: left.mu.min(right.mu), m_left: m_lo, m_right: m_hi, slope_left: left.slope, slope_right: right.slope });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_constant_mode() {
        let g = radial_ground(&RadialProblem::new(0, 0.0, 1.0)).unwrap();
        assert!(g.mu.abs() < 1e-10);
        let (lo, hi) = g.u.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &u| (a.min(u), b.max(u)));
        assert!(hi - lo < 1e-8);
        assert_eq!(disc_lambda1(0.0, 1.0).unwrap().m_star, 0);
    }

    #[test]
    fn neumann_disc_bessel_eigenvalue() {
        // B = 0, m = 1: first zero of J1' is 1.8411837813
        let mu = radial_mu(&RadialProblem::new(1, 0.0, 1.0).with_intervals(2000)).unwrap();
        assert!((mu - 1.841_183_781_3_f64.powi(2)).abs() < 1e-5, "{mu}");
    }

    #[test]
    fn second_order_in_grid() {
        let p = RadialProblem::new(3, 10.0, 1.0);
        let mu = |n| radial_mu(&p.with_intervals(n)).unwrap();
        let (a, b, c) = (mu(200), mu(400), mu(800));
        let order = ((a - b) / (b - c)).log2();
        assert!((order - 2.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn slope_matches_finite_differences() {
        for m in [0, 2, 7] {
            let p = RadialProblem::new(m, 12.0, 1.0).with_intervals(1500);
            let g = radial_ground(&p).unwrap();
            let d = 1e-4;
            let fd = (radial_mu(&RadialProblem { b: 12.0 + d, ..p }).unwrap() - radial_mu(&RadialProblem { b: 12.0 - d, ..p }).unwrap()) / (2.0 * d);
            assert!((g.slope - fd).abs() < 1e-6 * fd.abs().max(1.0), "m={m}: {} vs {fd}", g.slope);
        }
    }

    #[test]
    fn branches_grow_away_from_window_center() {
        let b = 30.0;
        let g = disc_lambda1(b, 1.0).unwrap();
        let mu = |m| radial_mu(&RadialProblem::new(m, b, 1.0)).unwrap();
        assert!(mu(g.window.0) > g.lambda1 + 5.0 && mu(g.window.1) > g.lambda1 + 5.0);
        assert!(mu(0) >= g.lambda1);
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = RadialProblem::new(0, 400.0, 1.0).with_intervals(100);
        assert!(matches!(radial_mu(&p), Err(Error::Precondition(_))));
    }

    #[test]
    fn crossings_order_slopes() {
        let grid: Vec<f64> = (0..=40).map(|i| 10.0 + 0.25 * i as f64).collect();
        let d = branch_crossings(&grid, 1.0).unwrap();
        assert!(!d.crossings.is_empty());
        for c in &d.crossings {
            assert_eq!(c.m_right, c.m_left + 1);
            assert!(c.slope_right <= c.slope_left);
            let l = disc_lambda1(c.b, 1.0).unwrap().lambda1;
            assert!((l - c.lambda1).abs() < 1e-4 * l);
        }
    }
}
