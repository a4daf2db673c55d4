//! Lowest eigenpair of the pencil `(H_B, M)` by shift-invert Lanczos.
//!
//! The operator `(H − σM)⁻¹M` is self-adjoint in the `M` inner product, so a
//! Lanczos recurrence with full reorthogonalization yields a real symmetric
//! tridiagonal projection. Its largest Ritz value `θ` gives `λ = σ + 1/θ`.
//! Cycles are restarted from the current Ritz vector until the true residual
//! `‖Hψ − λMψ‖ / ‖Mψ‖` meets the tolerance. Both norms are weighted by
//! `diag(M)^{-1/2}`, which makes the ratio a property of the discrete function
//! rather than of the element sizes (graded meshes span several decades).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::assembly::AssembledForms;
use super::sparse::Factor;
use crate::error::{Error, Result};
use crate::gauge::PotentialKind;
use crate::tridiag::SymTridiagonal;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenOptions {
    /// Relative residual tolerance, scaled by `max(1, |λ|)`.
    pub tol: f64,
    pub seed: u64,
    /// Initial shift; `−1` when absent (the spectrum starts at 0).
    pub shift: Option<f64>,
    pub krylov_dim: usize,
    pub max_restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, seed: 0, shift: None, krylov_dim: 24, max_restarts: 40 }
    }
}

impl EigenOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_shift(mut self, shift: Option<f64>) -> Self {
        self.shift = shift;
        self
    }
}

/// Ground state of the discretized magnetic Neumann Laplacian.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Nodal values, `M`-normalized, largest component real and positive.
    #[serde(skip)]
    pub psi: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
    pub shift: f64,
    pub b: f64,
    pub kind: PotentialKind,
    /// Distance to the second Ritz value of the last cycle.
    pub gap_estimate: Option<f64>,
}

impl EigenResult {
    /// `{lambda1, residual, iterations}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({ "lambda1": self.lambda1, "residual": self.residual, "iterations": self.iterations })
    }
}

fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn factor_at(forms: &AssembledForms, sigma: f64) -> Result<Factor> {
    Factor::new(forms.pattern(), &forms.shifted(sigma))
}

/// Factorizes `H − σM`, lowering `σ` until the matrix is positive definite.
fn factor_below(forms: &AssembledForms, sigma: &mut f64) -> Result<Factor> {
    let mut last = None;
    for _ in 0..12 {
        match factor_at(forms, *sigma) {
            Ok(f) => return Ok(f),
            Err(e) => {
                last = Some(e);
                *sigma -= 0.5 * sigma.abs().max(1.0);
            }
        }
    }
    Err(last.unwrap_or_else(|| Error::Numeric("factorization failed".into())))
}

struct Cycle {
    theta: f64,
    second: Option<f64>,
    ritz: Vec<C64>,
    steps: usize,
}

fn lanczos_cycle(forms: &AssembledForms, factor: &Factor, start: &[C64], k: usize) -> Cycle {
    let n = start.len();
    let mut v: Vec<Vec<C64>> = vec![start.to_vec()];
    let mut mv: Vec<Vec<C64>> = Vec::new();
    let mut m0 = vec![C64::new(0.0, 0.0); n];
    forms.apply_mass(start, &mut m0);
    mv.push(m0);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut best = (0.0, vec![1.0], None);
    for j in 0..k {
        let mut w = mv[j].clone();
        factor.solve_in_place(&mut w);
        let a = dot(&mv[j], &w).re;
        alpha.push(a);
        // two passes of classical Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for i in 0..=j {
                let c = dot(&mv[i], &w);
                for (wi, vi) in w.iter_mut().zip(&v[i]) {
                    *wi -= c * vi;
                }
            }
        }
        let mut mw = vec![C64::new(0.0, 0.0); n];
        forms.apply_mass(&w, &mut mw);
        let b = dot(&w, &mw).re.max(0.0).sqrt();
        let t = SymTridiagonal::new(alpha.clone(), beta.clone());
        let (theta, s) = t.largest();
        let second = (t.len() > 1).then(|| t.eigenvalue(t.len() - 2));
        best = (theta, s.clone(), second);
        let estimate = b * s[j].abs();
        if estimate <= 1e-15 * theta.abs() || b <= 1e-14 * theta.abs() || j + 1 == k {
            break;
        }
        w.iter_mut().for_each(|x| *x /= b);
        mw.iter_mut().for_each(|x| *x /= b);
        beta.push(b);
        v.push(w);
        mv.push(mw);
    }
    let (theta, s, second) = best;
    let mut ritz = vec![C64::new(0.0, 0.0); n];
    for (coef, vi) in s.iter().zip(&v) {
        for (r, x) in ritz.iter_mut().zip(vi) {
            *r += x * *coef;
        }
    }
    Cycle { theta, second, ritz, steps: s.len() }
}

fn m_normalize(forms: &AssembledForms, x: &mut [C64]) -> f64 {
    let nrm = forms.m_inner(x, x).re.sqrt();
    x.iter_mut().for_each(|v| *v /= nrm);
    nrm
}

fn residual(forms: &AssembledForms, h: &[C64], x: &[C64], lambda: f64) -> f64 {
    let n = x.len();
    let mut hx = vec![C64::new(0.0, 0.0); n];
    let mut mx = vec![C64::new(0.0, 0.0); n];
    forms.pattern().matvec(h, x, &mut hx);
    forms.apply_mass(x, &mut mx);
    // scale by diag(M)^{-1/2} so the ratio does not depend on element sizes
    let d = forms.mass_diagonal();
    let r: Vec<C64> = hx.iter().zip(&mx).zip(d).map(|((a, b), d)| (a - b * lambda) / d.sqrt()).collect();
    let m: Vec<C64> = mx.iter().zip(d).map(|(b, d)| b / d.sqrt()).collect();
    norm2(&r) / norm2(&m)
}

/// Smallest eigenpair of `H_B ψ = λ M ψ`. A start vector may be supplied
/// for warm starts; otherwise a seeded random vector is used.
pub fn ground_state(forms: &AssembledForms, opts: &EigenOptions, initial: Option<&[C64]>) -> Result<EigenResult> {
    let n = forms.n();
    let mut x: Vec<C64> = match initial {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => return Err(Error::Contract(format!("start vector of length {} for {n} unknowns", v.len()))),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        }
    };
    if m_normalize(forms, &mut x) == 0.0 {
        return Err(Error::Contract("zero start vector".into()));
    }
    let h = forms.hamiltonian();
    let mut sigma = opts.shift.unwrap_or(-1.0);
    let mut factor = factor_below(forms, &mut sigma)?;
    let mut iterations = 0;
    let mut res = f64::INFINITY;
    let mut refined_shift = false;
    for _ in 0..opts.max_restarts.max(1) {
        let cycle = lanczos_cycle(forms, &factor, &x, opts.krylov_dim.max(2));
        iterations += cycle.steps;
        if !(cycle.theta > 0.0 && cycle.theta.is_finite()) {
            return Err(Error::Numeric(format!("invalid Ritz value {} at shift {sigma}", cycle.theta)));
        }
        let lambda = sigma + 1.0 / cycle.theta;
        x = cycle.ritz;
        m_normalize(forms, &mut x);
        res = residual(forms, &h, &x, lambda);
        let scale = lambda.abs().max(1.0);
        if res <= opts.tol * scale {
            if lambda < -1e-8 {
                return Err(Error::Numeric(format!("negative eigenvalue {lambda:.3e} violates the diamagnetic bound")));
            }
            // fix the global phase
            let imax = (0..n).max_by(|&a, &b| x[a].norm().total_cmp(&x[b].norm())).unwrap_or(0);
            let phase = x[imax].conj() / x[imax].norm();
            x.iter_mut().for_each(|v| *v *= phase);
            return Ok(EigenResult {
                lambda1: lambda,
                psi: x,
                residual: res,
                iterations,
                shift: sigma,
                b: forms.b(),
                kind: forms.kind(),
                gap_estimate: cycle.second.filter(|s| *s > 0.0).map(|s| sigma + 1.0 / s - lambda),
            });
        }
        // once the Ritz value is reliable, move the shift just below it
        let target = lambda - 0.1 * scale;
        if !refined_shift && res <= 1e-2 * scale && target > sigma + 0.05 * scale {
            refined_shift = true;
            if let Ok(f) = factor_at(forms, target) {
                factor = f;
                sigma = target;
            }
        }
    }
    Err(Error::NoConvergence { iterations, residual: res })
}

/// `⟨ψ, H_B ψ⟩ / ⟨ψ, M ψ⟩`.
pub fn rayleigh(forms: &AssembledForms, psi: &[C64]) -> Result<f64> {
    forms.rayleigh(psi)
}
