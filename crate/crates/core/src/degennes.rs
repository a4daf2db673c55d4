//! Half-plane model: the fiber operators `−u'' + (t − ξ)² u` on `t > 0` with a
//! Neumann condition at the wall, whose minimal ground energy over `ξ` is the
//! de Gennes constant `Θ₀`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

/// Default grid spacing.
pub const DEFAULT_DT: f64 = 0.0025;
/// Default truncation length.
pub const DEFAULT_T_MAX: f64 = 12.0;

/// Discretized fiber ground state.
#[derive(Debug, Clone, Serialize)]
pub struct FiberMode {
    pub xi: f64,
    pub dt: f64,
    pub t_max: f64,
    pub mu: f64,
    /// Nodal values at `t_i = i·dt`, `i < T_max/dt`, normalized in the
    /// trapezoidal inner product.
    pub u: Vec<f64>,
    pub residual: f64,
}

impl FiberMode {
    /// Trapezoidal weights of the nodes (half weight at the wall).
    pub fn weights(&self) -> Vec<f64> {
        fiber_weights(self.u.len(), self.dt)
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.u.len()).map(|i| i as f64 * self.dt).collect()
    }
}

/// De Gennes constant, minimizing momentum, and model eigenfunction.
#[derive(Debug, Clone, Serialize)]
pub struct ModelConstants {
    pub theta0: f64,
    pub xi0: f64,
    pub dt: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    /// `dμ₁/dξ` at `ξ₀`.
    pub stationarity: f64,
    #[serde(skip)]
    pub u0: Vec<f64>,
    pub evaluations: usize,
}

fn fiber_weights(n: usize, dt: f64) -> Vec<f64> {
    let mut w = vec![dt; n];
    w[0] = 0.5 * dt;
    w
}

fn check_grid(xi: f64, dt: f64, t_max: f64) -> Result<usize> {
    if !(dt > 0.0 && dt <= 0.01) {
        return Err(Error::Precondition(format!("dt = {dt} must lie in (0, 0.01]")));
    }
    if !xi.is_finite() || t_max < xi + 8.0 {
        return Err(Error::Precondition(format!("T_max = {t_max} must be at least ξ + 8 = {}", xi + 8.0)));
    }
    Ok((t_max / dt).round() as usize)
}

/// Ground state of the fiber operator with the ghost-node Neumann condition
/// at `t = 0` and `u(T_max) = 0`.
pub fn fiber_ground(xi: f64, dt: f64, t_max: f64) -> Result<FiberMode> {
    let n = check_grid(xi, dt, t_max)?;
    let w = fiber_weights(n, dt);
    // symmetric form: (weights) × (three-point operator), ghost u_{-1} = u_1
    let mut k_diag = Vec::with_capacity(n);
    for (i, wi) in w.iter().enumerate() {
        let t = i as f64 * dt;
        let stiff = if i == 0 { 1.0 / dt } else { 2.0 / dt };
        k_diag.push(stiff + wi * (t - xi).powi(2));
    }
    let k_off = vec![-1.0 / dt; n - 1];
    let (sym, scale) = SymTridiagonal::from_weighted(&k_diag, &k_off, &w);
    let (mu, v) = sym.lowest();
    let residual = {
        let tv = sym.matvec(&v);
        tv.iter().zip(&v).map(|(a, b)| (a - mu * b).powi(2)).sum::<f64>().sqrt()
    };
    if !(residual < 1e-8 * mu.abs().max(1.0)) {
        return Err(Error::NoConvergence { iterations: 4, residual });
    }
    // v is unit in the Euclidean norm, so u = W^{-1/2} v is unit in the weighted one
    let u = v.iter().zip(&scale).map(|(a, s)| a * s).collect();
    Ok(FiberMode { xi, dt, t_max, mu, u, residual })
}

/// `μ₁(ξ)` of the discretized fiber operator.
pub fn mu1(xi: f64, dt: f64, t_max: f64) -> Result<f64> {
    Ok(fiber_ground(xi, dt, t_max)?.mu)
}

/// `dμ₁/dξ = −2 ∫ (t − ξ) u² dt` for a normalized fiber ground state. The
/// quadrature matches the discrete operator, so this is the exact derivative of
/// the discrete eigenvalue.
pub fn mu1_prime(mode: &FiberMode) -> Result<f64> {
    let w = mode.weights();
    let norm: f64 = mode.u.iter().zip(&w).map(|(u, w)| w * u * u).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Contract(format!("fiber state has norm² {norm}, expected 1")));
    }
    Ok(mode.u.iter().zip(&w).enumerate().map(|(i, (u, w))| -2.0 * (i as f64 * mode.dt - mode.xi) * w * u * u).sum())
}

/// `(ξ, μ₁, dμ₁/dξ)` rows for a list of momenta, evaluated in parallel.
pub fn scan(xis: &[f64], dt: f64, t_max: f64) -> Result<Vec<(f64, f64, f64)>> {
    xis.par_iter()
        .map(|&xi| {
            let m = fiber_ground(xi, dt, t_max.max(xi + 8.0))?;
            Ok((xi, m.mu, mu1_prime(&m)?))
        })
        .collect()
}

/// Minimizes `ξ ↦ μ₁(ξ)` by golden section inside the bracket found on a
/// coarse scan of `[−1, 3]`, polished by bisection on `dμ₁/dξ`.
pub fn theta0_minimize(dt: f64, t_max: f64, tol_xi: f64) -> Result<ModelConstants> {
    if !(tol_xi > 0.0 && tol_xi <= 1e-6) {
        return Err(Error::Precondition(format!("tol_xi = {tol_xi} must lie in (0, 1e-6]")));
    }
    let (lo, hi, steps) = (-1.0, 3.0, 40);
    check_grid(hi, dt, t_max)?;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let values: Vec<f64> = grid.par_iter().map(|&x| mu1(x, dt, t_max)).collect::<Result<_>>()?;
    let mut evaluations = values.len();
    let imin = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    if imin == 0 || imin == values.len() - 1 {
        return Err(Error::Numeric(format!("no interior minimum of μ₁ on [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (grid[imin - 1], grid[imin + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (mu1(c, dt, t_max)?, mu1(d, dt, t_max)?);
    evaluations += 2;
    // μ₁ is flat at the minimum, so its round-off stops golden section near
    // √ε; the last digits come from the sign of the exact derivative
    while b - a > tol_xi.max(1e-4) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = mu1(c, dt, t_max)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = mu1(d, dt, t_max)?;
        }
        evaluations += 1;
    }
    while b - a > tol_xi {
        let mid = 0.5 * (a + b);
        if mu1_prime(&fiber_ground(mid, dt, t_max)?)? > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
        evaluations += 1;
    }
    let xi0 = 0.5 * (a + b);
    let mode = fiber_ground(xi0, dt, t_max)?;
    Ok(ModelConstants { theta0: mode.mu, xi0, dt, t_max, stationarity: mu1_prime(&mode)?, u0: mode.u, evaluations: evaluations + 1 })
}

/// Constants at the default resolution.
pub fn default_constants() -> Result<ModelConstants> {
    theta0_minimize(DEFAULT_DT, DEFAULT_T_MAX, 1e-7)
}

/// Writes `xi, mu1, dmu1` rows.
pub fn write_scan_csv<W: std::io::Write>(rows: &[(f64, f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["xi", "mu1", "dmu1"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_well_has_unit_energy() {
        // the even Gaussian satisfies the Neumann condition
        assert!((mu1(0.0, 0.0025, 12.0).unwrap() - 1.0).abs() < 1e-4);
    }

    /// Far from the wall the full-line oscillator (eigenvalue 1) is the oracle.
    #[test]
    fn distant_well_matches_oscillator() {
        let m = mu1(10.0, 0.0025, 20.0).unwrap();
        // three-point truncation error of the oscillator is −dt²/16 · ⟨x⁴⟩·…; bounded by dt²
        assert!((m - 1.0).abs() < 1e-6, "{m}");
    }

    #[test]
    fn second_order_convergence() {
        let xi = 0.8;
        let a = mu1(xi, 0.01, 12.0).unwrap();
        let b = mu1(xi, 0.005, 12.0).unwrap();
        let c = mu1(xi, 0.0025, 12.0).unwrap();
        let order = ((a - b) / (b - c)).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for xi in [0.0, 0.4, 0.77, 2.0] {
            let m = fiber_ground(xi, 0.0025, 12.0).unwrap();
            let d = mu1_prime(&m).unwrap();
            let h = 1e-4;
            let fd = (mu1(xi + h, 0.0025, 12.0).unwrap() - mu1(xi - h, 0.0025, 12.0).unwrap()) / (2.0 * h);
            assert!((d - fd).abs() < 1e-4, "ξ={xi}: {d} vs {fd}");
        }
        assert!(mu1_prime(&fiber_ground(0.0, 0.0025, 12.0).unwrap()).unwrap() < 0.0);
        assert!(mu1_prime(&fiber_ground(2.0, 0.0025, 12.0).unwrap()).unwrap() > 0.0);
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let mut m = fiber_ground(0.5, 0.005, 12.0).unwrap();
        m.u.iter_mut().for_each(|v| *v *= 2.0);
        assert!(matches!(mu1_prime(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn short_truncation_is_rejected() {
        assert!(matches!(mu1(5.0, 0.005, 12.0), Err(Error::Precondition(_))));
        assert!(matches!(mu1(0.0, 0.02, 12.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn constants_and_global_minimality() {
        let c = default_constants().unwrap();
        assert!(c.theta0 > 0.58 && c.theta0 < 0.60, "{}", c.theta0);
        assert!((c.xi0 * c.xi0 - c.theta0).abs() < 1e-3);
        assert!(c.stationarity.abs() < 1e-5, "{:?}", (c.stationarity, c.xi0, c.theta0));
        let rows = scan(&(0..60).map(|i| -2.0 + 0.1 * i as f64).collect::<Vec<_>>(), 0.0025, 12.0).unwrap();
        for (xi, mu, _) in &rows {
            if (xi - c.xi0).abs() > 1e-3 {
                assert!(*mu > c.theta0);
            }
            if *xi <= 0.0 {
                assert!(*mu >= 1.0 - 1e-4);
            }
        }
        // increasing towards 1 on the right
        let tail: Vec<f64> = rows.iter().filter(|r| r.0 > 1.0).map(|r| r.1).collect();
        assert!(tail.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}
