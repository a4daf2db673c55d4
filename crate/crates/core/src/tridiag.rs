//! Symmetric tridiagonal eigenvalue kernels.
//!
//! Extremal eigenvalues are located by Sturm-sequence bisection, which is
//! deterministic and reliable to a few ulps; eigenvectors follow from two or
//! three steps of inverse iteration at the converged eigenvalue.

/// Real symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty tridiagonal matrix");
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length must be n - 1");
        Self { diag, off }
    }

    /// Symmetric form of the generalized problem `K u = mu W u` with diagonal `W > 0`:
    /// returns `W^{-1/2} K W^{-1/2}` together with the scaling `W^{-1/2}`.
    pub fn from_weighted(k_diag: &[f64], k_off: &[f64], weights: &[f64]) -> (Self, Vec<f64>) {
        let scale: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let diag = k_diag.iter().zip(&scale).map(|(k, s)| k * s * s).collect();
        let off = k_off.iter().enumerate().map(|(i, k)| k * scale[i] * scale[i + 1]).collect();
        (Self::new(diag, off), scale)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let (lo, hi) = self.gershgorin();
        let tiny = f64::EPSILON * (lo.abs().max(hi.abs()).max(1.0)) * 1e-3;
        let mut count = 0;
        let mut d = self.diag[0] - x;
        if d == 0.0 {
            d = -tiny;
        }
        if d < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let b = self.off[i - 1];
            d = self.diag[i] - x - b * b / d;
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (zero based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * (hi - lo).abs().max(1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit 2-norm eigenvector for an (accurate) eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        if n == 1 {
            return vec![1.0];
        }
        let (lo, hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        let shift = lambda - 1e-13 * scale;
        let mut x = vec![1.0; n];
        // deterministic, non-symmetric start avoids accidental orthogonality
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += 1e-3 * ((i % 7) as f64);
        }
        for _ in 0..4 {
            let mut y = self.solve_shifted(shift, &x, scale);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                break;
            }
            y.iter_mut().for_each(|v| *v /= norm);
            x = y;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        // fix the sign: largest component positive
        let imax = x.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(i, _)| i).unwrap_or(0);
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        x
    }

    /// Solves `(T - shift I) y = rhs` by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, shift: f64, rhs: &[f64], scale: f64) -> Vec<f64> {
        let n = self.len();
        let guard = f64::EPSILON * scale;
        // rows stored as (sub, diag, sup, sup2) after pivoting
        let mut d: Vec<f64> = self.diag.iter().map(|a| a - shift).collect();
        let mut up: Vec<f64> = self.off.clone();
        up.push(0.0);
        let mut up2 = vec![0.0; n];
        let mut low: Vec<f64> = self.off.clone();
        let mut b = rhs.to_vec();
        for i in 0..n - 1 {
            if low[i].abs() > d[i].abs() {
                // swap rows i and i+1
                d.swap(i, i + 1);
                b.swap(i, i + 1);
                // row i: (low_i, d_{i+1}, up_{i+1}) ; row i+1: (d_i, up_i, 0)
                let (ri0, ri1, ri2) = (low[i], d[i], up[i + 1]);
                let (rj0, rj1, rj2) = (d[i + 1], up[i], 0.0);
                d[i] = ri0;
                up[i] = ri1;
                up2[i] = ri2;
                let m = rj0 / d[i];
                d[i + 1] = rj1 - m * up[i];
                up[i + 1] = rj2 - m * up2[i];
                b[i + 1] -= m * b[i];
                low[i] = 0.0;
            } else {
                if d[i].abs() < guard {
                    d[i] = guard;
                }
                let m = low[i] / d[i];
                d[i + 1] -= m * up[i];
                b[i + 1] -= m * b[i];
                up2[i] = 0.0;
            }
        }
        if d[n - 1].abs() < guard {
            d[n - 1] = guard;
        }
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= up[i] * y[i + 1];
            }
            if i + 2 < n {
                s -= up2[i] * y[i + 2];
            }
            y[i] = s / d[i];
        }
        y
    }

    /// Smallest eigenpair.
    pub fn lowest(&self) -> (f64, Vec<f64>) {
        let lambda = self.eigenvalue(0);
        (lambda, self.eigenvector(lambda))
    }

    /// Largest eigenpair.
    pub fn largest(&self) -> (f64, Vec<f64>) {
        let neg = SymTridiagonal::new(self.diag.iter().map(|v| -v).collect(), self.off.iter().map(|v| -v).collect());
        let (lambda, v) = neg.lowest();
        (-lambda, v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn dirichlet_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        for k in [0, 1, 10, 49] {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((t.eigenvalue(k) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn lowest_eigenvector_residual() {
        let t = laplacian(200);
        let (l, v) = t.lowest();
        let tv = t.matvec(&v);
        let res: f64 = tv.iter().zip(&v).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt();
        assert!(res < 1e-10, "residual {res}");
        assert!(v.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn one_by_one() {
        let t = SymTridiagonal::new(vec![3.5], vec![]);
        assert!((t.lowest().0 - 3.5).abs() < 1e-14);
        assert!((t.largest().0 - 3.5).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn sturm_count_matches_bisection(diag in prop::collection::vec(-5.0f64..5.0, 2..30), seed in 0u64..1000) {
            let n = diag.len();
            let off: Vec<f64> = (0..n - 1).map(|i| ((i as u64 * 7919 + seed) % 97) as f64 / 50.0 - 0.9).collect();
            let t = SymTridiagonal::new(diag, off);
            let lo = t.eigenvalue(0);
            let hi = t.largest().0;
            prop_assert!(lo <= hi + 1e-12);
            prop_assert_eq!(t.count_below(lo - 1e-9), 0);
            prop_assert_eq!(t.count_below(hi + 1e-9), n);
            let (l, v) = t.lowest();
            let tv = t.matvec(&v);
            let res: f64 = tv.iter().zip(&v).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res < 1e-7, "residual {}", res);
        }
    }
}
