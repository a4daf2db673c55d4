use serde::Serialize;

use super::curve::BoundaryCurve;

/// Closed arc `[start, end]` of arc-length values; `end` may exceed the
/// perimeter when the arc wraps through `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// Curvature statistics of a boundary and its maximal-curvature set.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureProfile {
    pub k_max: f64,
    pub k_min: f64,
    pub tol: f64,
    /// Arcs where `k ≥ k_max − tol`; a single full-length arc for a circle.
    pub pi: Vec<Arc>,
    pub is_disc: bool,
    /// Reference point, chosen in the middle of the largest gap of `Π`.
    pub s0: f64,
    /// Largest `ε₀` with `[s₀ − 2ε₀, s₀ + 2ε₀] ∩ Π = ∅`; zero for a circle.
    pub eps0_margin: f64,
    pub perimeter: f64,
}

impl CurvatureProfile {
    /// Default threshold relative to the maximal curvature.
    pub fn default_tol(curve: &BoundaryCurve) -> f64 {
        let (_, hi) = curve.curvature_range();
        1e-6 * hi.abs()
    }

    /// Number of connected components of `Π`.
    pub fn pi_count(&self) -> usize {
        self.pi.len()
    }

    /// Distance along the boundary from `s` to `Π`.
    pub fn arc_distance_to_pi(&self, s: f64) -> f64 {
        if self.is_disc {
            return 0.0;
        }
        let p = self.perimeter;
        self.pi
            .iter()
            .map(|a| {
                let x = (s - a.start).rem_euclid(p);
                if x <= a.length() {
                    0.0
                } else {
                    (x - a.length()).min(p - x)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Planar points sampling `Π` (arc ends and midpoint).
    pub fn pi_points(&self, curve: &BoundaryCurve) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for a in &self.pi {
            let n = ((a.length() / curve.perimeter() * curve.resolution() as f64).ceil() as usize).max(2);
            for i in 0..=n {
                out.push(curve.point_at_s(a.start + a.length() * i as f64 / n as f64).pos);
            }
        }
        out
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Locates `k_max` and the set `Π = {s : k(s) ≥ k_max − tol}`.
pub fn curvature_maxima(curve: &BoundaryCurve, tol: f64) -> CurvatureProfile {
    let samples = curve.samples();
    let n = samples.len();
    let p = curve.perimeter();
    let ds = p / n as f64;
    let k = |s: f64| curve.point_at_s(s).curvature;
    let (k_min, k_hi) = curve.curvature_range();

    if samples.iter().all(|q| q.curvature >= k_hi - tol) {
        return CurvatureProfile {
            k_max: k_hi,
            k_min,
            tol,
            pi: vec![Arc { start: 0.0, end: p }],
            is_disc: true,
            s0: 0.0,
            eps0_margin: 0.0,
            perimeter: p,
        };
    }

    // refine every discrete local maximum
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for j in 0..n {
        let prev = samples[(j + n - 1) % n].curvature;
        let next = samples[(j + 1) % n].curvature;
        let cur = samples[j].curvature;
        if cur >= prev && cur > next {
            let s = samples[j].s;
            peaks.push(golden_max(k, s - ds, s + ds, 1e-10 * p));
        }
    }
    let k_max = peaks.iter().map(|q| q.1).fold(k_hi, f64::max);
    let level = k_max - tol;

    let mut pi: Vec<Arc> = Vec::new();
    for &(sp, kp) in &peaks {
        if kp < level {
            continue;
        }
        let edge = |dir: f64| {
            let mut inside = sp;
            let mut outside = sp + dir * ds;
            let mut steps = 0;
            while k(outside) >= level && steps < n {
                inside = outside;
                outside += dir * ds;
                steps += 1;
            }
            for _ in 0..60 {
                let mid = 0.5 * (inside + outside);
                if k(mid) >= level {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            inside
        };
        let (lo, hi) = (edge(-1.0), edge(1.0));
        let start = lo.rem_euclid(p);
        let arc = Arc { start, end: start + (hi - lo) };
        if !pi.iter().any(|a| curve.arc_distance(a.midpoint(), arc.midpoint()) <= 0.5 * (a.length() + arc.length()) + 1e-9 * p) {
            pi.push(arc);
        }
    }
    pi.sort_by(|a, b| a.start.total_cmp(&b.start));

    // largest gap between consecutive arcs (cyclically)
    let mut best_gap = -1.0;
    let mut s0 = 0.0;
    for i in 0..pi.len() {
        let a = pi[i];
        let b = pi[(i + 1) % pi.len()];
        let gap = (b.start - a.end).rem_euclid(p);
        let gap = if pi.len() == 1 { p - a.length() } else { gap };
        if gap > best_gap {
            best_gap = gap;
            s0 = (a.end + 0.5 * gap).rem_euclid(p);
        }
    }
    CurvatureProfile { k_max, k_min, tol, pi, is_disc: false, s0, eps0_margin: best_gap / 4.0, perimeter: p }
}
