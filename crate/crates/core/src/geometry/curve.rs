use std::f64::consts::PI;

use serde::Serialize;

use super::shape::RadialShape;
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Trigonometric interpolant of a periodic function sampled on a uniform grid,
/// used to integrate it in closed form.
#[derive(Debug, Clone)]
struct PeriodicSeries {
    mean: f64,
    coeffs: Vec<(f64, f64)>,
}

impl PeriodicSeries {
    fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let kmax = n / 2 - 1;
        let mut coeffs = Vec::with_capacity(kmax);
        for k in 1..=kmax {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let (s, c) = (TWO_PI * ((k * j) % n) as f64 / n as f64).sin_cos();
                a += v * c;
                b += v * s;
            }
            coeffs.push((2.0 * a / n as f64, 2.0 * b / n as f64));
        }
        let floor = 1e-17 * mean.abs().max(1e-300);
        while coeffs.last().is_some_and(|(a, b)| a.abs() < floor && b.abs() < floor) {
            coeffs.pop();
        }
        Self { mean, coeffs }
    }

    fn value(&self, theta: f64) -> f64 {
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut v = self.mean;
        for (a, b) in &self.coeffs {
            v += a * c + b * s;
            let next_c = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = next_c;
        }
        v
    }

    /// `∫_0^θ f`, valid for any real `θ`.
    fn integral(&self, theta: f64) -> f64 {
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut v = self.mean * theta;
        for (k, (a, b)) in self.coeffs.iter().enumerate() {
            let kf = (k + 1) as f64;
            v += (a * s - b * (c - 1.0)) / kf;
            let next_c = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = next_c;
        }
        v
    }
}

/// Geometry of the boundary at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Arc length from the point at `θ = 0`, in `[0, |∂Ω|)` for table samples.
    pub s: f64,
    pub theta: f64,
    pub pos: [f64; 2],
    pub tangent: [f64; 2],
    /// Unit interior normal.
    pub normal: [f64; 2],
    /// Signed curvature, `γ''(s) = k(s) ν(s)`; positive for convex arcs.
    pub curvature: f64,
}

/// Smooth closed boundary curve with arc-length parametrization.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    shape: RadialShape,
    resolution: usize,
    perimeter: f64,
    area: f64,
    speed: PeriodicSeries,
    sweep: PeriodicSeries,
    samples: Vec<CurvePoint>,
}

impl BoundaryCurve {
    /// Builds the arc-length table of a star-shaped boundary.
    pub fn new(shape: RadialShape, resolution: usize) -> Result<Self> {
        shape.validate()?;
        if resolution < 64 {
            return Err(Error::Precondition(format!("resolution must be at least 64, got {resolution}")));
        }
        let probe = 8 * resolution;
        let mut rho_min = f64::INFINITY;
        for j in 0..probe {
            let r = shape.radius(TWO_PI * j as f64 / probe as f64);
            if !r.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidDomain("radius function is not finite".into()));
            }
            rho_min = rho_min.min(r[0]);
        }
        if rho_min <= 0.0 {
            return Err(Error::InvalidDomain(format!("radius function reaches {rho_min:.3e} <= 0")));
        }

        let thetas: Vec<f64> = (0..resolution).map(|j| TWO_PI * j as f64 / resolution as f64).collect();
        let speeds: Vec<f64> = thetas
            .iter()
            .map(|t| {
                let r = shape.radius(*t);
                r[0].hypot(r[1])
            })
            .collect();
        let half_sq: Vec<f64> = thetas.iter().map(|t| 0.5 * shape.radius(*t)[0].powi(2)).collect();
        let speed = PeriodicSeries::from_samples(&speeds);
        let sweep = PeriodicSeries::from_samples(&half_sq);

        // the interpolant must reproduce |γ_θ| between the nodes, otherwise the
        // reparametrization is not unit speed
        let mut worst = 0.0f64;
        for j in 0..probe {
            let t = TWO_PI * (j as f64 + 0.5) / probe as f64;
            let r = shape.radius(t);
            let exact = r[0].hypot(r[1]);
            worst = worst.max((speed.value(t) / exact - 1.0).abs());
        }
        if worst > 1e-8 {
            return Err(Error::Precondition(format!("resolution {resolution} does not resolve the boundary (unit-speed defect {worst:.2e})")));
        }

        let perimeter = TWO_PI * speed.mean;
        let area = TWO_PI * sweep.mean;
        let mut curve = Self { shape, resolution, perimeter, area, speed, sweep, samples: Vec::new() };
        curve.samples = (0..resolution).map(|j| curve.point_at_s(perimeter * j as f64 / resolution as f64)).collect();
        Ok(curve)
    }

    pub fn shape(&self) -> &RadialShape {
        &self.shape
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `|∂Ω|`.
    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// `|Ω|`.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Uniform arc-length table `(s, γ, ν, k)`.
    pub fn samples(&self) -> &[CurvePoint] {
        &self.samples
    }

    /// Reduces `s` into `[0, |∂Ω|)`.
    pub fn wrap_s(&self, s: f64) -> f64 {
        s.rem_euclid(self.perimeter)
    }

    /// Distance between two arc-length coordinates along the closed curve.
    pub fn arc_distance(&self, s1: f64, s2: f64) -> f64 {
        let d = (s1 - s2).rem_euclid(self.perimeter);
        d.min(self.perimeter - d)
    }

    /// Arc length from `θ = 0`; unwrapped, so `s(θ + 2π) = s(θ) + |∂Ω|`.
    pub fn arc_length_at_theta(&self, theta: f64) -> f64 {
        self.speed.integral(theta)
    }

    /// Area swept by the radius vector from `θ = 0` to `θ`; unwrapped.
    pub fn swept_area_at_theta(&self, theta: f64) -> f64 {
        self.sweep.integral(theta)
    }

    /// Inverse of [`Self::arc_length_at_theta`] for `s` in any period.
    pub fn theta_at_s(&self, s: f64) -> f64 {
        let turns = (s / self.perimeter).floor();
        let local = s - turns * self.perimeter;
        let mut lo = 0.0;
        let mut hi = TWO_PI;
        let mut theta = TWO_PI * local / self.perimeter;
        for _ in 0..60 {
            let f = self.speed.integral(theta) - local;
            if f > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            let step = f / self.speed.value(theta);
            let mut next = theta - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - theta).abs() < 1e-15 {
                theta = next;
                break;
            }
            theta = next;
        }
        theta + turns * TWO_PI
    }

    pub fn point_at_theta(&self, theta: f64) -> CurvePoint {
        let [rho, rho1, rho2] = self.shape.radius(theta);
        let (sin, cos) = theta.sin_cos();
        let pos = [rho * cos, rho * sin];
        let d = [rho1 * cos - rho * sin, rho1 * sin + rho * cos];
        let speed = rho.hypot(rho1);
        let tangent = [d[0] / speed, d[1] / speed];
        let normal = [-tangent[1], tangent[0]];
        let curvature = (rho * rho + 2.0 * rho1 * rho1 - rho * rho2) / speed.powi(3);
        CurvePoint { s: self.arc_length_at_theta(theta), theta, pos, tangent, normal, curvature }
    }

    pub fn point_at_s(&self, s: f64) -> CurvePoint {
        let mut p = self.point_at_theta(self.theta_at_s(s));
        p.s = s;
        p
    }

    /// Nearest boundary point to `x` and the signed distance along the
    /// interior normal (positive inside).
    pub fn closest_point(&self, x: [f64; 2]) -> (CurvePoint, f64) {
        let stride = (self.samples.len() / 256).max(1);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in (0..self.samples.len()).step_by(stride) {
            let p = self.samples[j].pos;
            let d = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        let mut theta = self.samples[best].theta;
        let max_step = TWO_PI * stride as f64 / self.samples.len() as f64 + 1e-3;
        for _ in 0..50 {
            let [rho, rho1, rho2] = self.shape.radius(theta);
            let (sin, cos) = theta.sin_cos();
            let g = [rho * cos - x[0], rho * sin - x[1]];
            let d1 = [rho1 * cos - rho * sin, rho1 * sin + rho * cos];
            let d2 = [rho2 * cos - 2.0 * rho1 * sin - rho * cos, rho2 * sin + 2.0 * rho1 * cos - rho * sin];
            let f = g[0] * d1[0] + g[1] * d1[1];
            let fp = d1[0] * d1[0] + d1[1] * d1[1] + g[0] * d2[0] + g[1] * d2[1];
            let mut step = if fp > 0.0 { f / fp } else { f.signum() * max_step };
            step = step.clamp(-max_step, max_step);
            theta -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let mut p = self.point_at_theta(theta);
        p.s = self.wrap_s(p.s);
        let t = (x[0] - p.pos[0]) * p.normal[0] + (x[1] - p.pos[1]) * p.normal[1];
        (p, t)
    }

    /// Maximum of `| |dγ/ds| - 1 |` over a fine probe grid.
    pub fn unit_speed_defect(&self) -> f64 {
        let probe = 4 * self.resolution;
        (0..probe)
            .map(|j| {
                let t = TWO_PI * (j as f64 + 0.37) / probe as f64;
                let r = self.shape.radius(t);
                (r[0].hypot(r[1]) / self.speed.value(t) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Minimum and maximum curvature over the sample table.
    pub fn curvature_range(&self) -> (f64, f64) {
        self.samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.curvature), hi.max(p.curvature)))
    }

    /// Smallest radius value on the probe grid.
    pub fn min_radius(&self) -> f64 {
        (0..4 * self.resolution).map(|j| self.shape.radius(TWO_PI * j as f64 / (4 * self.resolution) as f64)[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        (0..4 * self.resolution).map(|j| self.shape.radius(TWO_PI * j as f64 / (4 * self.resolution) as f64)[0]).fold(0.0, f64::max)
    }
}

/// Builds the boundary curve of a Fourier radius function (see [`RadialShape::from_modes`]).
pub fn build_curve(modes: &[[f64; 3]], scale: f64, resolution: usize) -> Result<BoundaryCurve> {
    BoundaryCurve::new(RadialShape::from_modes(modes, scale)?, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_circle() {
        let c = BoundaryCurve::new(RadialShape::disc(1.0), 64).unwrap();
        assert_relative_eq!(c.perimeter(), TWO_PI, max_relative = 1e-14);
        assert_relative_eq!(c.area(), PI, max_relative = 1e-14);
        for p in c.samples() {
            assert!((p.curvature - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn scaled_circle_curvature() {
        let c = BoundaryCurve::new(RadialShape::disc(2.5), 64).unwrap();
        let (lo, hi) = c.curvature_range();
        assert!((lo - 0.4).abs() < 1e-13 && (hi - 0.4).abs() < 1e-13);
        assert_relative_eq!(c.perimeter(), 5.0 * PI, max_relative = 1e-14);
    }

    /// Parametric ellipse curvature `ab / (a² sin²φ + b² cos²φ)^{3/2}` as an
    /// independent oracle, evaluated at the parametric angle of each sample.
    #[test]
    fn ellipse_curvature_matches_closed_form() {
        let (a, b) = (2.0, 1.0);
        let c = BoundaryCurve::new(RadialShape::ellipse(a, b), 256).unwrap();
        for p in c.samples().iter().step_by(7) {
            let phi = (p.pos[1] / b).atan2(p.pos[0] / a);
            let k = a * b / (a * a * phi.sin().powi(2) + b * b * phi.cos().powi(2)).powf(1.5);
            assert!((p.curvature - k).abs() < 1e-10, "{} vs {}", p.curvature, k);
        }
        let major = c.point_at_theta(0.0);
        let minor = c.point_at_theta(PI / 2.0);
        assert!((major.curvature - 2.0).abs() < 1e-12);
        assert!((minor.curvature - 0.25).abs() < 1e-12);
        assert_relative_eq!(c.area(), PI * a * b, max_relative = 1e-12);
    }

    #[test]
    fn perimeter_converges_under_doubling() {
        for shape in [RadialShape::ellipse(2.0, 1.0), RadialShape::star(3, 0.1), RadialShape::ellipse(1.5, 1.0)] {
            let p1 = BoundaryCurve::new(shape.clone(), 128).unwrap().perimeter();
            let p2 = BoundaryCurve::new(shape, 256).unwrap().perimeter();
            assert!(((p1 - p2) / p2).abs() < 1e-8);
        }
    }

    #[test]
    fn unit_speed_and_closure() {
        let c = BoundaryCurve::new(RadialShape::star(3, 0.1), 128).unwrap();
        assert!(c.unit_speed_defect() < 1e-8);
        let a = c.point_at_s(-c.perimeter() / 2.0);
        let b = c.point_at_s(c.perimeter() / 2.0);
        assert!((a.pos[0] - b.pos[0]).abs() < 1e-12 && (a.pos[1] - b.pos[1]).abs() < 1e-12);
    }

    /// Second differences of the sampled γ(s) reproduce k(s) ν(s).
    #[test]
    fn second_derivative_is_curvature_times_normal() {
        let c = BoundaryCurve::new(RadialShape::ellipse(1.5, 1.0), 256).unwrap();
        let h = 1e-3;
        for j in (0..256).step_by(9) {
            let s = c.samples()[j].s;
            let p = c.point_at_s(s);
            let pp = c.point_at_s(s + h);
            let pm = c.point_at_s(s - h);
            for d in 0..2 {
                let second = (pp.pos[d] - 2.0 * p.pos[d] + pm.pos[d]) / (h * h);
                assert!((second - p.curvature * p.normal[d]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn rejects_non_positive_radius() {
        let err = RadialShape::from_modes(&[[0.0, 1.0, 0.0], [2.0, 1.2, 0.0]], 1.0).unwrap();
        assert!(matches!(BoundaryCurve::new(err, 64), Err(Error::InvalidDomain(_))));
        assert!(matches!(BoundaryCurve::new(RadialShape::disc(1.0), 32), Err(Error::Precondition(_))));
    }

    #[test]
    fn closest_point_recovers_offsets() {
        let c = BoundaryCurve::new(RadialShape::ellipse(1.5, 1.0), 256).unwrap();
        for j in (0..256).step_by(11) {
            let p = c.samples()[j];
            let x = [p.pos[0] + 0.1 * p.normal[0], p.pos[1] + 0.1 * p.normal[1]];
            let (q, t) = c.closest_point(x);
            assert!((t - 0.1).abs() < 1e-10);
            assert!(c.arc_distance(q.s, p.s) < 1e-9);
        }
    }
}
