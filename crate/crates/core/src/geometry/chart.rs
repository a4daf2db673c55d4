use super::curve::{BoundaryCurve, CurvePoint};
use crate::error::{Error, Result};

/// Tubular coordinates `Φ(s, t) = γ(s) + t ν(s)` near the boundary.
#[derive(Debug, Clone)]
pub struct TubularChart {
    curve: BoundaryCurve,
    t0: f64,
    k_max: f64,
}

impl TubularChart {
    /// Tube width `0.5/k_max`, or half the smallest boundary radius when the
    /// curve has no positive curvature.
    pub fn new(curve: &BoundaryCurve) -> Self {
        let (_, k_max) = curve.curvature_range();
        let t0 = if k_max > 0.0 { 0.5 / k_max } else { 0.5 * curve.min_radius() };
        Self { curve: curve.clone(), t0, k_max }
    }

    pub fn with_width(curve: &BoundaryCurve, t0: f64) -> Result<Self> {
        let (_, k_max) = curve.curvature_range();
        if !(t0 > 0.0) || (k_max > 0.0 && t0 * k_max >= 1.0) {
            return Err(Error::Precondition(format!("tube width {t0} must lie in (0, 1/k_max)")));
        }
        Ok(Self { curve: curve.clone(), t0, k_max })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn forward(&self, s: f64, t: f64) -> [f64; 2] {
        let p = self.curve.point_at_s(s);
        [p.pos[0] + t * p.normal[0], p.pos[1] + t * p.normal[1]]
    }

    /// `|DΦ| = 1 − t k(s)`.
    pub fn jacobian(&self, s: f64, t: f64) -> f64 {
        1.0 - t * self.curve.point_at_s(s).curvature
    }

    /// `(s, t)` of a point with `0 ≤ dist(x, ∂Ω) < t0`, `None` outside the tube.
    pub fn inverse(&self, x: [f64; 2]) -> Option<(f64, f64)> {
        self.locate(x).map(|(p, t)| (p.s, t))
    }

    /// Foot point on the boundary and normal distance, for points in the tube.
    pub fn locate(&self, x: [f64; 2]) -> Option<(CurvePoint, f64)> {
        let (p, t) = self.curve.closest_point(x);
        (t > -1e-12 && t < self.t0).then_some((p, t.max(0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RadialShape;
    use proptest::prelude::*;

    fn ellipse_chart() -> TubularChart {
        TubularChart::new(&BoundaryCurve::new(RadialShape::ellipse(1.5, 1.0), 256).unwrap())
    }

    #[test]
    fn width_is_half_curvature_radius() {
        let c = ellipse_chart();
        assert!((c.t0() - 0.5 / 1.5).abs() < 1e-10);
        let disc = TubularChart::new(&BoundaryCurve::new(RadialShape::disc(1.0), 64).unwrap());
        assert!((disc.t0() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn outside_tube_is_rejected() {
        let c = ellipse_chart();
        assert!(c.inverse([0.0, 0.0]).is_none());
        assert!(c.inverse([2.0, 0.0]).is_none());
    }

    #[test]
    fn jacobian_positive_in_tube() {
        let c = ellipse_chart();
        for j in 0..100 {
            let s = c.curve().perimeter() * j as f64 / 100.0;
            assert!(c.jacobian(s, 0.999 * c.t0()) > 0.0);
        }
    }

    proptest! {
        #[test]
        fn inverse_round_trip(u in 0.0f64..1.0, v in 0.0f64..0.99) {
            let c = ellipse_chart();
            let s = u * c.curve().perimeter();
            let t = v * c.t0();
            let (s2, t2) = c.inverse(c.forward(s, t)).unwrap();
            prop_assert!(c.curve().arc_distance(s, s2) < 1e-6);
            prop_assert!((t - t2).abs() < 1e-6);
        }
    }
}
