//! Fixtures shared by the benchmarks.

use diamag_core::geometry::{BoundaryCurve, RadialShape};
use diamag_core::spectral::{MeshChoice, Setup};

/// The `a = 1.5, b = 1` ellipse on its reference mesh for field `b`.
pub fn ellipse(b: f64) -> Setup {
    let curve = BoundaryCurve::new(RadialShape::ellipse(1.5, 1.0), 256).expect("ellipse is a valid domain");
    Setup::new("ellipse", curve).with_mesh(MeshChoice::ReferenceAt { b, refine: 1.0 })
}
