//! Boundary curves, curvature data, tubular coordinates and meshes.

mod chart;
mod curvature;
mod curve;
mod mesh;
mod shape;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use chart::TubularChart;
pub use curvature::{curvature_maxima, Arc, CurvatureProfile};
pub use curve::{build_curve, BoundaryCurve, CurvePoint};
pub use mesh::{build_mesh, Grading, Mesh, MeshParams};
pub use shape::{FourierMode, RadialShape};

use crate::error::Result;

/// Curve file contents: `{"modes": [[n, a_n, b_n], ...], "scale": R}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub modes: Vec<[f64; 3]>,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl CurveSpec {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn shape(&self) -> Result<RadialShape> {
        RadialShape::from_modes(&self.modes, self.scale)
    }
}

/// Writes the boundary diagnostics table `s, x, y, k`.
pub fn write_boundary_csv<W: Write>(curve: &BoundaryCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "x", "y", "k"])?;
    for p in curve.samples() {
        w.serialize((p.s, p.pos[0], p.pos[1], p.curvature))?;
    }
    w.flush()?;
    Ok(())
}
