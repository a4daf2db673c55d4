use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::chart::TubularChart;
use super::curve::BoundaryCurve;
use crate::error::{Error, Result};

/// Boundary-layer meshing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    /// Target element size away from the boundary.
    pub h_interior: f64,
    /// Depth of the structured layer along the interior normal.
    pub layer_depth: f64,
    /// Normal spacing in the layer as a fraction of `h_interior`.
    pub layer_ratio: f64,
    /// Spacing of boundary nodes along the curve; defaults to `h_interior`.
    #[serde(default)]
    pub h_tangent: Option<f64>,
}

impl MeshParams {
    pub fn new(h_interior: f64, layer_depth: f64, layer_ratio: f64) -> Self {
        Self { h_interior, layer_depth, layer_ratio, h_tangent: None }
    }

    pub fn with_tangent(mut self, h: f64) -> Self {
        self.h_tangent = Some(h);
        self
    }

    /// Parameters resolving the boundary layer at field strength `b`: normal
    /// spacing `c_normal/√b` and tangential spacing `c_tangent/b` near the boundary.
    pub fn for_field(b: f64, t0: f64, h_interior: f64, c_normal: f64, c_tangent: f64) -> Self {
        let b = b.max(1.0);
        let depth = (8.0 / b.sqrt()).min(0.9 * t0);
        let dn = c_normal / b.sqrt();
        Self { h_interior, layer_depth: depth, layer_ratio: (dn / h_interior).min(1.0), h_tangent: Some((c_tangent / b).min(h_interior)) }
    }

    /// Reference grading for quadratic elements at field `b`: the boundary
    /// states oscillate along the curve with wavenumber `≈ B·|x|/2`, so the
    /// tangential spacing shrinks like `B^{-5/4}` (error `∝ (kh)⁴k²/λ`) and
    /// with the largest boundary radius.
    pub fn reference(b: f64, curve: &BoundaryCurve) -> Self {
        let t0 = TubularChart::new(curve).t0();
        let b = b.max(1.0);
        let ht = 2.5 * b.powf(-1.25) / curve.max_radius().max(1.0).powf(1.5);
        let mut p = Self::for_field(b, t0, 0.1, 0.3, 1.0);
        p.h_tangent = Some(ht.min(0.1));
        p
    }

    fn tangent(&self) -> f64 {
        self.h_tangent.unwrap_or(self.h_interior)
    }
}

/// Record of the boundary-layer grading actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grading {
    pub layer_depth: f64,
    pub layer_ratio: f64,
    pub normal_spacing: f64,
    pub layer_rings: usize,
    pub h_interior: f64,
    pub h_tangent: f64,
    pub interior_rings: usize,
}

/// Conforming linear triangulation with a structured boundary layer.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary node indices in order of increasing `s`.
    pub boundary_nodes: Vec<usize>,
    /// Arc-length coordinate of each boundary node.
    pub boundary_s: Vec<f64>,
    /// Tubular coordinates `(s, t)` of nodes in the structured layer.
    pub layer_coords: Vec<Option<(f64, f64)>>,
    pub grading: Grading,
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e];
        let (p, q, r) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.element_count()).map(|e| self.signed_area(e)).sum()
    }

    /// Boundary segments `(i, j)` oriented counter-clockwise.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let n = self.boundary_nodes.len();
        (0..n).map(|j| (self.boundary_nodes[j], self.boundary_nodes[(j + 1) % n])).collect()
    }

    /// Checks orientation and edge conformity.
    pub fn validate(&self) -> Result<()> {
        for e in 0..self.element_count() {
            let a = self.signed_area(e);
            if !(a > 0.0) {
                let c = self.centroid(e);
                return Err(Error::Meshing {
                    region: format!("element {e} near ({:.4}, {:.4})", c[0], c[1]),
                    reason: format!("signed area {a:.3e}"),
                });
            }
        }
        let mut edges: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.element_count());
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a, b)).or_default() += 1;
            }
        }
        let mut boundary = 0;
        for (&(a, b), &count) in &edges {
            if count > 1 {
                return Err(Error::Meshing { region: format!("edge ({a}, {b})"), reason: "edge repeated with the same orientation".into() });
            }
            if !edges.contains_key(&(b, a)) {
                boundary += 1;
            }
        }
        if boundary != self.boundary_nodes.len() {
            return Err(Error::Meshing {
                region: "boundary".into(),
                reason: format!("{boundary} free edges but {} boundary nodes", self.boundary_nodes.len()),
            });
        }
        for (a, b) in self.boundary_edges() {
            if edges.contains_key(&(b, a)) || !edges.contains_key(&(a, b)) {
                return Err(Error::Meshing { region: format!("boundary edge ({a}, {b})"), reason: "not a free edge".into() });
            }
        }
        Ok(())
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[e];
        [(self.nodes[a][0] + self.nodes[b][0] + self.nodes[c][0]) / 3.0, (self.nodes[a][1] + self.nodes[b][1] + self.nodes[c][1]) / 3.0]
    }

    /// Largest distance from a boundary node to the curve.
    pub fn boundary_deviation(&self, curve: &BoundaryCurve) -> f64 {
        self.boundary_nodes.iter().map(|&i| curve.closest_point(self.nodes[i]).1.abs()).fold(0.0, f64::max)
    }

    /// Offset-based JSON container: `nodes` holds `x, y` pairs and
    /// `triangles` holds vertex triples, both flattened.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format": "diamag-mesh",
            "version": 1,
            "node_count": self.node_count(),
            "triangle_count": self.element_count(),
            "nodes": self.nodes.iter().flat_map(|p| [p[0], p[1]]).collect::<Vec<_>>(),
            "triangles": self.triangles.iter().flat_map(|t| *t).collect::<Vec<_>>(),
            "boundary_nodes": self.boundary_nodes,
            "boundary_s": self.boundary_s,
            "grading": self.grading,
        })
    }
}

/// Builds a mesh with `layer_depth / (layer_ratio·h_interior)` structured rings
/// along the boundary and graded rings shrinking towards the origin inside.
pub fn build_mesh(curve: &BoundaryCurve, params: &MeshParams) -> Result<Mesh> {
    let MeshParams { h_interior, layer_depth, layer_ratio, .. } = *params;
    let h_tan = params.tangent();
    if !(h_interior > 0.0 && layer_ratio > 0.0 && h_tan > 0.0 && layer_depth > 0.0) {
        return Err(Error::Precondition("mesh sizes must be positive".into()));
    }
    let chart = TubularChart::new(curve);
    if layer_depth >= chart.t0() {
        return Err(Error::Precondition(format!("layer depth {layer_depth} must be below the tube width {}", chart.t0())));
    }
    let perimeter = curve.perimeter();
    let nb = ((perimeter / h_tan).ceil() as usize).max(16);
    let dn_target = layer_ratio * h_interior;
    let n_layer = ((layer_depth / dn_target).ceil() as usize).max(1);
    let dn = layer_depth / n_layer as f64;

    let mut nodes = Vec::new();
    let mut layer_coords = Vec::new();
    let mut triangles = Vec::new();

    let base: Vec<_> = (0..nb).map(|j| curve.point_at_s(perimeter * j as f64 / nb as f64)).collect();
    let mut rings: Vec<Vec<usize>> = Vec::new();
    for l in 0..=n_layer {
        let t = dn * l as f64;
        let ring: Vec<usize> = base
            .iter()
            .map(|p| {
                nodes.push([p.pos[0] + t * p.normal[0], p.pos[1] + t * p.normal[1]]);
                layer_coords.push(Some((p.s, t)));
                nodes.len() - 1
            })
            .collect();
        rings.push(ring);
    }
    for l in 0..n_layer {
        stitch(&rings[l], &rings[l + 1], &mut triangles);
    }

    // graded interior: scaled copies of the innermost layer curve
    let inner_at = |u: f64| -> [f64; 2] {
        let p = curve.point_at_s(u * perimeter);
        [p.pos[0] + layer_depth * p.normal[0], p.pos[1] + layer_depth * p.normal[1]]
    };
    let inner_len = perimeter - layer_depth * 2.0 * std::f64::consts::PI;
    let r_ref = (0..64)
        .map(|j| {
            let q = inner_at(j as f64 / 64.0);
            q[0].hypot(q[1])
        })
        .fold(f64::INFINITY, f64::min);
    let growth = 1.2;
    let mut step = dn * growth;
    let mut h_ring = h_tan;
    let mut lambda = 1.0;
    let mut interior_rings = 0;
    loop {
        step = (step * growth).min(h_interior);
        h_ring = (h_ring * growth).min(h_interior).max(step.min(h_interior) * 0.5);
        let next = lambda - step / r_ref;
        if next * r_ref < 0.75 * step {
            break;
        }
        lambda = next;
        let count = ((lambda * inner_len / h_ring).ceil() as usize).max(6);
        let ring: Vec<usize> = (0..count)
            .map(|j| {
                let q = inner_at(j as f64 / count as f64);
                nodes.push([lambda * q[0], lambda * q[1]]);
                layer_coords.push(None);
                nodes.len() - 1
            })
            .collect();
        let outer = rings.last().unwrap().clone();
        stitch(&outer, &ring, &mut triangles);
        rings.push(ring);
        interior_rings += 1;
    }
    nodes.push([0.0, 0.0]);
    layer_coords.push(None);
    let center = nodes.len() - 1;
    let last = rings.last().unwrap();
    for j in 0..last.len() {
        triangles.push([last[j], last[(j + 1) % last.len()], center]);
    }

    let mesh = Mesh {
        nodes,
        triangles,
        boundary_nodes: rings[0].clone(),
        boundary_s: base.iter().map(|p| p.s).collect(),
        layer_coords,
        grading: Grading {
            layer_depth,
            layer_ratio,
            normal_spacing: dn,
            layer_rings: n_layer,
            h_interior,
            h_tangent: perimeter / nb as f64,
            interior_rings,
        },
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Triangulates the strip between two closed rings that share the parameter
/// origin; `outer` lies to the right of `inner` when walking counter-clockwise.
fn stitch(outer: &[usize], inner: &[usize], triangles: &mut Vec<[usize; 3]>) {
    let (na, nb) = (outer.len(), inner.len());
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_outer = j == nb || (i < na && (i + 1) as f64 / (na as f64) < (j + 1) as f64 / (nb as f64));
        if advance_outer {
            triangles.push([outer[i % na], outer[(i + 1) % na], inner[j % nb]]);
            i += 1;
        } else {
            triangles.push([outer[i % na], inner[(j + 1) % nb], inner[j % nb]]);
            j += 1;
        }
    }
}
