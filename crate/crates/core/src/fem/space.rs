//! Continuous Lagrange spaces of degree one or two on a triangle mesh.
//!
//! Vertex unknowns come first (numbered as the mesh nodes), followed by one
//! unknown per edge midpoint for the quadratic space.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::quadrature::{DUNAVANT4, DUNAVANT6};
use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::C64;

/// Polynomial degree of the elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementOrder {
    Linear,
    #[default]
    Quadratic,
}

impl ElementOrder {
    pub fn local_dofs(self) -> usize {
        match self {
            ElementOrder::Linear => 3,
            ElementOrder::Quadratic => 6,
        }
    }
}

/// Vertex positions, area and barycentric gradients of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub pts: [[f64; 2]; 3],
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, e: usize) -> Self {
        let t = mesh.triangles[e];
        let pts = [mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]];
        let twice = (pts[1][0] - pts[0][0]) * (pts[2][1] - pts[0][1]) - (pts[2][0] - pts[0][0]) * (pts[1][1] - pts[0][1]);
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            grads[i] = [(pts[j][1] - pts[k][1]) / twice, (pts[k][0] - pts[j][0]) / twice];
        }
        Self { pts, area: 0.5 * twice, grads }
    }

    /// Cartesian point with barycentric coordinates `l`.
    pub fn point(&self, l: &[f64; 3]) -> [f64; 2] {
        [l[0] * self.pts[0][0] + l[1] * self.pts[1][0] + l[2] * self.pts[2][0], l[0] * self.pts[0][1] + l[1] * self.pts[1][1] + l[2] * self.pts[2][1]]
    }

    /// Barycentric coordinates of `x` (outside the triangle some are negative).
    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let d = |i: usize| {
            let p = self.pts[(i + 1) % 3];
            self.grads[i][0] * (x[0] - p[0]) + self.grads[i][1] * (x[1] - p[1])
        };
        [d(0), d(1), d(2)]
    }
}

/// Local edges `(a, b)` in the order of the midpoint unknowns.
const EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Degrees of freedom of a Lagrange space on a fixed mesh.
#[derive(Debug, Clone)]
pub struct FeSpace {
    order: ElementOrder,
    n_vertices: usize,
    n_dofs: usize,
    /// Local-to-global map, only the first `order.local_dofs()` entries used.
    dofs: Vec<[usize; 6]>,
    points: Vec<[f64; 2]>,
    /// Unknowns on the boundary (vertices and midpoints of boundary edges).
    boundary: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: &Mesh, order: ElementOrder) -> Arc<Self> {
        let nv = mesh.node_count();
        let mut points = mesh.nodes.clone();
        let mut boundary = mesh.boundary_nodes.clone();
        let mut dofs = Vec::with_capacity(mesh.element_count());
        match order {
            ElementOrder::Linear => {
                for t in &mesh.triangles {
                    dofs.push([t[0], t[1], t[2], 0, 0, 0]);
                }
            }
            ElementOrder::Quadratic => {
                let mut index: HashMap<(usize, usize), usize> = HashMap::new();
                for t in &mesh.triangles {
                    let mut d = [t[0], t[1], t[2], 0, 0, 0];
                    for (k, &(a, b)) in EDGES.iter().enumerate() {
                        let key = (t[a].min(t[b]), t[a].max(t[b]));
                        d[3 + k] = *index.entry(key).or_insert_with(|| {
                            let (p, q) = (mesh.nodes[key.0], mesh.nodes[key.1]);
                            points.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                            points.len() - 1
                        });
                    }
                    dofs.push(d);
                }
                for (a, b) in mesh.boundary_edges() {
                    boundary.push(index[&(a.min(b), a.max(b))]);
                }
            }
        }
        boundary.sort_unstable();
        Arc::new(Self { order, n_vertices: nv, n_dofs: points.len(), dofs, points, boundary })
    }

    pub fn order(&self) -> ElementOrder {
        self.order
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn element_count(&self) -> usize {
        self.dofs.len()
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.dofs[e][..self.order.local_dofs()]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.dofs.len()).map(|e| self.element_dofs(e))
    }

    /// Interpolation points of the unknowns.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary
    }

    pub fn matches(&self, mesh: &Mesh) -> bool {
        self.n_vertices == mesh.node_count() && self.dofs.len() == mesh.element_count()
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_dofs {
            return Err(Error::Contract(format!("vector of length {len} for {} unknowns", self.n_dofs)));
        }
        Ok(())
    }

    /// Triangle rule integrating the mass and magnetic forms of this space
    /// exactly for the symmetric gauge.
    pub fn quadrature(&self) -> &'static [([f64; 3], f64)] {
        match self.order {
            ElementOrder::Linear => &DUNAVANT4,
            ElementOrder::Quadratic => &DUNAVANT6,
        }
    }

    /// Basis values at barycentric point `l`.
    pub fn shape(&self, l: &[f64; 3]) -> [f64; 6] {
        match self.order {
            ElementOrder::Linear => [l[0], l[1], l[2], 0.0, 0.0, 0.0],
            ElementOrder::Quadratic => [
                l[0] * (2.0 * l[0] - 1.0),
                l[1] * (2.0 * l[1] - 1.0),
                l[2] * (2.0 * l[2] - 1.0),
                4.0 * l[0] * l[1],
                4.0 * l[1] * l[2],
                4.0 * l[2] * l[0],
            ],
        }
    }

    /// Basis gradients at barycentric point `l`.
    pub fn shape_grads(&self, l: &[f64; 3], g: &ElementGeometry) -> [[f64; 2]; 6] {
        let mut out = [[0.0; 2]; 6];
        match self.order {
            ElementOrder::Linear => out[..3].copy_from_slice(&g.grads),
            ElementOrder::Quadratic => {
                for i in 0..3 {
                    let c = 4.0 * l[i] - 1.0;
                    out[i] = [c * g.grads[i][0], c * g.grads[i][1]];
                }
                for (k, &(a, b)) in EDGES.iter().enumerate() {
                    out[3 + k] = [4.0 * (l[a] * g.grads[b][0] + l[b] * g.grads[a][0]), 4.0 * (l[a] * g.grads[b][1] + l[b] * g.grads[a][1])];
                }
            }
        }
        out
    }

    /// `u` at barycentric point `l` of element `e`.
    pub fn value(&self, e: usize, l: &[f64; 3], u: &[C64]) -> C64 {
        let n = self.shape(l);
        self.element_dofs(e).iter().zip(&n).map(|(&d, w)| u[d] * w).sum()
    }

    /// Real variant of [`FeSpace::value`].
    pub fn value_real(&self, e: usize, l: &[f64; 3], u: &[f64]) -> f64 {
        let n = self.shape(l);
        self.element_dofs(e).iter().zip(&n).map(|(&d, w)| u[d] * w).sum()
    }

    /// `∇u` at barycentric point `l` of element `e`.
    pub fn gradient(&self, e: usize, l: &[f64; 3], g: &ElementGeometry, u: &[C64]) -> [C64; 2] {
        let dn = self.shape_grads(l, g);
        let mut out = [C64::new(0.0, 0.0); 2];
        for (&d, gr) in self.element_dofs(e).iter().zip(&dn) {
            out[0] += u[d] * gr[0];
            out[1] += u[d] * gr[1];
        }
        out
    }

    /// Real variant of [`FeSpace::gradient`].
    pub fn gradient_real(&self, e: usize, l: &[f64; 3], g: &ElementGeometry, u: &[f64]) -> [f64; 2] {
        let dn = self.shape_grads(l, g);
        let mut out = [0.0; 2];
        for (&d, gr) in self.element_dofs(e).iter().zip(&dn) {
            out[0] += u[d] * gr[0];
            out[1] += u[d] * gr[1];
        }
        out
    }

    /// Nodal interpolant of a scalar function.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.points.iter().map(|&x| f(x)).collect()
    }

    /// Extends vertex values linearly to all unknowns.
    pub fn from_vertex_values(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_vertices {
            return Err(Error::Contract(format!("{} values for {} vertices", v.len(), self.n_vertices)));
        }
        let mut out = vec![0.0; self.n_dofs];
        out[..self.n_vertices].copy_from_slice(v);
        if self.order == ElementOrder::Quadratic {
            for d in &self.dofs {
                for (k, &(a, b)) in EDGES.iter().enumerate() {
                    out[d[3 + k]] = 0.5 * (v[d[a]] + v[d[b]]);
                }
            }
        }
        Ok(out)
    }

    /// `∫ f(x, u(x), ∇u(x))` by the space's quadrature rule.
    pub fn integrate<F>(&self, mesh: &Mesh, u: &[C64], f: F) -> f64
    where
        F: Fn(usize, [f64; 2], C64, [C64; 2]) -> f64,
    {
        let mut total = 0.0;
        for e in 0..self.element_count() {
            let g = ElementGeometry::new(mesh, e);
            for (l, w) in self.quadrature() {
                let x = g.point(l);
                total += w * g.area * f(e, x, self.value(e, l, u), self.gradient(e, l, &g, u));
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, BoundaryCurve, MeshParams, RadialShape};

    fn mesh() -> Mesh {
        let c = BoundaryCurve::new(RadialShape::ellipse(1.5, 1.0), 128).unwrap();
        build_mesh(&c, &MeshParams::new(0.2, 0.2, 0.5)).unwrap()
    }

    #[test]
    fn quadratic_counts_follow_euler() {
        let m = mesh();
        let s = FeSpace::new(&m, ElementOrder::Quadratic);
        // V − E + F = 1 for a disc-like triangulation
        let edges = s.n_dofs() - m.node_count();
        assert_eq!(m.node_count() + m.element_count(), edges + 1);
        assert_eq!(s.boundary_dofs().len(), 2 * m.boundary_nodes.len());
        assert_eq!(FeSpace::new(&m, ElementOrder::Linear).n_dofs(), m.node_count());
    }

    #[test]
    fn quadratics_are_reproduced() {
        let m = mesh();
        let f = |x: [f64; 2]| 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[0] * x[0] + x[0] * x[1] - x[1] * x[1];
        let df = |x: [f64; 2]| [1.0 + x[0] + x[1], -2.0 + x[0] - 2.0 * x[1]];
        let s = FeSpace::new(&m, ElementOrder::Quadratic);
        let u: Vec<C64> = s.interpolate(f).into_iter().map(|v| C64::new(v, 0.0)).collect();
        for e in (0..m.element_count()).step_by(7) {
            let g = ElementGeometry::new(&m, e);
            let l = [0.2, 0.3, 0.5];
            let x = g.point(&l);
            assert!((s.value(e, &l, &u).re - f(x)).abs() < 1e-12);
            let gr = s.gradient(e, &l, &g, &u);
            assert!((gr[0].re - df(x)[0]).abs() < 1e-10 && (gr[1].re - df(x)[1]).abs() < 1e-10);
            let b = g.barycentric(x);
            assert!(b.iter().zip(&l).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn partition_of_unity() {
        let m = mesh();
        for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
            let s = FeSpace::new(&m, order);
            let ones = vec![C64::new(1.0, 0.0); s.n_dofs()];
            let area = s.integrate(&m, &ones, |_, _, u, _| u.norm_sqr());
            assert!((area - m.area()).abs() < 1e-12);
            let v = s.from_vertex_values(&vec![2.0; m.node_count()]).unwrap();
            assert!(v.iter().all(|x| *x == 2.0));
        }
    }
}
