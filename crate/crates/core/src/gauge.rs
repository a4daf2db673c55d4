//! Vector potentials with unit curl: the symmetric gauge `F`, the gauge `F_Ω`
//! tangential to the boundary, and a tubular gauge that vanishes linearly at
//! the boundary away from a cut.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::assembly::assemble_with;
use crate::fem::quadrature::{GAUSS3, GAUSS5};
use crate::fem::space::{ElementGeometry, ElementOrder, FeSpace};
use crate::fem::sparse::Factor;
use crate::geometry::{BoundaryCurve, Mesh, TubularChart};
use crate::C64;

/// Which construction produced a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Standard,
    DomainTangential,
    Tubular { eps: f64, s0: f64 },
    Transformed,
}

impl PotentialKind {
    pub fn label(&self) -> &'static str {
        match self {
            PotentialKind::Standard => "standard",
            PotentialKind::DomainTangential => "domain_tangential",
            PotentialKind::Tubular { .. } => "tubular",
            PotentialKind::Transformed => "transformed",
        }
    }
}

/// Scalar finite-element field on a mesh, used as a gauge function `φ`.
#[derive(Debug, Clone)]
pub struct GaugeFunction {
    space: Arc<FeSpace>,
    geometry: Arc<Vec<ElementGeometry>>,
    /// Values at the unknowns of the space.
    pub phi: Vec<f64>,
}

impl GaugeFunction {
    /// Piecewise-linear function from vertex values.
    pub fn from_nodal(mesh: &Mesh, phi: Vec<f64>) -> Result<Self> {
        Self::from_dofs(&FeSpace::new(mesh, ElementOrder::Linear), mesh, phi)
    }

    pub fn from_dofs(space: &Arc<FeSpace>, mesh: &Mesh, phi: Vec<f64>) -> Result<Self> {
        space.check_len(phi.len())?;
        if !space.matches(mesh) {
            return Err(Error::Contract("element space was built on a different mesh".into()));
        }
        let geometry = (0..mesh.element_count()).map(|e| ElementGeometry::new(mesh, e)).collect();
        Ok(Self { space: space.clone(), geometry: Arc::new(geometry), phi })
    }

    /// Interpolant of `f` in `space`.
    pub fn interpolate(space: &Arc<FeSpace>, mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        Self::from_dofs(space, mesh, space.interpolate(f))
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    /// `φ` at `x` in element `e`.
    pub fn value(&self, e: usize, x: [f64; 2]) -> f64 {
        self.space.value_real(e, &self.geometry[e].barycentric(x), &self.phi)
    }

    /// `∇φ` at `x` in element `e`.
    pub fn grad(&self, e: usize, x: [f64; 2]) -> [f64; 2] {
        let g = &self.geometry[e];
        self.space.gradient_real(e, &g.barycentric(x), g, &self.phi)
    }

    /// Values at the unknowns of another space on the same mesh (exact when
    /// that space contains this one).
    pub fn values_in(&self, space: &FeSpace) -> Result<Vec<f64>> {
        if space.element_count() != self.geometry.len() || space.n_vertices() != self.space.n_vertices() {
            return Err(Error::Contract("spaces live on different meshes".into()));
        }
        let mut out = vec![0.0; space.n_dofs()];
        let pts = space.points();
        for e in 0..space.element_count() {
            for &d in space.element_dofs(e) {
                out[d] = self.value(e, pts[d]);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Standard,
    /// `base + sign·∇φ` with φ piecewise linear.
    MeshGradient {
        base: Box<PotentialField>,
        gauge: Arc<GaugeFunction>,
        sign: f64,
    },
    Tubular(Arc<TubularGauge>),
}

/// Vector potential `x ↦ A(x)`; mesh-based kinds are evaluated per element.
#[derive(Debug, Clone)]
pub struct PotentialField {
    kind: PotentialKind,
    repr: Repr,
}

/// `F(x) = (−x₂/2, x₁/2)`.
pub fn standard_field(x: [f64; 2]) -> [f64; 2] {
    [-0.5 * x[1], 0.5 * x[0]]
}

/// The symmetric gauge `F`.
pub fn standard_potential() -> PotentialField {
    PotentialField { kind: PotentialKind::Standard, repr: Repr::Standard }
}

impl PotentialField {
    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// `A` at point `x` of element `e` (the element matters only for
    /// piecewise-defined potentials).
    pub fn eval(&self, e: usize, x: [f64; 2]) -> [f64; 2] {
        match &self.repr {
            Repr::Standard => standard_field(x),
            Repr::MeshGradient { base, gauge, sign } => {
                let a = base.eval(e, x);
                let g = gauge.grad(e, x);
                [a[0] + sign * g[0], a[1] + sign * g[1]]
            }
            Repr::Tubular(t) => t.eval(x),
        }
    }

    /// Fails when a piecewise potential was built on another mesh.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        match &self.repr {
            Repr::Standard | Repr::Tubular(_) => Ok(()),
            Repr::MeshGradient { base, gauge, .. } => {
                if !gauge.space.matches(mesh) {
                    return Err(Error::Contract("potential was built on a different mesh".into()));
                }
                base.check_mesh(mesh)
            }
        }
    }

    /// The gauge-shifted potential `A − ∇φ`, which carries the states
    /// produced by [`gauge_transform`] with the same `φ`.
    pub fn shifted(&self, gauge: GaugeFunction) -> Self {
        PotentialField {
            kind: PotentialKind::Transformed,
            repr: Repr::MeshGradient { base: Box::new(self.clone()), gauge: Arc::new(gauge), sign: -1.0 },
        }
    }

    /// Area-weighted nodal values (exact for continuous potentials).
    pub fn node_values(&self, mesh: &Mesh) -> Vec<[f64; 2]> {
        let mut acc = vec![[0.0; 3]; mesh.node_count()];
        for e in 0..mesh.element_count() {
            let g = ElementGeometry::new(mesh, e);
            for (k, &v) in mesh.triangles[e].iter().enumerate() {
                let a = self.eval(e, g.pts[k]);
                acc[v][0] += g.area * a[0];
                acc[v][1] += g.area * a[1];
                acc[v][2] += g.area;
            }
        }
        acc.iter().map(|a| [a[0] / a[2], a[1] / a[2]]).collect()
    }

    /// Field dump `x, y, A1, A2, kind` at the mesh nodes.
    pub fn write_csv<W: Write>(&self, mesh: &Mesh, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "A1", "A2", "kind"])?;
        for (x, a) in mesh.nodes.iter().zip(self.node_values(mesh)) {
            w.serialize((x[0], x[1], a[0], a[1], self.kind.label()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Boundary edges paired with the element that contains them.
pub(crate) fn boundary_edge_elements(mesh: &Mesh) -> Vec<(usize, usize, usize)> {
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, t) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            owner.insert((t[k], t[(k + 1) % 3]), e);
        }
    }
    mesh.boundary_edges().into_iter().map(|(a, b)| (a, b, owner[&(a, b)])).collect()
}

/// `F_Ω = F + ∇φ̄`, where `φ̄` is the quadratic finite-element harmonic
/// function with `∂_ν φ̄ = −F·ν` on the curve. The result has unit discrete curl in every
/// element, is weakly divergence free, and has vanishing normal trace in the
/// limit of refinement. On a disc centred at the origin `φ̄ = 0` and `F_Ω = F`.
pub fn domain_gauge(mesh: &Mesh, curve: &BoundaryCurve) -> Result<PotentialField> {
    let gauge = domain_gauge_function(mesh, curve)?;
    Ok(PotentialField {
        kind: PotentialKind::DomainTangential,
        repr: Repr::MeshGradient { base: Box::new(standard_potential()), gauge: Arc::new(gauge), sign: 1.0 },
    })
}

/// The scalar `φ̄` of [`domain_gauge`], normalized to zero mean.
pub fn domain_gauge_function(mesh: &Mesh, curve: &BoundaryCurve) -> Result<GaugeFunction> {
    let space = FeSpace::new(mesh, ElementOrder::Quadratic);
    let n = space.n_dofs();
    let forms = assemble_with(&space, mesh, &standard_potential(), 0.0)?;
    let pattern = forms.pattern().clone();

    // Neumann data F·ν_in integrated against the boundary traces of the basis,
    // parametrized by arc length on the curve
    let mut edge_mid = HashMap::new();
    for e in 0..space.element_count() {
        let d = space.element_dofs(e);
        for (k, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            edge_mid.insert((d[a], d[b]), d[3 + k]);
        }
    }
    let mut rhs = vec![0.0; n];
    let p = curve.perimeter();
    let nb = mesh.boundary_nodes.len();
    for j in 0..nb {
        let (a, b) = (mesh.boundary_nodes[j], mesh.boundary_nodes[(j + 1) % nb]);
        let mid = edge_mid
            .get(&(a, b))
            .or_else(|| edge_mid.get(&(b, a)))
            .copied()
            .ok_or_else(|| Error::Meshing { region: format!("boundary edge ({a}, {b})"), reason: "edge belongs to no element".into() })?;
        let sa = mesh.boundary_s[j];
        let mut sb = mesh.boundary_s[(j + 1) % nb];
        if sb <= sa {
            sb += p;
        }
        for (x, w) in GAUSS5 {
            let q = curve.point_at_s(sa + x * (sb - sa));
            let f = standard_field(q.pos);
            let g = w * (sb - sa) * (f[0] * q.normal[0] + f[1] * q.normal[1]);
            rhs[a] += g * (1.0 - x) * (1.0 - 2.0 * x);
            rhs[b] += g * x * (2.0 * x - 1.0);
            rhs[mid] += g * 4.0 * x * (1.0 - x);
        }
    }
    // enforce exact compatibility with the constant kernel
    let mass_row: Vec<f64> = (0..n).map(|i| (pattern.row_ptr[i]..pattern.row_ptr[i + 1]).map(|q| forms.mass()[q]).sum()).collect();
    let total: f64 = rhs.iter().sum();
    let area: f64 = mass_row.iter().sum();
    for i in 0..n {
        rhs[i] -= total * mass_row[i] / area;
    }

    if rhs.iter().all(|v| v.abs() < 1e-300) {
        return GaugeFunction::from_dofs(&space, mesh, vec![0.0; n]);
    }
    // pin node 0; the remaining equations determine φ̄ up to the pinned value
    let mut values: Vec<C64> = forms.stiffness().iter().map(|&k| C64::new(k, 0.0)).collect();
    for i in 0..n {
        for q in pattern.row_ptr[i]..pattern.row_ptr[i + 1] {
            let j = pattern.col_idx[q];
            if i == 0 || j == 0 {
                values[q] = C64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
            }
        }
    }
    let factor = Factor::new(&pattern, &values)?;
    let mut x: Vec<C64> = rhs.iter().map(|&v| C64::new(v, 0.0)).collect();
    x[0] = C64::new(0.0, 0.0);
    factor.solve_in_place(&mut x);
    if x.iter().any(|v| !v.re.is_finite()) {
        return Err(Error::Numeric("gauge solve produced non-finite values".into()));
    }
    let mean = x.iter().zip(&mass_row).map(|(v, m)| v.re * m).sum::<f64>() / area;
    GaugeFunction::from_dofs(&space, mesh, x.iter().map(|v| v.re - mean).collect())
}

fn smoothstep(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0)
    } else if x >= 1.0 {
        (1.0, 0.0)
    } else {
        (x * x * x * (10.0 - 15.0 * x + 6.0 * x * x), 30.0 * x * x * (1.0 - x) * (1.0 - x))
    }
}

/// Gauge equal to `F + ∇(χ φ̃)` where, in tubular coordinates on
/// `{t ≤ ε, |s − s₀| ≥ ε}`, the pulled-back 1-form is `(−(t − t²k/2), 0)`.
/// The sign follows from the orientation of `(s, t)` with `ν` the interior
/// normal: `ds ∧ dt` is positively oriented.
#[derive(Debug, Clone)]
pub struct TubularGauge {
    chart: TubularChart,
    eps: f64,
    s0: f64,
    theta_cut: f64,
    c_base: f64,
}

/// Builds the tubular gauge for a cut at `s0` and band width `eps`.
pub fn tubular_gauge(curve: &BoundaryCurve, eps: f64, s0: f64) -> Result<PotentialField> {
    tubular_gauge_in(TubularChart::new(curve), eps, s0)
}

/// [`tubular_gauge`] on a chart of prescribed width; `2ε` must fit in the chart.
pub fn tubular_gauge_in(chart: TubularChart, eps: f64, s0: f64) -> Result<PotentialField> {
    let curve = chart.curve().clone();
    let curve = &curve;
    let limit = (chart.t0() / 2.0).min(curve.perimeter() / 2.0);
    if !(eps > 0.0 && eps <= limit) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, {limit}]")));
    }
    let s0 = curve.wrap_s(s0);
    let theta_cut = curve.theta_at_s(s0);
    let mut g = TubularGauge { chart, eps, s0, theta_cut, c_base: 0.0 };
    g.c_base = g.swept(curve.theta_at_s(s0 + curve.perimeter() / 2.0));
    Ok(PotentialField { kind: PotentialKind::Tubular { eps, s0 }, repr: Repr::Tubular(Arc::new(g)) })
}

impl TubularGauge {
    /// Swept area from the cut, on the branch `θ ∈ [θ_cut, θ_cut + 2π)`.
    fn swept(&self, theta: f64) -> f64 {
        let tw = 2.0 * std::f64::consts::PI;
        let th = self.theta_cut + (theta - self.theta_cut).rem_euclid(tw);
        self.chart.curve().swept_area_at_theta(th)
    }

    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let f = standard_field(x);
        let Some((p, t)) = self.chart.locate(x) else { return f };
        if t >= 2.0 * self.eps {
            return f;
        }
        let per = self.chart.curve().perimeter();
        let d = (p.s - self.s0 + 0.5 * per).rem_euclid(per) - 0.5 * per;
        let half = 0.5 * self.eps;
        if d.abs() <= half {
            return f;
        }
        let (sa, dsa) = smoothstep((2.0 * self.eps - t) / self.eps);
        let (sb, dsb) = smoothstep((d.abs() - half) / half);
        let chi = sa * sb;
        let dchi_dt = -dsa / self.eps * sb;
        let dchi_ds = sa * dsb * d.signum() / half;

        let cross = |a: [f64; 2], b: [f64; 2]| a[0] * b[1] - a[1] * b[0];
        let g_t_cross = cross(p.pos, p.tangent);
        let g_n_cross = cross(p.pos, p.normal);
        let phi = -(self.swept(p.theta) - self.c_base) - 0.5 * t * g_n_cross;
        let dphi_ds = -0.5 * g_t_cross - 0.5 * t * (1.0 - p.curvature * g_t_cross);
        let dphi_dt = -0.5 * g_n_cross;
        let gs = chi * dphi_ds + phi * dchi_ds;
        let gt = chi * dphi_dt + phi * dchi_dt;
        let js = gs / (1.0 - t * p.curvature);
        [f[0] + js * p.tangent[0] + gt * p.normal[0], f[1] + js * p.tangent[1] + gt * p.normal[1]]
    }
}

/// Multiplies a state by `e^{iBφ}` nodewise; the result belongs to the
/// potential `A − ∇φ` (see [`PotentialField::shifted`]).
pub fn gauge_transform(psi: &[C64], phi: &GaugeFunction, b: f64) -> Result<Vec<C64>> {
    if psi.len() != phi.phi.len() {
        return Err(Error::Contract(format!("state has {} values, gauge function {}", psi.len(), phi.phi.len())));
    }
    Ok(psi.iter().zip(&phi.phi).map(|(v, f)| v * C64::from_polar(1.0, b * f)).collect())
}

/// Circulation of `A` around element `e` divided by its area.
pub fn element_curl(mesh: &Mesh, field: &PotentialField, e: usize) -> f64 {
    let g = ElementGeometry::new(mesh, e);
    let mut circ = 0.0;
    for k in 0..3 {
        let (p, q) = (g.pts[k], g.pts[(k + 1) % 3]);
        let dl = [q[0] - p[0], q[1] - p[1]];
        for (x, w) in GAUSS3 {
            let a = field.eval(e, [p[0] + x * dl[0], p[1] + x * dl[1]]);
            circ += w * (a[0] * dl[0] + a[1] * dl[1]);
        }
    }
    circ / g.area
}

/// `∮ A·dγ` along the polygonal boundary of the mesh.
pub fn boundary_flux(mesh: &Mesh, field: &PotentialField) -> f64 {
    let mut flux = 0.0;
    for (a, b, e) in boundary_edge_elements(mesh) {
        let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
        let dl = [q[0] - p[0], q[1] - p[1]];
        for (x, w) in GAUSS3 {
            let v = field.eval(e, [p[0] + x * dl[0], p[1] + x * dl[1]]);
            flux += w * (v[0] * dl[0] + v[1] * dl[1]);
        }
    }
    flux
}

/// Largest `|A·ν|` at boundary edge midpoints, with `ν` the curve normal.
pub fn max_normal_trace(mesh: &Mesh, curve: &BoundaryCurve, field: &PotentialField) -> f64 {
    boundary_edge_elements(mesh)
        .into_iter()
        .map(|(a, b, e)| {
            let m = [0.5 * (mesh.nodes[a][0] + mesh.nodes[b][0]), 0.5 * (mesh.nodes[a][1] + mesh.nodes[b][1])];
            let (q, _) = curve.closest_point(m);
            let v = field.eval(e, m);
            (v[0] * q.normal[0] + v[1] * q.normal[1]).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest weak divergence `|∫ A·∇φ_i| / ∫ φ_i` over interior nodes.
pub fn max_weak_divergence(mesh: &Mesh, field: &PotentialField) -> f64 {
    let n = mesh.node_count();
    let mut div = vec![0.0; n];
    let mut mass = vec![0.0; n];
    for e in 0..mesh.element_count() {
        let g = ElementGeometry::new(mesh, e);
        for (l, w) in crate::fem::quadrature::DUNAVANT4.iter() {
            let a = field.eval(e, g.point(l));
            for (k, &v) in mesh.triangles[e].iter().enumerate() {
                div[v] += w * g.area * (a[0] * g.grads[k][0] + a[1] * g.grads[k][1]);
            }
        }
        for &v in &mesh.triangles[e] {
            mass[v] += g.area / 3.0;
        }
    }
    let mut on_boundary = vec![false; n];
    for &i in &mesh.boundary_nodes {
        on_boundary[i] = true;
    }
    (0..n).filter(|&i| !on_boundary[i]).map(|i| (div[i] / mass[i]).abs()).fold(0.0, f64::max)
}

/// `sup |Â(x)| / t` over mesh nodes of `{t ≤ ε, |s − s₀| ≥ ε}` with `t > 0`,
/// and the largest `|Â|` at boundary nodes of that region.
pub fn tubular_linear_bound(mesh: &Mesh, curve: &BoundaryCurve, field: &PotentialField) -> Result<(f64, f64)> {
    let PotentialKind::Tubular { eps, s0 } = field.kind() else {
        return Err(Error::Contract("linear bound applies to the tubular gauge only".into()));
    };
    let chart = TubularChart::new(curve);
    let node_a = field.node_values(mesh);
    let (mut c, mut at_boundary) = (0.0f64, 0.0f64);
    for (i, x) in mesh.nodes.iter().enumerate() {
        let Some((s, t)) = chart.inverse(*x) else { continue };
        if t > eps || curve.arc_distance(s, s0) < eps {
            continue;
        }
        let a = node_a[i][0].hypot(node_a[i][1]);
        if t < 1e-12 {
            at_boundary = at_boundary.max(a);
        } else {
            c = c.max(a / t);
        }
    }
    Ok((c, at_boundary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, CurvatureProfile, MeshParams, RadialShape};

    fn setup(shape: RadialShape, h: f64) -> (BoundaryCurve, Mesh) {
        let c = BoundaryCurve::new(shape, 256).unwrap();
        let m = build_mesh(&c, &MeshParams::new(h, 0.2, 0.3)).unwrap();
        (c, m)
    }

    #[test]
    fn standard_values() {
        let f = standard_potential();
        assert_eq!(f.eval(0, [0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(f.eval(0, [2.0, 0.0]), [0.0, 1.0]);
        let (_, m) = setup(RadialShape::ellipse(1.5, 1.0), 0.2);
        for e in (0..m.element_count()).step_by(17) {
            assert!((element_curl(&m, &f, e) - 1.0).abs() < 1e-12);
        }
    }

    /// On the disc `w = (|x|² − 1)/4` solves the Poisson problem and its rotated
    /// gradient is `F`, so the tangential gauge must reproduce `F`.
    #[test]
    fn disc_domain_gauge_is_standard() {
        let (c, m) = setup(RadialShape::disc(1.0), 0.1);
        let g = domain_gauge_function(&m, &c).unwrap();
        assert!(g.phi.iter().all(|v| v.abs() < 1e-12));
        let a = domain_gauge(&m, &c).unwrap();
        for (i, x) in m.nodes.iter().enumerate().step_by(13) {
            let v = a.node_values(&m)[i];
            let w = [-0.5 * x[1], 0.5 * x[0]];
            assert!((v[0] - w[0]).abs() < 1e-12 && (v[1] - w[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn ellipse_domain_gauge_properties() {
        let shape = RadialShape::ellipse(1.5, 1.0);
        let mut traces = Vec::new();
        for h in [0.2, 0.1, 0.05] {
            let (c, m) = setup(shape.clone(), h);
            let a = domain_gauge(&m, &c).unwrap();
            for e in (0..m.element_count()).step_by(11) {
                assert!((element_curl(&m, &a, e) - 1.0).abs() < 1e-10);
            }
            assert!((boundary_flux(&m, &a) - m.area()).abs() < 1e-10);
            assert!(max_weak_divergence(&m, &a) < 1e-8);
            traces.push(max_normal_trace(&m, &c, &a));
        }
        assert!(traces[1] < traces[0] && traces[2] < traces[1], "{traces:?}");
        assert!((boundary_flux(&setup(shape, 0.1).1, &standard_potential()) - 1.5 * std::f64::consts::PI).abs() < 1e-2);
    }

    #[test]
    fn tubular_gauge_vanishes_on_boundary_and_is_linear() {
        let (c, m) = setup(RadialShape::ellipse(1.5, 1.0), 0.1);
        let prof = crate::geometry::curvature_maxima(&c, CurvatureProfile::default_tol(&c));
        let eps = 0.15;
        let a = tubular_gauge(&c, eps, prof.s0).unwrap();
        let (cst, boundary) = tubular_linear_bound(&m, &c, &a).unwrap();
        assert!(boundary < 1e-6, "{boundary}");
        assert!(cst.is_finite() && cst < 3.0, "{cst}");
        // pointwise curl by central differences across the whole band
        let chart = TubularChart::new(&c);
        let h = 1e-5;
        for i in 0..40 {
            let s = prof.s0 + 0.6 * eps + c.perimeter() * i as f64 / 41.0;
            let t = 0.01 + 0.3 * eps * (i % 7) as f64;
            let x = chart.forward(s, t);
            let dyx = (a.eval(0, [x[0] + h, x[1]])[1] - a.eval(0, [x[0] - h, x[1]])[1]) / (2.0 * h);
            let dxy = (a.eval(0, [x[0], x[1] + h])[0] - a.eval(0, [x[0], x[1] - h])[0]) / (2.0 * h);
            assert!((dyx - dxy - 1.0).abs() < 1e-3, "curl {} at s={s}, t={t}", dyx - dxy);
        }
        // circulations with composite edge quadrature: the cutoff layer is
        // steep on the element scale
        let line_integral = |e: usize, p: [f64; 2], q: [f64; 2]| {
            let dl = [q[0] - p[0], q[1] - p[1]];
            let mut sum = 0.0;
            for j in 0..16 {
                for (x, w) in GAUSS3 {
                    let u = (j as f64 + x) / 16.0;
                    let v = a.eval(e, [p[0] + u * dl[0], p[1] + u * dl[1]]);
                    sum += w / 16.0 * (v[0] * dl[0] + v[1] * dl[1]);
                }
            }
            sum
        };
        let mh = build_mesh(&c, &MeshParams::new(0.05, 0.2, 0.3)).unwrap();
        for e in 0..mh.element_count() {
            if chart.inverse(mh.centroid(e)).is_some_and(|(s, _)| c.arc_distance(s, prof.s0) < 1.5 * eps) {
                continue;
            }
            let g = ElementGeometry::new(&mh, e);
            let circ: f64 = (0..3).map(|k| line_integral(e, g.pts[k], g.pts[(k + 1) % 3])).sum();
            assert!((circ / g.area - 1.0).abs() < 1e-3, "element {e}: {}", circ / g.area);
        }
        let flux: f64 = boundary_edge_elements(&m).into_iter().map(|(i, j, e)| line_integral(e, m.nodes[i], m.nodes[j])).sum();
        assert!((flux - m.area()).abs() < 1e-4, "flux {flux} area {}", m.area());
        assert!(matches!(tubular_gauge(&c, 0.3, prof.s0), Err(Error::Precondition(_))));
    }

    #[test]
    fn transform_is_unimodular() {
        let (_, m) = setup(RadialShape::disc(1.0), 0.2);
        let phi = GaugeFunction::from_nodal(&m, m.nodes.iter().map(|x| x[0] * x[1] + x[0]).collect()).unwrap();
        let psi: Vec<C64> = (0..m.node_count()).map(|i| C64::new((i as f64).sin(), 0.3)).collect();
        let out = gauge_transform(&psi, &phi, 3.0).unwrap();
        for (a, b) in psi.iter().zip(&out) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        let zero = GaugeFunction::from_nodal(&m, vec![0.0; m.node_count()]).unwrap();
        assert_eq!(gauge_transform(&psi, &zero, 3.0).unwrap(), psi);
        assert!(gauge_transform(&psi[1..], &zero, 1.0).is_err());
    }
}
