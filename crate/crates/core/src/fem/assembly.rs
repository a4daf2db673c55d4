use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

pub use super::space::ElementGeometry;
use super::space::{ElementOrder, FeSpace};
use super::sparse::Pattern;
use crate::error::{Error, Result};
use crate::gauge::{PotentialField, PotentialKind};
use crate::geometry::Mesh;
use crate::C64;

#[derive(Debug)]
struct FormArrays {
    k: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    m: Vec<f64>,
    m_diag: Vec<f64>,
}

/// Finite-element matrices of `Q_B(u) = ∫|(−i∇ + BA)u|²` split by powers of
/// the field: `H_B = K + iB·C + B²·D`, with `C` real antisymmetric, plus the
/// mass matrix `M`.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    space: Arc<FeSpace>,
    pattern: Arc<Pattern>,
    arrays: Arc<FormArrays>,
    b: f64,
    kind: PotentialKind,
}

const CHUNK: usize = 8192;

/// Assembles the magnetic forms in the default (quadratic) space.
pub fn assemble(mesh: &Mesh, potential: &PotentialField, b: f64) -> Result<AssembledForms> {
    assemble_with(&FeSpace::new(mesh, ElementOrder::default()), mesh, potential, b)
}

/// Assembles the magnetic stiffness and mass matrices of `space`, with the
/// potential evaluated at the quadrature points (no interpolation of `A`).
pub fn assemble_with(space: &Arc<FeSpace>, mesh: &Mesh, potential: &PotentialField, b: f64) -> Result<AssembledForms> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::Precondition(format!("field strength must be finite and non-negative, got {b}")));
    }
    if !space.matches(mesh) {
        return Err(Error::Contract("element space was built on a different mesh".into()));
    }
    potential.check_mesh(mesh)?;
    let pattern = Pattern::from_elements(space.n_dofs(), space.elements());
    let nnz = pattern.nnz();
    let mut arrays = FormArrays { k: vec![0.0; nnz], c: vec![0.0; nnz], d: vec![0.0; nnz], m: vec![0.0; nnz], m_diag: Vec::new() };
    let n_el = mesh.element_count();
    let nl = space.order().local_dofs();
    for start in (0..n_el).step_by(CHUNK) {
        let end = (start + CHUNK).min(n_el);
        let local: Vec<[[f64; 36]; 4]> = (start..end).into_par_iter().map(|e| element_forms(space, mesh, potential, e)).collect();
        for (offset, blocks) in local.iter().enumerate() {
            let e = start + offset;
            if blocks.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite element matrix in element {e}")));
            }
            let t = space.element_dofs(e);
            for i in 0..nl {
                for j in 0..nl {
                    let p = pattern.position(t[i], t[j]).expect("pattern covers element couplings");
                    let q = 6 * i + j;
                    arrays.k[p] += blocks[0][q];
                    arrays.c[p] += blocks[1][q];
                    arrays.d[p] += blocks[2][q];
                    arrays.m[p] += blocks[3][q];
                }
            }
        }
    }
    arrays.m_diag = (0..pattern.n).map(|i| arrays.m[pattern.position(i, i).expect("diagonal entry")]).collect();
    Ok(AssembledForms { space: space.clone(), pattern, arrays: Arc::new(arrays), b, kind: potential.kind() })
}

/// Element blocks `[K, C, D, M]`, row-major with stride 6.
fn element_forms(space: &FeSpace, mesh: &Mesh, potential: &PotentialField, e: usize) -> [[f64; 36]; 4] {
    let g = ElementGeometry::new(mesh, e);
    let nl = space.order().local_dofs();
    let mut out = [[0.0; 36]; 4];
    for (l, w) in space.quadrature() {
        let n = space.shape(l);
        let dn = space.shape_grads(l, &g);
        let a = potential.eval(e, g.point(l));
        let wa = w * g.area;
        let a2 = a[0] * a[0] + a[1] * a[1];
        let mut adg = [0.0; 6];
        for i in 0..nl {
            adg[i] = a[0] * dn[i][0] + a[1] * dn[i][1];
        }
        for i in 0..nl {
            for j in 0..nl {
                let q = 6 * i + j;
                out[0][q] += wa * (dn[i][0] * dn[j][0] + dn[i][1] * dn[j][1]);
                out[1][q] += wa * (n[j] * adg[i] - n[i] * adg[j]);
                out[2][q] += wa * a2 * n[i] * n[j];
                out[3][q] += wa * n[i] * n[j];
            }
        }
    }
    out
}

impl AssembledForms {
    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn stiffness(&self) -> &[f64] {
        &self.arrays.k
    }

    pub fn coupling(&self) -> &[f64] {
        &self.arrays.c
    }

    pub fn potential_mass(&self) -> &[f64] {
        &self.arrays.d
    }

    pub fn mass(&self) -> &[f64] {
        &self.arrays.m
    }

    /// Diagonal of the mass matrix.
    pub fn mass_diagonal(&self) -> &[f64] {
        &self.arrays.m_diag
    }

    /// Same discretization at another field strength (no reassembly).
    pub fn with_field(&self, b: f64) -> Self {
        Self { b, ..self.clone() }
    }

    /// True when the forms were assembled on `mesh`.
    pub fn matches(&self, mesh: &Mesh) -> bool {
        self.space.matches(mesh)
    }

    /// CSR values of `H_B − σM`.
    pub fn shifted(&self, sigma: f64) -> Vec<C64> {
        let a = &self.arrays;
        let b = self.b;
        (0..a.k.len()).map(|p| C64::new(a.k[p] + b * b * a.d[p] - sigma * a.m[p], b * a.c[p])).collect()
    }

    /// CSR values of `H_B`.
    pub fn hamiltonian(&self) -> Vec<C64> {
        self.shifted(0.0)
    }

    pub fn apply_mass(&self, x: &[C64], y: &mut [C64]) {
        self.pattern.matvec_real(&self.arrays.m, x, y);
    }

    /// `⟨x, y⟩_M = x^H M y`.
    pub fn m_inner(&self, x: &[C64], y: &[C64]) -> C64 {
        let mut my = vec![C64::new(0.0, 0.0); y.len()];
        self.apply_mass(y, &mut my);
        x.iter().zip(&my).map(|(a, b)| a.conj() * b).sum()
    }

    /// `x^H A x` for real CSR values `A`.
    fn quadratic_real(&self, a: &[f64], x: &[C64]) -> C64 {
        let p = &self.pattern;
        let mut s = C64::new(0.0, 0.0);
        for i in 0..p.n {
            let mut row = C64::new(0.0, 0.0);
            for q in p.row_ptr[i]..p.row_ptr[i + 1] {
                row += x[p.col_idx[q]] * a[q];
            }
            s += x[i].conj() * row;
        }
        s
    }

    /// `ψ^H H_B ψ / ψ^H M ψ`.
    pub fn rayleigh(&self, psi: &[C64]) -> Result<f64> {
        if psi.len() != self.n() {
            return Err(Error::Contract(format!("vector of length {} for {} unknowns", psi.len(), self.n())));
        }
        let mass = self.quadratic_real(&self.arrays.m, psi).re;
        if !(mass > 0.0) {
            return Err(Error::Contract("zero vector has no Rayleigh quotient".into()));
        }
        let b = self.b;
        let k = self.quadratic_real(&self.arrays.k, psi).re;
        let c = self.quadratic_real(&self.arrays.c, psi);
        let d = self.quadratic_real(&self.arrays.d, psi).re;
        // x^H (iC) x = i·(x^H C x), and x^H C x is imaginary for antisymmetric C
        Ok((k - b * c.im + b * b * d) / mass)
    }

    /// `ψ^H (dH/dB) ψ = ψ^H (iC + 2B·D) ψ` for an M-normalized `ψ`: the exact
    /// field derivative of a discrete eigenvalue.
    pub fn field_derivative(&self, psi: &[C64]) -> f64 {
        let c = self.quadratic_real(&self.arrays.c, psi);
        let d = self.quadratic_real(&self.arrays.d, psi).re;
        -c.im + 2.0 * self.b * d
    }

    /// `max |H_ij − conj(H_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let h = self.hamiltonian();
        let p = &self.pattern;
        let mut worst = 0.0f64;
        for i in 0..p.n {
            for q in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[q];
                let t = p.position(j, i).expect("symmetric pattern");
                worst = worst.max((h[q] - h[t].conj()).norm());
            }
        }
        worst
    }

    /// Coordinate listing `row col re im` of `H_B` (zero based).
    pub fn write_coo<W: Write>(&self, mut out: W) -> Result<()> {
        let h = self.hamiltonian();
        let p = &self.pattern;
        writeln!(out, "% n={} nnz={} B={}", p.n, p.nnz(), self.b)?;
        for i in 0..p.n {
            for q in p.row_ptr[i]..p.row_ptr[i + 1] {
                writeln!(out, "{} {} {:.17e} {:.17e}", i, p.col_idx[q], h[q].re, h[q].im)?;
            }
        }
        Ok(())
    }
}
