use std::sync::{Arc, OnceLock};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{MatMut, Side};

use crate::error::{Error, Result};
use crate::C64;

/// Symmetric CSR sparsity pattern of a finite-element matrix (all couplings
/// between unknowns sharing an element, both triangles stored).
#[derive(Debug)]
pub struct Pattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    /// Positions of the lower-triangular part in column-major order, used to
    /// feed the Cholesky factorization.
    lower: LowerIndex,
    symbolic: OnceLock<std::result::Result<SymbolicLlt<usize>, String>>,
}

#[derive(Debug)]
struct LowerIndex {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// For each lower entry, the CSR position of its transpose (row j, col i).
    src: Vec<usize>,
}

impl Pattern {
    pub fn from_triangles(n: usize, triangles: &[[usize; 3]]) -> Arc<Self> {
        Self::from_elements(n, triangles.iter().map(|t| &t[..]))
    }

    /// Pattern coupling all unknowns that share an element.
    pub fn from_elements<'a>(n: usize, elements: impl Iterator<Item = &'a [usize]>) -> Arc<Self> {
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for t in elements {
            for &a in t {
                for &b in t {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        // lower part of column j = upper part of CSR row j (pattern is symmetric)
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut src = Vec::new();
        col_ptr.push(0);
        for j in 0..n {
            for p in row_ptr[j]..row_ptr[j + 1] {
                if col_idx[p] >= j {
                    row_idx.push(col_idx[p]);
                    src.push(p);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Arc::new(Self { n, row_ptr, col_idx, lower: LowerIndex { col_ptr, row_idx, src }, symbolic: OnceLock::new() })
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// CSR position of entry `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    fn symbolic_structure(&self) -> Result<SymbolicSparseColMat<usize>> {
        Ok(SymbolicSparseColMat::new_checked(self.n, self.n, self.lower.col_ptr.clone(), None, self.lower.row_idx.clone()))
    }

    fn symbolic(&self) -> Result<SymbolicLlt<usize>> {
        self.symbolic
            .get_or_init(|| {
                let sym = self.symbolic_structure().map_err(|e| e.to_string())?;
                SymbolicLlt::try_new(sym.as_ref(), Side::Lower).map_err(|e| format!("{e:?}"))
            })
            .clone()
            .map_err(Error::Numeric)
    }

    /// `y = A x` for CSR values `a` of a Hermitian matrix.
    pub fn matvec(&self, a: &[C64], x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let mut s = C64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += a[p] * x[self.col_idx[p]];
            }
            y[i] = s;
        }
    }

    /// `y = A x` for real CSR values.
    pub fn matvec_real(&self, a: &[f64], x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let mut s = C64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += x[self.col_idx[p]] * a[p];
            }
            y[i] = s;
        }
    }
}

/// Sparse Cholesky factor `L L^H` of a Hermitian positive definite matrix
/// given by CSR values on a [`Pattern`].
pub struct Factor {
    llt: Llt<usize, C64>,
}

impl Factor {
    /// Factorizes the matrix with CSR values `a`; fails when it is not
    /// numerically positive definite.
    pub fn new(pattern: &Pattern, a: &[C64]) -> Result<Self> {
        let symbolic = pattern.symbolic()?;
        let structure = pattern.symbolic_structure()?;
        // entry (i, j), i >= j, of the lower triangle is conj of CSR (j, i)
        let vals: Vec<C64> = pattern.lower.src.iter().map(|&p| a[p].conj()).collect();
        let mat = SparseColMatRef::new(structure.as_ref(), &vals);
        let llt =
            Llt::try_new_with_symbolic(symbolic, mat, Side::Lower).map_err(|e| Error::Numeric(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(Self { llt })
    }

    pub fn solve_in_place(&self, x: &mut [C64]) {
        let n = x.len();
        let mat = MatMut::from_column_major_slice_mut(x, n, 1);
        self.llt.solve_in_place(mat);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_of_two_triangles() {
        let p = Pattern::from_triangles(4, &[[0, 1, 2], [0, 2, 3]]);
        assert_eq!(p.nnz(), 4 + 2 * 5);
        assert!(p.position(1, 3).is_none());
        assert!(p.position(3, 2).is_some());
    }

    #[test]
    fn hermitian_solve() {
        let p = Pattern::from_triangles(4, &[[0, 1, 2], [0, 2, 3]]);
        let mut a = vec![C64::new(0.0, 0.0); p.nnz()];
        for i in 0..4 {
            for q in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[q];
                a[q] = if i == j {
                    C64::new(5.0, 0.0)
                } else if i < j {
                    C64::new(-1.0, 0.5)
                } else {
                    C64::new(-1.0, -0.5)
                };
            }
        }
        let f = Factor::new(&p, &a).unwrap();
        let b: Vec<C64> = (0..4).map(|i| C64::new(i as f64, 1.0)).collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let mut y = vec![C64::new(0.0, 0.0); 4];
        p.matvec(&a, &x, &mut y);
        for i in 0..4 {
            assert!((y[i] - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let p = Pattern::from_triangles(3, &[[0, 1, 2]]);
        let mut a = vec![C64::new(0.0, 0.0); p.nnz()];
        for i in 0..3 {
            for q in p.row_ptr[i]..p.row_ptr[i + 1] {
                a[q] = if i == p.col_idx[q] { C64::new(-1.0, 0.0) } else { C64::new(0.1, 0.0) };
            }
        }
        assert!(Factor::new(&p, &a).is_err());
    }
}
