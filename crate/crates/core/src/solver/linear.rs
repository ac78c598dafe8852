//! Sparse direct solves backed by faer.
//!
//! The coupled matrix becomes symmetric after a fixed row scaling, so the
//! default path is a supernodal `LDL^T` of the scaled matrix with dynamic
//! pivot regularization, followed by iterative refinement against the
//! unscaled system. A general LU is kept as a fallback.

use std::sync::OnceLock;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Conj, MatMut, Par, Side};
use log::debug;

use crate::error::{Error, Result};
use crate::fem::sparse::norm2;
use crate::fem::CsrMatrix;

/// Relative residual accepted after a solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

const MAX_REFINEMENT: usize = 8;

struct SymmetricPath {
    scale: Vec<f64>,
    signs: Vec<i8>,
    symbolic: SymbolicCholesky<usize>,
}

/// Direct solver that reuses the symbolic analysis of a fixed pattern.
///
/// The CSR arrays of `A` are read by faer as the CSC arrays of `A^T`.
pub struct DirectSolver {
    structure: SymbolicSparseColMat<usize>,
    symmetric: Option<SymmetricPath>,
    lu: OnceLock<std::result::Result<SymbolicLu<usize>, String>>,
}

impl DirectSolver {
    /// LU-only solver for a general square pattern.
    pub fn new(pattern: &CsrMatrix) -> Result<Self> {
        assert_eq!(pattern.nrows, pattern.ncols, "square systems only");
        let structure = SymbolicSparseColMat::new_checked(
            pattern.ncols,
            pattern.nrows,
            pattern.row_ptr.clone(),
            None,
            pattern.col_idx.clone(),
        );
        Ok(Self {
            structure,
            symmetric: None,
            lu: OnceLock::new(),
        })
    }

    /// Solver for matrices `A` such that `diag(scale) A` is symmetric, with
    /// `signs` the expected signs of the `LDL^T` pivots.
    pub fn symmetric(pattern: &CsrMatrix, scale: Vec<f64>, signs: Vec<i8>) -> Result<Self> {
        assert_eq!(scale.len(), pattern.nrows);
        assert_eq!(signs.len(), pattern.nrows);
        let mut solver = Self::new(pattern)?;
        let symbolic = factorize_symbolic_cholesky(
            solver.structure.as_ref(),
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| Error::Singular(format!("symbolic analysis failed: {e:?}")))?;
        solver.symmetric = Some(SymmetricPath { scale, signs, symbolic });
        Ok(solver)
    }

    /// Solves `A x = b`; `matrix` must share the pattern given at
    /// construction.
    pub fn solve(&self, matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(matrix.col_idx.len(), self.structure.row_idx().len());
        if let Some(sym) = &self.symmetric {
            match self.solve_symmetric(sym, matrix, rhs) {
                Ok(x) => return Ok(x),
                Err(e) => debug!("LDL^T path failed ({e}), falling back to LU"),
            }
        }
        self.solve_lu(matrix, rhs)
    }

    fn solve_symmetric(&self, sym: &SymmetricPath, matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let mut values = matrix.values.clone();
        for i in 0..n {
            let s = sym.scale[i];
            values[matrix.row_ptr[i]..matrix.row_ptr[i + 1]].iter_mut().for_each(|v| *v *= s);
        }
        let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let par = Par::Seq;
        let mut mem = MemBuffer::new(
            sym.symbolic
                .factorize_numeric_ldlt_scratch::<f64>(par, Default::default())
                .or(sym.symbolic.solve_in_place_scratch::<f64>(1, par)),
        );
        let mut l_values = vec![0.0; sym.symbolic.len_val()];
        sym.symbolic
            .factorize_numeric_ldlt(
                &mut l_values,
                SparseColMatRef::new(self.structure.as_ref(), &values),
                Side::Lower,
                LdltRegularization {
                    dynamic_regularization_signs: Some(&sym.signs),
                    dynamic_regularization_delta: 1e-10 * max_abs,
                    dynamic_regularization_epsilon: 1e-13 * max_abs,
                },
                par,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .map_err(|e| Error::Singular(format!("{e:?}")))?;
        let ldlt = LdltRef::new(&sym.symbolic, &l_values);
        let mut apply = |r: &mut [f64]| {
            r.iter_mut().zip(&sym.scale).for_each(|(ri, s)| *ri *= s);
            ldlt.solve_in_place_with_conj(
                Conj::No,
                MatMut::from_column_major_slice_mut(r, n, 1),
                par,
                MemStack::new(&mut mem),
            );
        };
        let mut x = rhs.to_vec();
        apply(&mut x);
        refine(matrix, rhs, x, MAX_REFINEMENT, apply)
    }

    fn solve_lu(&self, matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        let symbolic = self
            .lu
            .get_or_init(|| SymbolicLu::try_new(self.structure.as_ref()).map_err(|e| format!("{e:?}")))
            .as_ref()
            .map_err(|e| Error::Singular(format!("symbolic analysis failed: {e}")))?;
        let at = SparseColMatRef::new(self.structure.as_ref(), &matrix.values);
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), at).map_err(|e| Error::Singular(format!("{e:?}")))?;
        let n = rhs.len();
        let apply = |r: &mut [f64]| lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(r, n, 1));
        let mut x = rhs.to_vec();
        apply(&mut x);
        refine(matrix, rhs, x, 2, apply)
    }
}

/// Iterative refinement of `x` with the approximate inverse `apply`.
fn refine(
    matrix: &CsrMatrix,
    rhs: &[f64],
    mut x: Vec<f64>,
    max_steps: usize,
    mut apply: impl FnMut(&mut [f64]),
) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("factorization produced non-finite values".into()));
    }
    let b_norm = norm2(rhs);
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let mut residual = relative_residual(matrix, &x, rhs, scale);
    for _ in 0..max_steps {
        if residual <= SOLVE_TOLERANCE {
            break;
        }
        let ax = matrix.matvec(&x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        apply(&mut r);
        x.iter_mut().zip(&r).for_each(|(xi, ri)| *xi += ri);
        let next = relative_residual(matrix, &x, rhs, scale);
        if !next.is_finite() {
            break;
        }
        residual = next;
    }
    if !(residual <= SOLVE_TOLERANCE) {
        return Err(Error::SolverFailure {
            residual,
            tolerance: SOLVE_TOLERANCE,
        });
    }
    Ok(x)
}

/// `||A x - b|| / scale`
pub(crate) fn relative_residual(matrix: &CsrMatrix, x: &[f64], b: &[f64], scale: f64) -> f64 {
    let ax = matrix.matvec(x);
    let r: f64 = ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum();
    r.sqrt() / scale
}
