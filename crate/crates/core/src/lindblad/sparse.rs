//! Compressed-row complex matrices for the master-equation right-hand side.
//!
//! Ladder and Pauli operators are extremely sparse, so the evolution kernel
//! multiplies them against the dense density matrix without ever forming the
//! dense operator products.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::Complex64;

/// Below this dimension a product is too cheap to split across threads.
const PARALLEL_DIM: usize = 96;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Keep entries with modulus above `drop_tol`.
    pub fn from_dense(m: &DMatrix<Complex64>, drop_tol: f64) -> Self {
        assert!(m.is_square(), "CsrMatrix::from_dense: square matrix required");
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for c in 0..dim {
                let v = m[(r, c)];
                if v.norm() > drop_tol {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    /// `out = self · x`, with `out` overwritten. Columns are processed in
    /// parallel for large matrices.
    pub fn mul_into(&self, x: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        debug_assert_eq!(x.nrows(), self.dim);
        debug_assert_eq!(out.shape(), x.shape());
        let n = self.dim;
        let column = |(xs, oc): (&[Complex64], &mut [Complex64])| {
            for (r, o) in oc.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[k] * xs[self.cols[k]];
                }
                *o = acc;
            }
        };
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        if n >= PARALLEL_DIM {
            xs.par_chunks(n).zip(os.par_chunks_mut(n)).for_each(column);
        } else {
            xs.chunks(n).zip(os.chunks_mut(n)).for_each(column);
        }
    }

    pub fn mul(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        self.mul_into(x, &mut out);
        out
    }
}
