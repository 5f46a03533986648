//! Thin glue between `ndarray` storage and the `faer` factorizations.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

fn to_faer(m: &Array2<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Backend(format!("non-square matrix {:?}", m.dim())));
    }
    to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Backend(format!("{e:?}")))
}

pub fn symmetric_eigenvalues(m: &Array2<f64>) -> Result<Vec<f64>> {
    let f = Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]]);
    f.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Backend(format!("{e:?}")))
}

/// Dense solve with partial pivoting. Returns `None` if the solution is not finite.
pub fn dense_solve(m: &Array2<C64>, rhs: &Array1<C64>) -> Option<Array1<C64>> {
    let lu = to_faer(m).partial_piv_lu();
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let out = Array1::from_shape_fn(rhs.len(), |i| x[(i, 0)]);
    out.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(out)
}

/// Sparse LU solve of `A x = b` given unique `(row, col, value)` entries.
pub fn sparse_solve(n: usize, entries: &[(usize, usize, C64)], rhs: &[C64]) -> Result<Vec<C64>> {
    let triplets: Vec<_> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    let a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Backend(format!("{e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| Error::NoUniqueSteadyState(format!("sparse LU failed: {e:?}")))?;
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}
