//! Dense LU solves backed by faer, run serially for reproducibility.

use faer::linalg::solvers::Solve;
use faer::{Col, Mat};
use nalgebra::DMatrix;

/// Solves `a x = b`, returning `None` when the factorization is singular.
pub fn solve(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    faer::set_global_parallelism(faer::Par::Seq);
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let lu = m.partial_piv_lu();
    let mut x = Col::<f64>::from_fn(n, |i| b[i]);
    lu.solve_in_place(x.as_mat_mut());
    let out: Vec<f64> = (0..n).map(|i| x[i]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}
