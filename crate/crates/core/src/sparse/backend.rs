//! Choice between the native LU and faer's supernodal LU.
//!
//! The supernodal factorization is much faster on large finite element
//! systems but does not expose its pivots; a factorization whose solve is
//! non-finite or inaccurate is redone natively, which either succeeds or
//! reports the failing pivot.

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut};

use crate::error::{invalid, Result};
use crate::sparse::csr::SparseMatrix;
use crate::sparse::lu::{norm2, LinearSolveReport, Ordering, SparseLu};

/// Systems at least this large use the supernodal factorization under
/// [`LuBackend::Auto`].
pub const AUTO_SUPERNODAL_MIN: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LuBackend {
    Native(Ordering),
    Supernodal,
    #[default]
    Auto,
}

impl LuBackend {
    fn resolve(self, n: usize) -> LuBackend {
        match self {
            LuBackend::Auto if n >= AUTO_SUPERNODAL_MIN => LuBackend::Supernodal,
            LuBackend::Auto => LuBackend::Native(Ordering::Amd),
            b => b,
        }
    }
}

pub enum Factorization {
    Native(SparseLu),
    Supernodal {
        n: usize,
        nnz_a: usize,
        lu: Box<faer::sparse::linalg::solvers::Lu<usize, f64>>,
    },
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Factorization::Native(lu) => f.debug_tuple("Native").field(&lu.nnz_l()).finish(),
            Factorization::Supernodal { n, .. } => {
                f.debug_struct("Supernodal").field("n", n).finish()
            }
        }
    }
}

/// Relative residual above which a supernodal solve is redone natively.
const FALLBACK_RESIDUAL: f64 = 1e-6;

impl Factorization {
    pub fn new(a: &SparseMatrix, backend: LuBackend) -> Result<Self> {
        if a.n_rows != a.n_cols {
            return invalid(format!(
                "LU needs a square matrix, got {}x{}",
                a.n_rows, a.n_cols
            ));
        }
        match backend.resolve(a.n_rows) {
            LuBackend::Native(ord) => Ok(Factorization::Native(SparseLu::factor(a, ord)?)),
            _ => match supernodal(a) {
                Some(lu) => Ok(Factorization::Supernodal {
                    n: a.n_rows,
                    nnz_a: a.nnz(),
                    lu: Box::new(lu),
                }),
                None => Ok(Factorization::Native(SparseLu::factor(a, Ordering::Amd)?)),
            },
        }
    }

    pub fn solve_in_place(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Factorization::Native(lu) => lu.solve_in_place(b),
            Factorization::Supernodal { lu, .. } => {
                let mut x = b.to_vec();
                let n = x.len();
                let rhs = MatMut::from_column_major_slice_mut(&mut x, n, 1);
                lu.solve_in_place_with_conj(Conj::No, rhs);
                x
            }
        }
    }

    /// Solve with iterative refinement; see [`SparseLu::solve_refined`].
    pub fn solve_refined(
        &self,
        a: &SparseMatrix,
        b: &[f64],
    ) -> Result<(Vec<f64>, LinearSolveReport)> {
        match self {
            Factorization::Native(lu) => lu.solve_refined(a, b),
            Factorization::Supernodal { n, nnz_a, .. } => {
                if b.len() != *n {
                    return invalid(format!("rhs length {} != {}", b.len(), n));
                }
                let bnorm = norm2(b);
                let mut x = self.solve_in_place(b);
                let mut r = residual(a, &x, b);
                let mut rnorm = norm2(&r);
                let mut steps = 0;
                while steps < 2 && rnorm.is_finite() && rnorm > 1e-14 * bnorm {
                    let dx = self.solve_in_place(&r);
                    let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
                    let rt = residual(a, &trial, b);
                    let rtn = norm2(&rt);
                    steps += 1;
                    if rtn < rnorm {
                        x = trial;
                        r = rt;
                        rnorm = rtn;
                    } else {
                        break;
                    }
                }
                let rel = if bnorm > 0.0 { rnorm / bnorm } else { rnorm };
                if !(rel <= FALLBACK_RESIDUAL) || x.iter().any(|v| !v.is_finite()) {
                    return SparseLu::factor(a, Ordering::Amd)?.solve_refined(a, b);
                }
                Ok((
                    x,
                    LinearSolveReport {
                        residual_norm: rnorm,
                        relative_residual: rel,
                        nnz_a: *nnz_a,
                        nnz_l: 0,
                        nnz_u: 0,
                        pivot_growth: f64::NAN,
                        refinement_steps: steps,
                    },
                ))
            }
        }
    }
}

fn supernodal(a: &SparseMatrix) -> Option<faer::sparse::linalg::solvers::Lu<usize, f64>> {
    if !a.values.iter().all(|v| v.is_finite()) {
        return None;
    }
    let mut trip = Vec::with_capacity(a.nnz());
    for i in 0..a.n_rows {
        let (cols, vals) = a.row(i);
        trip.extend(cols.iter().zip(vals).map(|(&c, &v)| Triplet::new(i, c, v)));
    }
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n_rows, a.n_cols, &trip).ok()?;
    m.sp_lu().ok()
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(b, ax)| b - ax).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::VmmError;

    fn dominant_tridiagonal(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.5));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn backends_agree() {
        let a = dominant_tridiagonal(300);
        let b: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x1, _) = Factorization::new(&a, LuBackend::Native(Ordering::Amd))
            .unwrap()
            .solve_refined(&a, &b)
            .unwrap();
        let (x2, r2) = Factorization::new(&a, LuBackend::Supernodal)
            .unwrap()
            .solve_refined(&a, &b)
            .unwrap();
        assert!(r2.relative_residual < 1e-12);
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn singular_is_reported_through_fallback() {
        let a = SparseMatrix::zeros(4, 4);
        let f = Factorization::new(&a, LuBackend::Supernodal);
        let res = f.and_then(|f| f.solve_refined(&a, &[1.0; 4]));
        assert!(
            matches!(res, Err(VmmError::SingularMatrix { .. })),
            "{res:?}"
        );
    }
}
