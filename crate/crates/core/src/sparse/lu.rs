//! Left-looking sparse LU (Gilbert-Peierls) with threshold partial pivoting.
//!
//! Columns are processed in a fill-reducing order; each column of `L` and
//! `U` comes from a sparse triangular solve whose nonzero pattern is found by
//! depth-first search in the graph of the already computed part of `L`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::amd;
use faer::sparse::SymbolicSparseColMatRef;

use crate::error::{invalid, Result, VmmError};
use crate::sparse::csr::SparseMatrix;

const NONE: usize = usize::MAX;

/// Relative pivot threshold below which a matrix is declared singular.
pub const SINGULAR_TOL: f64 = 1e-14;
/// A diagonal candidate is kept if it is at least this fraction of the
/// largest candidate in its column.
pub const DIAG_PREFERENCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    Natural,
    #[default]
    Amd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolveReport {
    pub residual_norm: f64,
    pub relative_residual: f64,
    pub nnz_a: usize,
    pub nnz_l: usize,
    pub nnz_u: usize,
    /// max |U| / max |A|
    pub pivot_growth: f64,
    pub refinement_steps: usize,
}

impl LinearSolveReport {
    pub fn fill_ratio(&self) -> f64 {
        (self.nnz_l + self.nnz_u) as f64 / self.nnz_a.max(1) as f64
    }
}

/// Column permutation minimizing fill for the pattern of `A + A^T`.
pub fn fill_reducing_order(a: &SparseMatrix, ordering: Ordering) -> Result<Vec<usize>> {
    if a.n_rows != a.n_cols {
        return invalid("ordering needs a square matrix");
    }
    let n = a.n_rows;
    match ordering {
        Ordering::Natural => Ok((0..n).collect()),
        Ordering::Amd => {
            if n == 0 {
                return Ok(Vec::new());
            }
            // CSR of A read as CSC is the pattern of A^T; A + A^T is the same.
            let pattern =
                SymbolicSparseColMatRef::new_checked(n, n, &a.row_offsets, None, &a.col_indices);
            let mut perm = vec![0usize; n];
            let mut perm_inv = vec![0usize; n];
            let mut mem = MemBuffer::new(amd::order_maybe_unsorted_scratch::<usize>(n, a.nnz()));
            amd::order_maybe_unsorted(
                &mut perm,
                &mut perm_inv,
                pattern,
                amd::Control::default(),
                MemStack::new(&mut mem),
            )
            .map_err(|e| VmmError::Internal(format!("amd ordering failed: {e:?}")))?;
            Ok(perm)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    q: Vec<usize>,
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
    nnz_a: usize,
    max_a: f64,
    max_u: f64,
}

struct Workspace {
    x: Vec<f64>,
    xi: Vec<usize>,
    stack: Vec<usize>,
    pstack: Vec<usize>,
    mark: Vec<u32>,
    stamp: u32,
}

impl SparseLu {
    pub fn factor(a: &SparseMatrix, ordering: Ordering) -> Result<Self> {
        let q = fill_reducing_order(a, ordering)?;
        Self::factor_with_order(a, q)
    }

    /// Factors `A Q = P^T L U` with a given column order `q`.
    pub fn factor_with_order(a: &SparseMatrix, q: Vec<usize>) -> Result<Self> {
        if a.n_rows != a.n_cols {
            return invalid(format!(
                "LU needs a square matrix, got {}x{}",
                a.n_rows, a.n_cols
            ));
        }
        let n = a.n_rows;
        if q.len() != n {
            return invalid("column order has wrong length");
        }
        let max_a = a.max_abs();
        if !max_a.is_finite() {
            return Err(VmmError::NonFinite("matrix entries".into()));
        }
        // column access: CSR of A^T
        let at = a.transpose();
        let est = 4 * a.nnz() + n;
        let mut f = SparseLu {
            n,
            q,
            pinv: vec![NONE; n],
            lp: Vec::with_capacity(n + 1),
            li: Vec::with_capacity(est),
            lx: Vec::with_capacity(est),
            up: Vec::with_capacity(n + 1),
            ui: Vec::with_capacity(est),
            ux: Vec::with_capacity(est),
            nnz_a: a.nnz(),
            max_a,
            max_u: 0.0,
        };
        let mut ws = Workspace {
            x: vec![0.0; n],
            xi: vec![0; n],
            stack: vec![0; n],
            pstack: vec![0; n],
            mark: vec![0; n],
            stamp: 0,
        };
        let threshold = SINGULAR_TOL * max_a;
        for k in 0..n {
            f.lp.push(f.li.len());
            f.up.push(f.ui.len());
            let col = f.q[k];
            let (rows, vals) = at.row(col);
            let top = f.reach(rows, &mut ws);
            for p in top..n {
                ws.x[ws.xi[p]] = 0.0;
            }
            for (&i, &v) in rows.iter().zip(vals) {
                ws.x[i] = v;
            }
            for px in top..n {
                let j = ws.xi[px];
                let jj = f.pinv[j];
                if jj == NONE {
                    continue;
                }
                let xj = ws.x[j];
                if xj != 0.0 {
                    for p in f.lp[jj] + 1..f.lp[jj + 1] {
                        ws.x[f.li[p]] -= f.lx[p] * xj;
                    }
                }
            }
            let mut ipiv = NONE;
            let mut amax = -1.0f64;
            for px in top..n {
                let i = ws.xi[px];
                if f.pinv[i] == NONE {
                    let v = ws.x[i].abs();
                    if v > amax {
                        amax = v;
                        ipiv = i;
                    }
                } else {
                    f.ui.push(f.pinv[i]);
                    f.ux.push(ws.x[i]);
                }
            }
            if ipiv == NONE || !(amax > threshold) {
                return Err(VmmError::SingularMatrix {
                    step: k,
                    column: col,
                    pivot: amax.max(0.0),
                });
            }
            if f.pinv[col] == NONE && ws.x[col].abs() >= DIAG_PREFERENCE * amax {
                ipiv = col;
            }
            let pivot = ws.x[ipiv];
            f.ui.push(k);
            f.ux.push(pivot);
            f.pinv[ipiv] = k;
            f.li.push(ipiv);
            f.lx.push(1.0);
            for px in top..n {
                let i = ws.xi[px];
                if f.pinv[i] == NONE {
                    f.li.push(i);
                    f.lx.push(ws.x[i] / pivot);
                }
                ws.x[i] = 0.0;
            }
        }
        f.lp.push(f.li.len());
        f.up.push(f.ui.len());
        for i in f.li.iter_mut() {
            *i = f.pinv[*i];
        }
        f.max_u = f.ux.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !f.max_u.is_finite() || f.lx.iter().any(|v| !v.is_finite()) {
            return Err(VmmError::NonFinite("LU factors".into()));
        }
        Ok(f)
    }

    /// Topological order of the rows reachable from `rows` in the graph of
    /// the computed part of `L`; returned in `xi[top..n]`.
    fn reach(&self, rows: &[usize], ws: &mut Workspace) -> usize {
        ws.stamp = ws.stamp.wrapping_add(1);
        if ws.stamp == 0 {
            ws.mark.iter_mut().for_each(|m| *m = 0);
            ws.stamp = 1;
        }
        let stamp = ws.stamp;
        let mut top = self.n;
        for &start in rows {
            if ws.mark[start] == stamp {
                continue;
            }
            let mut head = 0usize;
            ws.stack[0] = start;
            loop {
                let j = ws.stack[head];
                let jj = self.pinv[j];
                if ws.mark[j] != stamp {
                    ws.mark[j] = stamp;
                    ws.pstack[head] = if jj == NONE { 0 } else { self.lp[jj] };
                }
                let end = if jj == NONE { 0 } else { self.lp[jj + 1] };
                let mut done = true;
                let mut p = ws.pstack[head];
                while p < end {
                    let i = self.li[p];
                    p += 1;
                    if ws.mark[i] == stamp {
                        continue;
                    }
                    ws.pstack[head] = p;
                    head += 1;
                    ws.stack[head] = i;
                    done = false;
                    break;
                }
                if done {
                    top -= 1;
                    ws.xi[top] = j;
                    if head == 0 {
                        break;
                    }
                    head -= 1;
                }
            }
        }
        top
    }

    pub fn solve_in_place(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    x[self.li[p]] -= self.lx[p] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let d = self.up[j + 1] - 1;
            x[j] /= self.ux[d];
            let xj = x[j];
            if xj != 0.0 {
                for p in self.up[j]..d {
                    x[self.ui[p]] -= self.ux[p] * xj;
                }
            }
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.q[k]] = x[k];
        }
        out
    }

    pub fn nnz_l(&self) -> usize {
        self.li.len()
    }

    pub fn nnz_u(&self) -> usize {
        self.ui.len()
    }

    pub fn pivot_growth(&self) -> f64 {
        if self.max_a > 0.0 {
            self.max_u / self.max_a
        } else {
            0.0
        }
    }

    /// Solves with up to two steps of iterative refinement and reports the
    /// true residual.
    pub fn solve_refined(
        &self,
        a: &SparseMatrix,
        b: &[f64],
    ) -> Result<(Vec<f64>, LinearSolveReport)> {
        if b.len() != self.n {
            return invalid(format!("rhs length {} != {}", b.len(), self.n));
        }
        let bnorm = norm2(b);
        let mut x = self.solve_in_place(b);
        let mut r = residual(a, &x, b);
        let mut rnorm = norm2(&r);
        let mut steps = 0;
        while steps < 2 && rnorm > 1e-14 * bnorm {
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
        if x.iter().any(|v| !v.is_finite()) {
            return Err(VmmError::NonFinite("linear solve result".into()));
        }
        let report = LinearSolveReport {
            residual_norm: rnorm,
            relative_residual: if bnorm > 0.0 { rnorm / bnorm } else { rnorm },
            nnz_a: self.nnz_a,
            nnz_l: self.nnz_l(),
            nnz_u: self.nnz_u(),
            pivot_growth: self.pivot_growth(),
            refinement_steps: steps,
        };
        Ok((x, report))
    }
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(b, ax)| b - ax).collect()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct solve of `A x = b`, natively with AMD ordering for small systems
/// and supernodally for large ones.
pub fn solve(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, LinearSolveReport)> {
    if a.n_rows != a.n_cols {
        return invalid(format!(
            "solve needs a square matrix, got {}x{}",
            a.n_rows, a.n_cols
        ));
    }
    if b.len() != a.n_rows {
        return invalid(format!("rhs length {} != {}", b.len(), a.n_rows));
    }
    crate::sparse::Factorization::new(a, crate::sparse::LuBackend::Auto)?.solve_refined(a, b)
}
