//! Discrete inf-sup constant of `b(mu, w) = (div mu, grad w) - tau (tr mu, w)`
//! over tensors with vanishing normal-normal trace and scalars vanishing on
//! the boundary, both measured in H1.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result, VmmError};
use crate::fem::space::ElementValues;
use crate::fem::{assemble, mass_kernel, stiffness_kernel};
use crate::mixed::MixedSpace;
use crate::sparse::{Ordering, SparseLu, SparseMatrix};

/// Largest mesh (cells per side) on which the dense eigenproblem is solved.
const EIGEN_MAX_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfSupProbe {
    /// Exact discrete constant from the generalized eigenproblem; only on
    /// meshes up to 8 x 8.
    pub beta: Option<f64>,
    /// Minimum over random `w` of `sup_mu b(mu, w) / (|mu| |w|)`.
    pub random_min: f64,
    /// Minimum over the same `w` of the ratio attained by `mu = I w`.
    pub candidate_min: f64,
}

fn derivative_kernel(a: usize, b: usize) -> impl FnMut(&ElementValues, &ElementValues) -> Vec<f64> {
    move |u, v| {
        let mut k = vec![0.0; u.n * v.n];
        for q in 0..u.nq {
            let w = u.weights[q];
            for i in 0..v.n {
                let gi = v.grad[q * v.n + i];
                for j in 0..u.n {
                    let gj = u.grad[q * u.n + j];
                    k[i * u.n + j] += w * gj[a] * gi[b];
                }
            }
        }
        k
    }
}

fn submatrix(a: &SparseMatrix, rows: &[usize], cols: &[usize]) -> Result<SparseMatrix> {
    let mut col_pos = vec![usize::MAX; a.n_cols];
    for (p, &c) in cols.iter().enumerate() {
        col_pos[c] = p;
    }
    let mut trip = Vec::new();
    for (p, &r) in rows.iter().enumerate() {
        let (cs, vs) = a.row(r);
        for (&c, &v) in cs.iter().zip(vs) {
            if col_pos[c] != usize::MAX {
                trip.push((p, col_pos[c], v));
            }
        }
    }
    SparseMatrix::from_triplets(rows.len(), cols.len(), &trip)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Block {
    /// Rows: free tensor dofs, columns: free scalar dofs.
    b: SparseMatrix,
    lu: SparseLu,
    /// Norm weight of the component (2 for the off-diagonal entry).
    weight: f64,
}

pub fn infsup_probe(space: &MixedSpace, tau: f64, trials: usize, seed: u64) -> Result<InfSupProbe> {
    if trials == 0 {
        return invalid("the inf-sup probe needs at least one trial");
    }
    let sp = space.scalar.as_ref();
    let n = space.n();
    let m = assemble(sp, sp, mass_kernel)?;
    let k = assemble(sp, sp, stiffness_kernel)?;
    let d = |a, b| assemble(sp, sp, derivative_kernel(a, b));
    let (d11, d22) = (d(0, 0)?, d(1, 1)?);
    let (d21, d12) = (d(1, 0)?, d(0, 1)?);
    let dm = &space.scalar.dofmap;
    let q_free: Vec<usize> = (0..n).filter(|&i| !dm.boundary[i].any()).collect();
    if q_free.is_empty() {
        return invalid("mesh has no interior scalar dofs");
    }
    let mut g_trip = Vec::new();
    let mut b11 = Vec::new();
    let mut b12 = Vec::new();
    let mut b22 = Vec::new();
    for i in 0..n {
        for (a, bm) in [
            (&k, None),
            (&m, None),
            (&d11, Some(0)),
            (&d22, Some(2)),
            (&d21, Some(1)),
            (&d12, Some(1)),
        ] {
            let (cs, vs) = a.row(i);
            for (&c, &v) in cs.iter().zip(vs) {
                match bm {
                    None => g_trip.push((i, c, v)),
                    Some(0) => b11.push((i, c, v)),
                    Some(1) => b12.push((i, c, v)),
                    _ => b22.push((i, c, v)),
                }
            }
        }
        let (cs, vs) = m.row(i);
        for (&c, &v) in cs.iter().zip(vs) {
            b11.push((i, c, -tau * v));
            b22.push((i, c, -tau * v));
        }
    }
    let gram_full = SparseMatrix::from_triplets(n, n, &g_trip)?;
    let build = |trip: &[(usize, usize, f64)], free: Vec<usize>, weight: f64| -> Result<Block> {
        let full = SparseMatrix::from_triplets(n, n, trip)?;
        let gram = submatrix(&gram_full, &free, &free)?;
        let lu = SparseLu::factor(&gram, Ordering::Amd)?;
        Ok(Block {
            b: submatrix(&full, &free, &q_free)?,
            lu,
            weight,
        })
    };
    let blocks = [
        build(
            &b11,
            (0..n).filter(|&i| !dm.boundary[i].vertical()).collect(),
            1.0,
        )?,
        build(&b12, (0..n).collect(), 2.0)?,
        build(
            &b22,
            (0..n).filter(|&i| !dm.boundary[i].horizontal()).collect(),
            1.0,
        )?,
    ];
    let gq = submatrix(&gram_full, &q_free, &q_free)?;
    let mq = submatrix(&m, &q_free, &q_free)?;

    // sup over mu of b(mu, w)^2 / |mu|^2 = sum_c (B_c w)^T (weight_c G_c)^{-1} (B_c w)
    let sup_sq = |w: &[f64]| {
        blocks
            .iter()
            .map(|bl| {
                let v = bl.b.matvec(w);
                dot(&v, &bl.lu.solve_in_place(&v)) / bl.weight
            })
            .sum::<f64>()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_min = f64::INFINITY;
    let mut candidate_min = f64::INFINITY;
    let nq = q_free.len();
    for _ in 0..trials {
        let w: Vec<f64> = (0..nq).map(|_| rng.random_range(-1.0..1.0)).collect();
        let wn2 = dot(&w, &gq.matvec(&w));
        if !(wn2 > 0.0) {
            continue;
        }
        random_min = random_min.min((sup_sq(&w) / wn2).sqrt());
        // mu = I w: b = |w|_1^2 - 2 tau |w|_0^2, |mu|_1 = sqrt(2) |w|_1
        let m2 = dot(&w, &mq.matvec(&w));
        candidate_min = candidate_min.min((wn2 - m2 - 2.0 * tau * m2) / (2.0f64.sqrt() * wn2));
    }
    if !random_min.is_finite() {
        return Err(VmmError::Internal("no admissible trial vector".into()));
    }
    let beta = if space.mesh.nx.max(space.mesh.ny) <= EIGEN_MAX_CELLS {
        Some(dense_beta(&blocks, &gq)?)
    } else {
        None
    };
    Ok(InfSupProbe {
        beta,
        random_min,
        candidate_min,
    })
}

fn dense_beta(blocks: &[Block], gq: &SparseMatrix) -> Result<f64> {
    let nq = gq.n_rows;
    let mut s = DMatrix::<f64>::zeros(nq, nq);
    for bl in blocks {
        let bd = DMatrix::from_fn(bl.b.n_rows, nq, |i, j| bl.b.get(i, j));
        let mut x = DMatrix::<f64>::zeros(bl.b.n_rows, nq);
        for j in 0..nq {
            let col: Vec<f64> = bd.column(j).iter().copied().collect();
            let sol = bl.lu.solve_in_place(&col);
            x.column_mut(j).copy_from_slice(&sol);
        }
        s += bd.transpose() * x / bl.weight;
    }
    let g = DMatrix::from_fn(nq, nq, |i, j| gq.get(i, j));
    let chol = g.cholesky().ok_or_else(|| {
        VmmError::Internal("scalar H1 Gram matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| VmmError::Internal("singular Cholesky factor".into()))?;
    let c = &linv * s * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let min = SymmetricEigen::new(c)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(min.max(0.0).sqrt())
}
