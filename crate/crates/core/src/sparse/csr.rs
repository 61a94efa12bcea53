use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Result, VmmError};

/// Compressed-row sparse matrix with sorted, duplicate-free rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from `(i, j, v)` triplets, summing duplicates.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, j, _) in entries {
            if i >= n_rows || j >= n_cols {
                return invalid(format!("entry ({i},{j}) outside {n_rows}x{n_cols}"));
            }
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; entries.len()];
        let mut vals = vec![0.0; entries.len()];
        for &(i, j, v) in entries {
            let p = next[i];
            cols[p] = j;
            vals[p] = v;
            next[i] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_offsets.push(0);
        let mut perm: Vec<usize> = Vec::new();
        for i in 0..n_rows {
            let (s, e) = (counts[i], counts[i + 1]);
            perm.clear();
            perm.extend(s..e);
            perm.sort_by_key(|&p| cols[p]);
            for &p in &perm {
                if col_indices.len() > row_offsets[i] && *col_indices.last().unwrap() == cols[p] {
                    *values.last_mut().unwrap() += vals[p];
                } else {
                    col_indices.push(cols[p]);
                    values.push(vals[p]);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(p) => v[p],
            Err(_) => 0.0,
        }
    }

    /// Mutable reference to an existing structural entry.
    pub fn entry_mut(&mut self, i: usize, j: usize) -> Option<&mut f64> {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        let p = self.col_indices[s..e].binary_search(&j).ok()?;
        Some(&mut self.values[s + p])
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                let p = next[j];
                col_indices[p] = i;
                values[p] = x;
                next[j] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                row[j] = x;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Replaces row `i` by the unit row `e_i` (structural entries outside the
    /// diagonal are zeroed, the diagonal must exist).
    pub fn set_identity_row(&mut self, i: usize) -> Result<()> {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        let mut found = false;
        for p in s..e {
            if self.col_indices[p] == i {
                self.values[p] = 1.0;
                found = true;
            } else {
                self.values[p] = 0.0;
            }
        }
        if !found {
            return Err(VmmError::Internal(format!("row {i} has no diagonal entry")));
        }
        Ok(())
    }

    /// MatrixMarket coordinate (general, real) text.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.n_rows, self.n_cols, self.nnz());
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                let _ = writeln!(s, "{} {} {:.17e}", i + 1, j + 1, x);
            }
        }
        s
    }

    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_matrix_market().as_bytes())?;
        Ok(())
    }

    pub fn from_matrix_market(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .filter(|l| !l.starts_with('%') && !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| VmmError::Parse("missing size line".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| VmmError::Parse(format!("bad size line {header:?}")))
            })
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(VmmError::Parse(format!("bad size line {header:?}")));
        }
        let mut entries = Vec::with_capacity(dims[2]);
        for l in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(VmmError::Parse(format!("bad entry {l:?}")));
            }
            let parse_idx = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .ok()
                    .and_then(|v| v.checked_sub(1))
                    .ok_or_else(|| VmmError::Parse(format!("bad index {s:?}")))
            };
            let v: f64 = t[2]
                .parse()
                .map_err(|_| VmmError::Parse(format!("bad value {:?}", t[2])))?;
            entries.push((parse_idx(t[0])?, parse_idx(t[1])?, v));
        }
        Self::from_triplets(dims[0], dims[1], &entries)
    }
}

/// Accumulates element contributions into a fixed sparsity pattern. Building
/// the pattern once and re-filling values avoids re-sorting triplets on every
/// Newton step.
#[derive(Debug, Clone)]
pub struct PatternBuilder {
    n: usize,
    rows: Vec<Vec<usize>>,
}

impl PatternBuilder {
    pub fn new(n: usize) -> Self {
        PatternBuilder {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn add(&mut self, i: usize, j: usize) {
        self.rows[i].push(j);
    }

    pub fn add_block(&mut self, rows: &[usize], cols: &[usize]) {
        for &i in rows {
            self.rows[i].extend_from_slice(cols);
        }
    }

    pub fn build(mut self) -> SparseMatrix {
        let mut row_offsets = Vec::with_capacity(self.n + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        for r in &mut self.rows {
            r.sort_unstable();
            r.dedup();
            col_indices.extend_from_slice(r);
            row_offsets.push(col_indices.len());
        }
        let nnz = col_indices.len();
        SparseMatrix {
            n_rows: self.n,
            n_cols: self.n,
            row_offsets,
            col_indices,
            values: vec![0.0; nnz],
        }
    }
}
