//! Compressed sparse row storage for the spatial operators.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Row-by-row accumulator; duplicate entries are summed in insertion order.
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    rows: Vec<BTreeMap<usize, f64>>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            rows: vec![BTreeMap::new(); n],
        }
    }

    pub fn add(&mut self, row: usize, col: usize, val: f64) {
        *self.rows[row].entry(col).or_insert(0.0) += val;
    }

    /// Builds the matrix keeping explicit zeros (fixed sparsity pattern).
    pub fn build(self) -> CsrMatrix {
        let n = self.rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in self.rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        CsrBuilder::new(n).build()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = CsrBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 1.0);
        }
        b.build()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let mut b = CsrBuilder::new(rows.len());
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.add(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(col, value)` pairs of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn is_zero(&self) -> bool {
        self.vals.iter().all(|&v| v == 0.0)
    }

    /// `y = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len(self.n, x.len())?;
        check_len(self.n, y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y)?;
        Ok(y)
    }

    /// Entrywise sum over the union pattern, evaluated as `self + other`.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        check_len(self.n, other.n)?;
        let mut b = CsrBuilder::new(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                b.add(i, j, v);
            }
            for (j, v) in other.row(i) {
                b.add(i, j, v);
            }
        }
        Ok(b.build())
    }

    /// `I + c * self` over the pattern of `self` plus the diagonal.
    pub fn identity_plus_scaled(&self, c: f64) -> CsrMatrix {
        let mut b = CsrBuilder::new(self.n);
        for i in 0..self.n {
            b.add(i, i, 1.0);
            for (j, v) in self.row(i) {
                b.add(i, j, c * v);
            }
        }
        b.build()
    }

    /// Largest `|i - j|` below and above the diagonal among stored entries.
    pub fn bandwidth(&self) -> (usize, usize) {
        self.triplets().fold((0, 0), |(lo, hi), (i, j, _)| {
            if j < i {
                (lo.max(i - j), hi)
            } else {
                (lo, hi.max(j - i))
            }
        })
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Tridiagonal bands `(lower, diag, upper)` after reordering rows and
    /// columns by `perm` (new index -> old index). `lower[0]` and
    /// `upper[n-1]` are zero.
    pub fn tridiagonal_bands(&self, perm: Option<&[usize]>) -> Result<[Vec<f64>; 3]> {
        let n = self.n;
        let inv: Option<Vec<usize>> = perm.map(|p| {
            let mut inv = vec![0; n];
            for (new, &old) in p.iter().enumerate() {
                inv[old] = new;
            }
            inv
        });
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for (i, j, v) in self.triplets() {
            let (a, b) = match &inv {
                Some(inv) => (inv[i], inv[j]),
                None => (i, j),
            };
            if a == b {
                diag[a] = v;
            } else if b + 1 == a {
                lower[a] = v;
            } else if a + 1 == b {
                upper[a] = v;
            } else if v != 0.0 {
                return Err(Error::InvalidParams(format!(
                    "entry ({i}, {j}) lies outside the tridiagonal band"
                )));
            }
        }
        Ok([lower, diag, upper])
    }

    /// Coordinate text dump, one `row col value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:e}")?;
        }
        Ok(())
    }
}
