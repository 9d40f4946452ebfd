//! Direct solvers for the per-step linear systems and a projected SOR
//! solver for linear complementarity problems.
//!
//! Neither LU variant pivots: the systems `I - theta dt A` are diagonally
//! dominant in all the configurations we run, and a vanishing pivot is
//! reported rather than silently repaired.

use crate::error::{check_len, Error, Result};
use crate::sparse::CsrMatrix;

const PIVOT_RTOL: f64 = 1e-14;

/// Unfactored tridiagonal matrix; `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_len(diag.len(), lower.len())?;
        check_len(diag.len(), upper.len())?;
        Ok(Self { lower, diag, upper })
    }

    /// Extracts the bands of `a`, optionally after the reordering `perm`.
    pub fn from_csr(a: &CsrMatrix, perm: Option<&[usize]>) -> Result<Self> {
        let [lower, diag, upper] = a.tridiagonal_bands(perm)?;
        Ok(Self { lower, diag, upper })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn add_diagonal(&mut self, shift: &[f64]) {
        for (d, s) in self.diag.iter_mut().zip(shift) {
            *d += s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn factor(self) -> Result<TridiagFactors> {
        let n = self.len();
        let Tridiag { lower, diag, upper } = self;
        let mut mult = vec![0.0; n];
        let mut pivot = vec![0.0; n];
        for i in 0..n {
            let row_norm =
                diag[i].abs() + if i > 0 { lower[i].abs() } else { 0.0 } + if i + 1 < n { upper[i].abs() } else { 0.0 };
            let p = if i == 0 {
                diag[0]
            } else {
                mult[i] = lower[i] / pivot[i - 1];
                diag[i] - mult[i] * upper[i - 1]
            };
            if !(p.abs() > PIVOT_RTOL * row_norm) || !p.is_finite() {
                return Err(Error::Singular { row: i, pivot: p });
            }
            pivot[i] = p;
        }
        Ok(TridiagFactors {
            mult,
            pivot,
            upper,
            perm: None,
        })
    }
}

/// LU factors of a tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagFactors {
    mult: Vec<f64>,
    pivot: Vec<f64>,
    upper: Vec<f64>,
    /// system is tridiagonal in the order `perm` (new -> old)
    perm: Option<Vec<usize>>,
}

impl TridiagFactors {
    /// Factors `a`, which must be tridiagonal after reordering by `perm`.
    pub fn from_csr(a: &CsrMatrix, perm: Option<&[usize]>) -> Result<Self> {
        let mut f = Tridiag::from_csr(a, perm)?.factor()?;
        f.perm = perm.map(<[usize]>::to_vec);
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivot.is_empty()
    }

    /// Solves in place in the factor's own ordering.
    fn solve_ordered(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 1..n {
            x[i] -= self.mult[i] * x[i - 1];
        }
        x[n - 1] /= self.pivot[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.upper[i] * x[i + 1]) / self.pivot[i];
        }
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        check_len(self.len(), rhs.len())?;
        if rhs.is_empty() {
            return Ok(());
        }
        match &self.perm {
            None => self.solve_ordered(rhs),
            Some(p) => {
                let mut tmp: Vec<f64> = p.iter().map(|&old| rhs[old]).collect();
                self.solve_ordered(&mut tmp);
                for (&old, v) in p.iter().zip(tmp) {
                    rhs[old] = v;
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// Dense band storage of a square matrix with `lower` / `upper` bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    /// Copies `a` into band storage with its own bandwidths.
    pub fn from_csr(a: &CsrMatrix) -> Self {
        let (lo, up) = a.bandwidth();
        Self::from_csr_with(a, lo, up).expect("bandwidth computed from the matrix")
    }

    pub fn from_csr_with(a: &CsrMatrix, lower: usize, upper: usize) -> Result<Self> {
        let mut band = Self::zeros(a.n(), lower, upper);
        for (i, j, v) in a.triplets() {
            if j + lower < i || j > i + upper {
                if v != 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "entry ({i}, {j}) outside bandwidth ({lower}, {upper})"
                    )));
                }
                continue;
            }
            *band.at_mut(i, j) += v;
        }
        Ok(band)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    #[inline]
    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        i * self.width() + j + self.lower - i
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.offset(i, j);
        &mut self.data[k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.lower < i || j > i + self.upper {
            0.0
        } else {
            self.data[self.offset(i, j)]
        }
    }

    pub fn add_diagonal(&mut self, shift: &[f64]) {
        for (i, s) in shift.iter().enumerate().take(self.n) {
            *self.at_mut(i, i) += s;
        }
    }

    /// In-place LU without pivoting.
    pub fn factor(mut self) -> Result<BandedFactors> {
        let n = self.n;
        let (bl, bu, w) = (self.lower, self.upper, self.width());
        let row_norms: Vec<f64> = (0..n)
            .map(|i| self.data[i * w..(i + 1) * w].iter().map(|v| v.abs()).sum())
            .collect();
        for k in 0..n {
            let piv = self.data[self.offset(k, k)];
            if !(piv.abs() > PIVOT_RTOL * row_norms[k]) || !piv.is_finite() {
                return Err(Error::Singular { row: k, pivot: piv });
            }
            let last_row = (k + bl).min(n - 1);
            let last_col = (k + bu).min(n - 1);
            let (head, tail) = self.data.split_at_mut((k + 1) * w);
            let pivot_row = &head[k * w..];
            // pivot_row[(j - k) + bl] = a(k, j)
            for i in k + 1..=last_row {
                let row = &mut tail[(i - k - 1) * w..(i - k) * w];
                // row[j + bl - i] = a(i, j)
                let ik = k + bl - i;
                let f = row[ik] / piv;
                row[ik] = f;
                if f == 0.0 {
                    continue;
                }
                let src = &pivot_row[bl + 1..bl + 1 + (last_col - k)];
                let dst = &mut row[ik + 1..ik + 1 + (last_col - k)];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= f * s;
                }
            }
        }
        Ok(BandedFactors { lu: self })
    }
}

/// In-place banded LU factors.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedFactors {
    lu: BandMatrix,
}

impl BandedFactors {
    pub fn from_csr(a: &CsrMatrix) -> Result<Self> {
        BandMatrix::from_csr(a).factor()
    }

    pub fn len(&self) -> usize {
        self.lu.n
    }

    pub fn is_empty(&self) -> bool {
        self.lu.n == 0
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let lu = &self.lu;
        let n = lu.n;
        check_len(n, x.len())?;
        let (bl, bu, w) = (lu.lower, lu.upper, lu.width());
        for i in 0..n {
            let first = i.saturating_sub(bl);
            let row = &lu.data[i * w..(i + 1) * w];
            let mut acc = x[i];
            for k in first..i {
                acc -= row[k + bl - i] * x[k];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let last = (i + bu).min(n - 1);
            let row = &lu.data[i * w..(i + 1) * w];
            let mut acc = x[i];
            for j in i + 1..=last {
                acc -= row[j + bl - i] * x[j];
            }
            x[i] = acc / row[bl];
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// `x >= lower`, `M x >= q`, `(x - lower)^T (M x - q) = 0`.
#[derive(Debug, Clone)]
pub struct LcpProblem {
    pub matrix: CsrMatrix,
    pub q: Vec<f64>,
    pub lower: Vec<f64>,
}

impl LcpProblem {
    pub fn new(matrix: CsrMatrix, q: Vec<f64>, lower: Vec<f64>) -> Result<Self> {
        check_len(matrix.n(), q.len())?;
        check_len(matrix.n(), lower.len())?;
        Ok(Self { matrix, q, lower })
    }

    /// Natural residual `max_l |min(x_l - lower_l, (M x - q)_l)|`; zero
    /// exactly when `x` solves the problem.
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        let mx = self.matrix.mul_vec(x)?;
        Ok((0..x.len())
            .map(|l| (x[l] - self.lower[l]).min(mx[l] - self.q[l]).abs())
            .fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsorOptions {
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PsorOptions {
    fn default() -> Self {
        Self {
            omega: 1.5,
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PsorSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Projected SOR, starting from `max(lower, 0)`; stops when the max-norm
/// change between sweeps drops below `tol`.
pub fn psor_solve(problem: &LcpProblem, opts: PsorOptions) -> Result<PsorSolution> {
    if !(1.0..2.0).contains(&opts.omega) {
        return Err(Error::InvalidParams(format!(
            "omega must lie in [1, 2), got {}",
            opts.omega
        )));
    }
    let a = &problem.matrix;
    let n = a.n();
    let diag = a.diagonal();
    if let Some(l) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::InvalidParams(format!("non-positive diagonal at row {l}")));
    }
    let mut x: Vec<f64> = problem.lower.iter().map(|&lo| lo.max(0.0)).collect();
    let mut change = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        change = 0.0;
        for i in 0..n {
            let mut off = 0.0;
            for (j, v) in a.row(i) {
                if j != i {
                    off += v * x[j];
                }
            }
            let gs = (problem.q[i] - off) / diag[i];
            let next = (x[i] + opts.omega * (gs - x[i])).max(problem.lower[i]);
            change = change.max((next - x[i]).abs());
            x[i] = next;
        }
        if change < opts.tol {
            return Ok(PsorSolution { x, iterations: iter });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: change,
    })
}
