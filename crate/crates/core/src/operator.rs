//! Finite-difference semidiscretisation of the Black-Scholes operator
//!
//! ```text
//! A u = 1/2 s1^2 sigma1^2 u_11 + rho sigma1 sigma2 s1 s2 u_12 + 1/2 s2^2 sigma2^2 u_22
//!       + r s1 u_1 + r s2 u_2 - r u
//! ```
//!
//! on a tensor grid, split as `A = A0 + A1 + A2` where `A0` holds the mixed
//! derivative and `A1`, `A2` hold the directional terms plus `-r/2 I` each.
//!
//! Convection uses the central three-point formula where
//! `r s beta_{-1} + 1/2 sigma^2 s^2 delta_{-1} >= 0` and the first-order
//! forward formula elsewhere. At `s = 0` all terms of that direction vanish;
//! at the far end the Neumann condition zeroes the first derivative and the
//! second derivative uses a virtual point obtained by linear extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::mesh::{Grid, Grid2D, Mesh1D};
pub use crate::payoff::FinancialParams;
use crate::sparse::{CsrBuilder, CsrMatrix};

/// Coefficients of the three finite-difference formulas at node `x_l`
/// given `dx_l = x_l - x_{l-1}` and `dx_{l+1} = x_{l+1} - x_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilCoeffs {
    /// forward first derivative on `(x_l, x_{l+1})`
    pub alpha: [f64; 2],
    /// central first derivative on `(x_{l-1}, x_l, x_{l+1})`
    pub beta: [f64; 3],
    /// central second derivative on `(x_{l-1}, x_l, x_{l+1})`
    pub delta: [f64; 3],
}

pub fn stencil_coeffs(dx_l: f64, dx_lp1: f64) -> Result<StencilCoeffs> {
    if !(dx_l > 0.0 && dx_lp1 > 0.0) {
        return Err(Error::InvalidParams(format!(
            "stencil widths must be positive, got {dx_l} and {dx_lp1}"
        )));
    }
    let (h0, h1) = (dx_l, dx_lp1);
    let sum = h0 + h1;
    Ok(StencilCoeffs {
        alpha: [-1.0 / h1, 1.0 / h1],
        beta: [-h1 / (h0 * sum), (h1 - h0) / (h0 * h1), h0 / (h1 * sum)],
        delta: [2.0 / (h0 * sum), -2.0 / (h0 * h1), 2.0 / (h1 * sum)],
    })
}

/// First-derivative formula used at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convection {
    Central,
    Forward,
    /// boundary node: no convection term (`s = 0`, or the Neumann end)
    Boundary,
}

/// Which first-derivative formulas build the mixed-derivative stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MixedStencil {
    /// the per-node formulas selected for the convection terms
    #[default]
    Upwinded,
    /// central formulas everywhere
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    OneD { n: usize },
    TwoD { n1: usize, n2: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::OneD { n } => n,
            Shape::TwoD { n1, n2 } => n1 * n2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ordering (new -> old) in which the second direction runs fastest.
    pub fn transpose_perm(&self) -> Vec<usize> {
        match *self {
            Shape::OneD { n } => (0..n).collect(),
            Shape::TwoD { n1, n2 } => {
                let mut p = Vec::with_capacity(n1 * n2);
                for i in 0..n1 {
                    for j in 0..n2 {
                        p.push(i + n1 * j);
                    }
                }
                p
            }
        }
    }
}

/// Operator part selector for [`SpatialOperator::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Full,
    A0,
    A1,
    A2,
}

/// Directional parts `A0` (mixed), `A1`, `A2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub a0: CsrMatrix,
    pub a1: CsrMatrix,
    pub a2: CsrMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOperator {
    full: CsrMatrix,
    split: Option<Split>,
    shape: Shape,
    rate: f64,
    upwind: Vec<Vec<Convection>>,
}

/// Derivative stencils of one direction: the terms
/// `1/2 sigma^2 s^2 d2/ds2 + r s d/ds` at each node, as `(offset, coeff)`.
struct Directional {
    rows: Vec<Vec<(isize, f64)>>,
    flags: Vec<Convection>,
    first: Vec<Vec<(isize, f64)>>,
}

fn directional(mesh: &Mesh1D, r: f64, sigma: f64, mixed: MixedStencil) -> Result<Directional> {
    let s = mesh.points();
    let n = s.len();
    if n < 3 {
        return Err(Error::InvalidParams("operator needs at least three mesh points".into()));
    }
    let mut rows = vec![Vec::new(); n];
    let mut flags = vec![Convection::Boundary; n];
    let mut first = vec![Vec::new(); n];
    let half_var = 0.5 * sigma * sigma;
    for l in 1..n - 1 {
        let c = stencil_coeffs(mesh.width(l), mesh.width(l + 1))?;
        let (diff, conv) = (half_var * s[l] * s[l], r * s[l]);
        let central = conv * c.beta[0] + diff * c.delta[0] >= 0.0;
        let row = &mut rows[l];
        if central {
            flags[l] = Convection::Central;
            for k in 0..3 {
                row.push((k as isize - 1, diff * c.delta[k] + conv * c.beta[k]));
            }
        } else {
            flags[l] = Convection::Forward;
            row.push((-1, diff * c.delta[0]));
            row.push((0, diff * c.delta[1] + conv * c.alpha[0]));
            row.push((1, diff * c.delta[2] + conv * c.alpha[1]));
        }
        first[l] = if central || mixed == MixedStencil::Central {
            vec![(-1, c.beta[0]), (0, c.beta[1]), (1, c.beta[2])]
        } else {
            vec![(0, c.alpha[0]), (1, c.alpha[1])]
        };
    }
    // Far end: virtual point s_{m+1} = s_m + h_m with u_{m+1} = 2 u_m - u_{m-1}.
    let m = n - 1;
    let h = mesh.width(m);
    let c = stencil_coeffs(h, h)?;
    let diff = half_var * s[m] * s[m];
    rows[m].push((-1, diff * (c.delta[0] - c.delta[2])));
    rows[m].push((0, diff * (c.delta[1] + 2.0 * c.delta[2])));
    Ok(Directional { rows, flags, first })
}

/// Options that change the discretisation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyOptions {
    pub mixed: MixedStencil,
}

impl SpatialOperator {
    /// Tridiagonal operator for `1/2 sigma^2 s^2 u'' + r s u' - r u`.
    pub fn assemble_1d(mesh: &Mesh1D, fin: &FinancialParams) -> Result<Self> {
        let dir = directional(mesh, fin.r, fin.sigma1, MixedStencil::Upwinded)?;
        let n = mesh.len();
        let mut b = CsrBuilder::new(n);
        for (l, row) in dir.rows.iter().enumerate() {
            for &(o, v) in row {
                b.add(l, (l as isize + o) as usize, v);
            }
            b.add(l, l, -fin.r);
        }
        Ok(Self {
            full: b.build(),
            split: None,
            shape: Shape::OneD { n },
            rate: fin.r,
            upwind: vec![dir.flags],
        })
    }

    pub fn assemble_2d(grid: &Grid2D, fin: &FinancialParams) -> Result<Self> {
        Self::assemble_2d_with(grid, fin, AssemblyOptions::default())
    }

    pub fn assemble_2d_with(grid: &Grid2D, fin: &FinancialParams, opts: AssemblyOptions) -> Result<Self> {
        let d1 = directional(&grid.s1, fin.r, fin.sigma1, opts.mixed)?;
        let d2 = directional(&grid.s2, fin.r, fin.sigma2, opts.mixed)?;
        let (n1, n2) = (grid.n1(), grid.n2());
        let n = n1 * n2;
        let mut a0 = CsrBuilder::new(n);
        let mut a1 = CsrBuilder::new(n);
        let mut a2 = CsrBuilder::new(n);
        let half_r = 0.5 * fin.r;
        let corr = fin.rho * fin.sigma1 * fin.sigma2;
        let (s1, s2) = (grid.s1.points(), grid.s2.points());
        for j in 0..n2 {
            for i in 0..n1 {
                let l = grid.index(i, j);
                for &(o, v) in &d1.rows[i] {
                    a1.add(l, grid.index((i as isize + o) as usize, j), v);
                }
                a1.add(l, l, -half_r);
                for &(o, v) in &d2.rows[j] {
                    a2.add(l, grid.index(i, (j as isize + o) as usize), v);
                }
                a2.add(l, l, -half_r);
                // The mixed term vanishes on s_k = 0 through the s1 s2 factor
                // and on the Neumann ends through d/ds_k = 0.
                if corr != 0.0 && !d1.first[i].is_empty() && !d2.first[j].is_empty() {
                    let scale = corr * s1[i] * s2[j];
                    for &(oj, cj) in &d2.first[j] {
                        for &(oi, ci) in &d1.first[i] {
                            let col = grid.index((i as isize + oi) as usize, (j as isize + oj) as usize);
                            a0.add(l, col, scale * ci * cj);
                        }
                    }
                }
            }
        }
        let split = Split {
            a0: a0.build(),
            a1: a1.build(),
            a2: a2.build(),
        };
        let full = split.a0.add(&split.a1)?.add(&split.a2)?;
        Ok(Self {
            full,
            split: Some(split),
            shape: Shape::TwoD { n1, n2 },
            rate: fin.r,
            upwind: vec![d1.flags, d2.flags],
        })
    }

    /// Assembles for either grid dimension.
    pub fn assemble(grid: &Grid, fin: &FinancialParams) -> Result<Self> {
        match grid {
            Grid::OneD(mesh) => Self::assemble_1d(mesh, fin),
            Grid::TwoD(grid) => Self::assemble_2d(grid, fin),
        }
    }

    /// Wraps an arbitrary matrix as an unsplit operator.
    pub fn from_matrix(a: CsrMatrix) -> Self {
        let n = a.n();
        Self {
            full: a,
            split: None,
            shape: Shape::OneD { n },
            rate: 0.0,
            upwind: Vec::new(),
        }
    }

    /// Builds a split operator from explicit parts; `A = (A0 + A1) + A2`.
    /// `A1` must be tridiagonal in natural order and `A2` after
    /// [`Shape::transpose_perm`].
    pub fn from_split(a0: CsrMatrix, a1: CsrMatrix, a2: CsrMatrix, n1: usize, n2: usize) -> Result<Self> {
        check_len(n1 * n2, a0.n())?;
        let full = a0.add(&a1)?.add(&a2)?;
        Ok(Self {
            full,
            split: Some(Split { a0, a1, a2 }),
            shape: Shape::TwoD { n1, n2 },
            rate: 0.0,
            upwind: Vec::new(),
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.full
    }

    pub fn split(&self) -> Option<&Split> {
        self.split.as_ref()
    }

    pub fn part(&self, part: Part) -> Result<&CsrMatrix> {
        match (part, &self.split) {
            (Part::Full, _) => Ok(&self.full),
            (Part::A0, Some(s)) => Ok(&s.a0),
            (Part::A1, Some(s)) => Ok(&s.a1),
            (Part::A2, Some(s)) => Ok(&s.a2),
            (_, None) => Err(Error::NoSplit),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.full.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Convection formula chosen at each node, per direction.
    pub fn upwind_flags(&self) -> &[Vec<Convection>] {
        &self.upwind
    }

    /// Sparse product of the requested part with `v`.
    pub fn apply(&self, part: Part, v: &[f64]) -> Result<Vec<f64>> {
        self.part(part)?.mul_vec(v)
    }

    pub fn apply_into(&self, part: Part, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.part(part)?.mul_vec_into(v, out)
    }
}
