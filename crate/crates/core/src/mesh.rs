//! Smooth nonuniform meshes with a uniform zone around the strike.
//!
//! The mesh is the image of an equidistant `xi` grid under the piecewise map
//!
//! ```text
//! phi(xi) = s_left  + d sinh(xi)            xi_min <= xi <= 0
//!         = s_left  + d xi                  0 < xi <= xi_int
//!         = s_right + d sinh(xi - xi_int)   xi_int < xi
//! ```
//!
//! With `dxi = (xi_int - 2 xi_min) / nu` and `nu` odd, the strike
//! `K = phi(xi_int / 2)` falls exactly midway between two mesh points.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the sinh-stretched mesh in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    pub d: f64,
    pub s_left: f64,
    pub s_right: f64,
    pub s_max: f64,
    pub strike: f64,
    pub nu: usize,
}

impl MeshParams {
    /// Default stretching around a strike: `d = K/3`, uniform zone
    /// `[0.8K, 1.2K]`, truncation at `5K`.
    pub fn around_strike(strike: f64, nu: usize) -> Self {
        Self {
            d: strike / 3.0,
            s_left: 0.8 * strike,
            s_right: 1.2 * strike,
            s_max: 5.0 * strike,
            strike,
            nu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.d, self.s_left, self.s_right, self.s_max, self.strike]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("mesh parameters must be finite".into()));
        }
        if self.d <= 0.0 {
            return Err(Error::InvalidParams(format!("d must be positive, got {}", self.d)));
        }
        if !(0.0 <= self.s_left && self.s_left < self.s_right && self.s_right <= self.s_max) {
            return Err(Error::InvalidParams(format!(
                "need 0 <= s_left < s_right <= s_max, got {} / {} / {}",
                self.s_left, self.s_right, self.s_max
            )));
        }
        Ok(())
    }

    fn validate_centered(&self) -> Result<()> {
        self.validate()?;
        if self.nu == 0 || self.nu.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "nu must be an odd integer >= 1, got {}",
                self.nu
            )));
        }
        let mid = 0.5 * (self.s_left + self.s_right);
        if (self.strike - mid).abs() > 1e-12 * mid.abs().max(1.0) {
            return Err(Error::InvalidParams(format!(
                "strike {} is not the centre {} of the uniform zone",
                self.strike, mid
            )));
        }
        Ok(())
    }
}

/// `(xi_min, xi_int, xi_max)` of the stretching map, before the reset.
pub fn xi_bounds(params: &MeshParams) -> Result<(f64, f64, f64)> {
    params.validate()?;
    let xi_min = (-params.s_left / params.d).asinh();
    let xi_int = (params.s_right - params.s_left) / params.d;
    let xi_max = xi_int + ((params.s_max - params.s_right) / params.d).asinh();
    Ok((xi_min, xi_int, xi_max))
}

/// The piecewise stretching map `phi`. Continuous and strictly increasing.
pub fn map_phi(xi: f64, params: &MeshParams) -> f64 {
    let xi_int = (params.s_right - params.s_left) / params.d;
    if xi <= 0.0 {
        params.s_left + params.d * xi.sinh()
    } else if xi <= xi_int {
        params.s_left + params.d * xi
    } else {
        params.s_right + params.d * (xi - xi_int).sinh()
    }
}

/// A strictly increasing one-dimensional mesh `s_0 = 0 < ... < s_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    points: Vec<f64>,
    widths: Vec<f64>,
    xi: Vec<f64>,
    xi_step: f64,
    midway_index: Option<usize>,
    strike: Option<f64>,
}

impl Mesh1D {
    /// Builds the strike-centred mesh. Requires odd `nu`.
    pub fn build(params: &MeshParams) -> Result<Self> {
        params.validate_centered()?;
        let (xi_min, xi_int, xi_max) = xi_bounds(params)?;
        let xi_step = (xi_int - 2.0 * xi_min) / params.nu as f64;
        let mut m = ((xi_max - xi_min) / xi_step).ceil() as usize;
        // guard against ceil() landing one short through round-off
        while (m as f64) * xi_step < xi_max - xi_min {
            m += 1;
        }
        let m = m.max(params.nu).max(2);
        let xi: Vec<f64> = (0..=m).map(|l| xi_min + l as f64 * xi_step).collect();
        let mut points: Vec<f64> = xi.iter().map(|&x| map_phi(x, params)).collect();
        // phi(xi_min) = s_left - s_left up to round-off
        points[0] = 0.0;
        let midway_index = (params.nu - 1) / 2;
        let mut mesh = Self::from_parts(points, xi, xi_step)?;
        mesh.midway_index = Some(midway_index);
        mesh.strike = Some(params.strike);
        Ok(mesh)
    }

    /// Builds the stretched mesh for an arbitrary `nu`, without strike centring.
    pub fn build_uncentered(params: &MeshParams) -> Result<Self> {
        params.validate()?;
        if params.nu == 0 {
            return Err(Error::InvalidParams("nu must be >= 1".into()));
        }
        let (xi_min, xi_int, xi_max) = xi_bounds(params)?;
        let xi_step = (xi_int - 2.0 * xi_min) / params.nu as f64;
        let m = (((xi_max - xi_min) / xi_step).ceil() as usize).max(2);
        let xi: Vec<f64> = (0..=m).map(|l| xi_min + l as f64 * xi_step).collect();
        let mut points: Vec<f64> = xi.iter().map(|&x| map_phi(x, params)).collect();
        points[0] = 0.0;
        Self::from_parts(points, xi, xi_step)
    }

    /// Uniform mesh `0, h, 2h, ..., m h` with `xi_step = h`.
    pub fn uniform(h: f64, m: usize) -> Result<Self> {
        if !(h > 0.0) || m < 1 {
            return Err(Error::InvalidParams("uniform mesh needs h > 0 and m >= 1".into()));
        }
        let points: Vec<f64> = (0..=m).map(|l| l as f64 * h).collect();
        Self::from_parts(points.clone(), points, h)
    }

    /// Mesh from explicit node coordinates; `xi_step` is taken as the mean width.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParams("mesh needs at least two points".into()));
        }
        let span = points[points.len() - 1] - points[0];
        let xi_step = span / (points.len() - 1) as f64;
        let xi = (0..points.len()).map(|l| l as f64 * xi_step).collect();
        Self::from_parts(points, xi, xi_step)
    }

    fn from_parts(points: Vec<f64>, xi: Vec<f64>, xi_step: f64) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("mesh points must be strictly increasing".into()));
        }
        let mut widths = Vec::with_capacity(points.len());
        widths.push(0.0);
        widths.extend(points.windows(2).map(|w| w[1] - w[0]));
        Ok(Self {
            points,
            widths,
            xi,
            xi_step,
            midway_index: None,
            strike: None,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `h_l = s_l - s_{l-1}` for `l >= 1`; entry 0 is unused and zero.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn width(&self, l: usize) -> f64 {
        self.widths[l]
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn xi_step(&self) -> f64 {
        self.xi_step
    }

    /// Number of intervals (point count minus one).
    pub fn m(&self) -> usize {
        self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index `i` with `(s_i + s_{i+1}) / 2 = K`, for centred meshes.
    pub fn midway_index(&self) -> Option<usize> {
        self.midway_index
    }

    pub fn strike(&self) -> Option<f64> {
        self.strike
    }

    /// Effective truncation bound (the last mesh point).
    pub fn s_end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,xi,s,width")?;
        for (l, ((&x, &s), &h)) in self.xi.iter().zip(&self.points).zip(&self.widths).enumerate() {
            writeln!(out, "{l},{x},{s},{h}")?;
        }
        Ok(())
    }
}

/// Empirical smoothness constants of a mesh:
/// `c0 dxi <= h_l <= c1 dxi` and `|h_{l+1} - h_l| <= c2 dxi^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessReport {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

pub fn smoothness_report(mesh: &Mesh1D) -> Result<SmoothnessReport> {
    if mesh.len() < 3 {
        return Err(Error::InvalidParams(
            "smoothness report needs at least three mesh points".into(),
        ));
    }
    let dxi = mesh.xi_step();
    let h = &mesh.widths()[1..];
    let (lo, hi) = h
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &w| (lo.min(w), hi.max(w)));
    let jump = h.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0_f64, f64::max);
    Ok(SmoothnessReport {
        c0: lo / dxi,
        c1: hi / dxi,
        c2: jump / (dxi * dxi),
    })
}

/// Tensor-product grid; node `(i, j)` has global index `i + (m1 + 1) j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub s1: Mesh1D,
    pub s2: Mesh1D,
}

impl Grid2D {
    pub fn new(s1: Mesh1D, s2: Mesh1D) -> Self {
        Self { s1, s2 }
    }

    pub fn n1(&self) -> usize {
        self.s1.len()
    }

    pub fn n2(&self) -> usize {
        self.s2.len()
    }

    pub fn len(&self) -> usize {
        self.n1() * self.n2()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n1() * j
    }
}

/// Spatial grid of either dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    OneD(Mesh1D),
    TwoD(Grid2D),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::OneD(mesh) => mesh.len(),
            Grid::TwoD(grid) => grid.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimension(&self) -> usize {
        match self {
            Grid::OneD(_) => 1,
            Grid::TwoD(_) => 2,
        }
    }

    /// Coordinates of node `l`; `s2` is zero in one dimension.
    pub fn node(&self, l: usize) -> (f64, f64) {
        match self {
            Grid::OneD(mesh) => (mesh.points()[l], 0.0),
            Grid::TwoD(grid) => {
                let n1 = grid.n1();
                (grid.s1.points()[l % n1], grid.s2.points()[l / n1])
            }
        }
    }

    /// First-direction mesh (the only one in 1D).
    pub fn primary(&self) -> &Mesh1D {
        match self {
            Grid::OneD(mesh) => mesh,
            Grid::TwoD(grid) => &grid.s1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn put_params(nu: usize) -> MeshParams {
        MeshParams {
            d: 100.0 / 3.0,
            s_left: 80.0,
            s_right: 120.0,
            s_max: 500.0,
            strike: 100.0,
            nu,
        }
    }

    #[test]
    fn xi_bounds_closed_form() {
        let (lo, mid, hi) = xi_bounds(&put_params(1)).unwrap();
        assert!((lo - 0.2_f64.ln()).abs() < 1e-14);
        assert!((mid - 1.2).abs() < 1e-14);
        assert!((hi - 4.328_678_677_638_276).abs() < 1e-12);
        assert!(lo < 0.0 && 0.0 < mid && mid < hi);
    }

    #[test]
    fn xi_bounds_degenerate_ends() {
        let p = MeshParams {
            s_left: 0.0,
            ..put_params(1)
        };
        assert_eq!(xi_bounds(&p).unwrap().0, 0.0);
        let p = MeshParams {
            s_max: 120.0,
            ..put_params(1)
        };
        let (_, mid, hi) = xi_bounds(&p).unwrap();
        assert_eq!(mid, hi);
    }

    #[test]
    fn xi_bounds_rejects_bad_params() {
        assert!(xi_bounds(&MeshParams {
            d: 0.0,
            ..put_params(1)
        })
        .is_err());
        assert!(xi_bounds(&MeshParams {
            s_left: 130.0,
            ..put_params(1)
        })
        .is_err());
        assert!(xi_bounds(&MeshParams {
            s_max: 110.0,
            ..put_params(1)
        })
        .is_err());
    }

    #[test]
    fn phi_branch_points() {
        let p = put_params(1);
        let (lo, mid, _) = xi_bounds(&p).unwrap();
        assert!(map_phi(lo, &p).abs() < 1e-12 * p.s_max);
        assert_eq!(map_phi(0.0, &p), 80.0);
        assert!((map_phi(mid, &p) - 120.0).abs() < 1e-12);
        assert!((map_phi(mid / 2.0, &p) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn nu_one_reaches_left_plus_right() {
        let mesh = Mesh1D::build(&put_params(1)).unwrap();
        assert_eq!(mesh.points()[0], 0.0);
        assert!((mesh.points()[1] - 200.0).abs() < 1e-12);
    }

    #[test]
    fn nu_three_matches_high_precision_oracle() {
        // tests/oracles/mesh_nu3.py
        let mesh = Mesh1D::build(&put_params(3)).unwrap();
        let expected = [
            0.0,
            75.436_553_672_421_07,
            124.563_446_327_578_93,
            200.0,
            482.746_002_413_729_23,
            1_705.500_427_246_251_5,
        ];
        assert_eq!(mesh.m(), 5);
        assert!((mesh.xi_step() - 1.472_958_608_289_400_2).abs() < 1e-14);
        for (got, want) in mesh.points().iter().zip(expected) {
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
        }
        assert_eq!(mesh.midway_index(), Some(1));
    }

    #[test]
    fn even_nu_rejected() {
        assert!(Mesh1D::build(&put_params(4)).is_err());
        assert!(Mesh1D::build(&put_params(0)).is_err());
        assert!(Mesh1D::build_uncentered(&put_params(4)).is_ok());
    }

    #[test]
    fn off_centre_strike_rejected() {
        let p = MeshParams {
            strike: 101.0,
            ..put_params(5)
        };
        assert!(Mesh1D::build(&p).is_err());
    }

    #[test]
    fn built_mesh_invariants() {
        for nu in [1, 3, 5, 15, 29, 99, 477] {
            let p = put_params(nu);
            let mesh = Mesh1D::build(&p).unwrap();
            let s = mesh.points();
            assert_eq!(s[0], 0.0);
            assert!(s.windows(2).all(|w| w[1] > w[0]));
            assert!(mesh.s_end() >= p.s_max);
            let i = mesh.midway_index().unwrap();
            let mid = 0.5 * (s[i] + s[i + 1]);
            assert!((mid - 100.0).abs() <= 1e-10 * 100.0, "nu={nu}: {mid}");

            let inner = p.d * mesh.xi_step();
            for l in 1..s.len() {
                let (a, b) = (s[l - 1], s[l]);
                let h = mesh.width(l);
                if a >= p.s_left - 1e-9 && b <= p.s_right + 1e-9 {
                    assert!((h - inner).abs() <= 1e-10 * inner, "nu={nu} l={l}");
                } else {
                    assert!(h >= inner * (1.0 - 1e-12), "nu={nu} l={l}");
                }
            }
        }
    }

    #[test]
    fn uniform_mesh_smoothness() {
        let mesh = Mesh1D::uniform(0.5, 10).unwrap();
        let rep = smoothness_report(&mesh).unwrap();
        assert_eq!(rep.c0, 1.0);
        assert_eq!(rep.c1, 1.0);
        assert_eq!(rep.c2, 0.0);
    }

    #[test]
    fn smoothness_bounds_hold_on_built_mesh() {
        let mesh = Mesh1D::build(&put_params(99)).unwrap();
        let rep = smoothness_report(&mesh).unwrap();
        let dxi = mesh.xi_step();
        assert!(rep.c0 > 0.0 && rep.c0 <= rep.c1);
        let h = &mesh.widths()[1..];
        for w in h.windows(2) {
            assert!((w[1] - w[0]).abs() <= rep.c2 * dxi * dxi * (1.0 + 1e-12));
        }
        for &w in h {
            assert!(rep.c0 * dxi <= w * (1.0 + 1e-12) && w <= rep.c1 * dxi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn smoothness_needs_three_points() {
        let mesh = Mesh1D::uniform(1.0, 1).unwrap();
        assert!(smoothness_report(&mesh).is_err());
    }

    #[test]
    fn refinement_halves_max_width() {
        let coarse = Mesh1D::build(&put_params(99)).unwrap();
        let fine = Mesh1D::build(&put_params(199)).unwrap();
        let max_w = |m: &Mesh1D| m.widths()[1..].iter().cloned().fold(0.0, f64::max);
        let ratio = max_w(&coarse) / max_w(&fine);
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn second_difference_constant_is_stable() {
        let c2: Vec<f64> = [49, 99, 199, 399]
            .iter()
            .map(|&nu| smoothness_report(&Mesh1D::build(&put_params(nu)).unwrap()).unwrap().c2)
            .collect();
        let (lo, hi) = c2.iter().fold((f64::MAX, 0.0_f64), |(a, b), &c| (a.min(c), b.max(c)));
        assert!(hi / lo < 1.2, "c2 across nu: {c2:?}");
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let mesh = Mesh1D::build(&put_params(3)).unwrap();
        let mut buf = Vec::new();
        mesh.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,xi,s,width\n"));
        assert_eq!(text.lines().count(), mesh.len() + 1);
    }

    #[test]
    fn grid_indexing_is_s1_fastest() {
        let a = Mesh1D::uniform(1.0, 2).unwrap();
        let grid = Grid2D::new(a.clone(), a);
        assert_eq!(grid.index(1, 0), 1);
        assert_eq!(grid.index(0, 1), 3);
        let g = Grid::TwoD(grid);
        assert_eq!(g.node(5), (2.0, 1.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn phi_strictly_increasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
                let p = put_params(1);
                let (lo, _, hi) = xi_bounds(&p).unwrap();
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                prop_assume!(b - a > 1e-9);
                let xa = lo + a * (hi + 0.5 - lo);
                let xb = lo + b * (hi + 0.5 - lo);
                prop_assert!(map_phi(xa, &p) < map_phi(xb, &p));
            }

            #[test]
            fn centred_mesh_for_any_strike(k in 1.0f64..1000.0, half in 0..200usize) {
                let nu = 2 * half + 1;
                let mesh = Mesh1D::build(&MeshParams::around_strike(k, nu)).unwrap();
                let s = mesh.points();
                let i = mesh.midway_index().unwrap();
                prop_assert!((0.5 * (s[i] + s[i + 1]) - k).abs() <= 1e-10 * k);
                prop_assert!(s.windows(2).all(|w| w[1] > w[0]));
                prop_assert!(mesh.s_end() >= 5.0 * k);
            }
        }
    }
}
