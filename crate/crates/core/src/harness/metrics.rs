use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::mesh::Grid;

/// Maximum of `|u_ref - u|` over nodes with `K/2 < s_k < 3K/2` in every direction.
pub fn temporal_error(u: &[f64], u_ref: &[f64], grid: &Grid, strike: f64) -> Result<f64> {
    check_len(grid.len(), u.len())?;
    check_len(grid.len(), u_ref.len())?;
    let (lo, hi) = (0.5 * strike, 1.5 * strike);
    let inside = |s: f64| lo < s && s < hi;
    let mut err: Option<f64> = None;
    for l in 0..grid.len() {
        let (s1, s2) = grid.node(l);
        if inside(s1) && (grid.dimension() == 1 || inside(s2)) {
            let e = (u_ref[l] - u[l]).abs();
            err = Some(err.map_or(e, |x| x.max(e)));
        }
    }
    err.ok_or_else(|| Error::InsufficientData("no grid node inside the error region".into()))
}

/// Which `(m, error)` pairs enter an order fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FitWindow {
    /// drop the two coarsest meshes when at least four points remain
    #[default]
    Asymptotic,
    Full,
    /// inclusive bounds on `m`
    Range(usize, usize),
}

/// Convergence order estimates over a window of mesh sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    /// least-squares slope of `log e` against `log(1/m)`
    pub order: f64,
    /// median of pairwise slopes
    pub robust: f64,
    pub m_min: usize,
    pub m_max: usize,
    pub points: usize,
}

const MIN_FIT_POINTS: usize = 4;

/// Fits `e ~ C m^-p`; needs at least four distinct `m` with positive error.
pub fn fit_order(pairs: &[(usize, f64)], window: FitWindow) -> Result<OrderFit> {
    let mut sorted: Vec<(usize, f64)> = pairs.to_vec();
    sorted.sort_by_key(|p| p.0);
    let chosen: Vec<(usize, f64)> = match window {
        FitWindow::Full => sorted,
        FitWindow::Asymptotic if sorted.len() >= MIN_FIT_POINTS + 2 => sorted[2..].to_vec(),
        FitWindow::Asymptotic => sorted,
        FitWindow::Range(lo, hi) => sorted.into_iter().filter(|p| lo <= p.0 && p.0 <= hi).collect(),
    };
    if chosen.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "order fit needs {MIN_FIT_POINTS} points, got {}",
            chosen.len()
        )));
    }
    if let Some(p) = chosen.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(Error::InsufficientData(format!(
            "non-positive error {} at m = {}",
            p.1, p.0
        )));
    }
    if chosen.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InsufficientData("repeated m in order fit".into()));
    }
    let xs: Vec<f64> = chosen.iter().map(|p| -(p.0 as f64).ln()).collect();
    let ys: Vec<f64> = chosen.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let mut slopes = Vec::new();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            slopes.push((ys[j] - ys[i]) / (xs[j] - xs[i]));
        }
    }
    slopes.sort_by(f64::total_cmp);
    let k = slopes.len();
    let robust = if k % 2 == 1 {
        slopes[k / 2]
    } else {
        0.5 * (slopes[k / 2 - 1] + slopes[k / 2])
    };
    Ok(OrderFit {
        order: sxy / sxx,
        robust,
        m_min: chosen[0].0,
        m_max: chosen[chosen.len() - 1].0,
        points: chosen.len(),
    })
}
