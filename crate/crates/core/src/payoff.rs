//! Option payoffs and market parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Grid;

/// Exercise payoff of the five contracts studied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Payoff {
    /// `max(K - s, 0)`
    #[serde(rename = "put")]
    Put1D { strike: f64 },
    /// `max(s - K1, 0) - 2 max(s - K, 0) + max(s - K2, 0)` with `K = (K1 + K2) / 2`
    #[serde(rename = "butterfly")]
    Butterfly1D { k1: f64, k2: f64 },
    /// Put on `min(s1, s2)`
    #[serde(rename = "min_put")]
    MinPut2D { strike: f64 },
    /// Put on `(s1 + s2) / 2`
    #[serde(rename = "avg_put")]
    AvgPut2D { strike: f64 },
    /// Butterfly on `max(s1, s2)`
    #[serde(rename = "max_butterfly")]
    MaxButterfly2D { k1: f64, k2: f64 },
}

fn butterfly(s: f64, k1: f64, k2: f64) -> f64 {
    let k = 0.5 * (k1 + k2);
    // equals (s-K1)^+ - 2 (s-K)^+ + (s-K2)^+ but never rounds below zero
    if s <= k1 || s >= k2 {
        0.0
    } else if s <= k {
        s - k1
    } else {
        k2 - s
    }
}

impl Payoff {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Payoff::Put1D { strike } | Payoff::MinPut2D { strike } | Payoff::AvgPut2D { strike } => {
                if !(strike > 0.0) || !strike.is_finite() {
                    return Err(Error::InvalidParams(format!("strike must be positive, got {strike}")));
                }
            }
            Payoff::Butterfly1D { k1, k2 } | Payoff::MaxButterfly2D { k1, k2 } => {
                if !(k1 > 0.0 && k1 < k2 && k2.is_finite()) {
                    return Err(Error::InvalidParams(format!(
                        "butterfly strikes need 0 < K1 < K2, got {k1} / {k2}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The reference strike `K` (the centre strike for butterflies).
    pub fn strike(&self) -> f64 {
        match *self {
            Payoff::Put1D { strike } | Payoff::MinPut2D { strike } | Payoff::AvgPut2D { strike } => strike,
            Payoff::Butterfly1D { k1, k2 } | Payoff::MaxButterfly2D { k1, k2 } => 0.5 * (k1 + k2),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Payoff::Put1D { .. } | Payoff::Butterfly1D { .. } => 1,
            _ => 2,
        }
    }

    /// Payoff value; `s2` is ignored for one-asset contracts.
    pub fn eval(&self, s1: f64, s2: f64) -> f64 {
        match *self {
            Payoff::Put1D { strike } => (strike - s1).max(0.0),
            Payoff::Butterfly1D { k1, k2 } => butterfly(s1, k1, k2),
            Payoff::MinPut2D { strike } => (strike - s1.min(s2)).max(0.0),
            Payoff::AvgPut2D { strike } => (strike - 0.5 * (s1 + s2)).max(0.0),
            Payoff::MaxButterfly2D { k1, k2 } => butterfly(s1.max(s2), k1, k2),
        }
    }

    /// `U0`: the payoff at every grid node, in global index order.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len())
            .map(|l| {
                let (s1, s2) = grid.node(l);
                self.eval(s1, s2)
            })
            .collect()
    }
}

/// Market data: rate, volatilities, correlation, maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinancialParams {
    pub r: f64,
    #[serde(alias = "sigma")]
    pub sigma1: f64,
    #[serde(default)]
    pub sigma2: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(rename = "T")]
    pub t_maturity: f64,
}

impl FinancialParams {
    pub fn one_asset(r: f64, sigma: f64, t_maturity: f64) -> Self {
        Self {
            r,
            sigma1: sigma,
            sigma2: 0.0,
            rho: 0.0,
            t_maturity,
        }
    }

    pub fn two_asset(r: f64, sigma1: f64, sigma2: f64, rho: f64, t_maturity: f64) -> Self {
        Self {
            r,
            sigma1,
            sigma2,
            rho,
            t_maturity,
        }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if !self.r.is_finite() {
            return Err(Error::InvalidParams("rate must be finite".into()));
        }
        if !(self.sigma1 > 0.0) || (dimension == 2 && !(self.sigma2 > 0.0)) {
            return Err(Error::InvalidParams("volatilities must be positive".into()));
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "correlation {} outside [-1, 1]",
                self.rho
            )));
        }
        if !(self.t_maturity > 0.0) {
            return Err(Error::InvalidParams("maturity must be positive".into()));
        }
        Ok(())
    }
}
