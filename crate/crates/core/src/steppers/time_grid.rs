use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placement of the temporal grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    /// `t_n = n T / N`
    #[default]
    Constant,
    /// `t_n = (n / N)^2 T`: steps grow linearly from `t = 0`
    Quadratic,
}

impl std::str::FromStr for StepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(StepMode::Constant),
            "quadratic" => Ok(StepMode::Quadratic),
            other => Err(Error::InvalidParams(format!("unknown step mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for StepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepMode::Constant => "constant",
            StepMode::Quadratic => "quadratic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    mode: StepMode,
    t_maturity: f64,
}

impl TimeGrid {
    pub fn new(n_steps: usize, t_maturity: f64, mode: StepMode) -> Result<Self> {
        if n_steps < 1 {
            return Err(Error::InvalidParams("need at least one time step".into()));
        }
        if !(t_maturity > 0.0) {
            return Err(Error::InvalidParams("maturity must be positive".into()));
        }
        let nf = n_steps as f64;
        let times = (0..=n_steps)
            .map(|n| match mode {
                StepMode::Constant => n as f64 * t_maturity / nf,
                StepMode::Quadratic => (n as f64 / nf).powi(2) * t_maturity,
            })
            .collect();
        Ok(Self {
            times,
            mode,
            t_maturity,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn mode(&self) -> StepMode {
        self.mode
    }

    /// Size of step `n` (1-based). Constant grids return exactly `T / N`
    /// so that every step shares one factorisation.
    pub fn step(&self, n: usize) -> f64 {
        match self.mode {
            StepMode::Constant => self.t_maturity / self.n_steps() as f64,
            StepMode::Quadratic => self.times[n] - self.times[n - 1],
        }
    }
}
