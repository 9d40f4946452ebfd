use std::io::Write;

use super::experiment::run_on_observed;
use super::spec::{ExperimentSpec, Problem};
use crate::error::{Error, Result};
use crate::steppers::{MethodConfig, StepperState};

/// Multipliers `lambda_{n,i}` for `n >= 1` and `s <= 3K/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierExport {
    pub dimension: usize,
    /// `(t_n, s1, s2, lambda)`; `s2` is zero in 1D
    pub rows: Vec<(f64, f64, f64, f64)>,
    /// largest multiplier over all nodes and times
    pub max_lambda: f64,
    pub m: usize,
}

impl MultiplierExport {
    /// 1D: `t_n,s_i,lambda`; 2D: `t_n,s1,s2,lambda`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        if self.dimension == 1 {
            writeln!(out, "t_n,s_i,lambda")?;
            for (t, s, _, l) in &self.rows {
                writeln!(out, "{t},{s},{l}")?;
            }
        } else {
            writeln!(out, "t_n,s1,s2,lambda")?;
            for (t, s1, s2, l) in &self.rows {
                writeln!(out, "{t},{s1},{s2},{l}")?;
            }
        }
        Ok(())
    }

    /// `(s1, lambda)` pairs recorded at time `t`.
    pub fn slice(&self, t: f64) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.0 == t).map(|r| (r.1, r.3)).collect()
    }
}

fn require_multiplier(cfg: &MethodConfig, name: &str) -> Result<()> {
    if cfg.method.carries_multiplier() {
        Ok(())
    } else {
        Err(Error::NoMultiplier(name.to_string()))
    }
}

/// Runs `method` with `N = steps_per_m * m` and records its multipliers.
pub fn export_multipliers(spec: &ExperimentSpec, method: &str, nu: usize) -> Result<MultiplierExport> {
    let cfg: MethodConfig = method.parse()?;
    require_multiplier(&cfg, method)?;
    let problem = spec.problem(nu)?;
    let cut = 1.5 * problem.strike;
    let mut rows = Vec::new();
    let mut max_lambda = 0.0f64;
    let n_steps = spec.steps_per_m * problem.m();
    run_on_observed(spec, &cfg, &problem, n_steps, &mut |_, t, st| {
        for (l, &lam) in st.lambda_hat.iter().enumerate() {
            max_lambda = max_lambda.max(lam);
            let (s1, s2) = problem.grid.node(l);
            if s1 <= cut && (problem.grid.dimension() == 1 || s2 <= cut) {
                rows.push((t, s1, s2, lam));
            }
        }
    })?;
    Ok(MultiplierExport {
        dimension: problem.grid.dimension(),
        rows,
        max_lambda,
        m: problem.m(),
    })
}

/// Early-exercise flags at maturity.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionExport {
    pub dimension: usize,
    /// `(s1, s2, flag)`; `s2` is zero in 1D
    pub rows: Vec<(f64, f64, bool)>,
}

impl RegionExport {
    /// 1D: `s,flag`; 2D: `s1,s2,flag`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        if self.dimension == 1 {
            writeln!(out, "s,flag")?;
            for (s, _, f) in &self.rows {
                writeln!(out, "{s},{}", u8::from(*f))?;
            }
        } else {
            writeln!(out, "s1,s2,flag")?;
            for (s1, s2, f) in &self.rows {
                writeln!(out, "{s1},{s2},{}", u8::from(*f))?;
            }
        }
        Ok(())
    }

    pub fn flagged(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rows.iter().filter(|r| r.2).map(|r| (r.0, r.1))
    }
}

/// Flags from a final state: `lambda > 0` for multiplier methods, otherwise
/// `U - U0 <= 1e-8 K` where the payoff is positive.
pub fn exercise_flags(cfg: &MethodConfig, problem: &Problem, state: &StepperState) -> Vec<bool> {
    if cfg.method.carries_multiplier() {
        state.lambda_hat.iter().map(|&l| l > 0.0).collect()
    } else {
        let tol = 1e-8 * problem.strike;
        state
            .u_hat
            .iter()
            .zip(&problem.u0)
            .map(|(u, g)| u - g <= tol && *g > 0.0)
            .collect()
    }
}

pub fn export_exercise_region(spec: &ExperimentSpec, method: &str, nu: usize) -> Result<RegionExport> {
    let cfg: MethodConfig = method.parse()?;
    let problem = spec.problem(nu)?;
    let n_steps = spec.steps_per_m * problem.m();
    let out = run_on_observed(spec, &cfg, &problem, n_steps, &mut |_, _, _| {})?;
    let flags = exercise_flags(&cfg, &problem, &out.state);
    let rows = flags
        .iter()
        .enumerate()
        .map(|(l, &f)| {
            let (s1, s2) = problem.grid.node(l);
            (s1, s2, f)
        })
        .collect();
    Ok(RegionExport {
        dimension: problem.grid.dimension(),
        rows,
    })
}
