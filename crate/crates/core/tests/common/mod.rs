//! Checks shared by the integration and acceptance suites.
#![allow(dead_code)]

use amfd::harness::{ExperimentSpec, Problem};
use amfd::linsolve::{psor_solve, LcpProblem, PsorOptions};
use amfd::steppers::{run_method_observed, PenaltyParams, StepContext};
use amfd::{MethodConfig, Part, SpatialOperator, StepperState, TimeGrid};

/// States at `t_1 .. t_N`.
pub fn trajectory(
    cfg: &MethodConfig,
    op: &SpatialOperator,
    grid: &TimeGrid,
    initial: &[f64],
    obstacle: &[f64],
) -> Vec<StepperState> {
    let mut out = Vec::with_capacity(grid.n_steps());
    run_method_observed(cfg, op, grid, initial, obstacle, &mut |_, _, s| out.push(s.clone())).unwrap();
    out
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max |a - b| / max(1, max |a|)`.
pub fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / max_abs(a).max(1.0)
}

/// First step at which `U >= U0`, `lambda >= 0` or `(U - U0) lambda = 0`
/// fails exactly.
pub fn complementarity_violation(states: &[StepperState], obstacle: &[f64]) -> Option<String> {
    for s in states {
        for (l, g) in obstacle.iter().enumerate() {
            let (u, lam) = (s.u_hat[l], s.lambda_hat[l]);
            if u < *g || lam < 0.0 || (u - g) * lam != 0.0 {
                return Some(format!(
                    "step {} node {l}: u - g = {:e}, lambda = {:e}",
                    s.step_index,
                    u - g,
                    lam
                ));
            }
        }
    }
    None
}

/// `U_hat >= U0` at every node and step.
pub fn floor_violation(states: &[StepperState], obstacle: &[f64], slack: f64) -> Option<String> {
    for s in states {
        if let Some(l) = (0..obstacle.len()).find(|&l| s.u_hat[l] < obstacle[l] - slack) {
            return Some(format!(
                "step {} node {l}: {:e}",
                s.step_index,
                s.u_hat[l] - obstacle[l]
            ));
        }
    }
    None
}

/// Max-norm gap between one theta-P step and PSOR on the same LCP,
/// `(I - theta dt A) x >= (I + (1 - theta) dt A) u`, `x >= U0`.
pub fn penalty_psor_gap(op: &SpatialOperator, obstacle: &[f64], prev: &StepperState, dt: f64, theta: f64) -> f64 {
    let mut ctx = StepContext::new(op, obstacle).unwrap();
    let (p, _) = ctx.theta_p_step(prev, dt, theta, &PenaltyParams::default()).unwrap();
    let a = op.part(Part::Full).unwrap();
    let q = a.identity_plus_scaled((1.0 - theta) * dt).mul_vec(&prev.u_hat).unwrap();
    let lcp = LcpProblem::new(a.identity_plus_scaled(-theta * dt), q, obstacle.to_vec()).unwrap();
    let opts = PsorOptions {
        omega: 1.2,
        tol: 1e-12,
        max_iter: 1_000_000,
    };
    let x = psor_solve(&lcp, opts).unwrap().x;
    p.u_hat.iter().zip(&x).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// theta-P vs PSOR from states along a CN-P run; returns (samples, worst gap).
pub fn penalty_psor_along_run(spec: &ExperimentSpec, problem: &Problem, theta: f64, every: usize) -> (usize, f64) {
    let n = problem.m();
    let grid = spec.time_grid(n).unwrap();
    let cfg = MethodConfig::new(amfd::Method::ThetaP, theta);
    let states = trajectory(&cfg, &problem.op, &grid, &problem.u0, &problem.u0);
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in (cfg.damping_substeps + 1..n).step_by(every) {
        let dt = grid.step(k + 1);
        worst = worst.max(penalty_psor_gap(&problem.op, &problem.u0, &states[k - 1], dt, theta));
        count += 1;
    }
    (count, worst)
}

/// Worst per-step relative gaps between PR and IT-variant(1/2), for `u`
/// and for `dt lambda` (the multiplier in the units it enters the state).
pub fn pr_variant_gap(problem: &Problem, grid: &TimeGrid) -> (f64, f64) {
    let pr = trajectory(&"PR".parse().unwrap(), &problem.op, grid, &problem.u0, &problem.u0);
    let itv = trajectory(&"ITV@0.5".parse().unwrap(), &problem.op, grid, &problem.u0, &problem.u0);
    pr.iter().zip(&itv).fold((0.0f64, 0.0f64), |(gu, gl), (a, b)| {
        let dt = grid.step(a.step_index);
        let dl = a
            .lambda_hat
            .iter()
            .zip(&b.lambda_hat)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        (
            gu.max(rel_gap(&a.u_hat, &b.u_hat)),
            gl.max(dt * dl / max_abs(&a.u_hat).max(1.0)),
        )
    })
}
