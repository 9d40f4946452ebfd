//! Time steppers for the semidiscrete complementarity problem
//! `U >= U0, U' >= AU, (U - U0)^T (U' - AU) = 0`.
//!
//! All methods advance a [`StepperState`] `(U, lambda)`. The splitting
//! methods (IT, its variant, PR, ADI-IT) keep the multiplier `lambda`
//! and leave the state exactly complementary after every step; EP and
//! penalty steps keep `lambda = 0`.

mod adi;
mod method;
mod time_grid;

use std::sync::Arc;

pub use adi::AdiScheme;
pub use method::{Method, MethodConfig, PenaltyParams, HV_THETA};
pub use time_grid::{StepMode, TimeGrid};

use crate::error::{check_len, Error, Result};
use crate::linsolve::{BandMatrix, BandedFactors, Tridiag, TridiagFactors};
use crate::operator::{Part, SpatialOperator};

/// Solution and Lagrange multiplier after `step_index` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepperState {
    pub u_hat: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    pub step_index: usize,
}

impl StepperState {
    /// `U = U0`, `lambda = 0`.
    pub fn initial(u0: &[f64]) -> Self {
        Self {
            u_hat: u0.to_vec(),
            lambda_hat: vec![0.0; u0.len()],
            step_index: 0,
        }
    }

    fn next(&self, u_hat: Vec<f64>, lambda_hat: Vec<f64>) -> Self {
        Self {
            u_hat,
            lambda_hat,
            step_index: self.step_index + 1,
        }
    }
}

/// Factorisation of `I - c A` (or of a directional part).
#[derive(Debug)]
enum Implicit {
    Tri(TridiagFactors),
    Band(BandedFactors),
}

impl Implicit {
    fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        match self {
            Implicit::Tri(f) => f.solve_in_place(x),
            Implicit::Band(f) => f.solve_in_place(x),
        }
    }
}

/// `I - c A` before factorisation, for the penalty systems.
#[derive(Debug, Clone)]
enum Unfactored {
    Tri(Tridiag),
    Band(BandMatrix),
}

impl Unfactored {
    fn factor_shifted(&self, shift: &[f64]) -> Result<Implicit> {
        Ok(match self {
            Unfactored::Tri(t) => {
                let mut t = t.clone();
                t.add_diagonal(shift);
                Implicit::Tri(t.factor()?)
            }
            Unfactored::Band(b) => {
                let mut b = b.clone();
                b.add_diagonal(shift);
                Implicit::Band(b.factor()?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct FactorKey {
    part: u8,
    coeff: u64,
}

const CACHE_SLOTS: usize = 6;

struct PenaltyCache {
    coeff: u64,
    base: Unfactored,
    mask: Vec<bool>,
    factors: Option<Arc<Implicit>>,
}

/// Per-run workspace: the operator, the obstacle, and cached factorisations
/// of `I - theta dt A` and `I - theta dt A_j` keyed by `theta dt`.
pub struct StepContext<'a> {
    op: &'a SpatialOperator,
    obstacle: &'a [f64],
    cache: Vec<(FactorKey, Arc<Implicit>)>,
    penalty: Option<PenaltyCache>,
    transpose: Option<Vec<usize>>,
    factorizations: usize,
}

impl<'a> StepContext<'a> {
    pub fn new(op: &'a SpatialOperator, obstacle: &'a [f64]) -> Result<Self> {
        check_len(op.len(), obstacle.len())?;
        Ok(Self {
            op,
            obstacle,
            cache: Vec::new(),
            penalty: None,
            transpose: None,
            factorizations: 0,
        })
    }

    pub fn operator(&self) -> &SpatialOperator {
        self.op
    }

    pub fn obstacle(&self) -> &[f64] {
        self.obstacle
    }

    /// Number of matrix factorisations performed so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    fn is_tridiagonal(&self) -> bool {
        let (lo, up) = self.op.matrix().bandwidth();
        lo <= 1 && up <= 1
    }

    fn implicit(&mut self, part: Part, coeff: f64) -> Result<Arc<Implicit>> {
        let key = FactorKey {
            part: part as u8,
            coeff: coeff.to_bits(),
        };
        if let Some((_, f)) = self.cache.iter().find(|(k, _)| *k == key) {
            return Ok(Arc::clone(f));
        }
        let a = self.op.part(part)?;
        let m = a.identity_plus_scaled(-coeff);
        let f = match part {
            Part::Full if self.is_tridiagonal() => Implicit::Tri(TridiagFactors::from_csr(&m, None)?),
            Part::Full => Implicit::Band(BandedFactors::from_csr(&m)?),
            Part::A1 => Implicit::Tri(TridiagFactors::from_csr(&m, None)?),
            Part::A2 => {
                let perm = self.transpose.get_or_insert_with(|| self.op.shape().transpose_perm());
                Implicit::Tri(TridiagFactors::from_csr(&m, Some(perm))?)
            }
            Part::A0 => return Err(Error::InvalidParams("A0 is always explicit".into())),
        };
        self.factorizations += 1;
        let f = Arc::new(f);
        if self.cache.len() == CACHE_SLOTS {
            self.cache.remove(0);
        }
        self.cache.push((key, Arc::clone(&f)));
        Ok(f)
    }

    /// Factors of `I - coeff A + P` with `P = diag(large * mask)`; the last
    /// factorisation is reused when the mask repeats.
    fn penalised(&mut self, coeff: f64, mask: &[bool], large: f64) -> Result<Arc<Implicit>> {
        let bits = coeff.to_bits();
        if self.penalty.as_ref().is_none_or(|p| p.coeff != bits) {
            let m = self.op.matrix().identity_plus_scaled(-coeff);
            let base = if self.is_tridiagonal() {
                Unfactored::Tri(Tridiag::from_csr(&m, None)?)
            } else {
                Unfactored::Band(BandMatrix::from_csr(&m))
            };
            self.penalty = Some(PenaltyCache {
                coeff: bits,
                base,
                mask: Vec::new(),
                factors: None,
            });
        }
        let cache = self.penalty.as_mut().expect("initialised above");
        if let Some(f) = &cache.factors {
            if cache.mask == mask {
                return Ok(Arc::clone(f));
            }
        }
        let shift: Vec<f64> = mask.iter().map(|&on| if on { large } else { 0.0 }).collect();
        let f = Arc::new(cache.base.factor_shifted(&shift)?);
        self.factorizations += 1;
        cache.mask = mask.to_vec();
        cache.factors = Some(Arc::clone(&f));
        Ok(f)
    }

    /// `v + c A v`.
    fn explicit(&self, part: Part, v: &[f64], c: f64) -> Result<Vec<f64>> {
        let mut out = self.op.apply(part, v)?;
        for (o, x) in out.iter_mut().zip(v) {
            *o = x + c * *o;
        }
        Ok(out)
    }

    /// Right-hand side `(I + (1 - theta) dt A) U` of the theta-method.
    fn theta_rhs(&self, u: &[f64], dt: f64, theta: f64) -> Result<Vec<f64>> {
        if theta == 1.0 {
            Ok(u.to_vec())
        } else {
            self.explicit(Part::Full, u, (1.0 - theta) * dt)
        }
    }

    /// Unconstrained theta-method step.
    pub fn theta_step(&mut self, u: &[f64], dt: f64, theta: f64) -> Result<Vec<f64>> {
        check_len(self.op.len(), u.len())?;
        let mut x = self.theta_rhs(u, dt, theta)?;
        self.implicit(Part::Full, theta * dt)?.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// theta-EP: unconstrained step, then `max(U_bar, U0)`.
    pub fn theta_ep_step(&mut self, state: &StepperState, dt: f64, theta: f64) -> Result<StepperState> {
        let ubar = self.theta_step(&state.u_hat, dt, theta)?;
        let u: Vec<f64> = ubar.iter().zip(self.obstacle).map(|(&x, &g)| x.max(g)).collect();
        let n = u.len();
        Ok(state.next(u, vec![0.0; n]))
    }

    /// theta-IT: the linear stage carries the source `dt lambda`; the update
    /// `U = max(U_bar - dt lambda, U0)`, `lambda' = max(0, lambda + (U0 - U_bar) / dt)`.
    pub fn theta_it_step(&mut self, state: &StepperState, dt: f64, theta: f64) -> Result<StepperState> {
        let ubar = self.it_linear_stage(state, dt, theta)?;
        Ok(self.it_update(state, &ubar, dt))
    }

    /// As [`Self::theta_it_step`] with `dt` replaced by `theta dt` in the update.
    pub fn theta_it_variant_step(&mut self, state: &StepperState, dt: f64, theta: f64) -> Result<StepperState> {
        let ubar = self.it_linear_stage(state, dt, theta)?;
        Ok(self.it_update(state, &ubar, theta * dt))
    }

    fn it_linear_stage(&mut self, state: &StepperState, dt: f64, theta: f64) -> Result<Vec<f64>> {
        check_len(self.op.len(), state.u_hat.len())?;
        let mut x = self.theta_rhs(&state.u_hat, dt, theta)?;
        for (xi, li) in x.iter_mut().zip(&state.lambda_hat) {
            *xi += dt * li;
        }
        self.implicit(Part::Full, theta * dt)?.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// IT multiplier update with step `scale`. Either `U_l = U0_l` or
    /// `lambda_l = 0` holds exactly for every component.
    pub(crate) fn it_update(&self, state: &StepperState, ubar: &[f64], scale: f64) -> StepperState {
        let n = ubar.len();
        let mut u = Vec::with_capacity(n);
        let mut lambda = Vec::with_capacity(n);
        for l in 0..n {
            let (g, lp) = (self.obstacle[l], state.lambda_hat[l]);
            let y = ubar[l] - scale * lp;
            if y > g {
                u.push(y);
                lambda.push(0.0);
            } else {
                u.push(g);
                lambda.push((lp + (g - ubar[l]) / scale).max(0.0));
            }
        }
        state.next(u, lambda)
    }

    /// Peaceman-Rachford: `(I - dt/2 A) V = U + dt/2 lambda`, `W = (I + dt/2 A) V`,
    /// `U' = max(W, U0)`, `lambda' = max(0, U0 - W) / (dt/2)`.
    pub fn pr_step(&mut self, state: &StepperState, dt: f64) -> Result<StepperState> {
        check_len(self.op.len(), state.u_hat.len())?;
        let half = 0.5 * dt;
        let mut v: Vec<f64> = state
            .u_hat
            .iter()
            .zip(&state.lambda_hat)
            .map(|(u, l)| u + half * l)
            .collect();
        self.implicit(Part::Full, half)?.solve_in_place(&mut v)?;
        let w = self.explicit(Part::Full, &v, half)?;
        let n = w.len();
        let mut u = Vec::with_capacity(n);
        let mut lambda = Vec::with_capacity(n);
        for (&wl, &g) in w.iter().zip(self.obstacle) {
            if wl > g {
                u.push(wl);
                lambda.push(0.0);
            } else {
                u.push(g);
                lambda.push((g - wl).max(0.0) / half);
            }
        }
        Ok(state.next(u, lambda))
    }

    /// theta-P: iterate `(I - theta dt A + P_k) U_{k+1} = (I + (1-theta) dt A) U + P_k U0`
    /// from `U_0 = U`, with `P_k = Large` where `U_k < U0`. Returns the
    /// state and the number of linear solves.
    pub fn theta_p_step(
        &mut self,
        state: &StepperState,
        dt: f64,
        theta: f64,
        penalty: &PenaltyParams,
    ) -> Result<(StepperState, usize)> {
        check_len(self.op.len(), state.u_hat.len())?;
        let rhs = self.theta_rhs(&state.u_hat, dt, theta)?;
        let g = self.obstacle;
        let below = |v: &[f64]| -> Vec<bool> { v.iter().zip(g).map(|(x, o)| x < o).collect() };
        let mut prev = state.u_hat.clone();
        let mut mask = below(&prev);
        let mut change = f64::INFINITY;
        for k in 1..=penalty.kappa_max {
            let f = self.penalised(theta * dt, &mask, penalty.large)?;
            let mut x: Vec<f64> = rhs
                .iter()
                .zip(&mask)
                .zip(g)
                .map(|((&b, &on), &o)| if on { b + penalty.large * o } else { b })
                .collect();
            f.solve_in_place(&mut x)?;
            change = x
                .iter()
                .zip(&prev)
                .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                .fold(0.0, f64::max);
            let next_mask = below(&x);
            if change < penalty.tol || next_mask == mask {
                let n = x.len();
                return Ok((state.next(x, vec![0.0; n]), k));
            }
            prev = x;
            mask = next_mask;
        }
        Err(Error::NonConvergence {
            iterations: penalty.kappa_max,
            residual: change,
        })
    }

    /// One step of the configured method; returns the penalty iteration
    /// count (zero for methods without iteration).
    pub fn step(&mut self, cfg: &MethodConfig, state: &StepperState, dt: f64) -> Result<(StepperState, usize)> {
        let t = cfg.theta;
        Ok(match cfg.method {
            Method::ThetaEp => (self.theta_ep_step(state, dt, t)?, 0),
            Method::ThetaIt => (self.theta_it_step(state, dt, t)?, 0),
            Method::ThetaItVariant => (self.theta_it_variant_step(state, dt, t)?, 0),
            Method::Pr => (self.pr_step(state, dt)?, 0),
            Method::ThetaP => self.theta_p_step(state, dt, t, &cfg.penalty)?,
            Method::DoIt => (self.adi_it_step(state, dt, AdiScheme::Douglas, t)?, 0),
            Method::McsIt => (self.adi_it_step(state, dt, AdiScheme::ModifiedCraigSneyd, t)?, 0),
            Method::HvIt => (self.adi_it_step(state, dt, AdiScheme::HundsdorferVerwer, t)?, 0),
        })
    }
}

/// Outcome of [`run_method`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: StepperState,
    /// penalty linear solves per executed (sub)step; empty for other methods
    pub penalty_iterations: Vec<usize>,
    pub factorizations: usize,
}

impl RunOutput {
    pub fn avg_penalty_iterations(&self) -> Option<f64> {
        if self.penalty_iterations.is_empty() {
            None
        } else {
            let total: usize = self.penalty_iterations.iter().sum();
            Some(total as f64 / self.penalty_iterations.len() as f64)
        }
    }
}

/// Advances `initial` over `grid` with `obstacle` as the constraint.
///
/// The first `damping_substeps` intervals are each split into two halves
/// stepped with the damping method (see [`MethodConfig::damping_config`]).
/// `observe` sees the state at every grid time `t_n`, `n >= 1`.
pub fn run_method_observed(
    config: &MethodConfig,
    op: &SpatialOperator,
    grid: &TimeGrid,
    initial: &[f64],
    obstacle: &[f64],
    observe: &mut dyn FnMut(usize, f64, &StepperState),
) -> Result<RunOutput> {
    config.validate()?;
    check_len(op.len(), initial.len())?;
    if config.method.is_adi() && op.split().is_none() {
        return Err(Error::NoSplit);
    }
    let mut ctx = StepContext::new(op, obstacle)?;
    let damping = config.damping_config();
    let mut state = StepperState::initial(initial);
    let mut iterations = Vec::new();
    let mut record = |k: usize, cfg: &MethodConfig| {
        if cfg.method == Method::ThetaP {
            iterations.push(k);
        }
    };
    for n in 1..=grid.n_steps() {
        let dt = grid.step(n);
        if n <= config.damping_substeps {
            for _ in 0..2 {
                let (next, k) = ctx.step(&damping, &state, 0.5 * dt)?;
                record(k, &damping);
                state = next;
            }
            state.step_index = n;
        } else {
            let (next, k) = ctx.step(config, &state, dt)?;
            record(k, config);
            state = next;
        }
        observe(n, grid.times()[n], &state);
    }
    Ok(RunOutput {
        state,
        penalty_iterations: iterations,
        factorizations: ctx.factorizations(),
    })
}

/// [`run_method_observed`] without an observer, starting from the obstacle.
pub fn run_method(config: &MethodConfig, op: &SpatialOperator, grid: &TimeGrid, u0: &[f64]) -> Result<RunOutput> {
    run_method_observed(config, op, grid, u0, u0, &mut |_, _, _| {})
}
