use serde::{Deserialize, Serialize};

use super::{StepContext, StepperState};
use crate::error::{check_len, Result};
use crate::operator::Part;

/// Stage structure of an ADI-IT step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdiScheme {
    Douglas,
    ModifiedCraigSneyd,
    HundsdorferVerwer,
}

impl<'a> StepContext<'a> {
    /// `Y_j = Y_{j-1} + c A_j (Y_j - base)` for `j = 1, 2`, starting from `y`.
    fn sweeps(&mut self, mut y: Vec<f64>, base: &[f64], c: f64) -> Result<Vec<f64>> {
        for part in [Part::A1, Part::A2] {
            let ab = self.op.apply(part, base)?;
            for (yi, a) in y.iter_mut().zip(&ab) {
                *yi -= c * a;
            }
            self.implicit(part, c)?.solve_in_place(&mut y)?;
        }
        Ok(y)
    }

    /// One ADI-IT step: explicit predictor with source `dt lambda`, implicit
    /// directional sweeps with `I - theta dt A_j`, the scheme's corrector
    /// stages, then the IT update.
    pub fn adi_it_step(
        &mut self,
        state: &StepperState,
        dt: f64,
        scheme: AdiScheme,
        theta: f64,
    ) -> Result<StepperState> {
        check_len(self.op.len(), state.u_hat.len())?;
        let u = &state.u_hat;
        let c = theta * dt;
        let mut y0 = self.explicit(Part::Full, u, dt)?;
        for (y, l) in y0.iter_mut().zip(&state.lambda_hat) {
            *y += dt * l;
        }
        let y2 = self.sweeps(y0.clone(), u, c)?;
        let ubar = match scheme {
            AdiScheme::Douglas => y2,
            AdiScheme::ModifiedCraigSneyd => {
                let diff: Vec<f64> = y2.iter().zip(u).map(|(a, b)| a - b).collect();
                let a0 = self.op.apply(Part::A0, &diff)?;
                let a = self.op.apply(Part::Full, &diff)?;
                let w = (0.5 - theta) * dt;
                let z0: Vec<f64> = (0..y0.len()).map(|l| y0[l] + c * a0[l] + w * a[l]).collect();
                self.sweeps(z0, u, c)?
            }
            AdiScheme::HundsdorferVerwer => {
                let diff: Vec<f64> = y2.iter().zip(u).map(|(a, b)| a - b).collect();
                let a = self.op.apply(Part::Full, &diff)?;
                let z0: Vec<f64> = (0..y0.len()).map(|l| y0[l] + 0.5 * dt * a[l]).collect();
                self.sweeps(z0, &y2, c)?
            }
        };
        Ok(self.it_update(state, &ubar, dt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Grid2D, Mesh1D};
    use crate::operator::{FinancialParams, SpatialOperator};
    use crate::sparse::CsrMatrix;

    fn small_2d(rho: f64) -> SpatialOperator {
        let s = Mesh1D::uniform(10.0, 4).unwrap();
        let fp = FinancialParams::two_asset(0.05, 0.3, 0.3, rho, 0.5);
        SpatialOperator::assemble_2d(&Grid2D::new(s.clone(), s), &fp).unwrap()
    }

    fn start(n: usize) -> StepperState {
        StepperState {
            u_hat: (0..n).map(|l| 1.0 + 0.1 * l as f64).collect(),
            lambda_hat: (0..n).map(|l| if l % 3 == 0 { 0.2 } else { 0.0 }).collect(),
            step_index: 0,
        }
    }

    #[test]
    fn douglas_without_second_direction_is_theta_it() {
        // A2 = 0, A0 = 0: Do-IT collapses to theta-IT with A = A1
        let base = small_2d(0.0);
        let split = base.split().unwrap();
        let n = base.len();
        let (n1, n2) = match base.shape() {
            crate::operator::Shape::TwoD { n1, n2 } => (n1, n2),
            _ => unreachable!(),
        };
        let a1 = split.a1.clone();
        let op = SpatialOperator::from_split(CsrMatrix::zeros(n), a1.clone(), CsrMatrix::zeros(n), n1, n2).unwrap();
        let plain = SpatialOperator::from_matrix(a1);
        let g = vec![1.05; n];
        let s = start(n);
        let mut adi = StepContext::new(&op, &g).unwrap();
        let mut it = StepContext::new(&plain, &g).unwrap();
        let a = adi.adi_it_step(&s, 0.01, AdiScheme::Douglas, 0.5).unwrap();
        let b = it.theta_it_step(&s, 0.01, 0.5).unwrap();
        for l in 0..n {
            assert!((a.u_hat[l] - b.u_hat[l]).abs() < 1e-12);
            assert!((a.lambda_hat[l] - b.lambda_hat[l]).abs() < 1e-10);
        }
    }

    #[test]
    fn adi_steps_are_complementary() {
        let op = small_2d(0.5);
        let n = op.len();
        let g = vec![1.2; n];
        let mut ctx = StepContext::new(&op, &g).unwrap();
        for scheme in [
            AdiScheme::Douglas,
            AdiScheme::ModifiedCraigSneyd,
            AdiScheme::HundsdorferVerwer,
        ] {
            let s = ctx.adi_it_step(&start(n), 0.01, scheme, 0.5).unwrap();
            for l in 0..n {
                assert!(s.u_hat[l] >= g[l]);
                assert!(s.lambda_hat[l] >= 0.0);
                assert!(s.u_hat[l] == g[l] || s.lambda_hat[l] == 0.0);
            }
        }
    }
}
