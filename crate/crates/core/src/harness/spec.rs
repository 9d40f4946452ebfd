use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::{Grid, Grid2D, Mesh1D, MeshParams};
use crate::operator::SpatialOperator;
use crate::payoff::{FinancialParams, Payoff};
use crate::steppers::{MethodConfig, StepMode, TimeGrid};

/// Mesh stretching in absolute price units; defaults follow the strike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: f64,
    pub s_left: f64,
    pub s_right: f64,
    pub s_max: f64,
}

impl GridSpec {
    pub fn around_strike(strike: f64) -> Self {
        let p = MeshParams::around_strike(strike, 1);
        Self {
            d: p.d,
            s_left: p.s_left,
            s_right: p.s_right,
            s_max: p.s_max,
        }
    }

    pub fn mesh_params(&self, strike: f64, nu: usize) -> MeshParams {
        MeshParams {
            d: self.d,
            s_left: self.s_left,
            s_right: self.s_right,
            s_max: self.s_max,
            strike,
            nu,
        }
    }
}

/// Specs shipped with the crate, by name.
pub const BUNDLED_SPECS: [(&str, &str); 5] = [
    ("put1d", include_str!("../../specs/put1d.json")),
    ("butterfly1d", include_str!("../../specs/butterfly1d.json")),
    ("minput2d", include_str!("../../specs/minput2d.json")),
    ("avgput2d", include_str!("../../specs/avgput2d.json")),
    ("butterfly2d", include_str!("../../specs/butterfly2d.json")),
];

fn default_ref_multiplier() -> usize {
    10
}

fn default_steps_per_m() -> usize {
    1
}

/// One convergence study: contract, market, mesh family, methods and mesh sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub option: Payoff,
    pub params: FinancialParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub nu_list: Vec<usize>,
    #[serde(default)]
    pub steps: StepMode,
    /// reference runs use `ref_multiplier * m` steps
    #[serde(default = "default_ref_multiplier")]
    pub ref_multiplier: usize,
    /// runs use `steps_per_m * m` steps
    #[serde(default = "default_steps_per_m")]
    pub steps_per_m: usize,
}

/// Mesh, operator and payoff for one `nu`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub op: SpatialOperator,
    pub u0: Vec<f64>,
    pub strike: f64,
    pub nu: usize,
}

impl Problem {
    pub fn m(&self) -> usize {
        self.grid.primary().m()
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// A bundled spec by name, e.g. `put1d`.
    pub fn bundled(name: &str) -> Result<Self> {
        let text = BUNDLED_SPECS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| Error::InvalidParams(format!("no bundled spec `{name}`")))?;
        Self::from_json(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec is always serialisable")
    }

    pub fn validate(&self) -> Result<()> {
        self.option.validate()?;
        self.params.validate(self.option.dimension())?;
        self.method_configs()?;
        if self.ref_multiplier == 0 || self.steps_per_m == 0 {
            return Err(Error::InvalidParams("step multipliers must be positive".into()));
        }
        if let Some(nu) = self.nu_list.iter().find(|nu| *nu % 2 == 0) {
            return Err(Error::InvalidParams(format!("nu must be odd, got {nu}")));
        }
        self.grid_spec().mesh_params(self.strike(), 1).validate()
    }

    pub fn strike(&self) -> f64 {
        self.option.strike()
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.unwrap_or_else(|| GridSpec::around_strike(self.strike()))
    }

    pub fn method_configs(&self) -> Result<Vec<MethodConfig>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn mesh(&self, nu: usize) -> Result<Mesh1D> {
        Mesh1D::build(&self.grid_spec().mesh_params(self.strike(), nu))
    }

    /// Number of mesh intervals `m` produced by `nu`.
    pub fn m_for_nu(&self, nu: usize) -> Result<usize> {
        Ok(self.mesh(nu)?.m())
    }

    /// Odd `nu` whose mesh size is closest to `target` (smaller `nu` on ties).
    pub fn nu_for_m(&self, target: usize) -> Result<usize> {
        let mut best = (usize::MAX, 1);
        let mut nu = 1;
        loop {
            let m = self.m_for_nu(nu)?;
            let gap = m.abs_diff(target);
            if gap < best.0 {
                best = (gap, nu);
            }
            if m > target {
                return Ok(best.1);
            }
            nu += 2;
        }
    }

    pub fn problem(&self, nu: usize) -> Result<Problem> {
        let s = self.mesh(nu)?;
        let grid = match self.option.dimension() {
            1 => Grid::OneD(s),
            _ => Grid::TwoD(Grid2D::new(s.clone(), s)),
        };
        let op = SpatialOperator::assemble(&grid, &self.params)?;
        let u0 = self.option.sample(&grid);
        Ok(Problem {
            grid,
            op,
            u0,
            strike: self.strike(),
            nu,
        })
    }

    pub fn time_grid(&self, n_steps: usize) -> Result<TimeGrid> {
        TimeGrid::new(n_steps, self.params.t_maturity, self.steps)
    }

    /// Hex digest identifying everything a reference solution depends on.
    pub fn reference_key(&self, nu: usize) -> String {
        let key = serde_json::json!({
            "version": 1,
            "option": self.option,
            "params": self.params,
            "grid": self.grid_spec(),
            "steps": self.steps,
            "ref_multiplier": self.ref_multiplier,
            "nu": nu,
        });
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PUT: &str = r#"{
        "option": {"kind": "put", "strike": 100},
        "params": {"r": 0.02, "sigma": 0.4, "T": 0.5},
        "methods": ["BE-IT", "CN-P"],
        "nu_list": [15, 29]
    }"#;

    #[test]
    fn parses_with_defaults() {
        let spec = ExperimentSpec::from_json(PUT).unwrap();
        assert_eq!(spec.ref_multiplier, 10);
        assert_eq!(spec.steps, StepMode::Constant);
        let g = spec.grid_spec();
        assert!((g.d - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!((g.s_left, g.s_right, g.s_max), (80.0, 120.0, 500.0));
        let p = spec.problem(15).unwrap();
        assert_eq!(p.u0.len(), p.m() + 1);
        assert_eq!(p.u0[0], 100.0);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            ExperimentSpec::from_json(&PUT.replace("CN-P", "XX")),
            Err(Error::UnknownMethod(_))
        ));
        assert!(ExperimentSpec::from_json(&PUT.replace("29", "30")).is_err());
        assert!(ExperimentSpec::from_json(&PUT.replace("0.4", "-0.4")).is_err());
    }

    #[test]
    fn nu_search() {
        let spec = ExperimentSpec::from_json(PUT).unwrap();
        for target in [20, 100, 200] {
            let nu = spec.nu_for_m(target).unwrap();
            assert_eq!(nu % 2, 1);
            let m = spec.m_for_nu(nu).unwrap();
            assert!(m.abs_diff(target) <= 2, "target {target} gave m {m}");
        }
    }

    #[test]
    fn reference_key_tracks_inputs() {
        let a = ExperimentSpec::from_json(PUT).unwrap();
        let mut b = a.clone();
        b.methods.clear();
        assert_eq!(a.reference_key(15), b.reference_key(15));
        assert_ne!(a.reference_key(15), a.reference_key(29));
        b.steps = StepMode::Quadratic;
        assert_ne!(a.reference_key(15), b.reference_key(15));
    }

    #[test]
    fn bundled_specs_load() {
        for (name, _) in BUNDLED_SPECS {
            let spec = ExperimentSpec::bundled(name).unwrap();
            assert!(!spec.methods.is_empty() && !spec.nu_list.is_empty(), "{name}");
        }
        let put = ExperimentSpec::bundled("put1d").unwrap();
        assert_eq!((put.params.r, put.params.sigma1, put.strike()), (0.02, 0.4, 100.0));
        let bfly = ExperimentSpec::bundled("butterfly2d").unwrap();
        assert_eq!((bfly.params.rho, bfly.strike()), (0.5, 40.0));
        assert!(ExperimentSpec::bundled("nope").is_err());
    }

    #[test]
    fn two_asset_problem() {
        let spec = ExperimentSpec::from_json(
            r#"{"option": {"kind": "min_put", "strike": 40},
                "params": {"r": 0.05, "sigma1": 0.3, "sigma2": 0.3, "rho": 0.5, "T": 0.5}}"#,
        )
        .unwrap();
        let p = spec.problem(7).unwrap();
        let n = p.m() + 1;
        assert_eq!(p.u0.len(), n * n);
        assert!(p.op.split().is_some());
    }
}
