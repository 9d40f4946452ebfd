use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Temporal discretisation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// theta-method followed by projection onto the payoff
    ThetaEp,
    /// Ikonen-Toivanen splitting
    ThetaIt,
    /// Ikonen-Toivanen with `theta dt` in the multiplier update
    ThetaItVariant,
    /// Peaceman-Rachford type splitting (theta fixed at 1/2)
    Pr,
    /// theta-method with penalty iteration
    ThetaP,
    /// Douglas ADI with IT splitting
    DoIt,
    /// Modified Craig-Sneyd ADI with IT splitting (Craig-Sneyd at theta = 1/2)
    McsIt,
    /// Hundsdorfer-Verwer ADI with IT splitting
    HvIt,
}

impl Method {
    pub fn carries_multiplier(self) -> bool {
        !matches!(self, Method::ThetaEp | Method::ThetaP)
    }

    pub fn is_adi(self) -> bool {
        matches!(self, Method::DoIt | Method::McsIt | Method::HvIt)
    }

    fn family(self) -> &'static str {
        match self {
            Method::ThetaEp => "EP",
            Method::ThetaIt => "IT",
            Method::ThetaItVariant => "ITV",
            Method::Pr => "PR",
            Method::ThetaP => "P",
            Method::DoIt => "Do",
            Method::McsIt => "MCS",
            Method::HvIt => "HV",
        }
    }
}

/// Penalty iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub large: f64,
    pub tol: f64,
    pub kappa_max: usize,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        // Large ~ 1e-2 tol / eps with eps ~ 1e-16
        Self {
            large: 1e7,
            tol: 1e-7,
            kappa_max: 30,
        }
    }
}

/// A method, its parameter, and the damping policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    pub theta: f64,
    #[serde(default)]
    pub penalty: PenaltyParams,
    /// leading time intervals replaced by two half-steps of the damping method
    #[serde(default = "default_damping")]
    pub damping_substeps: usize,
}

fn default_damping() -> usize {
    2
}

pub const HV_THETA: f64 = 0.292_893_218_813_452_5; // 1 / (2 + sqrt 2)

impl MethodConfig {
    pub fn new(method: Method, theta: f64) -> Self {
        Self {
            method,
            theta: if method == Method::Pr { 0.5 } else { theta },
            penalty: PenaltyParams::default(),
            damping_substeps: 2,
        }
    }

    pub fn with_damping(mut self, substeps: usize) -> Self {
        self.damping_substeps = substeps;
        self
    }

    pub fn with_penalty(mut self, penalty: PenaltyParams) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if self.method == Method::ThetaP {
            let p = &self.penalty;
            if !(p.large > 0.0 && p.tol > 0.0) || p.kappa_max == 0 {
                return Err(Error::InvalidParams("invalid penalty parameters".into()));
            }
        }
        Ok(())
    }

    /// Configuration used for the damping half-steps.
    pub fn damping_config(&self) -> MethodConfig {
        let method = match self.method {
            Method::ThetaEp | Method::ThetaIt | Method::ThetaP => self.method,
            _ => Method::ThetaIt,
        };
        MethodConfig {
            method,
            theta: 1.0,
            penalty: self.penalty,
            damping_substeps: 0,
        }
    }

    /// Short name, e.g. `CN-IT`; parameters without a short name are
    /// written as `FAMILY@theta`.
    pub fn label(&self) -> String {
        let t = self.theta;
        let named = match self.method {
            Method::ThetaEp | Method::ThetaIt | Method::ThetaP if t == 1.0 => {
                Some(format!("BE-{}", self.method.family()))
            }
            Method::ThetaEp | Method::ThetaIt | Method::ThetaP if t == 0.5 => {
                Some(format!("CN-{}", self.method.family()))
            }
            Method::Pr => Some("PR".to_string()),
            Method::DoIt if t == 0.5 => Some("Do-IT".to_string()),
            Method::McsIt if t == 0.5 => Some("CS-IT".to_string()),
            Method::McsIt if t == 1.0 / 3.0 => Some("MCS-IT".to_string()),
            Method::HvIt if (t - HV_THETA).abs() < 1e-15 => Some("HV-IT".to_string()),
            _ => None,
        };
        named.unwrap_or_else(|| format!("{}@{}", self.method.family(), t))
    }
}

impl fmt::Display for MethodConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for MethodConfig {
    type Err = Error;

    fn from_str(name: &str) -> Result<Self> {
        use Method::*;
        let preset = match name {
            "BE-EP" => Some((ThetaEp, 1.0)),
            "CN-EP" => Some((ThetaEp, 0.5)),
            "BE-IT" => Some((ThetaIt, 1.0)),
            "CN-IT" => Some((ThetaIt, 0.5)),
            "BE-P" => Some((ThetaP, 1.0)),
            "CN-P" => Some((ThetaP, 0.5)),
            "PR" => Some((Pr, 0.5)),
            "Do-IT" => Some((DoIt, 0.5)),
            "CS-IT" => Some((McsIt, 0.5)),
            "MCS-IT" => Some((McsIt, 1.0 / 3.0)),
            "HV-IT" => Some((HvIt, HV_THETA)),
            _ => None,
        };
        if let Some((m, t)) = preset {
            return Ok(MethodConfig::new(m, t));
        }
        let (family, theta) = name
            .split_once('@')
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))?;
        let method = match family {
            "EP" => ThetaEp,
            "IT" => ThetaIt,
            "ITV" => ThetaItVariant,
            "PR" => Pr,
            "P" => ThetaP,
            "Do" => DoIt,
            "MCS" => McsIt,
            "HV" => HvIt,
            _ => return Err(Error::UnknownMethod(name.to_string())),
        };
        let theta: f64 = theta.parse().map_err(|_| Error::UnknownMethod(name.to_string()))?;
        let cfg = MethodConfig::new(method, theta);
        cfg.validate().map_err(|_| Error::UnknownMethod(name.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in [
            "BE-EP", "CN-EP", "BE-IT", "CN-IT", "BE-P", "CN-P", "PR", "Do-IT", "CS-IT", "MCS-IT", "HV-IT",
        ] {
            let cfg: MethodConfig = name.parse().unwrap();
            assert_eq!(cfg.label(), name);
            assert_eq!(cfg.damping_substeps, 2);
        }
        let hv = "HV-IT".parse::<MethodConfig>().unwrap().theta;
        assert!((hv - 1.0 / (2.0 + 2f64.sqrt())).abs() < 1e-16);
    }

    #[test]
    fn generic_names() {
        let cfg: MethodConfig = "ITV@0.5".parse().unwrap();
        assert_eq!(cfg.method, Method::ThetaItVariant);
        assert_eq!(cfg.label(), "ITV@0.5");
        assert!(matches!("XX-IT".parse::<MethodConfig>(), Err(Error::UnknownMethod(_))));
        assert!("IT@-1".parse::<MethodConfig>().is_err());
    }

    #[test]
    fn damping_methods() {
        let d = |n: &str| n.parse::<MethodConfig>().unwrap().damping_config();
        assert_eq!(d("CN-EP").method, Method::ThetaEp);
        assert_eq!(d("CN-P").method, Method::ThetaP);
        for n in ["PR", "Do-IT", "HV-IT", "ITV@0.5", "CN-IT"] {
            assert_eq!(d(n).method, Method::ThetaIt);
            assert_eq!(d(n).theta, 1.0);
        }
    }

    #[test]
    fn penalty_defaults() {
        let p = PenaltyParams::default();
        assert_eq!((p.large, p.tol, p.kappa_max), (1e7, 1e-7, 30));
        // Large ~ 1e-2 tol / eps
        let rule = 1e-2 * p.tol / 1e-16;
        assert!((p.large / rule - 1.0).abs() < 1e-12);
    }
}
