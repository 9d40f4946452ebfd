use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, Problem};
use crate::error::{Error, Result};
use crate::steppers::{run_method, MethodConfig};

/// Sidecar written next to every cached reference vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeta {
    pub key: String,
    pub nu: usize,
    pub m: usize,
    pub n_steps: usize,
    pub len: usize,
    pub method: String,
}

/// On-disk store of reference solutions, one `.bin` (little-endian f64)
/// plus `.json` pair per key.
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (
            self.dir.join(format!("ref-{key}.bin")),
            self.dir.join(format!("ref-{key}.json")),
        )
    }

    /// Cached vector for `key`, if present with a matching sidecar.
    pub fn load(&self, key: &str, len: usize) -> Option<Vec<f64>> {
        let (bin, json) = self.paths(key);
        let meta: ReferenceMeta = serde_json::from_slice(&fs::read(json).ok()?).ok()?;
        let bytes = fs::read(bin).ok()?;
        if meta.key != key || meta.len != len || bytes.len() != 8 * len {
            return None;
        }
        Some(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect(),
        )
    }

    pub fn store(&self, meta: &ReferenceMeta, values: &[f64]) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let (bin, json) = self.paths(&meta.key);
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        // write to temporaries first so concurrent readers never see partial files
        let tmp = bin.with_extension(format!("bin.{}", std::process::id()));
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &bin).map_err(|e| Error::io(&bin, e))?;
        let tmp = json.with_extension(format!("json.{}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec_pretty(meta)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &json).map_err(|e| Error::io(&json, e))?;
        Ok(())
    }
}

/// Method used for references: theta-P with theta = 1/2.
pub fn reference_method() -> MethodConfig {
    "CN-P".parse().expect("preset name")
}

/// CN-P solution at maturity with `ref_multiplier * m` steps on the problem's mesh.
pub fn compute_reference(spec: &ExperimentSpec, problem: &Problem, cache: Option<&ReferenceCache>) -> Result<Vec<f64>> {
    let key = spec.reference_key(problem.nu);
    let len = problem.u0.len();
    if let Some(v) = cache.and_then(|c| c.load(&key, len)) {
        return Ok(v);
    }
    let n_steps = spec.ref_multiplier * problem.m();
    let grid = spec.time_grid(n_steps)?;
    let out = run_method(&reference_method(), &problem.op, &grid, &problem.u0)?;
    if let Some(c) = cache {
        let meta = ReferenceMeta {
            key,
            nu: problem.nu,
            m: problem.m(),
            n_steps,
            len,
            method: reference_method().label(),
        };
        c.store(&meta, &out.state.u_hat)?;
    }
    Ok(out.state.u_hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn put() -> ExperimentSpec {
        ExperimentSpec::from_json(
            r#"{"option": {"kind": "put", "strike": 100},
                "params": {"r": 0.02, "sigma": 0.4, "T": 0.5}}"#,
        )
        .unwrap()
    }

    #[test]
    fn reference_floor_and_cache() {
        let spec = put();
        let nu = spec.nu_for_m(10).unwrap();
        let p = spec.problem(nu).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(dir.path());
        let a = compute_reference(&spec, &p, Some(&cache)).unwrap();
        // the penalty floor is met up to K / Large
        let slack = 100.0 / reference_method().penalty.large;
        assert!(a.iter().zip(&p.u0).all(|(u, g)| *u >= g - slack));
        let key = spec.reference_key(nu);
        assert_eq!(cache.load(&key, a.len()).unwrap(), a);
        assert!(cache.load(&key, a.len() + 1).is_none());
        let b = compute_reference(&spec, &p, None).unwrap();
        assert_eq!(a, b);
    }
}
