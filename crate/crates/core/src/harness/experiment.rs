use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{fit_order, temporal_error, FitWindow, OrderFit};
use super::reference::{compute_reference, ReferenceCache};
use super::spec::{ExperimentSpec, Problem};
use crate::error::{Error, Result};
use crate::steppers::{run_method, run_method_observed, MethodConfig, RunOutput, StepperState};

/// Execution controls that do not change results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// worker threads; `None` uses the global pool
    pub jobs: Option<usize>,
    pub cache: Option<ReferenceCache>,
    /// fill the `seconds` column (makes the CSV nondeterministic)
    pub timings: bool,
    pub window: FitWindow,
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// One `(method, m)` cell of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub method: String,
    pub m: usize,
    pub n_steps: usize,
    pub error: Option<f64>,
    pub seconds: Option<f64>,
    pub avg_penalty_iters: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFit {
    pub method: String,
    pub fit: Option<OrderFit>,
    pub note: Option<String>,
}

/// Errors per `(method, m)` and fitted orders per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub title: String,
    pub rows: Vec<ErrorRow>,
    pub fits: Vec<MethodFit>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ErrorReport {
    pub fn methods(&self) -> Vec<&str> {
        self.fits.iter().map(|f| f.method.as_str()).collect()
    }

    /// `(m, error)` pairs of a method, failures omitted.
    pub fn series(&self, method: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .filter_map(|r| r.error.map(|e| (r.m, e)))
            .collect()
    }

    pub fn error_at(&self, method: &str, m: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.m == m)
            .and_then(|r| r.error)
    }

    pub fn fit(&self, method: &str) -> Option<&OrderFit> {
        self.fits
            .iter()
            .find(|f| f.method == method)
            .and_then(|f| f.fit.as_ref())
    }

    /// Refits every method over `window`.
    pub fn refit(&mut self, window: FitWindow) {
        let fits = self.methods().iter().map(|m| fit_method(self, m, window)).collect();
        self.fits = fits;
    }

    /// Columns `method,m,N,error,seconds,avg_penalty_iters`; failed cells
    /// carry `failed: <reason>` in the error column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "method,m,N,error,seconds,avg_penalty_iters")?;
        for r in &self.rows {
            let err = match (&r.failure, r.error) {
                (Some(f), _) => format!("failed: {}", f.replace([',', '\n'], ";")),
                (None, e) => opt(e),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.method,
                r.m,
                r.n_steps,
                err,
                opt(r.seconds),
                opt(r.avg_penalty_iters)
            )?;
        }
        Ok(())
    }

    /// Columns `method,order,robust_order,m_min,m_max,points`.
    pub fn write_orders_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "method,order,robust_order,m_min,m_max,points")?;
        for f in &self.fits {
            match &f.fit {
                Some(o) => writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    f.method, o.order, o.robust, o.m_min, o.m_max, o.points
                )?,
                None => writeln!(out, "{},,,,,", f.method)?,
            }
        }
        Ok(())
    }

    /// Parses the output of [`Self::write_csv`]; orders are refitted over `window`.
    pub fn from_csv(title: &str, text: &str, window: FitWindow) -> Result<Self> {
        let bad = |line: usize| Error::InvalidParams(format!("malformed error CSV at line {line}"));
        let num = |v: &str, line: usize| -> Result<Option<f64>> {
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| bad(line))
            }
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "method,m,N,error,seconds,avg_penalty_iters" => {}
            _ => return Err(bad(1)),
        }
        let mut rows = Vec::new();
        let mut methods: Vec<String> = Vec::new();
        for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 6 {
                return Err(bad(i + 1));
            }
            let (error, failure) = match f[3].strip_prefix("failed: ") {
                Some(reason) => (None, Some(reason.to_string())),
                None => (num(f[3], i + 1)?, None),
            };
            if !methods.iter().any(|m| m == f[0]) {
                methods.push(f[0].to_string());
            }
            rows.push(ErrorRow {
                method: f[0].to_string(),
                m: f[1].parse().map_err(|_| bad(i + 1))?,
                n_steps: f[2].parse().map_err(|_| bad(i + 1))?,
                error,
                seconds: num(f[4], i + 1)?,
                avg_penalty_iters: num(f[5], i + 1)?,
                failure,
            });
        }
        let mut report = ErrorReport {
            title: title.to_string(),
            rows,
            fits: methods
                .into_iter()
                .map(|method| MethodFit {
                    method,
                    fit: None,
                    note: None,
                })
                .collect(),
        };
        report.refit(window);
        Ok(report)
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

fn fit_method(report: &ErrorReport, method: &str, window: FitWindow) -> MethodFit {
    match fit_order(&report.series(method), window) {
        Ok(fit) => MethodFit {
            method: method.to_string(),
            fit: Some(fit),
            note: None,
        },
        Err(e) => MethodFit {
            method: method.to_string(),
            fit: None,
            note: Some(e.to_string()),
        },
    }
}

/// Runs `config` on `problem` with `n_steps` steps of the spec's time grid.
pub fn run_on(spec: &ExperimentSpec, config: &MethodConfig, problem: &Problem, n_steps: usize) -> Result<RunOutput> {
    let grid = spec.time_grid(n_steps)?;
    run_method(config, &problem.op, &grid, &problem.u0)
}

/// As [`run_on`], passing every grid-time state to `observe`.
pub fn run_on_observed(
    spec: &ExperimentSpec,
    config: &MethodConfig,
    problem: &Problem,
    n_steps: usize,
    observe: &mut dyn FnMut(usize, f64, &StepperState),
) -> Result<RunOutput> {
    let grid = spec.time_grid(n_steps)?;
    run_method_observed(config, &problem.op, &grid, &problem.u0, &problem.u0, observe)
}

/// Temporal errors of every spec method on every spec mesh against CN-P references.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ErrorReport> {
    spec.validate()?;
    let configs = spec.method_configs()?;
    if configs.is_empty() || spec.nu_list.is_empty() {
        return Err(Error::InvalidParams("experiment needs methods and nu_list".into()));
    }
    with_jobs(opts.jobs, || run_inner(spec, &configs, opts))?
}

fn run_inner(spec: &ExperimentSpec, configs: &[MethodConfig], opts: &RunOptions) -> Result<ErrorReport> {
    let problems: Vec<Problem> = spec
        .nu_list
        .par_iter()
        .map(|&nu| spec.problem(nu))
        .collect::<Result<_>>()?;
    let refs: Vec<std::result::Result<Vec<f64>, String>> = problems
        .par_iter()
        .map(|p| compute_reference(spec, p, opts.cache.as_ref()).map_err(|e| format!("reference: {e}")))
        .collect();
    let cells: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..problems.len()).map(move |p| (c, p)))
        .collect();
    let mut rows: Vec<(usize, ErrorRow)> = cells
        .par_iter()
        .map(|&(c, p)| {
            let (cfg, problem) = (&configs[c], &problems[p]);
            let n_steps = spec.steps_per_m * problem.m();
            let start = Instant::now();
            let result = refs[p].clone().and_then(|r| {
                let out = run_on(spec, cfg, problem, n_steps).map_err(|e| e.to_string())?;
                let e =
                    temporal_error(&out.state.u_hat, &r, &problem.grid, problem.strike).map_err(|e| e.to_string())?;
                Ok((e, out.avg_penalty_iterations()))
            });
            let seconds = opts.timings.then(|| start.elapsed().as_secs_f64());
            let (error, iters, failure) = match result {
                Ok((e, it)) => (Some(e), it, None),
                Err(f) => (None, None, Some(f)),
            };
            (
                c,
                ErrorRow {
                    method: spec.methods[c].clone(),
                    m: problem.m(),
                    n_steps,
                    error,
                    seconds,
                    avg_penalty_iters: iters,
                    failure,
                },
            )
        })
        .collect();
    rows.sort_by_key(|a| (a.0, a.1.m));
    let mut report = ErrorReport {
        title: spec.name.clone().unwrap_or_else(|| "temporal error".into()),
        rows: rows.into_iter().map(|(_, r)| r).collect(),
        fits: spec
            .methods
            .iter()
            .map(|m| MethodFit {
                method: m.clone(),
                fit: None,
                note: None,
            })
            .collect(),
    };
    report.refit(opts.window);
    Ok(report)
}
