//! `amfd`: price American options and run temporal convergence studies.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use amfd::harness::{
    export_exercise_region, export_multipliers, render_plot, run_experiment, run_on, with_jobs, ErrorReport,
    ExperimentSpec, FitWindow, ReferenceCache, RunOptions,
};
use amfd::{MethodConfig, StepMode};

#[derive(Parser)]
#[command(
    name = "amfd",
    version,
    about = "American option finite-difference pricer and convergence harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// JSON experiment spec, or the name of a bundled spec (put1d, butterfly1d, minput2d, avgput2d, butterfly2d)
    #[arg(long)]
    spec: String,
    /// override the spec's time step placement
    #[arg(long, value_parser = ["constant", "quadratic"])]
    steps: Option<String>,
    /// worker threads
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// method name, e.g. CN-IT, BE-P, PR, HV-IT, or FAMILY@theta
    #[arg(long)]
    method: String,
    /// target number of mesh intervals per direction
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// time steps (defaults to the spec's steps_per_m times m)
    #[arg(long = "n-steps")]
    n_steps: Option<usize>,
    /// output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method and print the value surface at maturity as CSV
    Price(RunArgs),
    /// Run a convergence study, writing errors.csv, orders.csv and errors.svg
    Converge {
        #[command(flatten)]
        spec: SpecArgs,
        /// output directory
        #[arg(long)]
        out: PathBuf,
        /// restrict to these methods (repeatable)
        #[arg(long)]
        method: Vec<String>,
        /// reference cache directory (defaults to <out>/refs)
        #[arg(long)]
        cache: Option<PathBuf>,
        /// record wall-clock seconds per run
        #[arg(long)]
        timings: bool,
        /// fit orders over all mesh sizes instead of the asymptotic window
        #[arg(long)]
        full_fit: bool,
    },
    /// Export Lagrange multipliers for s <= 3K/2 at every time level
    Multipliers(RunArgs),
    /// Export the early exercise region at maturity
    Region(RunArgs),
    /// Render errors.csv as a log-log SVG plot
    Plot {
        /// CSV written by `converge`
        #[arg(long)]
        csv: PathBuf,
        /// output SVG file
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "temporal error")]
        title: String,
    },
}

fn load_spec(args: &SpecArgs) -> Result<ExperimentSpec> {
    let path = Path::new(&args.spec);
    let mut spec = if path.exists() {
        ExperimentSpec::load(path)?
    } else {
        ExperimentSpec::bundled(&args.spec)
            .with_context(|| format!("`{}` is neither a file nor a bundled spec", args.spec))?
    };
    if let Some(s) = &args.steps {
        spec.steps = s.parse::<StepMode>()?;
    }
    Ok(spec)
}

fn write_out(out: Option<&Path>, body: &[u8]) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, body).with_context(|| format!("writing {}", p.display()))
        }
        None => Ok(std::io::stdout().write_all(body)?),
    }
}

fn price(args: &RunArgs) -> Result<()> {
    let spec = load_spec(&args.spec)?;
    let cfg: MethodConfig = args.method.parse()?;
    let nu = spec.nu_for_m(args.m)?;
    let problem = spec.problem(nu)?;
    let n = args.n_steps.unwrap_or(spec.steps_per_m * problem.m());
    let out = with_jobs(args.spec.jobs, || run_on(&spec, &cfg, &problem, n))??;
    let mut buf = Vec::new();
    let two = problem.grid.dimension() == 2;
    writeln!(buf, "{}", if two { "s1,s2,payoff,value" } else { "s,payoff,value" })?;
    for (l, v) in out.state.u_hat.iter().enumerate() {
        let (s1, s2) = problem.grid.node(l);
        if two {
            writeln!(buf, "{s1},{s2},{},{v}", problem.u0[l])?;
        } else {
            writeln!(buf, "{s1},{},{v}", problem.u0[l])?;
        }
    }
    write_out(args.out.as_deref(), &buf)?;
    eprintln!("{} m={} N={n}", cfg.label(), problem.m());
    Ok(())
}

fn converge(
    args: &SpecArgs,
    out: &Path,
    methods: &[String],
    cache: Option<&Path>,
    timings: bool,
    full_fit: bool,
) -> Result<()> {
    let mut spec = load_spec(args)?;
    if !methods.is_empty() {
        for m in methods {
            m.parse::<MethodConfig>()?;
        }
        spec.methods = methods.to_vec();
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let opts = RunOptions {
        jobs: args.jobs,
        cache: Some(ReferenceCache::new(
            cache.map_or_else(|| out.join("refs"), Path::to_path_buf),
        )),
        timings,
        window: if full_fit {
            FitWindow::Full
        } else {
            FitWindow::Asymptotic
        },
    };
    let report = run_experiment(&spec, &opts)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_out(Some(&out.join("errors.csv")), &csv)?;
    let mut orders = Vec::new();
    report.write_orders_csv(&mut orders)?;
    write_out(Some(&out.join("orders.csv")), &orders)?;
    write_out(Some(&out.join("errors.svg")), render_plot(&report)?.as_bytes())?;
    for f in &report.fits {
        match &f.fit {
            Some(o) => println!(
                "{:<8} order {:.3} (robust {:.3}, m {}..{})",
                f.method, o.order, o.robust, o.m_min, o.m_max
            ),
            None => println!("{:<8} order n/a ({})", f.method, f.note.as_deref().unwrap_or("")),
        }
    }
    let failed = report.rows.iter().filter(|r| r.failure.is_some()).count();
    if failed > 0 {
        bail!("{failed} runs failed; see errors.csv");
    }
    Ok(())
}

fn multipliers(args: &RunArgs) -> Result<()> {
    let spec = load_spec(&args.spec)?;
    let nu = spec.nu_for_m(args.m)?;
    let ex = export_multipliers(&spec, &args.method, nu)?;
    let mut buf = Vec::new();
    ex.write_csv(&mut buf)?;
    write_out(args.out.as_deref(), &buf)?;
    eprintln!("max lambda {} (m = {})", ex.max_lambda, ex.m);
    Ok(())
}

fn region(args: &RunArgs) -> Result<()> {
    let spec = load_spec(&args.spec)?;
    let nu = spec.nu_for_m(args.m)?;
    let ex = export_exercise_region(&spec, &args.method, nu)?;
    let mut buf = Vec::new();
    ex.write_csv(&mut buf)?;
    write_out(args.out.as_deref(), &buf)
}

fn plot(csv: &Path, out: &Path, title: &str) -> Result<()> {
    let text = fs::read_to_string(csv).with_context(|| format!("reading {}", csv.display()))?;
    let report = ErrorReport::from_csv(title, &text, FitWindow::Asymptotic)?;
    write_out(Some(out), render_plot(&report)?.as_bytes())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Price(a) => price(&a),
        Command::Converge {
            spec,
            out,
            method,
            cache,
            timings,
            full_fit,
        } => converge(&spec, &out, &method, cache.as_deref(), timings, full_fit),
        Command::Multipliers(a) => multipliers(&a),
        Command::Region(a) => region(&a),
        Command::Plot { csv, out, title } => plot(&csv, &out, &title),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // misuse of the interface shares clap's exit code
            let usage = matches!(e.downcast_ref::<amfd::Error>(), Some(amfd::Error::UnknownMethod(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
