mod output;
mod run;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;
use staticlab::kobayashi::{
    build_catalog, drift_check, find_periodic_warp, integrals_from_acceleration, KobayashiParams, PeriodicOutcome,
};
use staticlab::levelset::slice_report;
use staticlab::tolerances::{FIRST_INTEGRAL_DRIFT, ODE_TOL, PERIODIC_CLOSURE};

use output::{ensure_dir, read_jsonl, summarize, write_csv, write_jsonl, CheckReport, CHECKS_FILE};
use run::{resolve_model, RunConfig, Suite};

#[derive(Parser)]
#[command(name = "staticlab", version, about = "Numerical checks for static metrics and their integral identities")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run check suites on models and write checks.jsonl plus summary.json.
    Verify(VerifyArgs),
    /// Integrate the warp equation and check its first integrals.
    Ode(OdeArgs),
    /// Tabulate the built-in catalog of vacuum static models.
    Catalog(CatalogArgs),
    /// Aggregate the *.jsonl files of a directory into summary.json.
    Report(ReportArgs),
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Run configuration (TOML); command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registry name or model file; repeatable.
    #[arg(long = "model")]
    models: Vec<String>,
    /// Suite to run; repeatable (default: all).
    #[arg(long = "suite", value_enum)]
    suites: Vec<Suite>,
    /// Power p for the integral identities; repeatable.
    #[arg(long = "p")]
    p: Vec<u32>,
    /// Levels of the integration region, as `c1,c2`.
    #[arg(long, value_parser = parse_levels)]
    levels: Option<[f64; 2]>,
    /// Sample counts, as `s,fiber`.
    #[arg(long, value_parser = parse_samples)]
    samples: Option<run::Samples>,
    /// Tolerance override `check=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    tols: Vec<(String, f64)>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print failures and the summary only.
    #[arg(long)]
    quiet: bool,
}

#[derive(clap::Args)]
struct OdeArgs {
    #[arg(long)]
    n: usize,
    /// Scalar curvature.
    #[arg(long = "R", allow_hyphen_values = true)]
    scalar: f64,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    /// Fiber constant (`Ric_E = (n-2) k g_E`), used by --shoot-periodic.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    k: f64,
    #[arg(long, required_unless_present = "shoot_periodic")]
    r0: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    dr0: f64,
    #[arg(long, required_unless_present = "shoot_periodic")]
    span: Option<f64>,
    /// Find the closed orbit with first integrals (a, k) and integrate it.
    #[arg(long)]
    shoot_periodic: bool,
    /// Periods to integrate with --shoot-periodic.
    #[arg(long, default_value_t = 10.5)]
    periods: f64,
    #[arg(long, default_value_t = 1001)]
    samples: usize,
    /// Integrator tolerance for the periodic shooting.
    #[arg(long, default_value_t = ODE_TOL)]
    tol: f64,
    #[arg(long, default_value = "staticlab-out")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct CatalogArgs {
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long)]
    out: PathBuf,
}

fn parse_levels(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [c1, c2] => Ok([c1, c2]),
        _ => Err("expected two levels `c1,c2`".into()),
    }
}

fn parse_samples(s: &str) -> Result<run::Samples, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [s] => Ok(run::Samples { s, ..Default::default() }),
        [s, fiber] => Ok(run::Samples { s, fiber }),
        _ => Err("expected `s` or `s,fiber`".into()),
    }
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected `check=value`")?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{v:?}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// Errors that are the caller's fault; reported through clap with exit code 2.
struct Usage(anyhow::Error);

fn usage(e: impl Into<anyhow::Error>) -> Usage {
    Usage(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.cmd {
        Cmd::Verify(a) => verify(a),
        Cmd::Ode(a) => ode(a),
        Cmd::Catalog(a) => catalog(a),
        Cmd::Report(a) => report(a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(Failure::Usage(Usage(e))) => {
            Cli::command()
                .error(clap::error::ErrorKind::InvalidValue, format!("{e:#}"))
                .exit()
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

enum Failure {
    Usage(Usage),
    Runtime(anyhow::Error),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// `STATICLAB_THREADS` sizes the worker pool.
fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("STATICLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(usage(anyhow::anyhow!("STATICLAB_THREADS must be a positive integer, got {v:?}")).into()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn merged_config(a: &VerifyArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if !a.models.is_empty() {
        cfg.models = a.models.clone();
    }
    if !a.suites.is_empty() {
        cfg.suites = a.suites.clone();
    }
    if !a.p.is_empty() {
        cfg.p = a.p.clone();
    }
    if let Some(l) = a.levels {
        cfg.levels = l;
    }
    if let Some(s) = a.samples {
        cfg.samples = s;
    }
    for (k, v) in &a.tols {
        cfg.tolerances.insert(k.clone(), *v);
    }
    if let Some(o) = &a.out {
        cfg.output = o.clone();
    }
    cfg.validate()
}

fn verify(a: VerifyArgs) -> Result<bool, Failure> {
    let cfg = merged_config(&a).map_err(usage)?;
    let specs: Vec<_> = cfg.models.iter().map(|m| resolve_model(m)).collect::<Result<_>>().map_err(usage)?;
    ensure_dir(&cfg.output)?;
    let stdout = Mutex::new(());
    let quiet = a.quiet;
    let per_model: Vec<Result<Vec<CheckReport>>> = specs
        .par_iter()
        .map(|spec| {
            let model = match spec.build() {
                Ok(m) => m,
                Err(e) => return Ok(vec![CheckReport::failed(&spec.name, "build", "build", e)]),
            };
            let mut reports = Vec::new();
            for &suite in &cfg.suites {
                let rs = suites::run_suite(&cfg, spec, &model, suite, &cfg.output)?;
                let _guard = stdout.lock().unwrap();
                for r in &rs {
                    if !quiet || !r.passed {
                        println!("{}", r.line());
                    }
                }
                reports.extend(rs);
            }
            Ok(reports)
        })
        .collect();
    let mut reports = Vec::new();
    for r in per_model {
        reports.extend(r?);
    }
    let checks = cfg.output.join(CHECKS_FILE);
    write_jsonl(&checks, &reports)?;
    let summary = summarize(vec![checks], &reports);
    write_summary(&cfg.output, &summary)?;
    println!(
        "{} checks, {} failed, {} skipped; results in {}",
        summary.checks,
        summary.failed,
        reports.iter().filter(|r| r.skipped.is_some()).count(),
        cfg.output.display()
    );
    Ok(summary.failed == 0)
}

fn write_summary(dir: &Path, summary: &output::Summary) -> Result<()> {
    let path = dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(summary)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn ode(a: OdeArgs) -> Result<bool, Failure> {
    let params = KobayashiParams::new(a.n, a.scalar, a.a).map_err(usage)?;
    let mut summary = json!({ "n": a.n, "R": a.scalar, "a": a.a });
    let mut ok = true;
    let (r0, dr0, span) = if a.shoot_periodic {
        match find_periodic_warp(a.n, a.scalar, a.a, a.k, a.tol).context("shooting for a closed orbit")? {
            PeriodicOutcome::Periodic(w) => {
                ok &= w.closure <= PERIODIC_CLOSURE;
                summary["k"] = json!(w.k);
                summary["period"] = json!(w.period);
                summary["r_min"] = json!(w.r_min);
                summary["r_max"] = json!(w.r_max);
                summary["closure"] = json!(w.closure);
                (w.r_min, 0.0, a.periods * w.period)
            }
            PeriodicOutcome::Constant { r } => {
                println!("{}", json!({ "outcome": "constant", "r": r }));
                return Ok(true);
            }
            PeriodicOutcome::NoOrbit(why) => {
                println!("{}", json!({ "outcome": "no-orbit", "reason": why }));
                return Ok(false);
            }
        }
    } else {
        (a.r0.unwrap(), a.dr0, a.span.unwrap())
    };
    let (traj, drift) = drift_check(params, r0, dr0, span, a.samples.max(2)).context("integrating")?;
    ok &= drift.relative() <= FIRST_INTEGRAL_DRIFT;
    let rows: Vec<Vec<f64>> = traj
        .samples(a.samples)
        .into_iter()
        .map(|(s, u)| {
            let fi = integrals_from_acceleration(a.n, a.scalar, u[0], u[1], params.warp_acceleration(u[0]));
            vec![s, u[0], u[1], u[2], u[3], fi.a, fi.k]
        })
        .collect();
    ensure_dir(&a.out)?;
    let csv = a.out.join("ode.csv");
    write_csv(&csv, &["s", "r", "dr", "f", "df", "a", "k"], &rows)?;
    summary["span"] = json!(span);
    summary["drift"] = serde_json::to_value(&drift).map_err(anyhow::Error::from)?;
    summary["relative_drift"] = json!(drift.relative());
    summary["csv"] = json!(csv);
    summary["passed"] = json!(ok);
    println!("{}", serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?);
    Ok(ok)
}

fn catalog(a: CatalogArgs) -> Result<bool, Failure> {
    let built = build_catalog().context("building the catalog")?;
    let rows: Vec<_> = built
        .par_iter()
        .map(|(entry, m)| -> Result<serde_json::Value> {
            let mut scalar_err = 0.0f64;
            let mut residual = 0.0f64;
            let mut d_max = 0.0f64;
            let mut b_max = 0.0f64;
            for x in m.sample_points(6, 2) {
                let p = m.at(&x, 4)?;
                scalar_err = scalar_err.max((p.curv.scalar() - entry.expected.scalar).abs());
                residual = residual.max(m.kind_residual(&p).max_abs());
                d_max = d_max.max(p.d_tensor()?.max_abs());
                b_max = b_max.max(p.curv.bach()?.max_abs());
            }
            let slice = match m.warped_product() {
                Some(w) => w
                    .s
                    .samples(6)
                    .into_iter()
                    .find(|&s| m.f_profile.as_ref().is_some_and(|f| f.taylor(s, 1)[1].abs() >= 1e-2))
                    .and_then(|s| slice_report(m, s, 2).ok())
                    .and_then(|r| r.slice_constant()),
                None => None,
            };
            Ok(json!({
                "name": entry.name,
                "n": entry.n,
                "tags": entry.tags.iter().map(|t| t.label()).collect::<Vec<_>>(),
                "expected_scalar": entry.expected.scalar,
                "scalar_error": scalar_err,
                "residual": residual,
                "max_d": d_max,
                "max_bach": b_max,
                "slice_constant": slice,
            }))
        })
        .collect::<Result<_>>()?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rows).map_err(anyhow::Error::from)?);
        return Ok(true);
    }
    println!(
        "{:<14} {:>2} {:>8} {:>10} {:>10} {:>10} {:>10} {:>9}  tags",
        "name", "n", "R", "residual", "max|D|", "max|B|", "R error", "slice k"
    );
    for r in &rows {
        let slice = r["slice_constant"].as_f64().map(|k| format!("{k:9.5}")).unwrap_or_else(|| format!("{:>9}", "-"));
        let tags: Vec<&str> = r["tags"].as_array().unwrap().iter().filter_map(|t| t.as_str()).collect();
        println!(
            "{:<14} {:>2} {:>8.4} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {slice}  {}",
            r["name"].as_str().unwrap(),
            r["n"],
            r["expected_scalar"].as_f64().unwrap(),
            r["residual"].as_f64().unwrap(),
            r["max_d"].as_f64().unwrap(),
            r["max_bach"].as_f64().unwrap(),
            r["scalar_error"].as_f64().unwrap(),
            tags.join(",")
        );
    }
    Ok(true)
}

fn report(a: ReportArgs) -> Result<bool, Failure> {
    if !a.out.is_dir() {
        return Err(usage(anyhow::anyhow!("{} is not a directory", a.out.display())).into());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(&a.out)
        .with_context(|| format!("listing {}", a.out.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut reports = Vec::new();
    for f in &files {
        reports.extend(read_jsonl(f)?);
    }
    let summary = summarize(files, &reports);
    write_summary(&a.out, &summary)?;
    println!("{:<20} {:<10} {:>6} {:>6} {:>7}", "model", "suite", "passed", "failed", "skipped");
    for t in &summary.tallies {
        println!("{:<20} {:<10} {:>6} {:>6} {:>7}", t.model, t.suite, t.passed, t.failed, t.skipped);
    }
    println!("{} checks in {} files, {} failed", summary.checks, summary.files.len(), summary.failed);
    Ok(summary.failed == 0)
}
