//! Command-line front end: `verify`, `build`, `run` and `report`.
//!
//! Every command reads one [`ExperimentConfig`] (the shipped reference when
//! `--config` is absent) and writes its artifacts under the output directory.
//! Exit codes: 0 success, 2 configuration error, 3 failed hard assertion,
//! 4 runtime or numerical error.

pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::construction::{
    b_limit, build_coefficients, choose_kstar, ForceSample, PrincipalFlow, ScaleTable, StageReport,
    U0Report,
};
use crate::error::{Error, Result};
use crate::geometry::{mikado_family, nash_directions};
use crate::solver::{run, write_series_csv, write_series_json, CascadeSeries, RunOutcome};
use crate::spectral::write_snapshot;
use verify::{run_suites, VerifyOptions, VerifyReport};

#[derive(Debug, Parser)]
#[command(
    name = "nse-cascade",
    version,
    about = "Inverse-cascade initial data for 3D Navier-Stokes on the torus"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Experiment file; the shipped reference configuration when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for the FFT pool.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Comma-separated snapshot times, overriding the configuration.
    #[arg(long, global = true, value_delimiter = ',')]
    pub snapshot_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the identity suite and write verify.json.
    Verify,
    /// Build the construction and write scale, coefficient, data and force reports.
    Build,
    /// Build the construction and integrate it, writing the cascade series.
    Run,
    /// Re-render the JSON artifacts of an output directory as CSV summaries.
    Report,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            warn!("thread pool already initialised; --threads {n} ignored");
        }
    }
    let config = load_config(&cli.common)?;
    let out = config.output_dir();
    match cli.command {
        Command::Verify => cmd_verify(&config, &out).map(|_| ()),
        Command::Build => cmd_build(&config, &out),
        Command::Run => cmd_run(&config, &out).map(|_| ()),
        Command::Report => cmd_report(&out).map(|_| ()),
    }
}

/// Reads the configuration and applies command-line overrides.
pub fn load_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::reference(),
    };
    if let Some(dir) = &args.output {
        config.output = Some(dir.clone());
    }
    if let Some(times) = &args.snapshot_times {
        config.snapshot_times = times.clone();
    }
    config.validate()?;
    Ok(config)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs the identity suite and writes `verify.json`; fails with an assertion
/// error naming every failing suite.
pub fn cmd_verify(config: &ExperimentConfig, out: &Path) -> Result<VerifyReport> {
    verify_with(&VerifyOptions::new(config.clone()), out)
}

pub fn verify_with(opts: &VerifyOptions, out: &Path) -> Result<VerifyReport> {
    ensure_dir(out)?;
    let report = run_suites(opts)?;
    for s in &report.suites {
        println!(
            "{} {} ({:.2} s)",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.seconds
        );
    }
    write_json(&out.join("verify.json"), &report)?;
    if report.passed {
        Ok(report)
    } else {
        Err(Error::Assertion(format!(
            "failing suites: {}",
            report.failing().join(", ")
        )))
    }
}

#[derive(Debug, Serialize)]
struct ScalesDocument<'a> {
    k_star: usize,
    scales: &'a ScaleTable,
    c_relation_defect: f64,
}

#[derive(Debug, Serialize)]
struct CoefficientDocument<'a> {
    b_limit: f64,
    sup_dpsi: &'a [f64],
    stages: &'a [StageReport],
    dpsi_window_warnings: &'a [String],
}

#[derive(Debug, Serialize)]
struct ForceEntry {
    #[serde(flatten)]
    sample: ForceSample,
    bound_profile: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ForceDocument {
    alpha: f64,
    beta: f64,
    samples: Vec<ForceEntry>,
}

/// Scales and coefficients, with their JSON reports written to `out`.
///
/// When `k_star = "auto"` asks for more scales than the grid holds, the
/// requested count and the error are recorded in `scales.json` before failing.
pub fn construct(config: &ExperimentConfig, out: &Path) -> Result<PrincipalFlow> {
    ensure_dir(out)?;
    let scales = match config.build_scales() {
        Ok(s) => s,
        Err(e @ Error::Resolution(_)) => {
            let k_star = choose_kstar(config.target().ratio()).ok();
            let doc = serde_json::json!({ "k_star": k_star, "error": e.to_string() });
            write_json(&out.join("scales.json"), &doc)?;
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    write_json(
        &out.join("scales.json"),
        &ScalesDocument {
            k_star: scales.kstar,
            scales: &scales,
            c_relation_defect: scales.c_relation_defect(),
        },
    )?;
    info!("scales N = {:?}, M = {:?}", scales.n, scales.m);
    let family = mikado_family(config.epsilon0)?;
    let table = build_coefficients(&scales, &family, &nash_directions())?;
    write_json(
        &out.join("coefficients.json"),
        &CoefficientDocument {
            b_limit: b_limit(),
            sup_dpsi: &table.sup_dpsi,
            stages: &table.stages,
            dpsi_window_warnings: &table.dpsi_window_warnings,
        },
    )?;
    PrincipalFlow::new(table)
}

fn write_u0_report(flow: &PrincipalFlow, out: &Path) -> Result<U0Report> {
    let report = flow.initial_data_report()?;
    write_json(&out.join("u0_report.json"), &report)?;
    Ok(report)
}

/// Times at which `build` samples the force residual: five log-spaced points
/// from `N_{k_*}⁻²` to `N_0⁻²`.
pub fn force_times(scales: &ScaleTable) -> Vec<f64> {
    let lo = 1.0 / (scales.n[scales.kstar] as f64).powi(2);
    let hi = 1.0 / (scales.n[0] as f64).powi(2);
    (0..5)
        .map(|i| lo * (hi / lo).powf(i as f64 / 4.0))
        .collect()
}

pub fn cmd_build(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let flow = construct(config, out)?;
    let report = write_u0_report(&flow, out)?;
    println!(
        "u0: B^-1_(inf,1) = {:.6e}, peak shell {} amplitude {:.6e}, leakage {:.3e}",
        report.besov_inf_1, report.peak_shell, report.peak_amplitude, report.leakage
    );
    let scales = &flow.table().expect("constructed flow has a table").scales;
    let (alpha, beta) = config.exponents();
    let mut samples = Vec::new();
    for t in force_times(scales) {
        let (g, sample) = flow.force_residual(t)?;
        println!("force t = {t:.4e}: |g|/|P div(v⊗v)| = {:.4e}", sample.ratio);
        if config.field_snapshots {
            write_snapshot(&out.join(format!("force_t{t:.6e}.nscf")), &g, t)?;
        }
        samples.push(ForceEntry {
            bound_profile: flow.force_bound_profile(alpha, beta, t),
            sample,
        });
    }
    write_json(
        &out.join("force.json"),
        &ForceDocument {
            alpha,
            beta,
            samples,
        },
    )?;
    if config.field_snapshots {
        write_snapshot(&out.join("u0.nscf"), &flow.initial_data()?, 0.0)?;
        let table = flow.table().expect("constructed flow has a table");
        for (k, psi) in table.psi0.iter().enumerate() {
            write_snapshot(&out.join(format!("psi_{k}.nscf")), psi, 0.0)?;
        }
        for k in 1..=scales.kstar {
            for j in 0..6 {
                let a = table.coefficient_field(k, j)?;
                write_snapshot(&out.join(format!("a_{}_{k}.nscf", j + 1)), &a, 0.0)?;
            }
        }
    }
    Ok(())
}

/// Builds the construction, integrates to `K·N_0⁻²` and writes `series.csv`
/// and `series.json`. A blow-up is written out and then reported as an error.
pub fn cmd_run(config: &ExperimentConfig, out: &Path) -> Result<CascadeSeries> {
    let flow = construct(config, out)?;
    write_u0_report(&flow, out)?;
    let scales = flow
        .table()
        .expect("constructed flow has a table")
        .scales
        .clone();
    let snapshot_dir = (!config.snapshot_times.is_empty()).then(|| out.join("snapshots"));
    let run_cfg = config.run_config(&scales, snapshot_dir)?;
    let (series, _) = run(&flow.initial_data()?, Some(&flow), &scales.n, &run_cfg)?;
    write_series_csv(&out.join("series.csv"), &series)?;
    write_series_json(&out.join("series.json"), &series)?;
    println!(
        "run: {} steps to t = {:.6e}, activation times {:?}",
        series.steps,
        series.final_time(),
        series.activation_times()
    );
    match &series.outcome {
        RunOutcome::BlowUp { time, reason } => Err(Error::BlowUp {
            time: *time,
            reason: reason.clone(),
        }),
        RunOutcome::BudgetExhausted { time } => {
            warn!("wall budget exhausted at t = {time:.6e}");
            Ok(series)
        }
        RunOutcome::Completed => Ok(series),
    }
}

fn read_json(path: &Path) -> Result<Option<Value>> {
    match std::fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.replace(',', ";"),
        other => other.to_string(),
    }
}

fn rows_to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut text = header.join(",");
    text.push('\n');
    for r in rows {
        text.push_str(&r.join(","));
        text.push('\n');
    }
    text
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn field<'a>(doc: &'a Value, key: &str, path: &Path) -> Result<&'a Value> {
    doc.get(key)
        .ok_or_else(|| Error::Format(format!("{}: missing key `{key}`", path.display())))
}

fn array<'a>(doc: &'a Value, key: &str, path: &Path) -> Result<&'a Vec<Value>> {
    field(doc, key, path)?
        .as_array()
        .ok_or_else(|| Error::Format(format!("{}: `{key}` is not an array", path.display())))
}

/// Writes `summary_*.csv` for every JSON artifact present in `dir` and returns
/// the files written.
pub fn cmd_report(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();

    let path = dir.join("series.json");
    if let Some(doc) = read_json(&path)? {
        let shells = array(&doc, "shells", &path)?;
        let act = array(&doc, "activation_times", &path)?;
        let peaks = array(&doc, "peak_amplitudes", &path)?;
        let rows: Vec<Vec<String>> = (0..shells.len())
            .map(|k| {
                vec![
                    k.to_string(),
                    cell(&shells[k]),
                    act.get(k).map_or(String::new(), cell),
                    peaks.get(k).map_or(String::new(), cell),
                ]
            })
            .collect();
        let target = dir.join("summary_cascade.csv");
        write_text(
            &target,
            &rows_to_csv(
                &["k", "shell_center", "activation_time", "peak_amplitude"],
                &rows,
            ),
        )?;
        written.push(target);
    }

    let path = dir.join("u0_report.json");
    if let Some(doc) = read_json(&path)? {
        let rows: Vec<Vec<String>> = array(&doc, "shells", &path)?
            .iter()
            .map(|pair| match pair.as_array().map(Vec::as_slice) {
                Some([n, a]) => Ok(vec![cell(n), cell(a)]),
                _ => Err(Error::Format(format!(
                    "{}: malformed shell entry",
                    path.display()
                ))),
            })
            .collect::<Result<_>>()?;
        let target = dir.join("summary_u0_shells.csv");
        write_text(&target, &rows_to_csv(&["shell", "amplitude"], &rows))?;
        written.push(target);
    }

    let path = dir.join("coefficients.json");
    if let Some(doc) = read_json(&path)? {
        let keys = [
            "k",
            "sup_dpsi_prev",
            "b_leading",
            "p",
            "recursion_residual",
            "nash_argument_radius",
        ];
        let rows: Vec<Vec<String>> = array(&doc, "stages", &path)?
            .iter()
            .map(|s| {
                keys.iter()
                    .map(|k| s.get(*k).map_or(String::new(), cell))
                    .collect()
            })
            .collect();
        let target = dir.join("summary_coefficients.csv");
        write_text(&target, &rows_to_csv(&keys, &rows))?;
        written.push(target);
    }

    let path = dir.join("force.json");
    if let Some(doc) = read_json(&path)? {
        let keys = [
            "t",
            "residual_sup",
            "advection_sup",
            "ratio",
            "truncated_fraction",
            "bound_profile",
        ];
        let rows: Vec<Vec<String>> = array(&doc, "samples", &path)?
            .iter()
            .map(|s| {
                keys.iter()
                    .map(|k| s.get(*k).map_or(String::new(), cell))
                    .collect()
            })
            .collect();
        let target = dir.join("summary_force.csv");
        write_text(&target, &rows_to_csv(&keys, &rows))?;
        written.push(target);
    }

    let path = dir.join("verify.json");
    if let Some(doc) = read_json(&path)? {
        let mut rows = Vec::new();
        for suite in array(&doc, "suites", &path)? {
            let name = cell(field(suite, "name", &path)?);
            for c in suite
                .get("checks")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
            {
                rows.push(vec![
                    name.clone(),
                    c.get("name").map_or(String::new(), cell),
                    c.get("value").map_or(String::new(), cell),
                    c.get("tolerance").map_or(String::new(), cell),
                    c.get("passed").map_or(String::new(), cell),
                ]);
            }
        }
        let target = dir.join("summary_verify.csv");
        write_text(
            &target,
            &rows_to_csv(&["suite", "check", "value", "tolerance", "passed"], &rows),
        )?;
        written.push(target);
    }

    if written.is_empty() {
        return Err(Error::Format(format!(
            "{} holds no JSON artifacts to report on",
            dir.display()
        )));
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(written)
}
