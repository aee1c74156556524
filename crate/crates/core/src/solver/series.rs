use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use serde::Serialize;

use super::diagnostics::{sample_diagnostics, SampleDiagnostics};
use super::{SolverState, StepPolicy};
use crate::construction::PrincipalFlow;
use crate::error::{Error, Result};
use crate::spectral::{write_snapshot, PeriodicField};

/// Parameters of one integration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub t_end: f64,
    pub step: StepPolicy,
    /// Sample times in `[0, t_end]`, strictly increasing.
    pub samples: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub snapshot_dir: Option<PathBuf>,
    /// Stop when `‖u‖_∞` exceeds this multiple of its initial value.
    pub growth_limit: f64,
    pub wall_budget: Option<Duration>,
    pub n_max: usize,
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    BlowUp { time: f64, reason: String },
    BudgetExhausted { time: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub t: f64,
    /// Last step size before the sample.
    pub dt: f64,
    #[serde(flatten)]
    pub diagnostics: SampleDiagnostics,
}

/// Time series emitted by [`run`].
#[derive(Debug, Clone, Serialize)]
pub struct CascadeSeries {
    /// Centers `N_k` of the diagnostic shells.
    pub shells: Vec<u64>,
    pub samples: Vec<Sample>,
    pub steps: usize,
    pub outcome: RunOutcome,
}

/// JSON summary of a series.
#[derive(Debug, Clone, Serialize)]
struct Summary<'a> {
    shells: &'a [u64],
    activation_times: Vec<f64>,
    peak_amplitudes: Vec<f64>,
    steps: usize,
    final_time: f64,
    outcome: &'a RunOutcome,
}

impl CascadeSeries {
    /// `t_k = argmax_t` of each shell amplitude over the samples; the first
    /// maximizer wins ties.
    pub fn activation_times(&self) -> Vec<f64> {
        (0..self.shells.len())
            .map(|k| {
                self.samples
                    .iter()
                    .fold((f64::NAN, -1.0), |(bt, ba), s| {
                        let a = s.diagnostics.shell_amps[k];
                        if a > ba {
                            (s.t, a)
                        } else {
                            (bt, ba)
                        }
                    })
                    .0
            })
            .collect()
    }

    pub fn peak_amplitudes(&self) -> Vec<f64> {
        (0..self.shells.len())
            .map(|k| {
                self.samples
                    .iter()
                    .map(|s| s.diagnostics.shell_amps[k])
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }
}

/// Geometric grid with `per_decade` points per decade ending at `t_end`,
/// merged with `forced` times inside `(0, t_end]` and with `t = 0`.
pub fn sample_times(t_end: f64, per_decade: usize, forced: &[f64]) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || per_decade == 0 {
        return Err(Error::Config(format!(
            "sampling needs t_end > 0 and at least one sample per decade (t_end = {t_end}, per decade = {per_decade})"
        )));
    }
    let smallest = forced
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= t_end)
        .fold(t_end, f64::min);
    let start = 0.25 * smallest;
    let ratio = 10f64.powf(1.0 / per_decade as f64);
    let count = ((t_end / start).log10() * per_decade as f64).ceil() as i32;
    let mut times = vec![0.0, t_end];
    times.extend(
        (0..=count)
            .map(|i| t_end / ratio.powi(i))
            .filter(|&t| t >= start),
    );
    times.extend(forced.iter().copied().filter(|&t| t > 0.0 && t <= t_end));
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
    Ok(times)
}

/// Step count needed to reach `t_end`, estimating `‖u(t)‖_∞` by
/// `max_k ‖v_k(t)‖_∞` and taking the CFL-limited step throughout.
pub fn estimate_steps(flow: &PrincipalFlow, t_end: f64, policy: &StepPolicy) -> Result<f64> {
    let sups = (0..=flow.kstar())
        .map(|k| flow.shape_sup(k))
        .collect::<Result<Vec<_>>>()?;
    let dx = 2.0 * std::f64::consts::PI / flow.grid() as f64;
    let rate = |t: f64| -> Result<f64> {
        let mut speed = 0.0f64;
        for (k, s) in sups.iter().enumerate() {
            speed = speed.max(flow.time_factor(k, t)?.abs() * s);
        }
        Ok((speed / (policy.cfl * dx)).max(1.0 / policy.max_dt))
    };
    // midpoint rule on a geometric grid from 1e-9·t_end
    let points = 2000;
    let start = 1e-9 * t_end;
    let ratio = (t_end / start).powf(1.0 / points as f64);
    let mut steps = start * rate(0.0)?;
    let mut lo = start;
    for _ in 0..points {
        let hi = lo * ratio;
        steps += (hi - lo) * rate((lo * hi).sqrt())?;
        lo = hi;
    }
    Ok(steps)
}

fn snapshot_name(dir: &Path, t: f64) -> PathBuf {
    dir.join(format!("u_t{t:.6e}.nscf"))
}

/// Integrates from `u0` at `t = 0`, recording diagnostics at every sample.
///
/// Blow-up and an exhausted wall budget end the run early; the samples taken
/// so far are returned together with the final state.
pub fn run(
    u0: &PeriodicField,
    flow: Option<&PrincipalFlow>,
    shells: &[u64],
    cfg: &RunConfig,
) -> Result<(CascadeSeries, SolverState)> {
    if cfg.samples.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "sample times must be strictly increasing".into(),
        ));
    }
    if let Some(dir) = &cfg.snapshot_dir {
        if !cfg.snapshot_times.is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let started = Instant::now();
    let mut state = SolverState::new(u0, 0.0)?;
    let mut samples = Vec::with_capacity(cfg.samples.len());
    let mut steps = 0usize;
    let mut last_dt = 0.0;
    let mut initial_speed = None;
    let mut outcome = RunOutcome::Completed;
    let mut snapshots: Vec<f64> = cfg.snapshot_times.clone();
    snapshots.sort_by(f64::total_cmp);
    let mut next_snapshot = 0;

    'samples: for &target in cfg.samples.iter().filter(|&&t| t <= cfg.t_end) {
        while state.t < target {
            if let Some(budget) = cfg.wall_budget {
                if started.elapsed() > budget {
                    warn!("wall budget exhausted at t = {:.6e}", state.t);
                    outcome = RunOutcome::BudgetExhausted { time: state.t };
                    break 'samples;
                }
            }
            let remaining = target - state.t;
            let dt = cfg.step.max_dt.min(remaining);
            let before = state.clone();
            match state.step(dt, &cfg.step) {
                Ok(report) => {
                    let base = *initial_speed.get_or_insert(report.speed);
                    if base > 0.0 && report.speed > cfg.growth_limit * base {
                        state = before;
                        outcome = RunOutcome::BlowUp {
                            time: state.t,
                            reason: format!(
                                "‖u‖_∞ = {:.3e} exceeds {:.1e} times its initial value",
                                report.speed, cfg.growth_limit
                            ),
                        };
                        break 'samples;
                    }
                    if report.dt == remaining {
                        state.t = target;
                    }
                    last_dt = report.dt;
                    steps += 1;
                }
                Err(Error::BlowUp { time, reason }) => {
                    state = before;
                    outcome = RunOutcome::BlowUp { time, reason };
                    break 'samples;
                }
                Err(e) => return Err(e),
            }
        }
        let diagnostics = sample_diagnostics(&state.u, state.t, shells, flow, cfg.n_max)?;
        info!(
            "t = {:.6e}: shells {:?}, {} steps",
            state.t, diagnostics.shell_amps, steps
        );
        samples.push(Sample {
            t: state.t,
            dt: last_dt,
            diagnostics,
        });
        while next_snapshot < snapshots.len() && snapshots[next_snapshot] <= state.t * (1.0 + 1e-12)
        {
            if let Some(dir) = &cfg.snapshot_dir {
                write_snapshot(&snapshot_name(dir, state.t), &state.u, state.t)?;
            }
            next_snapshot += 1;
        }
    }
    Ok((
        CascadeSeries {
            shells: shells.to_vec(),
            samples,
            steps,
            outcome,
        },
        state,
    ))
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// Long-format CSV: one row per sample and shell.
pub fn write_series_csv(path: &Path, series: &CascadeSeries) -> Result<()> {
    let n_err = series
        .samples
        .first()
        .and_then(|s| s.diagnostics.error.as_ref())
        .map_or(0, |e| e.error_norms.len());
    let mut out =
        String::from("t,k,shell_center,shell_amp,energy,enstrophy,besov_inf_inf,besov_inf_1");
    for n in 0..n_err {
        let _ = write!(out, ",error_d{n}");
    }
    for n in 0..n_err {
        let _ = write!(out, ",perturbation_d{n}");
    }
    if n_err > 0 {
        out.push_str(",perturbation_ratio");
    }
    out.push('\n');
    for s in &series.samples {
        let d = &s.diagnostics;
        for (k, &center) in series.shells.iter().enumerate() {
            let _ = write!(
                out,
                "{},{k},{center},{},{},{},{},{}",
                num(s.t),
                num(d.shell_amps[k]),
                num(d.energy),
                num(d.enstrophy),
                num(d.besov_inf_inf),
                num(d.besov_inf_1)
            );
            if let Some(e) = &d.error {
                for v in e.error_norms.iter().chain(&e.perturbation) {
                    let _ = write!(out, ",{}", num(*v));
                }
                let _ = write!(out, ",{}", num(e.perturbation_ratio));
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// JSON summary: activation times, peak amplitudes and the outcome.
pub fn write_series_json(path: &Path, series: &CascadeSeries) -> Result<()> {
    let summary = Summary {
        shells: &series.shells,
        activation_times: series.activation_times(),
        peak_amplitudes: series.peak_amplitudes(),
        steps: series.steps,
        final_time: series.final_time(),
        outcome: &series.outcome,
    };
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
