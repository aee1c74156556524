//! Pseudospectral integrator for `∂_t u − Δu + ℙ div(u⊗u) = 0` on `𝕋³`.
//!
//! Time stepping is Kutta's third-order Runge–Kutta scheme written for the
//! integrating-factor variable `e^{−tΔ}u`, so the viscous decay is exact and
//! every propagator has a non-negative time argument. The band of
//! [`PeriodicField`] is the 2/3-rule dealiased set, which keeps the quadratic
//! product exact.

mod diagnostics;
mod series;

pub use diagnostics::{
    error_and_perturbation, sample_diagnostics, shell_amplitude, ErrorReport, SampleDiagnostics,
    SERIES_OVERSAMPLE,
};
pub use series::{
    estimate_steps, run, sample_times, write_series_csv, write_series_json, CascadeSeries,
    RunConfig, RunOutcome, Sample,
};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{
    heat_propagate, leray_project, outer_square_stats, tensor_divergence, PeriodicField,
};

/// Step-size policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    /// Advective CFL number: `dt ≤ cfl·Δx/‖u‖_∞` with `Δx = 2π/n`.
    pub cfl: f64,
    pub max_dt: f64,
    /// Drop the advection term; the step then reduces to the heat propagator.
    pub nonlinear: bool,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            max_dt: 1e-3,
            nonlinear: true,
        }
    }
}

/// What a step did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Grid sup of `|u|` at the start of the step.
    pub speed: f64,
}

/// Velocity at time `t`.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub u: PeriodicField,
}

/// `−ℙ div(u⊗u)` and the grid sup of `|u|`.
fn advection(u: &PeriodicField, nonlinear: bool) -> Result<(PeriodicField, f64)> {
    let (tensor, stats) = outer_square_stats(u)?;
    if !nonlinear {
        return Ok((PeriodicField::zeros(u.n(), 3)?, stats.max_speed));
    }
    let mut out = leray_project(&tensor_divergence(&tensor)?)?;
    out.scale(-1.0);
    Ok((out, stats.max_speed))
}

impl SolverState {
    /// Starts from `u`, projected onto divergence-free fields.
    pub fn new(u: &PeriodicField, t: f64) -> Result<Self> {
        if u.ncomp() != 3 {
            return Err(Error::Precondition(format!(
                "the solver evolves vector fields, got {} components",
                u.ncomp()
            )));
        }
        if !u.is_finite() {
            return Err(Error::BlowUp {
                time: t,
                reason: "initial data has non-finite coefficients".into(),
            });
        }
        Ok(Self {
            t,
            u: leray_project(u)?,
        })
    }

    /// Grid spacing `2π/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.u.n() as f64
    }

    /// Advances by at most `dt`, halving it until the CFL bound holds.
    pub fn step(&mut self, dt: f64, policy: &StepPolicy) -> Result<StepReport> {
        if !(dt > 0.0) {
            return Err(Error::Range(format!(
                "time step dt = {dt} must be positive"
            )));
        }
        let (k1, speed) = advection(&self.u, policy.nonlinear)?;
        let mut dt = dt;
        if speed > 0.0 {
            let limit = policy.cfl * self.spacing() / speed;
            while dt > limit {
                dt *= 0.5;
            }
        }
        let half = 0.5 * dt;

        // stage 2 at t + dt/2
        let mut y = self.u.clone();
        y.axpy(half, &k1);
        let y = heat_propagate(&y, half)?;
        let (k2, _) = advection(&y, policy.nonlinear)?;

        // stage 3 at t + dt: e^{dtΔ}(u − dt k1) + 2dt e^{(dt/2)Δ} k2
        let mut y = self.u.clone();
        y.axpy(-dt, &k1);
        let mut y = heat_propagate(&y, dt)?;
        y.axpy(2.0 * dt, &heat_propagate(&k2, half)?);
        let (k3, _) = advection(&y, policy.nonlinear)?;
        drop(y);

        // e^{dtΔ}(u + dt k1/6) + (2dt/3) e^{(dt/2)Δ} k2 + (dt/6) k3
        let mut acc = self.u.clone();
        acc.axpy(dt / 6.0, &k1);
        let mut next = heat_propagate(&acc, dt)?;
        next.axpy(4.0 * dt / 6.0, &heat_propagate(&k2, half)?);
        next.axpy(dt / 6.0, &k3);
        let next = leray_project(&next)?;
        if !next.is_finite() {
            return Err(Error::BlowUp {
                time: self.t + dt,
                reason: "non-finite coefficients".into(),
            });
        }
        self.u = next;
        self.t += dt;
        Ok(StepReport { dt, speed })
    }

    /// Integrates to exactly `t_end` with steps of at most `policy.max_dt`.
    pub fn advance_to(&mut self, t_end: f64, policy: &StepPolicy) -> Result<usize> {
        let mut steps = 0;
        while self.t < t_end {
            let remaining = t_end - self.t;
            let dt = policy.max_dt.min(remaining);
            let taken = self.step(dt, policy)?.dt;
            if taken == remaining {
                self.t = t_end;
            }
            steps += 1;
        }
        Ok(steps)
    }
}
