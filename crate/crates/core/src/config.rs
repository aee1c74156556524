//! Flat TOML experiment configuration, schema version 1.
//!
//! | key                   | type              | default     |
//! |-----------------------|-------------------|-------------|
//! | `format_version`      | integer, `1`      | required    |
//! | `theta_star`          | 3 reals           | required    |
//! | `eta_star`            | 3 integers        | required    |
//! | `epsilon_star`        | real              | `0.1`       |
//! | `n_max`               | integer           | `2`         |
//! | `b`, `gamma`, `A`     | reals             | required    |
//! | `k_star`              | integer or `"auto"` | required  |
//! | `epsilon0`            | real              | required    |
//! | `grid`                | even integer      | required    |
//! | `horizon_factor`      | real `K`, `T_end = K N_0⁻²` | `8` |
//! | `cfl`, `max_dt`       | reals             | `0.5`, `1e-3` |
//! | `growth_limit`        | real              | `1e6`       |
//! | `samples_per_decade`  | integer           | `16`        |
//! | `snapshot_times`      | list of reals     | `[]`        |
//! | `alpha`, `beta`       | reals             | `min((b−1)/16, (γb−1)/4)` |
//! | `output`              | path              | `nse-output` |
//! | `wall_budget_seconds` | real              | unlimited   |
//! | `field_snapshots`     | bool              | `false`     |

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::construction::{build_scales, KStar, ScaleParams, ScaleTable, TargetSpec};
use crate::error::{Error, Result};
use crate::solver::{sample_times, RunConfig, StepPolicy};

pub const FORMAT_VERSION: u32 = 1;

/// Shipped reference experiment.
pub const REFERENCE_TOML: &str = include_str!("../configs/reference.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KStarSetting {
    Fixed(usize),
    Named(String),
}

fn default_epsilon_star() -> f64 {
    0.1
}
fn default_n_max() -> usize {
    2
}
fn default_horizon() -> f64 {
    8.0
}
fn default_cfl() -> f64 {
    0.5
}
fn default_max_dt() -> f64 {
    1e-3
}
fn default_growth() -> f64 {
    1e6
}
fn default_per_decade() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub theta_star: [f64; 3],
    pub eta_star: [i64; 3],
    #[serde(default = "default_epsilon_star")]
    pub epsilon_star: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    pub b: f64,
    pub gamma: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub k_star: KStarSetting,
    pub epsilon0: f64,
    pub grid: usize,
    #[serde(default = "default_horizon")]
    pub horizon_factor: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_max_dt")]
    pub max_dt: f64,
    #[serde(default = "default_growth")]
    pub growth_limit: f64,
    #[serde(default = "default_per_decade")]
    pub samples_per_decade: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub wall_budget_seconds: Option<f64>,
    #[serde(default)]
    pub field_snapshots: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn reference() -> Self {
        Self::from_toml_str(REFERENCE_TOML).expect("shipped reference configuration is valid")
    }

    /// Checks every field that does not need the scale ladder.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.format_version != FORMAT_VERSION {
            return fail(format!(
                "format_version = {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        if let KStarSetting::Named(name) = &self.k_star {
            if name != "auto" {
                return fail(format!(
                    "k_star = \"{name}\" must be an integer or \"auto\""
                ));
            }
        }
        if self.grid < 8 || self.grid % 2 == 1 {
            return fail(format!(
                "grid = {} must be an even integer of at least 8",
                self.grid
            ));
        }
        if !(self.horizon_factor > 0.0) {
            return fail(format!(
                "horizon_factor = {} violates K > 0",
                self.horizon_factor
            ));
        }
        if !(self.cfl > 0.0) || !(self.max_dt > 0.0) {
            return fail(format!(
                "cfl = {} and max_dt = {} must both be positive",
                self.cfl, self.max_dt
            ));
        }
        if !(self.growth_limit > 1.0) {
            return fail(format!(
                "growth_limit = {} must exceed 1",
                self.growth_limit
            ));
        }
        if self.samples_per_decade == 0 {
            return fail("samples_per_decade must be at least 1".into());
        }
        if !(self.epsilon_star > 0.0) {
            return fail(format!(
                "epsilon_star = {} must be positive",
                self.epsilon_star
            ));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0)) {
            return fail(format!("snapshot time {t} must be non-negative"));
        }
        if let Some(w) = self.wall_budget_seconds {
            if !(w > 0.0) {
                return fail(format!("wall_budget_seconds = {w} must be positive"));
            }
        }
        self.target().validate()
    }

    pub fn target(&self) -> TargetSpec {
        TargetSpec {
            theta: self.theta_star,
            eta: self.eta_star,
            epsilon: self.epsilon_star,
            n_max: self.n_max,
        }
    }

    pub fn scale_params(&self) -> ScaleParams {
        ScaleParams {
            b: self.b,
            gamma: self.gamma,
            a: self.a,
            kstar: match self.k_star {
                KStarSetting::Fixed(k) => KStar::Fixed(k),
                KStarSetting::Named(_) => KStar::Auto,
            },
            epsilon0: self.epsilon0,
        }
    }

    pub fn build_scales(&self) -> Result<ScaleTable> {
        build_scales(&self.target(), &self.scale_params(), self.grid)
    }

    /// Force-bound exponents `(α, β)`.
    pub fn exponents(&self) -> (f64, f64) {
        let default = ((self.b - 1.0) / 16.0).min((self.gamma * self.b - 1.0) / 4.0);
        (self.alpha.unwrap_or(default), self.beta.unwrap_or(default))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from("nse-output"))
    }

    /// `K·N_0⁻²`.
    pub fn t_end(&self, scales: &ScaleTable) -> f64 {
        let n0 = scales.n[0] as f64;
        self.horizon_factor / (n0 * n0)
    }

    /// `N_k⁻²` for every `k` and `½, 1, 2` times `|η_*|⁻²`.
    pub fn forced_times(&self, scales: &ScaleTable) -> Vec<f64> {
        let mut t: Vec<f64> = scales
            .n
            .iter()
            .map(|&n| 1.0 / (n as f64 * n as f64))
            .collect();
        let e = scales.target.eta_norm();
        let base = 1.0 / (e * e);
        t.extend([0.5 * base, base, 2.0 * base]);
        t
    }

    pub fn run_config(
        &self,
        scales: &ScaleTable,
        snapshot_dir: Option<PathBuf>,
    ) -> Result<RunConfig> {
        let t_end = self.t_end(scales);
        let mut forced = self.forced_times(scales);
        forced.extend(self.snapshot_times.iter().copied().filter(|&t| t > 0.0));
        Ok(RunConfig {
            t_end,
            step: StepPolicy {
                cfl: self.cfl,
                max_dt: self.max_dt,
                nonlinear: true,
            },
            samples: sample_times(t_end, self.samples_per_decade, &forced)?,
            snapshot_times: self.snapshot_times.clone(),
            snapshot_dir,
            growth_limit: self.growth_limit,
            wall_budget: self.wall_budget_seconds.map(Duration::from_secs_f64),
            n_max: self.n_max,
        })
    }
}
