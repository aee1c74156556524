//! Identity suite behind `nse-cascade verify`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::construction::{build_coefficients, CoefficientTable, PrincipalFlow};
use crate::error::{Error, Result};
use crate::geometry::{
    line_distance_matrix, mikado_family, nash_decompose, nash_directions, NashSystem, SymMat3,
    DELTA0, SEPARATION_FACTOR,
};
use crate::solver::{SolverState, StepPolicy};
use crate::spectral::{
    anti_divergence, fft::band_cutoff, leray_laplacian, random_band_limited, sym_gradient_defect,
    tensor_divergence, LpPartition, PeriodicField,
};

pub const SUITE_NAMES: [&str; 8] = [
    "nash reconstruction",
    "distance matrix",
    "partition of unity",
    "anti-divergence",
    "modified symmetric gradient",
    "coefficient recursion",
    "key cancellation",
    "shear exactness",
];

/// One measured quantity against its tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    fn exact(name: impl Into<String>, holds: bool) -> Self {
        Self {
            name: name.into(),
            value: if holds { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: holds,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Set when the suite could not run to completion.
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn failing(&self) -> Vec<&str> {
        self.suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| s.name.as_str())
            .collect()
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

/// Inputs of the suite. The Nash system is injectable so a corrupted table can
/// be shown to fail.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub nash: NashSystem,
    /// Configuration whose construction feeds the recursion, cancellation and
    /// shear suites.
    pub config: ExperimentConfig,
    pub operator_grid: usize,
    pub random_fields: usize,
    pub nash_samples: usize,
    pub seed: u64,
}

impl VerifyOptions {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            nash: nash_directions(),
            config,
            operator_grid: 64,
            random_fields: 20,
            nash_samples: 1000,
            seed: 20240607,
        }
    }
}

/// Closed forms of the pairwise line distances, `(j1, j2, value)`
/// with one-based indices.
pub fn reference_distances() -> [(usize, usize, f64); 15] {
    let (r481, r34, r41) = (481f64.sqrt(), 34f64.sqrt(), 41f64.sqrt());
    [
        (1, 2, (2800.0 * PI - 8487.0) / (100.0 * r481)),
        (1, 3, (1569.0 - 400.0 * PI) / (100.0 * r34)),
        (1, 4, 78.0 / 25.0),
        (1, 5, (4000.0 * PI - 12257.0) / (100.0 * r481)),
        (1, 6, (30.0 * PI - 89.0) / (5.0 * r41)),
        (2, 3, 33.0 / 50.0),
        (2, 4, 2.0 * (75.0 * PI - 128.0) / (25.0 * r41)),
        (2, 5, (4079.0 - 1200.0 * PI) / (100.0 * r481)),
        (2, 6, 3.0 * (40.0 * PI - 73.0) / (20.0 * r34)),
        (3, 4, 8.0 * (49.0 - 15.0 * PI) / (5.0 * r481)),
        (3, 5, (297.0 - 80.0 * PI) / (20.0 * r41)),
        (3, 6, (1559.0 - 400.0 * PI) / (100.0 * r481)),
        (4, 5, (200.0 * PI - 531.0) / (50.0 * r34)),
        (4, 6, 783.0 / (50.0 * r481)),
        (5, 6, 273.0 / 100.0),
    ]
}

fn nash_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let sys = &opts.nash;
    let mut checks = Vec::new();
    let frame = sys.frame_sum();
    let two = Rational64::from_integer(2);
    let zero = Rational64::from_integer(0);
    let is_two_id = frame
        .iter()
        .zip(crate::geometry::SYM_PAIRS)
        .all(|(v, (a, b))| *v == if a == b { two } else { zero });
    checks.push(Check::exact("frame sum equals 2 Id", is_two_id));
    let l1 = Rational64::new(25, 8);
    checks.push(Check::exact(
        "response l1 norm is 25/8 for every direction",
        (0..6).all(|j| sys.response_l1(j) == l1),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let reach = 1.0 / 7.0 * (1.0 - 1e-9);
    let (mut worst, mut lo, mut hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..opts.nash_samples {
        let eps = SymMat3(std::array::from_fn(|_| rng.gen_range(-reach..reach)));
        let m = SymMat3::IDENTITY.add(&eps);
        let g = nash_decompose(sys, &m)?;
        worst = worst.max(sys.recompose(&g).sub(&m).max_norm());
        for v in g {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    checks.push(Check::at_most(
        "reconstruction max-entry error",
        worst,
        1e-12,
    ));
    checks.push(Check::at_most(
        "smallest squared coefficient below 1/25",
        1.0 / 25.0 - lo,
        1e-12,
    ));
    checks.push(Check::at_most(
        "largest squared coefficient above 1",
        hi - 1.0,
        0.0,
    ));
    Ok(checks)
}

fn distance_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let family = mikado_family(opts.config.epsilon0)?;
    let table = line_distance_matrix(&family);
    let mut checks = Vec::new();
    let mut smallest = f64::INFINITY;
    for (j1, j2, expect) in reference_distances() {
        let d = table[j1 - 1][j2 - 1].tabulated;
        smallest = smallest.min(d);
        checks.push(Check::at_most(
            format!("distance ({j1},{j2})"),
            (d - expect).abs(),
            1e-12,
        ));
    }
    let min_expect = 8.0 * (49.0 - 15.0 * PI) / (5.0 * 481f64.sqrt());
    checks.push(Check::at_most(
        "minimum distance",
        (smallest - min_expect).abs(),
        1e-12,
    ));
    checks.push(Check::at_most(
        "separation margin",
        SEPARATION_FACTOR * DELTA0 - smallest,
        0.0,
    ));
    Ok(checks)
}

fn partition_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let n = opts.operator_grid;
    let part = LpPartition::for_grid(n);
    let nyquist = (n / 2) as i64;
    let mut worst = 0.0f64;
    for a in 0..=nyquist {
        for b in 0..=nyquist {
            for c in 0..=nyquist {
                let r = ((a * a + b * b + c * c) as f64).sqrt();
                if r < 1.0 || r > nyquist as f64 {
                    continue;
                }
                worst = worst.max((part.partition_sum(r) - 1.0).abs());
            }
        }
    }
    Ok(vec![Check::at_most(
        "partition sum deviation",
        worst,
        1e-12,
    )])
}

fn zero_mean_random(n: usize, seed: u64) -> Result<PeriodicField> {
    let mut u = random_band_limited(n, 3, band_cutoff(n) as i64, seed)?;
    for c in 0..3 {
        u.set_mode(c, [0, 0, 0], Complex64::new(0.0, 0.0))?;
    }
    Ok(u)
}

fn anti_divergence_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for i in 0..opts.random_fields {
        let v = zero_mean_random(opts.operator_grid, opts.seed + i as u64)?;
        let back = tensor_divergence(&anti_divergence(&v)?)?;
        worst = worst.max(back.sub(&v).sup_norm(1) / v.sup_norm(1));
    }
    Ok(vec![Check::at_most(
        "relative error of div R V − V",
        worst,
        1e-10,
    )])
}

fn sym_gradient_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for i in 0..opts.random_fields {
        let f = random_band_limited(
            opts.operator_grid,
            3,
            band_cutoff(opts.operator_grid) as i64,
            opts.seed + 1000 + i as u64,
        )?;
        let scale = leray_laplacian(&f)?.scaled(0.5).sup_norm(1);
        worst = worst.max(sym_gradient_defect(&f)? / scale);
    }
    Ok(vec![Check::at_most(
        "relative error of div D f − P Δf / 2",
        worst,
        1e-10,
    )])
}

fn recursion_suite(table: &CoefficientTable) -> Vec<Check> {
    let mut checks: Vec<Check> = table
        .stages
        .iter()
        .map(|s| {
            Check::at_most(
                format!("recursion residual k = {}", s.k),
                s.recursion_residual,
                1e-8,
            )
        })
        .collect();
    for s in &table.stages {
        let lo = s.a_min.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.a_max.iter().copied().fold(0.0, f64::max);
        // a outside [1, 32000] is a warning, reported but never failing
        checks.push(Check {
            name: format!(
                "coefficient range k = {}: [{lo:.4e}, {hi:.4e}] (window [1, 32000])",
                s.k
            ),
            value: hi,
            tolerance: f64::INFINITY,
            passed: lo.is_finite() && hi.is_finite(),
        });
    }
    checks
}

fn cancellation_suite(table: &CoefficientTable) -> Result<Vec<Check>> {
    (0..table.scales.kstar)
        .map(|k| {
            let r = table.verify_key_cancellation(k, 0.0)?;
            Ok(Check::at_most(format!("key cancellation k = {k}"), r, 1e-8))
        })
        .collect()
}

fn shear_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let flow = PrincipalFlow::shear(&opts.config.target(), opts.operator_grid)?;
    let mut state = SolverState::new(&flow.initial_data()?, 0.0)?;
    let policy = StepPolicy {
        cfl: opts.config.cfl,
        max_dt: opts.config.max_dt,
        nonlinear: true,
    };
    state.advance_to(0.1, &policy)?;
    let exact = flow.target_shear(0.1)?;
    let err = state.u.sub(&exact).sup_norm(1) / exact.sup_norm(1);
    let (_, force) = flow.force_residual(0.05)?;
    Ok(vec![
        Check::at_most("relative solver error at t = 0.1", err, 1e-10),
        Check::at_most("force residual of the shear", force.residual_sup, 1e-12),
    ])
}

fn finish(name: &str, started: Instant, outcome: Result<Vec<Check>>) -> SuiteResult {
    let seconds = started.elapsed().as_secs_f64();
    match outcome {
        Ok(checks) => SuiteResult {
            name: name.into(),
            passed: checks.iter().all(|c| c.passed),
            checks,
            error: None,
            seconds,
        },
        Err(e) => SuiteResult {
            name: name.into(),
            passed: false,
            checks: Vec::new(),
            error: Some(e.to_string()),
            seconds,
        },
    }
}

/// Runs all eight suites. Configuration errors abort; any other failure is
/// recorded against the suite that raised it.
pub fn run_suites(opts: &VerifyOptions) -> Result<VerifyReport> {
    let scales = opts.config.build_scales()?;
    let mut suites = Vec::with_capacity(SUITE_NAMES.len());
    type Suite = fn(&VerifyOptions) -> Result<Vec<Check>>;
    let light: [(&str, Suite); 5] = [
        (SUITE_NAMES[0], nash_suite),
        (SUITE_NAMES[1], distance_suite),
        (SUITE_NAMES[2], partition_suite),
        (SUITE_NAMES[3], anti_divergence_suite),
        (SUITE_NAMES[4], sym_gradient_suite),
    ];
    for (name, suite) in light {
        let started = Instant::now();
        suites.push(finish(name, started, suite(opts)));
        log::info!("suite {name} done");
    }

    let started = Instant::now();
    let table = mikado_family(opts.config.epsilon0)
        .and_then(|family| build_coefficients(&scales, &family, &opts.nash));
    match table {
        Ok(table) => {
            suites.push(finish(SUITE_NAMES[5], started, Ok(recursion_suite(&table))));
            let started = Instant::now();
            suites.push(finish(SUITE_NAMES[6], started, cancellation_suite(&table)));
        }
        Err(e) => {
            let msg = e.to_string();
            suites.push(finish(SUITE_NAMES[5], started, Err(e)));
            suites.push(finish(
                SUITE_NAMES[6],
                started,
                Err(Error::Precondition(msg)),
            ));
        }
    }

    let started = Instant::now();
    suites.push(finish(SUITE_NAMES[7], started, shear_suite(opts)));
    Ok(VerifyReport {
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}
