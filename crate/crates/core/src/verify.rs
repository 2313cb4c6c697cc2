//! Invariant suites that can be run against a concrete system: the technical
//! inequality, ball invariance, conjugacy, the flow semigroup, the RK4 oracle
//! and the monotone functional of the `A = 0` case.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::flow::{flow_product, rk4_se2, DEFAULT_RK4_STEP};
use crate::geometry::{check_invariance, f_tech, f_tech_limit};
use crate::reachability::degenerate_structure_check;
use crate::se2::{GroupElement, Vec2};
use crate::system::{larc, reduce, to_reduced_coords, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemma,
    Ball,
    Conjugacy,
    Semigroup,
    Oracle,
    Monotone,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Lemma,
        Suite::Ball,
        Suite::Conjugacy,
        Suite::Semigroup,
        Suite::Oracle,
        Suite::Monotone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma => "lemma",
            Suite::Ball => "ball",
            Suite::Conjugacy => "conjugacy",
            Suite::Semigroup => "semigroup",
            Suite::Oracle => "oracle",
            Suite::Monotone => "monotone",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub status: Status,
    pub reason: Option<String>,
    pub details: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

/// Sweep of the technical inequality `f_{σ,ν}(s) < (σ²+ν²)/σ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSweep {
    pub points: usize,
    pub violations: usize,
    /// Smallest `(limit − f)/limit`.
    pub min_margin: f64,
    /// Largest `|f(σ, ν, 10⁻⁶) − limit|`.
    pub small_s_error: f64,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

/// `n_param × n_param × n_s` points: σ, ν log-spaced over `[0.1, 10]`, `|s|`
/// log-spaced over `[10⁻³, 20]` with both signs.
pub fn lemma_sweep(n_param: usize, n_s: usize) -> LemmaSweep {
    let params = log_grid(0.1, 10.0, n_param.max(2));
    let half = log_grid(1e-3, 20.0, (n_s / 2).max(2));
    let times: Vec<f64> = half.iter().flat_map(|&s| [s, -s]).collect();
    let rows: Vec<(usize, usize, f64, f64)> = params
        .par_iter()
        .map(|&sigma| {
            let mut out = (0usize, 0usize, f64::INFINITY, 0.0f64);
            for &nu in &params {
                let limit = f_tech_limit(sigma, nu);
                for &s in &times {
                    let f = f_tech(sigma, nu, s).expect("s, sigma nonzero");
                    out.0 += 1;
                    let margin = (limit - f) / limit;
                    if !(margin > 0.0) {
                        out.1 += 1;
                    }
                    out.2 = out.2.min(margin);
                }
                let small = f_tech(sigma, nu, 1e-6).expect("s nonzero");
                out.3 = out.3.max((small - limit).abs());
            }
            out
        })
        .collect();
    rows.into_iter().fold(
        LemmaSweep {
            points: 0,
            violations: 0,
            min_margin: f64::INFINITY,
            small_s_error: 0.0,
        },
        |acc, r| LemmaSweep {
            points: acc.points + r.0,
            violations: acc.violations + r.1,
            min_margin: acc.min_margin.min(r.2),
            small_s_error: acc.small_s_error.max(r.3),
        },
    )
}

/// Maximum distance between a reference and an approximation over random samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub samples: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl DeviationReport {
    pub fn passed(&self) -> bool {
        self.max_deviation < self.tolerance
    }
}

fn sample_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

fn random_state(rng: &mut ChaCha8Rng, r: f64) -> GroupElement {
    GroupElement::new(
        rng.gen_range(0.0..std::f64::consts::TAU),
        Vec2::new(rng.gen_range(-r..r), rng.gen_range(-r..r)),
    )
}

/// Original-system trajectories integrated by RK4 and carried through
/// `ψ₂∘ψ₁` against the closed-form reduced flow.
pub fn conjugacy_check(
    spec: &SystemSpec,
    samples: usize,
    horizon: f64,
    seed: u64,
) -> Result<DeviationReport> {
    let rs = reduce(spec)?;
    let devs: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(seed, k);
            let g = random_state(&mut rng, 2.0);
            let u = rng.gen_range(spec.omega.lo..=spec.omega.hi);
            let s = rng.gen_range(0.0..=horizon);
            let original = rk4_se2(|h| spec.vector_field(h, u), &g, s, DEFAULT_RK4_STEP)?;
            let mapped = to_reduced_coords(spec, &original)?;
            let reduced = flow_product(&rs, s, &to_reduced_coords(spec, &g)?, spec.alpha * u)?;
            Ok(mapped.distance(&reduced))
        })
        .collect();
    fold_deviation(devs, 1e-8)
}

fn fold_deviation(devs: Vec<Result<f64>>, tolerance: f64) -> Result<DeviationReport> {
    let mut max = 0.0f64;
    let n = devs.len();
    for d in devs {
        max = max.max(d?);
    }
    Ok(DeviationReport {
        samples: n,
        max_deviation: max,
        tolerance,
    })
}

/// `φ(s₁+s₂) = φ(s₂)∘φ(s₁)` for the closed-form flow of `spec`.
pub fn semigroup_check(spec: &SystemSpec, samples: usize, horizon: f64, seed: u64) -> Result<DeviationReport> {
    let devs: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(seed, k);
            let g = random_state(&mut rng, 2.0);
            let u = rng.gen_range(spec.omega.lo..=spec.omega.hi);
            let s1 = rng.gen_range(-horizon..=horizon);
            let s2 = rng.gen_range(-horizon..=horizon);
            let once = spec.flow(s1 + s2, &g, u)?;
            let twice = spec.flow(s2, &spec.flow(s1, &g, u)?, u)?;
            let scale = once.v.norm().max(1.0);
            Ok(once.distance(&twice) / scale)
        })
        .collect();
    fold_deviation(devs, 1e-10)
}

/// Closed-form flow of `spec` against RK4 with step `10⁻³`.
pub fn oracle_check(spec: &SystemSpec, samples: usize, horizon: f64, seed: u64) -> Result<DeviationReport> {
    let devs: Vec<Result<f64>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(seed, k);
            let g = random_state(&mut rng, 2.0);
            let u = rng.gen_range(spec.omega.lo..=spec.omega.hi);
            let s = rng.gen_range(0.0..=horizon);
            let closed = spec.flow(s, &g, u)?;
            let oracle = rk4_se2(|h| spec.vector_field(h, u), &g, s, DEFAULT_RK4_STEP)?;
            Ok(closed.distance(&oracle))
        })
        .collect();
    fold_deviation(devs, 1e-8)
}

/// Settings for [`run_suites`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub samples: usize,
    pub horizon: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            seed: 0,
            samples: 1000,
            horizon: 2.0,
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn skipped(suite: Suite, reason: &str) -> SuiteResult {
    SuiteResult {
        suite,
        status: Status::Skipped,
        reason: Some(reason.to_string()),
        details: Value::Null,
    }
}

fn judged(suite: Suite, passed: bool, details: Value) -> SuiteResult {
    SuiteResult {
        suite,
        status: if passed { Status::Passed } else { Status::Failed },
        reason: None,
        details,
    }
}

fn errored(suite: Suite, e: Error) -> SuiteResult {
    SuiteResult {
        suite,
        status: Status::Failed,
        reason: Some(e.to_string()),
        details: Value::Null,
    }
}

fn run_one(spec: &SystemSpec, suite: Suite, cfg: &VerifyConfig) -> SuiteResult {
    let degenerate = spec.is_degenerate();
    let has_larc = larc(spec);
    let outcome: Result<SuiteResult> = (|| {
        Ok(match suite {
            Suite::Lemma => {
                let r = lemma_sweep(50, 200);
                judged(suite, r.violations == 0 && r.small_s_error < 1e-6, to_value(&r))
            }
            Suite::Ball => {
                if degenerate || !has_larc {
                    return Ok(skipped(suite, "needs det A ≠ 0 and the rank condition"));
                }
                let rs = reduce(spec)?;
                if rs.lambda == 0.0 {
                    return Ok(skipped(suite, "no invariant ball when tr A = 0"));
                }
                let r = check_invariance(&rs, cfg.samples, 1, 3.0, cfg.seed)?;
                judged(suite, r.passed(), to_value(&r))
            }
            Suite::Conjugacy => {
                if degenerate || !has_larc {
                    return Ok(skipped(suite, "needs det A ≠ 0 and the rank condition"));
                }
                let r = conjugacy_check(spec, cfg.samples, cfg.horizon, cfg.seed)?;
                judged(suite, r.passed(), to_value(&r))
            }
            Suite::Semigroup => {
                if !has_larc && !degenerate {
                    return Ok(skipped(suite, "rank condition fails"));
                }
                let r = semigroup_check(spec, cfg.samples, cfg.horizon, cfg.seed)?;
                judged(suite, r.passed(), to_value(&r))
            }
            Suite::Oracle => {
                let r = oracle_check(spec, cfg.samples, cfg.horizon, cfg.seed)?;
                judged(suite, r.passed(), to_value(&r))
            }
            Suite::Monotone => {
                if !degenerate {
                    return Ok(skipped(suite, "only defined for A = 0"));
                }
                let r = degenerate_structure_check(spec, cfg.samples.clamp(2, 400), cfg.seed)?;
                judged(suite, r.passed(), to_value(&r))
            }
        })
    })();
    outcome.unwrap_or_else(|e| errored(suite, e))
}

/// Runs the selected suites; the report passes iff no suite failed.
pub fn run_suites(spec: &SystemSpec, cfg: &VerifyConfig) -> VerifyReport {
    let suites: Vec<SuiteResult> = cfg.suites.iter().map(|&s| run_one(spec, s, cfg)).collect();
    VerifyReport {
        seed: cfg.seed,
        passed: suites.iter().all(|s| s.status != Status::Failed),
        suites,
    }
}
