//! Geometry of the equilibrium curve, the invariant ball, and a seeded Monte
//! Carlo check of its invariance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{equilibrium, flow_r2};
use crate::se2::{perp, Vec2};
use crate::system::ReducedSpec;

/// Samples of the λ = 0 locus farther than this from the origin are dropped.
pub const LOCUS_CLIP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0 && center.is_finite()) {
            return Err(Error::InvalidArgument(format!("circle radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Signed distance of `p` from the circle (positive outside).
    pub fn residual(&self, p: Vec2) -> f64 {
        (p - self.center).norm() - self.radius
    }
}

/// The closed disk `{v : |v + θη| ≤ √((λ²+μ²)/λ²)·|η|}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec2,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: Vec2) -> bool {
        (p - self.center).norm() <= self.radius
    }

    pub fn contains_with_margin(&self, p: Vec2, margin: f64) -> bool {
        (p - self.center).norm() <= self.radius + margin
    }

    /// Normalised depth `1 − |p − c|/r`; positive in the interior.
    pub fn depth(&self, p: Vec2) -> f64 {
        1.0 - (p - self.center).norm() / self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocusKind {
    IntervalOnLine,
    CircleArc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocusDescription {
    pub kind: LocusKind,
    pub line_direction: Option<Vec2>,
    pub circle: Option<Circle>,
    pub samples: Vec<(f64, Vec2)>,
    pub singular_u: Option<f64>,
    pub limit_point: Vec2,
}

fn require_nonzero_lambda(rs: &ReducedSpec) -> Result<()> {
    if rs.lambda == 0.0 {
        return Err(Error::CaseMismatch("requires tr A ≠ 0 (lambda ≠ 0)".into()));
    }
    Ok(())
}

/// Circle `ζ = −½((μ/λ)η + θη)`, `R = ½√((λ²+μ²)/λ²)·|η|` carrying the equilibria.
pub fn circle_params(rs: &ReducedSpec) -> Result<Circle> {
    require_nonzero_lambda(rs)?;
    let (l, m) = (rs.lambda, rs.mu);
    let center = -0.5 * ((m / l) * rs.eta + perp(rs.eta));
    let radius = 0.5 * ((l * l + m * m) / (l * l)).sqrt() * rs.eta.norm();
    Circle::new(center, radius)
}

pub fn invariant_ball(rs: &ReducedSpec) -> Result<Ball> {
    require_nonzero_lambda(rs)?;
    let (l, m) = (rs.lambda, rs.mu);
    let radius = ((l * l + m * m) / (l * l)).sqrt() * rs.eta.norm();
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("invariant ball needs eta ≠ 0".into()));
    }
    Ok(Ball {
        center: -perp(rs.eta),
        radius,
    })
}

/// Samples `u ↦ v(u)` over `Ω` and describes the image.
pub fn equilibria_locus(rs: &ReducedSpec, n_samples: usize) -> Result<LocusDescription> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument("n_samples must be at least 2".into()));
    }
    let singular_u = (rs.lambda == 0.0 && rs.omega.contains(rs.mu)).then_some(rs.mu);
    let mut samples = Vec::with_capacity(n_samples);
    for u in rs.omega.linspace_with_zero(n_samples) {
        if rs.is_singular_control(u) {
            continue;
        }
        let v = equilibrium(rs, u)?;
        if rs.lambda == 0.0 && v.norm() > LOCUS_CLIP {
            continue;
        }
        samples.push((u, v));
    }
    let (kind, line_direction, circle) = if rs.lambda == 0.0 {
        (LocusKind::IntervalOnLine, Some(perp(rs.eta)), None)
    } else {
        (LocusKind::CircleArc, None, Some(circle_params(rs)?))
    };
    Ok(LocusDescription {
        kind,
        line_direction,
        circle,
        samples,
        singular_u,
        limit_point: -perp(rs.eta),
    })
}

/// `(1 − 2e^{sσ}cos(sν) + e^{2sσ}) / (1 − e^{sσ})²`.
///
/// Evaluated as `1 + sin²(sν/2)/sinh²(sσ/2)`, which is the same function
/// without the cancellation near `s = 0`.
pub fn f_tech(sigma: f64, nu: f64, s: f64) -> Result<f64> {
    if s == 0.0 || sigma == 0.0 {
        return Err(Error::InvalidArgument("f_tech needs s ≠ 0 and sigma ≠ 0".into()));
    }
    let num = (0.5 * s * nu).sin();
    let den = (0.5 * s * sigma).sinh();
    if den == 0.0 {
        return Err(Error::InvalidArgument("e^(s·sigma) = 1".into()));
    }
    let r = num / den;
    Ok(1.0 + r * r)
}

/// The supremum `(σ² + ν²)/σ²` approached as `s → 0`.
pub fn f_tech_limit(sigma: f64, nu: f64) -> f64 {
    (sigma * sigma + nu * nu) / (sigma * sigma)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceViolation {
    pub w: Vec2,
    pub u: f64,
    pub s: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub lambda: f64,
    pub mu: f64,
    pub eta: Vec2,
    pub ball: Ball,
    pub seed: u64,
    pub horizon: f64,
    pub interior_samples: usize,
    pub exterior_samples: usize,
    /// Item (i): points of `B` flowed with `λs < 0` must land strictly inside.
    pub interior_violations: usize,
    /// Item (ii): points outside `B` flowed with `λs > 0` must move away from `−θη`.
    pub growth_violations: usize,
    /// Smallest `(r − |φ + θη|)/r` seen for item (i).
    pub min_interior_margin: f64,
    /// Smallest `|φ + θη| − |w + θη|` seen for item (ii).
    pub min_growth_margin: f64,
    pub counterexamples: Vec<InvarianceViolation>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.interior_violations == 0 && self.growth_violations == 0
    }
}

const INTERIOR_MARGIN: f64 = 1e-12;
const MAX_COUNTEREXAMPLES: usize = 16;

/// Seeded Monte Carlo check of the ball invariance.
///
/// `n_points` points are drawn inside `B` and `n_points` outside (a tenth of
/// each exactly on the boundary), each flowed under `n_controls` random
/// controls for a random time `|s| ∈ [10⁻³, 1]·horizon`. Every sample draws
/// from its own ChaCha stream, so the result does not depend on how the work
/// is split across threads.
pub fn check_invariance(
    rs: &ReducedSpec,
    n_points: usize,
    n_controls: usize,
    horizon: f64,
    seed: u64,
) -> Result<InvarianceReport> {
    let ball = invariant_ball(rs)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon {horizon}")));
    }
    let contract = -rs.lambda.signum();
    let n_controls = n_controls.max(1);
    let total = 2 * n_points * n_controls;

    #[derive(Clone, Copy)]
    enum Outcome {
        Interior(f64, Option<InvarianceViolation>),
        Growth(f64, Option<InvarianceViolation>),
        Skipped,
    }

    let outcomes: Vec<Outcome> = (0..total)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let point = k / n_controls;
            let inside = point < n_points;
            let on_boundary = (point % n_points).is_multiple_of(10);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = if on_boundary {
                ball.radius
            } else if inside {
                ball.radius * rng.gen::<f64>().sqrt()
            } else {
                ball.radius * (1.0 + 2.0 * rng.gen::<f64>())
            };
            let w = ball.center + r * Vec2::new(phase.cos(), phase.sin());
            let u = rng.gen_range(rs.omega.lo..=rs.omega.hi);
            let mag = horizon * rng.gen_range(1e-3..=1.0);
            if inside {
                let s = contract * mag;
                let p = flow_r2(rs, s, w, u);
                let margin = ball.depth(p);
                let bad = !(margin > INTERIOR_MARGIN);
                Outcome::Interior(margin, bad.then_some(InvarianceViolation { w, u, s, margin }))
            } else {
                let eq = equilibrium(rs, u).ok();
                if eq == Some(w) {
                    return Outcome::Skipped;
                }
                let s = -contract * mag;
                let p = flow_r2(rs, s, w, u);
                let margin = (p - ball.center).norm() - (w - ball.center).norm();
                let bad = !(margin > 0.0);
                Outcome::Growth(margin, bad.then_some(InvarianceViolation { w, u, s, margin }))
            }
        })
        .collect();

    let mut report = InvarianceReport {
        lambda: rs.lambda,
        mu: rs.mu,
        eta: rs.eta,
        ball,
        seed,
        horizon,
        interior_samples: 0,
        exterior_samples: 0,
        interior_violations: 0,
        growth_violations: 0,
        min_interior_margin: f64::INFINITY,
        min_growth_margin: f64::INFINITY,
        counterexamples: Vec::new(),
    };
    for o in outcomes {
        let bad = match o {
            Outcome::Interior(m, bad) => {
                report.interior_samples += 1;
                report.min_interior_margin = report.min_interior_margin.min(m);
                if bad.is_some() {
                    report.interior_violations += 1;
                }
                bad
            }
            Outcome::Growth(m, bad) => {
                report.exterior_samples += 1;
                report.min_growth_margin = report.min_growth_margin.min(m);
                if bad.is_some() {
                    report.growth_violations += 1;
                }
                bad
            }
            Outcome::Skipped => None,
        };
        if let Some(v) = bad {
            if report.counterexamples.len() < MAX_COUNTEREXAMPLES {
                report.counterexamples.push(v);
            }
        }
    }
    Ok(report)
}
