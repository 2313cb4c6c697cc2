//! Periodic orbits through a given point and the origin for the rotation-only
//! case `λ = 0`, built from half-circle arcs under the bang controls `±ρ`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{equilibrium, flow_concat, PiecewiseControl, Segment, Trajectory};
use crate::geometry::Circle;
use crate::se2::{perp, GroupElement, Vec2};
use crate::system::ReducedSpec;

const MAX_ITERATIONS: usize = 1_000_000;
const SAMPLES_PER_ARC: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Forward half (v₀ → 0) followed by the return half (0 → v₀).
    pub control: PiecewiseControl,
    pub trajectory: Trajectory,
    /// `v₀, v₁, …, v_N, 0`.
    pub waypoints: Vec<Vec2>,
    /// Radii `|v_n − v(±ρ)|` of the bang arcs.
    pub radii: Vec<f64>,
    pub rho: f64,
    pub final_control: Option<f64>,
    /// Sign changes of `|v(u)| − |v_N − v(u)|` seen on a scan of `[−ρ, ρ]`.
    pub root_multiplicity: usize,
    /// Number of leading segments that make up the forward half.
    pub forward_segments: usize,
    /// Distance from the origin at the end of the forward half.
    pub origin_error: f64,
    pub closure_error: f64,
}

/// Intersections of a circle with the line `ℝ·direction` through the origin,
/// ordered by their coordinate along `direction`.
pub fn circle_line_intersect(c: &Circle, direction: Vec2) -> Vec<Vec2> {
    let n = direction.norm();
    if !(n > 0.0) {
        return Vec::new();
    }
    let d = (1.0 / n) * direction;
    let along = c.center.dot(d);
    let off = c.center.dot(perp(d)).abs();
    let disc = (c.radius - off) * (c.radius + off);
    let scale = c.radius.max(off).max(1.0);
    if disc < -1e-14 * scale * scale {
        Vec::new()
    } else if disc <= 1e-14 * scale * scale {
        vec![along * d]
    } else {
        let h = disc.sqrt();
        vec![(along - h) * d, (along + h) * d]
    }
}

/// Time needed to sweep `angle` around an equilibrium at the rotation rate `μ − u`.
///
/// A positive rate turns counter-clockwise, so a negative `angle` costs
/// `2π + angle`, and symmetrically for a negative rate.
pub fn arc_duration(u: f64, mu: f64, angle: f64) -> Result<f64> {
    let rate = mu - u;
    if rate == 0.0 {
        return Err(Error::Singular(format!("no rotation at u = mu = {mu}")));
    }
    if angle == 0.0 {
        return Ok(0.0);
    }
    Ok(if rate > 0.0 {
        angle.rem_euclid(TAU) / rate
    } else {
        (-angle).rem_euclid(TAU) / -rate
    })
}

/// Default `ρ = 0.9·min(|u⁻|, u⁺, |μ|)`: `[−ρ, ρ] ⊂ Ω` and `μ` stays at
/// least `0.1|μ|` away from it.
pub fn default_rho(rs: &ReducedSpec) -> f64 {
    0.9 * rs.omega.lo.abs().min(rs.omega.hi).min(rs.mu.abs())
}

fn signed_angle(from: Vec2, to: Vec2) -> f64 {
    let cross = from.x * to.y - from.y * to.x;
    cross.atan2(from.dot(to))
}

/// Plans a closed trajectory of the planar system through `v0` and the origin.
///
/// `rho` overrides the default bang amplitude; `tol` bounds both the
/// bisection for the final control and the accepted closure error.
pub fn plan_periodic(rs: &ReducedSpec, v0: Vec2, tol: f64, rho: Option<f64>) -> Result<PlanResult> {
    if rs.lambda != 0.0 {
        return Err(Error::CaseMismatch(format!(
            "the planner needs tr A = 0, got lambda = {}",
            rs.lambda
        )));
    }
    if rs.mu == 0.0 {
        return Err(Error::CaseMismatch("the planner needs mu ≠ 0".into()));
    }
    if !v0.is_finite() {
        return Err(Error::NonFinite("start point".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol}")));
    }
    let rho = rho.unwrap_or_else(|| default_rho(rs));
    if !(rho > 0.0 && -rho >= rs.omega.lo && rho <= rs.omega.hi && rho < rs.mu.abs()) {
        return Err(Error::InvalidArgument(format!(
            "rho = {rho} must satisfy [−rho, rho] ⊂ Omega and mu ∉ [−rho, rho]"
        )));
    }

    let eta_norm = rs.eta.norm();
    let dir = (1.0 / eta_norm) * perp(rs.eta);
    // coordinate of v(u) along the line ℝ·θη
    let x_of = |u: f64| u * eta_norm / (rs.mu - u);
    let (xa, xb) = (x_of(-rho), x_of(rho));
    let (seg_lo, seg_hi) = (xa.min(xb), xa.max(xb));
    let on_segment = |v: Vec2| {
        let x = v.dot(dir);
        let off = v.dot(perp(dir)).abs();
        off <= 1e-12 * v.norm().max(1.0) && seg_lo <= x && x <= seg_hi
    };

    let mut waypoints = vec![v0];
    let mut radii = Vec::new();
    let mut forward: Vec<Segment> = Vec::new();
    let mut v = v0;
    let mut c = rho;
    let mut n = 0;
    while !on_segment(v) {
        n += 1;
        if n > MAX_ITERATIONS {
            return Err(Error::InvalidArgument("planner did not reach the equilibrium segment".into()));
        }
        let center = equilibrium(rs, c)?;
        let target = equilibrium(rs, -c)?;
        let radius = (v - center).norm();
        let pts = circle_line_intersect(&Circle::new(center, radius)?, dir);
        let next = pts
            .into_iter()
            .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
            .ok_or_else(|| Error::InvalidArgument("arc circle misses the line".into()))?;
        // snap onto the line to keep the waypoints exactly collinear
        let next = next.dot(dir) * dir;
        let angle = signed_angle(v - center, next - center);
        let duration = arc_duration(c, rs.mu, angle)?;
        if duration > 0.0 {
            forward.push(Segment { duration, u: c });
        }
        radii.push(radius);
        waypoints.push(next);
        v = next;
        c = -c;
    }

    // final arc: circle through v_N and the origin centred at v(u_N)
    let mut final_control = None;
    let mut root_multiplicity = 0;
    if v != Vec2::ZERO {
        let g = |u: f64| -> f64 {
            let e = equilibrium(rs, u).expect("u ≠ mu inside [−rho, rho]");
            e.norm() - (v - e).norm()
        };
        let scan: Vec<f64> = (0..=2000).map(|k| -rho + 2.0 * rho * k as f64 / 2000.0).collect();
        root_multiplicity = scan
            .windows(2)
            .filter(|w| g(w[0]).signum() != g(w[1]).signum())
            .count();
        // g(0) = −|v_N| < 0; the root lies on the side where v(u) points towards v_N
        let end = if g(rho) >= 0.0 { rho } else { -rho };
        if g(end) < 0.0 {
            return Err(Error::RootFinding("no sign change for the final control".into()));
        }
        let (mut lo, mut hi) = (0.0f64, end);
        while (hi - lo).abs() > tol {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u_n = 0.5 * (lo + hi);
        let center = equilibrium(rs, u_n)?;
        let angle = signed_angle(v - center, -center);
        let duration = arc_duration(u_n, rs.mu, angle)?;
        if duration > 0.0 {
            forward.push(Segment { duration, u: u_n });
        }
        final_control = Some(u_n);
    }
    waypoints.push(Vec2::ZERO);

    // return half: finish each circle with the same control, last arc first
    let back: Vec<Segment> = forward
        .iter()
        .rev()
        .filter_map(|seg| {
            let period = TAU / (rs.mu - seg.u).abs();
            let rest = period - seg.duration;
            (rest > 0.0).then_some(Segment {
                duration: rest,
                u: seg.u,
            })
        })
        .collect();

    let forward_segments = forward.len();
    let mut segments = forward;
    segments.extend(back);
    let control = PiecewiseControl::new(segments)?;
    let x0 = GroupElement::new(0.0, v0);
    let trajectory = flow_concat(rs, &control, &x0, SAMPLES_PER_ARC)?;

    let origin_error = if forward_segments == 0 {
        v0.norm()
    } else {
        trajectory.samples[forward_segments * SAMPLES_PER_ARC].state.v.norm()
    };
    let closure_error = (trajectory.end().v - v0).norm();
    let scale = v0.norm().max(1.0);
    if !(closure_error <= tol.max(1e-9 * scale)) {
        return Err(Error::InvalidArgument(format!(
            "plan does not close: error {closure_error:e}"
        )));
    }
    Ok(PlanResult {
        control,
        trajectory,
        waypoints,
        radii,
        rho,
        final_control,
        root_multiplicity,
        forward_segments,
        origin_error,
        closure_error,
    })
}
