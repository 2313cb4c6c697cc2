//! Closed-form solutions for constant and piecewise-constant controls, the
//! equilibrium curve, and a fixed-step RK4 integrator used as an independent
//! oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se2::{perp, rotate, GroupElement, Vec2};
use crate::system::{Interval, ReducedSpec, SystemSpec};

pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 64;
pub const DEFAULT_RK4_STEP: f64 = 1e-3;

/// Equilibrium `v(u) = −u A(u)⁻¹ η` of the constant-control planar system.
pub fn equilibrium(rs: &ReducedSpec, u: f64) -> Result<Vec2> {
    let det = rs.det_a_of(u);
    if det == 0.0 {
        return Err(Error::Singular(format!("A(u) at u = {u}")));
    }
    let w = rs.mu - u;
    Ok((-u / det) * (rs.lambda * rs.eta - w * perp(rs.eta)))
}

/// `v'(u) = −A(u)⁻¹(η − θ v(u))`.
pub fn equilibrium_derivative(rs: &ReducedSpec, u: f64) -> Result<Vec2> {
    let v = equilibrium(rs, u)?;
    let inv = rs.a_of(u).inverse()?;
    Ok(-inv.apply(rs.eta - perp(v)))
}

/// Planar flow `φ(s, v, u) = e^{sλ} R_{s(μ−u)}(v − v(u)) + v(u)`.
///
/// When `λ = 0` and `u = μ` the matrix `A(u)` vanishes and the solution is the
/// straight line `v + s·u·η`.
pub fn flow_r2(rs: &ReducedSpec, s: f64, v: Vec2, u: f64) -> Vec2 {
    if s == 0.0 {
        return v;
    }
    if rs.is_singular_control(u) {
        return v + (s * u) * rs.eta;
    }
    // det A(u) ≠ 0 here, so the equilibrium exists
    let eq = equilibrium(rs, u).unwrap_or(Vec2::ZERO);
    (s * rs.lambda).exp() * rotate(s * (rs.mu - u), v - eq) + eq
}

/// Product flow on `S¹ × ℝ²`: `(t + su, φ(s, v, u))`.
pub fn flow_product(rs: &ReducedSpec, s: f64, g: &GroupElement, u: f64) -> Result<GroupElement> {
    let v = flow_r2(rs, s, g.v, u);
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("flow at s = {s}")));
    }
    Ok(GroupElement::new(g.t.radians() + s * u, v))
}

/// `1 − sin(x)/x`, accurate for small `x`.
pub(crate) fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() >= 0.5 {
        return 1.0 - x.sin() / x;
    }
    // alternating series Σ (−1)^{k+1} x^{2k}/(2k+1)!
    let x2 = x * x;
    let mut term = x2 / 6.0;
    let mut sum = term;
    for k in 2..=8 {
        let k = k as f64;
        term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
        sum += term;
    }
    sum
}

/// Flow of the normalised `A = 0` system `ṫ = u`, `v̇ = Λ_t ξ`.
///
/// Uses `∫₀ˢ ρ_{t+uτ} dτ = s·sinc(su/2)·ρ_{t+su/2}`, which covers `u = 0`
/// and keeps the `θξ` component (the monotone functional) accurate for tiny
/// swept angles.
pub fn flow_det_a0(xi: Vec2, s: f64, g: &GroupElement, u: f64) -> GroupElement {
    let t = g.t.radians();
    let a = s * u;
    let m = t + 0.5 * a;
    let w = perp(xi);
    let tw = perp(w);
    let (sin_m, cos_m) = m.sin_cos();
    let versin_m = 2.0 * (0.5 * m).sin().powi(2);
    let k = one_minus_sinc(0.5 * a);
    let dv = (versin_m + k * cos_m) * w + ((k - 1.0) * sin_m) * tw;
    GroupElement::new(t + a, g.v + s * dv)
}

/// The normalised degenerate system: `A = 0`, invariant field straightened to `(1, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateSystem {
    pub xi: Vec2,
    pub omega: Interval,
}

impl DegenerateSystem {
    /// Normalises `spec` (which must have `A = 0`); controls are rescaled to `αΩ`.
    pub fn from_spec(spec: &SystemSpec) -> Result<Self> {
        if !spec.is_degenerate() {
            return Err(Error::CaseMismatch("expected A = 0".into()));
        }
        if spec.alpha == 0.0 {
            return Err(Error::ZeroAlpha);
        }
        Ok(Self {
            xi: spec.xi,
            omega: spec.omega.scaled(spec.alpha)?,
        })
    }

    pub fn vector_field(&self, g: &GroupElement, u: f64) -> (f64, Vec2) {
        (u, crate::se2::lambda_map(g.t, self.xi))
    }
}

/// Systems with an exact constant-control flow on `S¹ × ℝ²`.
pub trait ConstantControlFlow {
    fn control_range(&self) -> Interval;
    fn step(&self, s: f64, g: &GroupElement, u: f64) -> Result<GroupElement>;
    fn field(&self, g: &GroupElement, u: f64) -> (f64, Vec2);
}

impl ConstantControlFlow for ReducedSpec {
    fn control_range(&self) -> Interval {
        self.omega
    }
    fn step(&self, s: f64, g: &GroupElement, u: f64) -> Result<GroupElement> {
        flow_product(self, s, g, u)
    }
    fn field(&self, g: &GroupElement, u: f64) -> (f64, Vec2) {
        (u, self.vector_field(g.v, u))
    }
}

impl ConstantControlFlow for SystemSpec {
    fn control_range(&self) -> Interval {
        self.omega
    }
    fn step(&self, s: f64, g: &GroupElement, u: f64) -> Result<GroupElement> {
        self.flow(s, g, u)
    }
    fn field(&self, g: &GroupElement, u: f64) -> (f64, Vec2) {
        self.vector_field(g, u)
    }
}

impl ConstantControlFlow for DegenerateSystem {
    fn control_range(&self) -> Interval {
        self.omega
    }
    fn step(&self, s: f64, g: &GroupElement, u: f64) -> Result<GroupElement> {
        Ok(flow_det_a0(self.xi, s, g, u))
    }
    fn field(&self, g: &GroupElement, u: f64) -> (f64, Vec2) {
        self.vector_field(g, u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub u: f64,
}

/// Piecewise-constant control: consecutive `(duration, u)` pieces.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseControl {
    pub segments: Vec<Segment>,
}

impl PiecewiseControl {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(Error::InvalidControl(format!(
                    "segment {i}: duration {} must be positive and finite",
                    seg.duration
                )));
            }
            if !seg.u.is_finite() {
                return Err(Error::InvalidControl(format!("segment {i}: non-finite control")));
            }
        }
        Ok(Self { segments })
    }

    pub fn constant(duration: f64, u: f64) -> Result<Self> {
        Self::new(vec![Segment { duration, u }])
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn check_within(&self, omega: &Interval) -> Result<()> {
        for (i, seg) in self.segments.iter().enumerate() {
            if !omega.contains(seg.u) {
                return Err(Error::InvalidControl(format!(
                    "segment {i}: u = {} outside [{}, {}]",
                    seg.u, omega.lo, omega.hi
                )));
            }
        }
        Ok(())
    }

    /// Restricts to `[0, horizon]`, padding with `u = 0` if the control is shorter.
    pub fn fit_to_horizon(&self, horizon: f64) -> Result<Self> {
        let mut out = Vec::new();
        let mut left = horizon;
        for seg in &self.segments {
            if left <= 0.0 {
                break;
            }
            let d = seg.duration.min(left);
            out.push(Segment { duration: d, u: seg.u });
            left -= d;
        }
        if left > 0.0 {
            out.push(Segment { duration: left, u: 0.0 });
        }
        Self::new(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub s: f64,
    pub state: GroupElement,
    pub u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub control: PiecewiseControl,
}

impl Trajectory {
    pub fn start(&self) -> &GroupElement {
        &self.samples[0].state
    }

    pub fn end(&self) -> &GroupElement {
        &self.samples[self.samples.len() - 1].state
    }

    /// CSV with columns `s,t,v_x,v_y,u`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,t,v_x,v_y,u\n");
        for p in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.s,
                p.state.t.radians(),
                p.state.v.x,
                p.state.v.y,
                p.u
            ));
        }
        out
    }
}

/// Concatenates exact constant-control flows along `control`.
///
/// Each segment contributes `samples_per_segment` points; every sample is
/// evaluated from the segment's start state, so segment endpoints are exact.
pub fn flow_concat<S: ConstantControlFlow + ?Sized>(
    sys: &S,
    control: &PiecewiseControl,
    x0: &GroupElement,
    samples_per_segment: usize,
) -> Result<Trajectory> {
    control.check_within(&sys.control_range())?;
    let n = samples_per_segment.max(1);
    let first_u = control.segments.first().map_or(0.0, |s| s.u);
    let mut samples = vec![TrajectorySample {
        s: 0.0,
        state: *x0,
        u: first_u,
    }];
    let mut start = *x0;
    let mut clock = 0.0;
    for seg in &control.segments {
        for k in 1..=n {
            let ds = if k == n {
                seg.duration
            } else {
                seg.duration * k as f64 / n as f64
            };
            let state = sys.step(ds, &start, seg.u)?;
            samples.push(TrajectorySample {
                s: clock + ds,
                state,
                u: seg.u,
            });
        }
        start = samples[samples.len() - 1].state;
        clock += seg.duration;
    }
    Ok(Trajectory {
        samples,
        control: control.clone(),
    })
}

/// Classical fixed-step fourth-order Runge–Kutta for an autonomous field.
///
/// Integrates over `[0, s]` (backwards when `s < 0`) with `⌈|s|/step⌉` equal steps.
pub fn rk4_oracle<const N: usize, F>(f: F, x0: [f64; N], s: f64, step: f64) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("rk4 step {step}")));
    }
    if s == 0.0 {
        return Ok(x0);
    }
    let n = (s.abs() / step).ceil().max(1.0) as usize;
    let h = s / n as f64;
    let axpy = |x: &[f64; N], k: &[f64; N], c: f64| -> [f64; N] {
        let mut out = *x;
        for i in 0..N {
            out[i] += c * k[i];
        }
        out
    };
    let mut x = x0;
    for _ in 0..n {
        let k1 = f(&x);
        let k2 = f(&axpy(&x, &k1, 0.5 * h));
        let k3 = f(&axpy(&x, &k2, 0.5 * h));
        let k4 = f(&axpy(&x, &k3, h));
        for i in 0..N {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("rk4 state".into()));
        }
    }
    Ok(x)
}

/// RK4 on `S¹ × ℝ²`, integrating the angle as an unwrapped real.
pub fn rk4_se2<F>(field: F, g: &GroupElement, s: f64, step: f64) -> Result<GroupElement>
where
    F: Fn(&GroupElement) -> (f64, Vec2),
{
    let x0 = [g.t.radians(), g.v.x, g.v.y];
    let out = rk4_oracle(
        |x| {
            let (dt, dv) = field(&GroupElement::new(x[0], Vec2::new(x[1], x[2])));
            [dt, dv.x, dv.y]
        },
        x0,
        s,
        step,
    )?;
    Ok(GroupElement::new(out[0], Vec2::new(out[1], out[2])))
}

pub fn rk4_r2<F>(field: F, v: Vec2, s: f64, step: f64) -> Result<Vec2>
where
    F: Fn(Vec2) -> Vec2,
{
    let out = rk4_oracle(
        |x| {
            let d = field(Vec2::new(x[0], x[1]));
            [d.x, d.y]
        },
        [v.x, v.y],
        s,
        step,
    )?;
    Ok(Vec2::new(out[0], out[1]))
}

/// RK4 along a piecewise-constant control, segment by segment.
pub fn rk4_piecewise<S: ConstantControlFlow + ?Sized>(
    sys: &S,
    control: &PiecewiseControl,
    x0: &GroupElement,
    step: f64,
) -> Result<GroupElement> {
    let mut g = *x0;
    for seg in &control.segments {
        g = rk4_se2(|h| sys.field(h, seg.u), &g, seg.duration, step)?;
    }
    Ok(g)
}
