//! System data, the rank condition, case classification and the reduction to a
//! planar control-affine system.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se2::{
    conj_psi1, conj_psi1_inverse, conj_psi2, conj_psi2_inverse, conj_psi_zero,
    conj_psi_zero_inverse, lambda_map, rotate, GroupElement, Mat2, Vec2,
};

/// Absolute tolerance used for the vector-norm parts of the rank condition.
pub const LARC_TOL: f64 = 1e-12;

/// A closed control range `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Builds a control range, requiring `lo < 0 < hi`.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < 0.0 && 0.0 < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, u: f64) -> bool {
        self.lo <= u && u <= self.hi
    }

    pub fn contains_interior(&self, u: f64) -> bool {
        self.lo < u && u < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `{c·u : u ∈ self}` with endpoints reordered when `c < 0`.
    pub fn scaled(&self, c: f64) -> Result<Interval> {
        let (a, b) = (c * self.lo, c * self.hi);
        Interval::new(a.min(b), a.max(b))
    }

    /// `n ≥ 2` evenly spaced points from `lo` to `hi`.
    pub fn linspace(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.hi
                } else {
                    self.lo + self.width() * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// `linspace(n)` with the point nearest to zero replaced by exactly `0`.
    pub fn linspace_with_zero(&self, n: usize) -> Vec<f64> {
        let mut pts = self.linspace(n);
        // endpoints are kept; lo < 0 < hi so an interior point is nearest once n ≥ 3
        if let Some(k) = (1..pts.len() - 1).min_by(|&a, &b| pts[a].abs().total_cmp(&pts[b].abs())) {
            pts[k] = 0.0;
        }
        pts
    }
}

/// Full data of a one-input linear control system on SE(2):
/// drift `X = (ξ, A)`, controlled left-invariant field `Y = (α, η₁)`, controls in `Ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub alpha: f64,
    pub xi: Vec2,
    pub a: Mat2,
    pub eta1: Vec2,
    pub omega: Interval,
}

impl SystemSpec {
    pub fn new(alpha: f64, xi: Vec2, a: Mat2, eta1: Vec2, omega: Interval) -> Result<Self> {
        if !(alpha.is_finite() && xi.is_finite() && eta1.is_finite() && a.is_finite()) {
            return Err(Error::NonFinite("system data".into()));
        }
        a.lambda_mu()?;
        Interval::new(omega.lo, omega.hi)?;
        Ok(Self {
            alpha,
            xi,
            a,
            eta1,
            omega,
        })
    }

    pub fn from_lambda_mu(
        alpha: f64,
        xi: Vec2,
        lambda: f64,
        mu: f64,
        eta1: Vec2,
        omega: Interval,
    ) -> Result<Self> {
        Self::new(alpha, xi, Mat2::from_lambda_mu(lambda, mu), eta1, omega)
    }

    /// `(λ, μ)` with `A = ((λ, −μ), (μ, λ))`.
    pub fn lambda_mu(&self) -> (f64, f64) {
        // validated at construction
        self.a.lambda_mu().unwrap_or((f64::NAN, f64::NAN))
    }

    pub fn is_degenerate(&self) -> bool {
        self.a.det() == 0.0
    }

    /// Right-hand side of `ġ = X(g) + u·Y(g)`.
    pub fn vector_field(&self, g: &GroupElement, u: f64) -> (f64, Vec2) {
        let t = g.t.radians();
        (
            u * self.alpha,
            self.a.apply(g.v) + lambda_map(g.t, self.xi) + u * rotate(t, self.eta1),
        )
    }

    /// Closed-form solution of the original system for a constant control.
    ///
    /// For `det A ≠ 0` this is the reduced product flow pulled back through
    /// `ψ₂∘ψ₁`; for `A = 0` it is the normalised degenerate flow pulled back
    /// through `ψ`.
    pub fn flow(&self, s: f64, g: &GroupElement, u: f64) -> Result<GroupElement> {
        if self.is_degenerate() {
            let h = conj_psi_zero(self.alpha, self.eta1, g)?;
            let moved = crate::flow::flow_det_a0(self.xi, s, &h, self.alpha * u);
            conj_psi_zero_inverse(self.alpha, self.eta1, &moved)
        } else {
            let rs = reduce_unchecked(self)?;
            let h = to_reduced_coords(self, g)?;
            let moved = crate::flow::flow_product(&rs, s, &h, self.alpha * u)?;
            from_reduced_coords(self, &moved)
        }
    }
}

/// Data of the planar system `v̇ = (A − uθ)v + uη`, `u ∈ Ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedSpec {
    pub lambda: f64,
    pub mu: f64,
    pub eta: Vec2,
    pub omega: Interval,
}

impl ReducedSpec {
    pub fn new(lambda: f64, mu: f64, eta: Vec2, omega: Interval) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite() && eta.is_finite()) {
            return Err(Error::NonFinite("reduced system data".into()));
        }
        if lambda * lambda + mu * mu == 0.0 {
            return Err(Error::Singular("lambda² + mu² must be nonzero".into()));
        }
        Interval::new(omega.lo, omega.hi)?;
        Ok(Self {
            lambda,
            mu,
            eta,
            omega,
        })
    }

    pub fn a(&self) -> Mat2 {
        Mat2::from_lambda_mu(self.lambda, self.mu)
    }

    /// `A(u) = A − uθ`.
    pub fn a_of(&self, u: f64) -> Mat2 {
        Mat2::from_lambda_mu(self.lambda, self.mu - u)
    }

    /// `det A(u) = λ² + (μ − u)²`.
    pub fn det_a_of(&self, u: f64) -> f64 {
        self.lambda * self.lambda + (self.mu - u) * (self.mu - u)
    }

    pub fn trace(&self) -> f64 {
        2.0 * self.lambda
    }

    pub fn is_singular_control(&self, u: f64) -> bool {
        self.det_a_of(u) == 0.0
    }

    pub fn vector_field(&self, v: Vec2, u: f64) -> Vec2 {
        self.a_of(u).apply(v) + u * self.eta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    DegenerateDetZero,
    ControllableTraceZero,
    ClosedBoundedControlSet,
    OpenControlSet,
}

/// Structure sitting on the boundary of the open control set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryStructure {
    None,
    /// `{v(μ)}` is a one-point control set of the planar system.
    Singleton { point: Vec2 },
    /// `S¹ × {v(μ)}` is a periodic orbit of the lifted system.
    PeriodicOrbit { point: Vec2, period: f64 },
    /// `μ = 0`: each `(t, 0)` is a one-point control set.
    ContinuumOfPointSets,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub larc: bool,
    pub det_a: f64,
    pub tr_a: f64,
    /// `None` when the rank condition fails.
    pub case: Option<Case>,
    pub boundary_structure: BoundaryStructure,
    /// Whether the reduced affine vector is nonzero; `None` when no reduction exists.
    pub reduced_eta_nonzero: Option<bool>,
    pub notes: Vec<String>,
}

/// Rank condition: `α ≠ 0` and `αξ + Aη₁ ≠ 0`.
pub fn larc(spec: &SystemSpec) -> bool {
    spec.alpha != 0.0 && (spec.alpha * spec.xi + spec.a.apply(spec.eta1)).norm() > LARC_TOL
}

pub fn classify(spec: &SystemSpec) -> ClassificationReport {
    let det_a = spec.a.det();
    let tr_a = spec.a.trace();
    let larc = larc(spec);
    let mut notes = Vec::new();
    let mut boundary_structure = BoundaryStructure::None;
    let mut reduced_eta_nonzero = None;

    let case = if !larc {
        notes.push("rank condition fails; no case prediction".to_string());
        None
    } else if det_a == 0.0 {
        notes.push("A = 0: infinitely many control sets with empty interior".to_string());
        Some(Case::DegenerateDetZero)
    } else {
        if let Ok(rs) = reduce(spec) {
            let nonzero = rs.eta.norm() > LARC_TOL;
            reduced_eta_nonzero = Some(nonzero);
            if !nonzero {
                notes.push("rank condition holds but reduced eta vanishes".to_string());
            }
            if tr_a > 0.0 {
                boundary_structure = boundary_structure_of(&rs);
            }
        }
        Some(if tr_a == 0.0 {
            Case::ControllableTraceZero
        } else if tr_a < 0.0 {
            Case::ClosedBoundedControlSet
        } else {
            Case::OpenControlSet
        })
    };

    ClassificationReport {
        larc,
        det_a,
        tr_a,
        case,
        boundary_structure,
        reduced_eta_nonzero,
        notes,
    }
}

/// Lifted boundary structure for `tr A > 0`.
pub(crate) fn boundary_structure_of(rs: &ReducedSpec) -> BoundaryStructure {
    if !(rs.lambda > 0.0) || !rs.omega.contains(rs.mu) {
        return BoundaryStructure::None;
    }
    if rs.mu == 0.0 {
        return BoundaryStructure::ContinuumOfPointSets;
    }
    match crate::flow::equilibrium(rs, rs.mu) {
        Ok(point) => BoundaryStructure::PeriodicOrbit {
            point,
            period: TAU / rs.mu.abs(),
        },
        Err(_) => BoundaryStructure::None,
    }
}

/// Reduction to `v̇ = (A − ũθ)v + ũη̃`, `ũ ∈ αΩ`, with `η̃ = (αA⁻¹ξ + η₁)/α`.
pub fn reduce(spec: &SystemSpec) -> Result<ReducedSpec> {
    if !larc(spec) {
        return Err(Error::InvalidArgument(
            "reduction requires the rank condition".into(),
        ));
    }
    reduce_unchecked(spec)
}

fn reduce_unchecked(spec: &SystemSpec) -> Result<ReducedSpec> {
    if spec.alpha == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    let inv = spec.a.inverse()?;
    let (lambda, mu) = spec.a.lambda_mu()?;
    let eta = spec.alpha * inv.apply(spec.xi) + spec.eta1;
    ReducedSpec::new(
        lambda,
        mu,
        (1.0 / spec.alpha) * eta,
        spec.omega.scaled(spec.alpha)?,
    )
}

/// `ψ₂∘ψ₁`, taking original coordinates to reduced ones.
pub fn to_reduced_coords(spec: &SystemSpec, g: &GroupElement) -> Result<GroupElement> {
    Ok(conj_psi2(&conj_psi1(spec.xi, &spec.a, g)?))
}

pub fn from_reduced_coords(spec: &SystemSpec, g: &GroupElement) -> Result<GroupElement> {
    conj_psi1_inverse(spec.xi, &spec.a, &conj_psi2_inverse(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{flow_product, rk4_se2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn omega(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn spec(alpha: f64, xi: Vec2, l: f64, m: f64, eta1: Vec2, om: Interval) -> SystemSpec {
        SystemSpec::from_lambda_mu(alpha, xi, l, m, eta1, om).unwrap()
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(1.0, -1.0).is_err());
        assert!(Interval::new(0.0, 1.0).is_err());
        assert_eq!(omega(-1.0, 2.0).scaled(-2.0).unwrap(), omega(-4.0, 2.0));
        let pts = omega(-1.0, 1.0).linspace(5);
        assert_eq!(pts, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn non_commuting_matrix_is_rejected() {
        let r = SystemSpec::new(
            1.0,
            Vec2::ZERO,
            Mat2::new(1.0, 0.0, 0.0, 2.0),
            Vec2::ZERO,
            omega(-1.0, 1.0),
        );
        assert!(matches!(r, Err(Error::NonCommuting { .. })));
    }

    #[test]
    fn larc_examples() {
        let om = omega(-1.0, 1.0);
        let x = Vec2::new(1.0, 0.0);
        assert!(!larc(&spec(0.0, x, 1.0, 0.0, Vec2::ZERO, om)));
        assert!(larc(&spec(1.0, x, 1.0, 0.0, Vec2::ZERO, om)));
        assert!(!larc(&spec(1.0, x, 1.0, 0.0, Vec2::new(-1.0, 0.0), om)));
    }

    #[test]
    fn classify_examples() {
        let x = Vec2::new(1.0, 0.0);
        let r = classify(&spec(1.0, x, 0.0, 0.0, Vec2::ZERO, omega(-1.0, 1.0)));
        assert_eq!(r.case, Some(Case::DegenerateDetZero));
        assert_eq!(r.det_a, 0.0);

        let r = classify(&spec(1.0, Vec2::ZERO, 0.0, 1.0, x, omega(-1.0, 1.0)));
        assert_eq!(r.case, Some(Case::ControllableTraceZero));

        let r = classify(&spec(1.0, Vec2::ZERO, 1.0, 2.0, x, omega(-3.0, 3.0)));
        assert_eq!(r.case, Some(Case::OpenControlSet));
        match r.boundary_structure {
            BoundaryStructure::PeriodicOrbit { period, .. } => assert!((period - PI).abs() < 1e-15),
            other => panic!("unexpected boundary {other:?}"),
        }

        let r = classify(&spec(1.0, Vec2::ZERO, -1.0, 2.0, x, omega(-3.0, 3.0)));
        assert_eq!(r.case, Some(Case::ClosedBoundedControlSet));
        assert_eq!(r.boundary_structure, BoundaryStructure::None);

        let r = classify(&spec(1.0, Vec2::ZERO, 1.0, 0.0, x, omega(-3.0, 3.0)));
        assert_eq!(r.boundary_structure, BoundaryStructure::ContinuumOfPointSets);

        let r = classify(&spec(0.0, x, 1.0, 2.0, x, omega(-3.0, 3.0)));
        assert!(!r.larc);
        assert_eq!(r.case, None);
        assert_eq!(r.tr_a, 2.0);
    }

    #[test]
    fn classify_depends_only_on_a_for_trace_and_det() {
        let base = spec(1.0, Vec2::new(0.3, 0.2), 0.5, -1.5, Vec2::new(1.0, 2.0), omega(-1.0, 2.0));
        let mut scaled = base;
        scaled.eta1 = 3.5 * base.eta1;
        let (a, b) = (classify(&base), classify(&scaled));
        assert_eq!((a.det_a, a.tr_a, a.case), (b.det_a, b.tr_a, b.case));
    }

    #[test]
    fn reduce_examples() {
        let eta1 = Vec2::new(0.2, -0.7);
        let s = spec(1.0, Vec2::ZERO, 0.5, 1.0, eta1, omega(-1.0, 2.0));
        let rs = reduce(&s).unwrap();
        assert_eq!(rs.eta, eta1);
        assert_eq!(rs.omega, s.omega);

        let s = spec(
            2.0,
            Vec2::new(1.0, 0.0),
            1.0,
            0.0,
            Vec2::new(0.0, 1.0),
            omega(-1.0, 1.0),
        );
        let rs = reduce(&s).unwrap();
        assert!((rs.eta - Vec2::new(1.0, 0.5)).norm() < 1e-15);
        assert_eq!(rs.omega, omega(-2.0, 2.0));

        let s = spec(1.0, Vec2::new(1.0, 0.0), 0.0, 0.0, Vec2::ZERO, omega(-1.0, 1.0));
        assert!(matches!(reduce(&s), Err(Error::Singular(_))));
        let s = spec(0.0, Vec2::new(1.0, 0.0), 1.0, 0.0, Vec2::ZERO, omega(-1.0, 1.0));
        assert!(reduce(&s).is_err());

        let s = spec(-0.5, Vec2::new(1.0, 0.0), 1.0, 0.0, Vec2::ZERO, omega(-1.0, 2.0));
        assert_eq!(reduce(&s).unwrap().omega, omega(-1.0, 0.5));
    }

    #[test]
    fn larc_systems_reduce_to_nonzero_eta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let s = spec(
                rng.gen_range(-2.0..2.0),
                Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.1..2.0),
                Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                omega(-1.0, 1.0),
            );
            if larc(&s) {
                assert!(reduce(&s).unwrap().eta.norm() > 0.0);
                assert_eq!(classify(&s).reduced_eta_nonzero, Some(true));
            }
        }
    }

    #[test]
    fn reduction_conjugates_trajectories() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let s = spec(
                rng.gen_range(0.3..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.2..1.5),
                Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                omega(-1.0, 1.0),
            );
            if !larc(&s) {
                continue;
            }
            let rs = reduce(&s).unwrap();
            let g = GroupElement::new(
                rng.gen_range(0.0..TAU),
                Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
            let u = rng.gen_range(s.omega.lo..s.omega.hi);
            let t = rng.gen_range(0.0..2.0);
            let orig = rk4_se2(|g| s.vector_field(g, u), &g, t, 1e-3).unwrap();
            let lhs = to_reduced_coords(&s, &orig).unwrap();
            let rhs = flow_product(&rs, t, &to_reduced_coords(&s, &g).unwrap(), s.alpha * u).unwrap();
            worst = worst.max(lhs.distance(&rhs));
            let closed = s.flow(t, &g, u).unwrap();
            worst = worst.max(closed.distance(&orig));
        }
        assert!(worst < 1e-8, "worst deviation {worst:e}");
    }
}
