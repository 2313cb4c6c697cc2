//! Exact SE(2) group and Lie-algebra operations.
//!
//! The group is the semi-direct product `S¹ ⋉ ℝ²` with product
//! `(t₁, v₁)·(t₂, v₂) = (t₁ + t₂, v₁ + ρ_{t₁} v₂)`, where `ρ_t = exp(tθ)` and
//! `θ` is the counter-clockwise quarter turn.

use std::f64::consts::TAU;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for the `Aθ = θA` test.
pub const COMMUTATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Polar angle in `(-π, π]`.
    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self * rhs.x, self * rhs.y)
    }
}

/// An angle on `S¹ = ℝ/2πℤ`, stored as its representative in `[0, 2π)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(t: f64) -> Self {
        let r = t.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        Angle(if r >= TAU { 0.0 } else { r })
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Signed distance to `other` on the circle, in `[-π, π)`.
    pub fn wrapped_diff(self, other: Angle) -> f64 {
        let d = (self.0 - other.0).rem_euclid(TAU);
        if d >= std::f64::consts::PI {
            d - TAU
        } else {
            d
        }
    }
}

impl From<f64> for Angle {
    fn from(t: f64) -> Self {
        Angle::new(t)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::new(self.0 + rhs.0)
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle::new(-self.0)
    }
}

/// A pose `(t, v) ∈ S¹ × ℝ²`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub t: Angle,
    pub v: Vec2,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        t: Angle::ZERO,
        v: Vec2::ZERO,
    };

    pub fn new(t: f64, v: Vec2) -> Self {
        Self { t: Angle::new(t), v }
    }

    /// Distance combining the wrapped angle gap and the Euclidean plane gap.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        self.t
            .wrapped_diff(other.t)
            .abs()
            .max(self.v.distance(other.v))
    }
}

/// 2×2 real matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };
    pub const ZERO: Mat2 = Mat2 {
        m: [[0.0, 0.0], [0.0, 0.0]],
    };
    /// The quarter-turn generator `θ = (0 −1; 1 0)`.
    pub const THETA: Mat2 = Mat2 {
        m: [[0.0, -1.0], [1.0, 0.0]],
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    /// `((λ, −μ), (μ, λ))`, the general matrix commuting with `θ`.
    pub fn from_lambda_mu(lambda: f64, mu: f64) -> Self {
        Mat2::new(lambda, -mu, mu, lambda)
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &rhs.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Singular(format!("determinant {d}")));
        }
        Ok(Mat2::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|x| x.is_finite())
    }

    /// Largest entry of `Aθ − θA` in absolute value.
    pub fn commutator_residual(&self) -> f64 {
        let l = self.mul(&Mat2::THETA);
        let r = Mat2::THETA.mul(self);
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (l.m[i][j] - r.m[i][j]).abs())
            .fold(0.0, f64::max)
    }

    /// Reads `(λ, μ)` off a matrix commuting with `θ`.
    pub fn lambda_mu(&self) -> Result<(f64, f64)> {
        let residual = self.commutator_residual();
        if !(residual <= COMMUTATION_TOL) {
            return Err(Error::NonCommuting { residual });
        }
        Ok((
            0.5 * (self.m[0][0] + self.m[1][1]),
            0.5 * (self.m[1][0] - self.m[0][1]),
        ))
    }
}

/// Counter-clockwise rotation `ρ_t`.
pub fn rotation(t: Angle) -> Mat2 {
    rotation_rad(t.radians())
}

pub(crate) fn rotation_rad(t: f64) -> Mat2 {
    let (s, c) = t.sin_cos();
    Mat2::new(c, -s, s, c)
}

pub(crate) fn rotate(t: f64, v: Vec2) -> Vec2 {
    let (s, c) = t.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

pub fn group_product(g1: &GroupElement, g2: &GroupElement) -> GroupElement {
    GroupElement {
        t: g1.t + g2.t,
        v: g1.v + rotate(g1.t.radians(), g2.v),
    }
}

pub fn group_inverse(g: &GroupElement) -> GroupElement {
    GroupElement {
        t: -g.t,
        v: -rotate(-g.t.radians(), g.v),
    }
}

/// `θw`, the quarter turn of `w`.
pub fn perp(w: Vec2) -> Vec2 {
    Vec2::new(-w.y, w.x)
}

/// `Λ_t w = (I − ρ_t) θ w`.
pub fn lambda_map(t: Angle, w: Vec2) -> Vec2 {
    lambda_map_rad(t.radians(), w)
}

pub(crate) fn lambda_map_rad(t: f64, w: Vec2) -> Vec2 {
    let tw = perp(w);
    tw - rotate(t, tw)
}

/// Value of the linear field `X(t, v) = (0, Av + Λ_t ξ)` at `g`.
pub fn linear_field_eval(xi: Vec2, a: &Mat2, g: &GroupElement) -> Result<(f64, Vec2)> {
    let residual = a.commutator_residual();
    if !(residual <= COMMUTATION_TOL) {
        return Err(Error::NonCommuting { residual });
    }
    Ok((0.0, a.apply(g.v) + lambda_map(g.t, xi)))
}

/// Value of the left-invariant field `Y(t, v) = (α, ρ_t η₁)` at `g`.
pub fn invariant_field_eval(alpha: f64, eta1: Vec2, g: &GroupElement) -> (f64, Vec2) {
    (alpha, rotate(g.t.radians(), eta1))
}

/// `ψ₁(t, v) = (t, v + Λ_t A⁻¹ ξ)`.
pub fn conj_psi1(xi: Vec2, a: &Mat2, g: &GroupElement) -> Result<GroupElement> {
    let shift = a.inverse()?.apply(xi);
    Ok(GroupElement {
        t: g.t,
        v: g.v + lambda_map(g.t, shift),
    })
}

pub fn conj_psi1_inverse(xi: Vec2, a: &Mat2, g: &GroupElement) -> Result<GroupElement> {
    let shift = a.inverse()?.apply(xi);
    Ok(GroupElement {
        t: g.t,
        v: g.v - lambda_map(g.t, shift),
    })
}

/// `ψ₂(t, v) = (t, ρ_{−t} v)`.
pub fn conj_psi2(g: &GroupElement) -> GroupElement {
    GroupElement {
        t: g.t,
        v: rotate(-g.t.radians(), g.v),
    }
}

pub fn conj_psi2_inverse(g: &GroupElement) -> GroupElement {
    GroupElement {
        t: g.t,
        v: rotate(g.t.radians(), g.v),
    }
}

/// `ψ(t, v) = (t, v − α⁻¹ Λ_t η₁)`, which straightens the invariant field to `(α, 0)`
/// when `A = 0`.
pub fn conj_psi_zero(alpha: f64, eta1: Vec2, g: &GroupElement) -> Result<GroupElement> {
    if alpha == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    Ok(GroupElement {
        t: g.t,
        v: g.v - (1.0 / alpha) * lambda_map(g.t, eta1),
    })
}

pub fn conj_psi_zero_inverse(alpha: f64, eta1: Vec2, g: &GroupElement) -> Result<GroupElement> {
    if alpha == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    Ok(GroupElement {
        t: g.t,
        v: g.v + (1.0 / alpha) * lambda_map(g.t, eta1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn close_g(a: &GroupElement, b: &GroupElement, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation(Angle::ZERO), Mat2::IDENTITY);
        let q = rotation(Angle::new(FRAC_PI_2));
        for i in 0..2 {
            for j in 0..2 {
                assert!((q.m[i][j] - Mat2::THETA.m[i][j]).abs() < 1e-15);
            }
        }
        let v = rotation(Angle::new(FRAC_PI_3)).apply(Vec2::new(1.0, 0.0));
        assert!(close(v, Vec2::new(0.5, 0.75f64.sqrt()), 1e-15));
    }

    #[test]
    fn angle_is_canonical() {
        assert_eq!(Angle::new(-1e-18).radians(), 0.0);
        assert!((Angle::new(-FRAC_PI_2).radians() - 1.5 * PI).abs() < 1e-15);
        assert!((Angle::new(7.0 * PI).radians() - PI).abs() < 1e-14);
    }

    #[test]
    fn group_product_examples() {
        let g = GroupElement::new(1.3, Vec2::new(0.2, -4.0));
        assert_eq!(group_product(&GroupElement::IDENTITY, &g), g);

        let a = GroupElement::new(FRAC_PI_2, Vec2::new(1.0, 0.0));
        let b = GroupElement::new(0.0, Vec2::new(1.0, 0.0));
        let ab = group_product(&a, &b);
        assert!(close_g(&ab, &GroupElement::new(FRAC_PI_2, Vec2::new(1.0, 1.0)), 1e-15));

        let e = group_product(&g, &group_inverse(&g));
        assert!(close_g(&e, &GroupElement::IDENTITY, 1e-14));
    }

    #[test]
    fn group_inverse_examples() {
        assert!(close_g(
            &group_inverse(&GroupElement::IDENTITY),
            &GroupElement::IDENTITY,
            0.0
        ));
        let g = GroupElement::new(FRAC_PI_2, Vec2::new(1.0, 0.0));
        let inv = group_inverse(&g);
        assert!(close_g(&inv, &GroupElement::new(-FRAC_PI_2, Vec2::new(0.0, 1.0)), 1e-15));
        assert!(close_g(&group_inverse(&inv), &g, 1e-15));
    }

    #[test]
    fn lambda_map_examples() {
        let w = Vec2::new(0.3, -2.0);
        assert_eq!(lambda_map(Angle::ZERO, w), Vec2::ZERO);
        let l = lambda_map(Angle::new(PI), Vec2::new(1.0, 0.0));
        assert!(close(l, Vec2::new(0.0, 2.0), 1e-15));
    }

    #[test]
    fn perp_examples() {
        assert_eq!(perp(Vec2::new(1.0, 0.0)), Vec2::new(0.0, 1.0));
        assert_eq!(perp(Vec2::ZERO), Vec2::ZERO);
        assert_eq!(perp(Vec2::new(1.0, 0.0)), Mat2::THETA.apply(Vec2::new(1.0, 0.0)));
    }

    #[test]
    fn linear_field_examples() {
        let xi = Vec2::new(1.0, 0.0);
        let (a0, v0) = linear_field_eval(xi, &Mat2::IDENTITY, &GroupElement::IDENTITY).unwrap();
        assert_eq!((a0, v0), (0.0, Vec2::ZERO));

        let g = GroupElement::new(PI, Vec2::new(1.0, 1.0));
        let (a, v) = linear_field_eval(xi, &Mat2::IDENTITY, &g).unwrap();
        assert_eq!(a, 0.0);
        assert!(close(v, Vec2::new(1.0, 3.0), 1e-15));

        let a = Mat2::from_lambda_mu(0.4, -1.1);
        let g = GroupElement::new(2.2, Vec2::ZERO);
        let (_, v) = linear_field_eval(xi, &a, &g).unwrap();
        assert!(close(v, lambda_map(g.t, xi), 0.0));

        let bad = Mat2::new(1.0, 0.0, 0.0, 2.0);
        assert!(matches!(
            linear_field_eval(xi, &bad, &g),
            Err(Error::NonCommuting { .. })
        ));
    }

    #[test]
    fn invariant_field_examples() {
        let eta1 = Vec2::new(1.0, 0.0);
        let g = GroupElement::new(0.0, Vec2::new(5.0, 5.0));
        assert_eq!(invariant_field_eval(2.0, eta1, &g), (2.0, eta1));
        let (a, v) = invariant_field_eval(2.0, eta1, &GroupElement::new(PI, Vec2::ZERO));
        assert_eq!(a, 2.0);
        assert!(close(v, Vec2::new(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn conjugation_examples() {
        let xi = Vec2::new(1.0, 0.0);
        let v = Vec2::new(0.7, -0.1);
        let a = Mat2::IDENTITY;
        let fixed = GroupElement::new(0.0, v);
        assert_eq!(conj_psi1(xi, &a, &fixed).unwrap(), fixed);
        let g = GroupElement::new(PI, Vec2::ZERO);
        let img = conj_psi1(xi, &a, &g).unwrap();
        assert!(close_g(&img, &GroupElement::new(PI, Vec2::new(0.0, 2.0)), 1e-15));
        assert!(matches!(conj_psi1(xi, &Mat2::ZERO, &g), Err(Error::Singular(_))));

        assert_eq!(conj_psi2(&fixed), fixed);
        let r = conj_psi2(&GroupElement::new(FRAC_PI_2, Vec2::new(0.0, 1.0)));
        assert!(close_g(&r, &GroupElement::new(FRAC_PI_2, Vec2::new(1.0, 0.0)), 1e-15));

        assert_eq!(conj_psi_zero(1.0, xi, &fixed).unwrap(), fixed);
        let z = conj_psi_zero(1.0, xi, &g).unwrap();
        assert!(close_g(&z, &GroupElement::new(PI, Vec2::new(0.0, -2.0)), 1e-15));
        assert_eq!(conj_psi_zero(0.0, xi, &g), Err(Error::ZeroAlpha));
    }

    #[test]
    fn lambda_mu_extraction() {
        assert_eq!(Mat2::from_lambda_mu(1.5, -2.0).lambda_mu().unwrap(), (1.5, -2.0));
        assert!(Mat2::new(1.0, 1.0, 1.0, 1.0).lambda_mu().is_err());
    }

    fn arb_angle() -> impl Strategy<Value = f64> {
        -10.0..10.0f64
    }

    fn arb_vec() -> impl Strategy<Value = Vec2> {
        (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| Vec2::new(x, y))
    }

    fn arb_g() -> impl Strategy<Value = GroupElement> {
        (arb_angle(), arb_vec()).prop_map(|(t, v)| GroupElement::new(t, v))
    }

    proptest! {
        #[test]
        fn product_is_associative(a in arb_g(), b in arb_g(), c in arb_g()) {
            let l = group_product(&group_product(&a, &b), &c);
            let r = group_product(&a, &group_product(&b, &c));
            prop_assert!(l.distance(&r) < 1e-12);
        }

        #[test]
        fn rotation_is_a_homomorphism(t1 in arb_angle(), t2 in arb_angle()) {
            let lhs = rotation(Angle::new(t1 + t2));
            let rhs = rotation(Angle::new(t1)).mul(&rotation(Angle::new(t2)));
            for i in 0..2 { for j in 0..2 {
                prop_assert!((lhs.m[i][j] - rhs.m[i][j]).abs() < 1e-12);
            }}
            prop_assert!((lhs.det() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn lambda_map_is_nonnegative_against_perp(t in arb_angle(), xi in arb_vec()) {
            let ip = lambda_map(Angle::new(t), xi).dot(perp(xi));
            prop_assert!(ip >= -1e-12);
            // ⟨Λ_t ξ, θξ⟩ = |ξ|²(1 − cos t)
            let expect = xi.norm_squared() * (1.0 - t.cos());
            prop_assert!((ip - expect).abs() < 1e-11);
        }

        #[test]
        fn perp_is_orthogonal(w in arb_vec()) {
            prop_assert!(perp(w).dot(w).abs() < 1e-12);
        }

        #[test]
        fn conjugations_round_trip(g in arb_g(), xi in arb_vec(), l in -3.0..3.0f64, m in 0.1..3.0f64,
                                   alpha in 0.2..3.0f64, eta1 in arb_vec()) {
            let a = Mat2::from_lambda_mu(l, m);
            let back = conj_psi1_inverse(xi, &a, &conj_psi1(xi, &a, &g).unwrap()).unwrap();
            prop_assert!(back.distance(&g) < 1e-10);
            let back = conj_psi2_inverse(&conj_psi2(&g));
            prop_assert!(back.distance(&g) < 1e-12);
            prop_assert!((conj_psi2(&g).v.norm() - g.v.norm()).abs() < 1e-12);
            let back = conj_psi_zero_inverse(alpha, eta1, &conj_psi_zero(alpha, eta1, &g).unwrap()).unwrap();
            prop_assert!(back.distance(&g) < 1e-12);
        }

        #[test]
        fn commutation_test_matches_lambda_mu_form(l in -3.0..3.0f64, m in -3.0..3.0f64, e in -1.0..1.0f64) {
            let a = Mat2::from_lambda_mu(l, m);
            prop_assert!(a.commutator_residual() <= COMMUTATION_TOL);
            prop_assert_eq!(a.lambda_mu().unwrap(), (l, m));
            if e.abs() > 1e-6 {
                let skewed = Mat2::new(l + e, -m, m, l);
                prop_assert!(skewed.lambda_mu().is_err());
            }
        }
    }
}
