use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::{check_len, LieGroup};
use crate::error::Result;
use crate::manifold::Manifold;

/// Wraps an angle into (-π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Planar rotation stored as a unit complex number `(cos θ, sin θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rot2 {
    cos: f64,
    sin: f64,
}

impl Rot2 {
    pub fn new(theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        Self { cos, sin }
    }

    pub fn identity() -> Self {
        Self { cos: 1.0, sin: 0.0 }
    }

    /// Builds from a possibly unnormalized `(cos, sin)` pair.
    pub fn from_cos_sin(cos: f64, sin: f64) -> Self {
        let n = cos.hypot(sin);
        Self {
            cos: cos / n,
            sin: sin / n,
        }
    }

    /// Angle in (-π, π].
    pub fn theta(&self) -> f64 {
        let t = self.sin.atan2(self.cos);
        if t <= -PI {
            PI
        } else {
            t
        }
    }

    pub fn cos(&self) -> f64 {
        self.cos
    }

    pub fn sin(&self) -> f64 {
        self.sin
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.cos, -self.sin, self.sin, self.cos)
    }

    pub fn rotate(&self, v: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(
            self.cos * v.x - self.sin * v.y,
            self.sin * v.x + self.cos * v.y,
        )
    }

    pub fn compose(&self, other: &Rot2) -> Rot2 {
        Rot2::from_cos_sin(
            self.cos * other.cos - self.sin * other.sin,
            self.sin * other.cos + self.cos * other.sin,
        )
    }

    pub fn inverse(&self) -> Rot2 {
        Rot2 {
            cos: self.cos,
            sin: -self.sin,
        }
    }

    pub fn exp(theta: f64) -> Rot2 {
        Rot2::new(theta)
    }

    pub fn log(&self) -> f64 {
        self.theta()
    }
}

impl Default for Rot2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Manifold for Rot2 {
    fn dim(&self) -> usize {
        1
    }

    fn retract(&self, delta: &[f64]) -> Self {
        self.compose(&Rot2::exp(delta[0]))
    }

    fn local(&self, other: &Self) -> DVector<f64> {
        DVector::from_element(1, self.inverse().compose(other).log())
    }
}

impl LieGroup for Rot2 {
    fn compose(&self, other: &Self) -> Self {
        Rot2::compose(self, other)
    }

    fn inverse(&self) -> Self {
        Rot2::inverse(self)
    }

    fn expmap(delta: &[f64]) -> Result<Self> {
        check_len("Rot2::exp", 1, delta.len())?;
        Ok(Rot2::exp(delta[0]))
    }

    fn logmap(&self) -> DVector<f64> {
        DVector::from_element(1, self.log())
    }

    fn adjoint(&self) -> DMatrix<f64> {
        DMatrix::identity(1, 1)
    }

    fn right_jacobian_inverse(_xi: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(1, 1)
    }
}
