//! Matrix Lie groups used as pose variables: SO(2), SE(2), SO(3), SE(3).
//!
//! All groups use the right-perturbation chart `x ⊕ δ = x · exp(δ)` and
//! `local(x, y) = log(x⁻¹ · y)`.
//!
//! Tangent orderings:
//! - [`Pose2`]: `(v_x, v_y, ω)`
//! - [`Pose3`]: `(v_x, v_y, v_z, ω_x, ω_y, ω_z)`, translation part first.
//!
//! Pose exponentials are the full SE(n) exponentials, where the translation
//! tangent is coupled to the rotation through the V matrix.

mod se2;
mod se3;
mod so2;
mod so3;

use nalgebra::{DMatrix, DVector};

pub use se2::Pose2;
pub use se3::Pose3;
pub use so2::{normalize_angle, Rot2};
pub use so3::Rot3;

use crate::error::{Error, Result};
use crate::manifold::{Manifold, VectorValue};

/// Angles below this use Taylor expansions in exp/log/V.
pub(crate) const SMALL_ANGLE: f64 = 1e-10;

/// Group structure on top of a manifold.
///
/// `exp`, `log` and the Jacobians are expressed in the tangent ordering of
/// the implementing type. The two Jacobian hooks let generic factors build
/// analytic derivatives under the right-perturbation chart.
pub trait LieGroup: Manifold {
    fn compose(&self, other: &Self) -> Self;

    fn inverse(&self) -> Self;

    /// Group exponential of a tangent vector.
    fn expmap(delta: &[f64]) -> Result<Self>;

    /// Group logarithm on the principal branch.
    fn logmap(&self) -> DVector<f64>;

    /// Adjoint representation `Ad_x`, so that `x · exp(δ) = exp(Ad_x δ) · x`.
    fn adjoint(&self) -> DMatrix<f64>;

    /// Inverse of the right Jacobian at tangent `xi`:
    /// `log(exp(xi) · exp(δ)) ≈ xi + Jr⁻¹(xi) δ`.
    fn right_jacobian_inverse(xi: &DVector<f64>) -> DMatrix<f64>;
}

pub(crate) fn check_len(context: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        });
    }
    Ok(())
}

/// ℝⁿ under addition.
impl LieGroup for VectorValue {
    fn compose(&self, other: &Self) -> Self {
        VectorValue(&self.0 + &other.0)
    }

    fn inverse(&self) -> Self {
        VectorValue(-&self.0)
    }

    fn expmap(delta: &[f64]) -> Result<Self> {
        Ok(VectorValue::new(delta))
    }

    fn logmap(&self) -> DVector<f64> {
        self.0.clone()
    }

    fn adjoint(&self) -> DMatrix<f64> {
        DMatrix::identity(self.0.len(), self.0.len())
    }

    fn right_jacobian_inverse(xi: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(xi.len(), xi.len())
    }
}

// Series-guarded trigonometric coefficients shared by SE(2) and SO(3).

/// sin(θ)/θ
pub(crate) fn sinc(theta: f64) -> f64 {
    if theta.abs() < SMALL_ANGLE {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

/// (1 - cos θ)/θ
pub(crate) fn cosc(theta: f64) -> f64 {
    if theta.abs() < SMALL_ANGLE {
        0.5 * theta
    } else {
        let h = (0.5 * theta).sin();
        2.0 * h * h / theta
    }
}

/// (1 - cos θ)/θ²
pub(crate) fn one_minus_cos_over_sq(theta: f64) -> f64 {
    if theta.abs() < SMALL_ANGLE {
        0.5 - theta * theta / 24.0
    } else {
        let h = (0.5 * theta).sin();
        2.0 * h * h / (theta * theta)
    }
}

/// (θ - sin θ)/θ³
pub(crate) fn theta_minus_sin_over_cube(theta: f64) -> f64 {
    let t2 = theta * theta;
    if theta.abs() < 1e-2 {
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (theta - theta.sin()) / (t2 * theta)
    }
}
