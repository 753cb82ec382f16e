use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Matrix6, Vector3, Vector6};

use super::so3::{hat, left_jacobian, left_jacobian_inverse};
use super::{check_len, theta_minus_sin_over_cube, LieGroup, Rot3};
use crate::error::Result;
use crate::manifold::Manifold;

/// Rigid motion in 3D. Tangent ordering is `(v, ω)`: translation first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose3 {
    rotation: Rot3,
    translation: Vector3<f64>,
}

impl Pose3 {
    pub fn new(rotation: Rot3, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rot3::identity(), Vector3::zeros())
    }

    pub fn rotation(&self) -> Rot3 {
        self.rotation
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.translation
    }

    /// 4×4 homogeneous transform.
    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn compose(&self, other: &Pose3) -> Pose3 {
        Pose3 {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.translation + self.rotation.rotate(&other.translation),
        }
    }

    pub fn inverse(&self) -> Pose3 {
        let rinv = self.rotation.inverse();
        Pose3 {
            rotation: rinv,
            translation: -rinv.rotate(&self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.translation + self.rotation.rotate(p)
    }

    pub fn exp(xi: &Vector6<f64>) -> Pose3 {
        let rho = xi.fixed_rows::<3>(0).into_owned();
        let phi = xi.fixed_rows::<3>(3).into_owned();
        Pose3 {
            rotation: Rot3::exp(&phi),
            translation: left_jacobian(&phi) * rho,
        }
    }

    pub fn log(&self) -> Vector6<f64> {
        let phi = self.rotation.log();
        let rho = left_jacobian_inverse(&phi) * self.translation;
        Vector6::new(rho.x, rho.y, rho.z, phi.x, phi.y, phi.z)
    }

    pub fn adjoint_matrix(&self) -> Matrix6<f64> {
        let r = self.rotation.matrix();
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(hat(&self.translation) * r));
        ad
    }

    /// Inverse right Jacobian, `Jr⁻¹(ξ) = Jl⁻¹(-ξ)`.
    pub fn right_jacobian_inv(xi: &Vector6<f64>) -> Matrix6<f64> {
        left_jacobian_inverse_se3(&(-xi))
    }
}

/// Inverse of the SE(3) left Jacobian in `(v, ω)` ordering:
/// `[[Jl⁻¹, -Jl⁻¹ Q Jl⁻¹], [0, Jl⁻¹]]`.
fn left_jacobian_inverse_se3(xi: &Vector6<f64>) -> Matrix6<f64> {
    let rho = xi.fixed_rows::<3>(0).into_owned();
    let phi = xi.fixed_rows::<3>(3).into_owned();
    let jinv = left_jacobian_inverse(&phi);
    let q = q_matrix(&rho, &phi);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&jinv);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&jinv);
    out.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-(jinv * q * jinv)));
    out
}

/// Translation-rotation coupling block of the SE(3) left Jacobian.
fn q_matrix(rho: &Vector3<f64>, phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let t2 = theta * theta;
    let p = hat(rho);
    let f = hat(phi);
    let c1 = theta_minus_sin_over_cube(theta);
    let (c2, c3) = if theta < 0.1 {
        (
            1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0,
            1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        (
            (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2),
            (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta),
        )
    };
    let fp = f * p;
    let pf = p * f;
    let fpf = fp * f;
    let ff = f * f;
    p * 0.5 + (fp + pf + fpf) * c1 + (ff * p + p * ff - fpf * 3.0) * c2 + (fpf * f + ff * p * f) * c3
}

impl Default for Pose3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for Pose3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.translation;
        let [w, x, y, z] = self.rotation.coords();
        write!(f, "Pose3(t=[{}, {}, {}], q=[{w}, {x}, {y}, {z}])", t.x, t.y, t.z)
    }
}

impl Manifold for Pose3 {
    fn dim(&self) -> usize {
        6
    }

    fn retract(&self, delta: &[f64]) -> Self {
        self.compose(&Pose3::exp(&Vector6::from_column_slice(delta)))
    }

    fn local(&self, other: &Self) -> DVector<f64> {
        let l = self.inverse().compose(other).log();
        DVector::from_column_slice(l.as_slice())
    }
}

impl LieGroup for Pose3 {
    fn compose(&self, other: &Self) -> Self {
        Pose3::compose(self, other)
    }

    fn inverse(&self) -> Self {
        Pose3::inverse(self)
    }

    fn expmap(delta: &[f64]) -> Result<Self> {
        check_len("Pose3::exp", 6, delta.len())?;
        Ok(Pose3::exp(&Vector6::from_column_slice(delta)))
    }

    fn logmap(&self) -> DVector<f64> {
        DVector::from_column_slice(self.log().as_slice())
    }

    fn adjoint(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(6, 6, self.adjoint_matrix().as_slice())
    }

    fn right_jacobian_inverse(xi: &DVector<f64>) -> DMatrix<f64> {
        let xi = Vector6::from_column_slice(xi.as_slice());
        DMatrix::from_column_slice(6, 6, Pose3::right_jacobian_inv(&xi).as_slice())
    }
}
