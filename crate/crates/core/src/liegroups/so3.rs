use nalgebra::{DMatrix, DVector, Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};

use super::{check_len, one_minus_cos_over_sq, theta_minus_sin_over_cube, LieGroup, SMALL_ANGLE};
use crate::error::Result;
use crate::manifold::Manifold;

/// 3D rotation as a unit quaternion with non-negative scalar part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rot3 {
    q: UnitQuaternion<f64>,
}

impl Rot3 {
    pub fn identity() -> Self {
        Self {
            q: UnitQuaternion::identity(),
        }
    }

    /// Normalizes `(w, x, y, z)` and flips the sign so that `w >= 0`.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self::canonical(UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)))
    }

    pub fn from_unit_quaternion(q: UnitQuaternion<f64>) -> Self {
        Self::canonical(q)
    }

    /// From a rotation matrix. Picks the largest quaternion component as the
    /// pivot, which stays accurate for angles near π.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let rot = Rotation3::from_matrix_unchecked(*m);
        Self::canonical(UnitQuaternion::from_rotation_matrix(&rot))
    }

    fn canonical(q: UnitQuaternion<f64>) -> Self {
        if q.w < 0.0 {
            Self {
                q: UnitQuaternion::new_unchecked(-q.into_inner()),
            }
        } else {
            Self { q }
        }
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.q
    }

    /// `(w, x, y, z)`
    pub fn coords(&self) -> [f64; 4] {
        [self.q.w, self.q.i, self.q.j, self.q.k]
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        *self.q.to_rotation_matrix().matrix()
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.q * v
    }

    pub fn compose(&self, other: &Rot3) -> Rot3 {
        let mut q = self.q * other.q;
        q.renormalize();
        Self::canonical(q)
    }

    pub fn inverse(&self) -> Rot3 {
        Self::canonical(self.q.inverse())
    }

    pub fn exp(phi: &Vector3<f64>) -> Rot3 {
        let theta = phi.norm();
        let half = 0.5 * theta;
        let k = if theta < SMALL_ANGLE {
            0.5 - theta * theta / 48.0
        } else {
            half.sin() / theta
        };
        let q = Quaternion::new(half.cos(), k * phi.x, k * phi.y, k * phi.z);
        Self::canonical(UnitQuaternion::new_normalize(q))
    }

    /// Rotation vector with angle in [0, π]. Since `w >= 0` the half angle is
    /// taken with `atan2`, which has no cancellation near π; precision of the
    /// axis degrades only above π - 1e-7 where `q` and `-q` meet.
    pub fn log(&self) -> Vector3<f64> {
        let w = self.q.w;
        let v = self.q.imag();
        let n = v.norm();
        if n < SMALL_ANGLE {
            // 2 atan(n/w)/n ≈ (2/w)(1 - n²/(3w²))
            v * (2.0 / w) * (1.0 - n * n / (3.0 * w * w))
        } else {
            v * (2.0 * n.atan2(w) / n)
        }
    }

    pub fn angle(&self) -> f64 {
        2.0 * self.q.imag().norm().atan2(self.q.w)
    }
}

impl Default for Rot3 {
    fn default() -> Self {
        Self::identity()
    }
}

pub(crate) fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Left Jacobian of SO(3); also the V matrix of the SE(3) exponential.
pub(crate) fn left_jacobian(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let p = hat(phi);
    Matrix3::identity() + p * one_minus_cos_over_sq(theta) + p * p * theta_minus_sin_over_cube(theta)
}

pub(crate) fn left_jacobian_inverse(phi: &Vector3<f64>) -> Matrix3<f64> {
    let theta = phi.norm();
    let p = hat(phi);
    let t2 = theta * theta;
    // 1/θ² - (1 + cos θ)/(2 θ sin θ), written with cot(θ/2) to stay finite at π
    let f = if theta < 1e-2 {
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let half = 0.5 * theta;
        1.0 / t2 - half.cos() / (half.sin() * 2.0 * theta)
    };
    Matrix3::identity() - p * 0.5 + p * p * f
}

impl Manifold for Rot3 {
    fn dim(&self) -> usize {
        3
    }

    fn retract(&self, delta: &[f64]) -> Self {
        self.compose(&Rot3::exp(&Vector3::new(delta[0], delta[1], delta[2])))
    }

    fn local(&self, other: &Self) -> DVector<f64> {
        let l = self.inverse().compose(other).log();
        DVector::from_column_slice(l.as_slice())
    }
}

impl LieGroup for Rot3 {
    fn compose(&self, other: &Self) -> Self {
        Rot3::compose(self, other)
    }

    fn inverse(&self) -> Self {
        Rot3::inverse(self)
    }

    fn expmap(delta: &[f64]) -> Result<Self> {
        check_len("Rot3::exp", 3, delta.len())?;
        Ok(Rot3::exp(&Vector3::from_column_slice(delta)))
    }

    fn logmap(&self) -> DVector<f64> {
        DVector::from_column_slice(self.log().as_slice())
    }

    fn adjoint(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(3, 3, self.matrix().as_slice())
    }

    fn right_jacobian_inverse(xi: &DVector<f64>) -> DMatrix<f64> {
        let phi = -Vector3::new(xi[0], xi[1], xi[2]);
        DMatrix::from_column_slice(3, 3, left_jacobian_inverse(&phi).as_slice())
    }
}
