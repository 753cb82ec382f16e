use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};

use super::{check_len, cosc, sinc, LieGroup, Rot2};
use crate::error::Result;
use crate::manifold::Manifold;

/// Rigid motion in the plane. Tangent ordering is `(v_x, v_y, ω)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose2 {
    rotation: Rot2,
    translation: Vector2<f64>,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            rotation: Rot2::new(theta),
            translation: Vector2::new(x, y),
        }
    }

    pub fn from_parts(rotation: Rot2, translation: Vector2<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::from_parts(Rot2::identity(), Vector2::zeros())
    }

    pub fn rotation(&self) -> Rot2 {
        self.rotation
    }

    pub fn translation(&self) -> Vector2<f64> {
        self.translation
    }

    pub fn x(&self) -> f64 {
        self.translation.x
    }

    pub fn y(&self) -> f64 {
        self.translation.y
    }

    pub fn theta(&self) -> f64 {
        self.rotation.theta()
    }

    /// 3×3 homogeneous transform.
    pub fn matrix(&self) -> Matrix3<f64> {
        let r = self.rotation.matrix();
        let t = self.translation;
        Matrix3::new(r[(0, 0)], r[(0, 1)], t.x, r[(1, 0)], r[(1, 1)], t.y, 0.0, 0.0, 1.0)
    }

    pub fn compose(&self, other: &Pose2) -> Pose2 {
        Pose2 {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.translation + self.rotation.rotate(&other.translation),
        }
    }

    pub fn inverse(&self) -> Pose2 {
        let rinv = self.rotation.inverse();
        Pose2 {
            rotation: rinv,
            translation: -rinv.rotate(&self.translation),
        }
    }

    /// Maps a point from this frame into the parent frame.
    pub fn transform_point(&self, p: &Vector2<f64>) -> Vector2<f64> {
        self.translation + self.rotation.rotate(p)
    }

    pub fn exp(xi: &Vector3<f64>) -> Pose2 {
        let theta = xi.z;
        let v = v_matrix(theta);
        Pose2 {
            rotation: Rot2::new(theta),
            translation: v * Vector2::new(xi.x, xi.y),
        }
    }

    pub fn log(&self) -> Vector3<f64> {
        let theta = self.rotation.theta();
        let a = sinc(theta);
        let b = cosc(theta);
        // V = [[a, -b], [b, a]], so V⁻¹ = [[a, b], [-b, a]] / (a² + b²)
        let det = a * a + b * b;
        let t = self.translation;
        Vector3::new((a * t.x + b * t.y) / det, (-b * t.x + a * t.y) / det, theta)
    }

    pub fn adjoint_matrix(&self) -> Matrix3<f64> {
        let r = self.rotation.matrix();
        let t = self.translation;
        Matrix3::new(r[(0, 0)], r[(0, 1)], t.y, r[(1, 0)], r[(1, 1)], -t.x, 0.0, 0.0, 1.0)
    }

    /// Right Jacobian of the SE(2) exponential.
    pub fn right_jacobian(xi: &Vector3<f64>) -> Matrix3<f64> {
        let (m, c) = right_jacobian_parts(xi);
        Matrix3::new(
            m[(0, 0)],
            m[(0, 1)],
            c.x,
            m[(1, 0)],
            m[(1, 1)],
            c.y,
            0.0,
            0.0,
            1.0,
        )
    }

    pub fn right_jacobian_inv(xi: &Vector3<f64>) -> Matrix3<f64> {
        let (m, c) = right_jacobian_parts(xi);
        // block upper triangular [[M, c], [0, 1]]
        let a = m[(0, 0)];
        let b = m[(0, 1)];
        let det = a * a + b * b;
        let minv = Matrix2::new(a, -b, b, a) / det;
        let top = -(minv * c);
        Matrix3::new(
            minv[(0, 0)],
            minv[(0, 1)],
            top.x,
            minv[(1, 0)],
            minv[(1, 1)],
            top.y,
            0.0,
            0.0,
            1.0,
        )
    }
}

fn v_matrix(theta: f64) -> Matrix2<f64> {
    let a = sinc(theta);
    let b = cosc(theta);
    Matrix2::new(a, -b, b, a)
}

/// Returns the rotation-coupling block `M` and the third column `c` of Jr.
fn right_jacobian_parts(xi: &Vector3<f64>) -> (Matrix2<f64>, Vector2<f64>) {
    let theta = xi.z;
    let a = sinc(theta);
    let b = cosc(theta);
    let m = Matrix2::new(a, b, -b, a);
    let (tms, omc) = if theta.abs() < 1e-2 {
        let t2 = theta * theta;
        (
            theta / 6.0 - theta * t2 / 120.0 + theta * t2 * t2 / 5040.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
        )
    } else {
        let h = (0.5 * theta).sin();
        (
            (theta - theta.sin()) / (theta * theta),
            2.0 * h * h / (theta * theta),
        )
    };
    let c = Vector2::new(xi.x * tms - xi.y * omc, xi.x * omc + xi.y * tms);
    (m, c)
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for Pose2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pose2(x={}, y={}, θ={})", self.x(), self.y(), self.theta())
    }
}

impl Manifold for Pose2 {
    fn dim(&self) -> usize {
        3
    }

    fn retract(&self, delta: &[f64]) -> Self {
        self.compose(&Pose2::exp(&Vector3::new(delta[0], delta[1], delta[2])))
    }

    fn local(&self, other: &Self) -> DVector<f64> {
        let l = self.inverse().compose(other).log();
        DVector::from_column_slice(l.as_slice())
    }
}

impl LieGroup for Pose2 {
    fn compose(&self, other: &Self) -> Self {
        Pose2::compose(self, other)
    }

    fn inverse(&self) -> Self {
        Pose2::inverse(self)
    }

    fn expmap(delta: &[f64]) -> Result<Self> {
        check_len("Pose2::exp", 3, delta.len())?;
        Ok(Pose2::exp(&Vector3::from_column_slice(delta)))
    }

    fn logmap(&self) -> DVector<f64> {
        DVector::from_column_slice(self.log().as_slice())
    }

    fn adjoint(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(3, 3, self.adjoint_matrix().as_slice())
    }

    fn right_jacobian_inverse(xi: &DVector<f64>) -> DMatrix<f64> {
        let xi = Vector3::new(xi[0], xi[1], xi[2]);
        DMatrix::from_column_slice(3, 3, Pose2::right_jacobian_inv(&xi).as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn homogeneous(x: f64, y: f64, theta: f64) -> Matrix3<f64> {
        let (s, c) = theta.sin_cos();
        Matrix3::new(c, -s, x, s, c, y, 0.0, 0.0, 1.0)
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose2 {
        Pose2::new(
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-3.1..3.1),
        )
    }

    #[test]
    fn compose_with_identity() {
        let b = Pose2::new(5.0, 0.0, 0.0);
        assert_eq!(Pose2::identity().compose(&b), b);
    }

    #[test]
    fn compose_matches_matrix_product() {
        let a = Pose2::new(5.0, 0.0, 0.0);
        let b = Pose2::new(5.0, 0.0, -1.57);
        let c = a.compose(&b);
        let oracle = homogeneous(5.0, 0.0, 0.0) * homogeneous(5.0, 0.0, -1.57);
        assert!((c.matrix() - oracle).abs().max() < 1e-14);
        assert!((c.x() - 10.0).abs() < 1e-14);
        assert!(c.y().abs() < 1e-14);
        assert!((c.theta() + 1.57).abs() < 1e-14);
    }

    #[test]
    fn inverse_of_translation() {
        let inv = Pose2::new(5.0, 0.0, 0.0).inverse();
        assert_eq!(inv.translation(), Vector2::new(-5.0, 0.0));
        assert_eq!(Pose2::identity().inverse(), Pose2::identity());
    }

    #[test]
    fn exp_special_cases() {
        let t = Pose2::exp(&Vector3::new(2.0, 0.0, 0.0));
        assert_eq!(t, Pose2::new(2.0, 0.0, 0.0));
        let r = Pose2::exp(&Vector3::new(0.0, 0.0, 0.8));
        assert!((r.theta() - 0.8).abs() < 1e-15);
        assert_eq!(r.translation(), Vector2::zeros());
        assert_eq!(Pose2::exp(&Vector3::zeros()), Pose2::identity());
    }

    #[test]
    fn log_of_pure_translation() {
        let l = Pose2::new(0.2, -0.3, 0.0).log();
        assert_eq!(l, Vector3::new(0.2, -0.3, 0.0));
    }

    #[test]
    fn log_matches_matrix_log_series() {
        // matrix logarithm oracle by inverse-scaling: log(T) = 2^k log(T^(1/2^k)),
        // with the square root taken through the half-angle pose and the
        // first-order series at the end.
        let p = Pose2::new(0.2, -0.3, 0.2);
        let m = p.matrix();
        // series log(I + X) = X - X²/2 + X³/3 - ... converges since ‖m - I‖ < 1
        let x = m - Matrix3::identity();
        let mut term = x;
        let mut acc = Matrix3::zeros();
        for k in 1..200 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            acc += term * (sign / k as f64);
            term *= x;
        }
        let l = p.log();
        assert!((acc[(0, 2)] - l.x).abs() < 1e-12);
        assert!((acc[(1, 2)] - l.y).abs() < 1e-12);
        assert!((acc[(1, 0)] - l.z).abs() < 1e-12);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let xi = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            assert!((Pose2::exp(&xi).log() - xi).amax() < 1e-12);
        }
    }

    #[test]
    fn group_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let c = random_pose(&mut rng);
            let l = a.compose(&b).compose(&c).matrix();
            let r = a.compose(&b.compose(&c)).matrix();
            assert!((l - r).amax() < 1e-12);
            assert!((a.compose(&a.inverse()).matrix() - Matrix3::identity()).amax() < 1e-12);
            assert!((a.inverse().inverse().matrix() - a.matrix()).amax() < 1e-12);
        }
    }

    #[test]
    fn adjoint_moves_perturbation_across() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = random_pose(&mut rng);
            let d = Vector3::new(0.1, -0.2, 0.05);
            let lhs = x.compose(&Pose2::exp(&d));
            let rhs = Pose2::exp(&(x.adjoint_matrix() * d)).compose(&x);
            assert!((lhs.matrix() - rhs.matrix()).amax() < 1e-12);
        }
    }

    #[test]
    fn right_jacobian_inverse_is_inverse() {
        let xi = Vector3::new(0.4, -1.1, 0.9);
        let p = Pose2::right_jacobian(&xi) * Pose2::right_jacobian_inv(&xi);
        assert!((p - Matrix3::identity()).amax() < 1e-14);
        let small = Vector3::new(0.4, -1.1, 1e-12);
        let p = Pose2::right_jacobian(&small) * Pose2::right_jacobian_inv(&small);
        assert!((p - Matrix3::identity()).amax() < 1e-14);
    }

    #[test]
    fn right_jacobian_matches_finite_differences() {
        let xi = Vector3::new(0.7, 0.3, -1.2);
        let jr = Pose2::right_jacobian(&xi);
        let h = 1e-6;
        let base = Pose2::exp(&xi);
        for k in 0..3 {
            let mut d = Vector3::zeros();
            d[k] = h;
            let plus = base.inverse().compose(&Pose2::exp(&(xi + d))).log();
            let minus = base.inverse().compose(&Pose2::exp(&(xi - d))).log();
            let col = (plus - minus) / (2.0 * h);
            assert!((col - jr.column(k)).amax() < 1e-8);
        }
    }
}
