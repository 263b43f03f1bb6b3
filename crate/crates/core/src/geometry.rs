//! Vector and rotation primitives. All quantities SI, angles in radians.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

/// Three-vector in whatever frame the caller states (inertial `I` or body `B`).
pub type Vec3 = nalgebra::Vector3<f64>;

/// Proper rotation matrix `R_IB`, mapping body-frame vectors into the inertial frame.
///
/// Every constructor and [`Rotation::compose`] returns a matrix that is
/// orthonormal with determinant +1 to within ~1e-15. `compose` applies one
/// symmetric orthonormalization step (`R <- 1.5 R - 0.5 R R^T R`) after the
/// product, so long chains of compositions do not accumulate drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation(Matrix3<f64>);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Rotation by `angle` about the y axis (the pitch / rolling axis).
    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    /// Wraps a matrix that is already a proper rotation within `tol`.
    pub fn from_matrix(m: Matrix3<f64>, tol: f64) -> Option<Self> {
        let r = Rotation(m);
        (r.orthonormality_error() <= tol && (r.determinant() - 1.0).abs() <= tol).then_some(r)
    }

    /// Wraps a nearly orthonormal matrix (e.g. an integrator output) and
    /// projects it back onto SO(3).
    pub fn from_matrix_orthonormalized(m: Matrix3<f64>) -> Self {
        Rotation(m).orthonormalized()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Rotation(self.0.transpose())
    }

    /// `self * other`, re-orthonormalized.
    pub fn compose(&self, other: &Rotation) -> Self {
        Rotation(self.0 * other.0).orthonormalized()
    }

    /// Body to inertial.
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Inertial to body.
    pub fn apply_inverse(&self, v: &Vec3) -> Vec3 {
        self.0.transpose() * v
    }

    /// Max-abs entry of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).abs().max()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// One Newton step of the polar decomposition. Quadratically convergent,
    /// so a single step suffices for the near-orthonormal inputs seen here.
    pub fn orthonormalized(&self) -> Self {
        let m = self.0;
        let mut r = 1.5 * m - 0.5 * m * m.transpose() * m;
        if (r.transpose() * r - Matrix3::identity()).abs().max() > 1e-12 {
            r = 1.5 * r - 0.5 * r * r.transpose() * r;
        }
        Rotation(r)
    }

    /// Pitch angle about y for a planar attitude, in (-pi, pi].
    pub fn pitch(&self) -> f64 {
        self.0[(0, 2)].atan2(self.0[(0, 0)])
    }

    /// Body z axis expressed in the inertial frame.
    pub fn body_z(&self) -> Vec3 {
        self.0.column(2).into_owned()
    }

    pub fn body_x(&self) -> Vec3 {
        self.0.column(0).into_owned()
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

pub fn rotation_about_y(angle: f64) -> Rotation {
    Rotation::about_y(angle)
}

/// Cross-product matrix: `skew(a) * b == a x b`.
pub fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Sign with `signum0(0) == 0`.
pub(crate) fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
