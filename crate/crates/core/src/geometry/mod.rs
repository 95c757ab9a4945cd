//! Rigid transforms, Euler-angle poses and the rotation/translation error
//! functionals.
//!
//! Rotations use the intrinsic z-y-x convention:
//! `R = R_z(yaw) * R_y(pitch) * R_x(roll)`.

mod tape;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3};

pub use tape::DiffTransform;

/// Entrywise tolerance for `R^T R = I` and `det R = 1`.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// `|R[2][0]|` above this is treated as gimbal lock: pitch within about
/// 9e-4 rad of +-pi/2. Every pitch with `|pitch| < pi/2 - 1e-3` converts.
pub const GIMBAL_THRESHOLD: f64 = 1.0 - 4e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("pose has non-finite component")]
    InvalidPose,
    #[error("rotation is near gimbal lock (|r20| = {0}); Euler angles are degenerate")]
    DegenerateAngles(f64),
    #[error("matrix is not a rotation: max |R^T R - I| = {orthogonality:e}, det = {det}")]
    InvalidRotation { orthogonality: f64, det: f64 },
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        a
    } else {
        (a + PI).rem_euclid(2.0 * PI) - PI
    }
}

/// Six-degree-of-freedom relative pose as predicted by a pose network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerPose {
    tx: f64,
    ty: f64,
    tz: f64,
    roll: f64,
    pitch: f64,
    yaw: f64,
}

impl EulerPose {
    /// Angles outside `[-pi, pi)` are wrapped.
    pub fn new(
        tx: f64,
        ty: f64,
        tz: f64,
        roll: f64,
        pitch: f64,
        yaw: f64,
    ) -> Result<Self, GeometryError> {
        let all = [tx, ty, tz, roll, pitch, yaw];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidPose);
        }
        Ok(Self {
            tx,
            ty,
            tz,
            roll: wrap_angle(roll),
            pitch: wrap_angle(pitch),
            yaw: wrap_angle(yaw),
        })
    }

    pub fn zero() -> Self {
        Self {
            tx: 0.0,
            ty: 0.0,
            tz: 0.0,
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
        }
    }

    /// From `[tx, ty, tz, roll, pitch, yaw]`.
    pub fn from_array(v: [f64; 6]) -> Result<Self, GeometryError> {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.tx, self.ty, self.tz, self.roll, self.pitch, self.yaw]
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.tx, self.ty, self.tz)
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn with_yaw(mut self, yaw: f64) -> Self {
        self.yaw = wrap_angle(yaw);
        self
    }

    pub fn with_tz(mut self, tz: f64) -> Self {
        self.tz = tz;
        self
    }

    pub fn to_transform(&self) -> TransformSE3 {
        TransformSE3 {
            r: rotation_zyx(self.roll, self.pitch, self.yaw),
            t: self.translation(),
        }
    }
}

/// `R_z(yaw) * R_y(pitch) * R_x(roll)`.
pub fn rotation_zyx(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

/// Rigid transform `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSE3 {
    r: Matrix3<f64>,
    t: Vector3<f64>,
}

impl Default for TransformSE3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl TransformSE3 {
    /// Validates orthonormality and unit determinant within
    /// [`ROTATION_TOLERANCE`].
    pub fn new(r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self, GeometryError> {
        if r.iter().chain(t.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidPose);
        }
        let (orthogonality, det) = rotation_defect(&r);
        if orthogonality > ROTATION_TOLERANCE || (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeometryError::InvalidRotation { orthogonality, det });
        }
        Ok(Self { r, t })
    }

    pub fn identity() -> Self {
        Self {
            r: Matrix3::identity(),
            t: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            r: Matrix3::identity(),
            t,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.r
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.t
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.t);
        m
    }

    /// Homogeneous product `self * other`.
    pub fn compose(&self, other: &TransformSE3) -> TransformSE3 {
        TransformSE3 {
            r: self.r * other.r,
            t: self.r * other.t + self.t,
        }
    }

    pub fn inverse(&self) -> TransformSE3 {
        let rt = self.r.transpose();
        TransformSE3 {
            r: rt,
            t: -(rt * self.t),
        }
    }

    /// `self^-1 * target`; exactly the identity when the two are equal.
    pub fn relative_to(&self, target: &TransformSE3) -> TransformSE3 {
        if self == target {
            return TransformSE3::identity();
        }
        self.inverse().compose(target)
    }

    /// Euler angles of the rotation, failing near gimbal lock.
    pub fn to_euler(&self) -> Result<EulerPose, GeometryError> {
        let r = &self.r;
        let r20 = r[(2, 0)];
        if r20.abs() > GIMBAL_THRESHOLD {
            return Err(GeometryError::DegenerateAngles(r20.abs()));
        }
        let pitch = (-r20).asin();
        let roll = r[(2, 1)].atan2(r[(2, 2)]);
        let yaw = r[(1, 0)].atan2(r[(0, 0)]);
        EulerPose::new(self.t.x, self.t.y, self.t.z, roll, pitch, yaw)
    }

    /// Rotation angle `acos((trace(R) - 1) / 2)` in `[0, pi]`.
    pub fn rotation_error(&self) -> f64 {
        ((self.r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    pub fn translation_error(&self) -> f64 {
        self.t.norm()
    }
}

/// Maximum entry of `|R^T R - I|` and the determinant.
pub fn rotation_defect(r: &Matrix3<f64>) -> (f64, f64) {
    let e = r.transpose() * r - Matrix3::identity();
    (e.abs().max(), r.determinant())
}

/// Projects a near-rotation onto SO(3) (closest rotation in Frobenius norm).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

pub fn euler_to_rotation(p: &EulerPose) -> TransformSE3 {
    p.to_transform()
}

pub fn rotation_to_euler(t: &TransformSE3) -> Result<EulerPose, GeometryError> {
    t.to_euler()
}

pub fn compose(a: &TransformSE3, b: &TransformSE3) -> TransformSE3 {
    a.compose(b)
}

pub fn inverse(t: &TransformSE3) -> TransformSE3 {
    t.inverse()
}

/// `t^-1 * t_tgt`: the residual motion from `t` to `t_tgt`.
pub fn relative_transform(t: &TransformSE3, t_tgt: &TransformSE3) -> TransformSE3 {
    t.relative_to(t_tgt)
}

pub fn rotation_error(t_rel: &TransformSE3) -> f64 {
    t_rel.rotation_error()
}

pub fn translation_error(t_rel: &TransformSE3) -> f64 {
    t_rel.translation_error()
}
