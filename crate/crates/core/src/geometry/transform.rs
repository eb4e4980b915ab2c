use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::camera::{GeometryError, Point3};

/// A rigid transform (rotation then translation) between two frames.
///
/// Rotation is a unit quaternion, normalized on construction; translation is
/// meters. `T.transform_point(q)` computes `R * q + t`, i.e. `T` named
/// `a_from_b` maps b-frame coordinates into the a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "TransformRepr", try_from = "TransformRepr")]
pub struct RigidTransform {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    /// Quaternion components in (w, x, y, z) order.
    rotation_wxyz: [f64; 4],
    translation_m: [f64; 3],
}

impl From<RigidTransform> for TransformRepr {
    fn from(t: RigidTransform) -> Self {
        let q = t.rotation.quaternion();
        Self {
            rotation_wxyz: [q.w, q.i, q.j, q.k],
            translation_m: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl TryFrom<TransformRepr> for RigidTransform {
    type Error = GeometryError;

    fn try_from(r: TransformRepr) -> Result<Self, GeometryError> {
        RigidTransform::new(r.rotation_wxyz, r.translation_m)
    }
}

impl RigidTransform {
    /// Build from quaternion components `(w, x, y, z)` and a translation.
    /// The quaternion is normalized; a zero or non-finite one is rejected.
    pub fn new(rotation_wxyz: [f64; 4], translation_m: [f64; 3]) -> Result<Self, GeometryError> {
        let [w, x, y, z] = rotation_wxyz;
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(GeometryError::InvalidRotation(format!(
                "quaternion {rotation_wxyz:?} has norm {norm}"
            )));
        }
        if !translation_m.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidRotation(format!(
                "non-finite translation {translation_m:?}"
            )));
        }
        Ok(Self {
            rotation: UnitQuaternion::from_quaternion(q),
            translation: Vector3::from(translation_m),
        })
    }

    pub fn from_parts(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::new(x, y, z),
        }
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.translation
    }

    /// Apply the transform: `R * q + t`.
    pub fn transform_point(&self, q: Point3) -> Point3 {
        Point3::from_vector(self.rotation * q.to_vector() + self.translation)
    }

    /// `self ∘ other`: the transform applying `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv_rot = self.rotation.inverse();
        RigidTransform {
            rotation: inv_rot,
            translation: -(inv_rot * self.translation),
        }
    }
}
