use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("depth must be positive and finite, got {0}")]
    InvalidDepth(f64),
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid rotation quaternion: {0}")]
    InvalidRotation(String),
}

/// A continuous pixel coordinate (u along +x/right, v along +y/down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 2]", try_from = "[f64; 2]")]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &Pixel) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

impl From<Pixel> for [f64; 2] {
    fn from(p: Pixel) -> Self {
        [p.u, p.v]
    }
}

impl TryFrom<[f64; 2]> for Pixel {
    type Error = String;

    fn try_from(a: [f64; 2]) -> Result<Self, String> {
        if a.iter().all(|c| c.is_finite()) {
            Ok(Pixel::new(a[0], a[1]))
        } else {
            Err(format!("non-finite pixel coordinate {a:?}"))
        }
    }
}

/// A 3D point in meters. Which frame it lives in (camera or world) is up to
/// the caller; operations below say which they expect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", try_from = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub(crate) fn to_vector(self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.x, self.y, self.z)
    }

    pub(crate) fn from_vector(v: nalgebra::Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl TryFrom<[f64; 3]> for Point3 {
    type Error = String;

    fn try_from(a: [f64; 3]) -> Result<Self, String> {
        if a.iter().all(|c| c.is_finite()) {
            Ok(Point3::new(a[0], a[1], a[2]))
        } else {
            Err(format!("non-finite point coordinate {a:?}"))
        }
    }
}

/// Pinhole camera parameters mapping between pixels and metric rays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsRepr")]
pub struct CameraIntrinsics {
    /// Focal lengths in pixels.
    pub fx: f64,
    pub fy: f64,
    /// Principal point in pixels.
    pub cx: f64,
    pub cy: f64,
    /// Raster size in pixels.
    pub width: u32,
    pub height: u32,
}

#[derive(Deserialize)]
struct IntrinsicsRepr {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

impl TryFrom<IntrinsicsRepr> for CameraIntrinsics {
    type Error = GeometryError;

    fn try_from(r: IntrinsicsRepr) -> Result<Self, GeometryError> {
        CameraIntrinsics::new(r.fx, r.fy, r.cx, r.cy, r.width, r.height)
    }
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let fail = |msg: String| Err(GeometryError::InvalidIntrinsics(msg));
        if !(fx.is_finite() && fy.is_finite() && fx > 0.0 && fy > 0.0) {
            return fail(format!("focal lengths must be positive, got fx={fx} fy={fy}"));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return fail(format!("principal point must be finite, got cx={cx} cy={cy}"));
        }
        if !(0.0..f64::from(width)).contains(&cx) || !(0.0..f64::from(height)).contains(&cy) {
            return fail(format!(
                "principal point ({cx}, {cy}) outside raster {width}x{height}"
            ));
        }
        if width == 0 || height == 0 {
            return fail(format!("raster size {width}x{height} is empty"));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Whether a continuous pixel rounds to a valid raster index.
    pub fn contains(&self, p: Pixel) -> bool {
        let u = p.u.round();
        let v = p.v.round();
        u >= 0.0 && u < f64::from(self.width) && v >= 0.0 && v < f64::from(self.height)
    }

    /// Recover the camera-frame point seen at pixel `p` with measured depth.
    ///
    /// The z component of the result equals `depth` exactly.
    pub fn backproject(&self, p: Pixel, depth: f64) -> Result<Point3, GeometryError> {
        if !depth.is_finite() || depth <= 0.0 {
            return Err(GeometryError::InvalidDepth(depth));
        }
        Ok(Point3::new(
            (p.u - self.cx) * depth / self.fx,
            (p.v - self.cy) * depth / self.fy,
            depth,
        ))
    }

    /// Project a camera-frame point onto the image plane.
    ///
    /// Returns the continuous pixel plus the point's depth (its z). The pixel
    /// may fall outside the raster; use [`CameraIntrinsics::contains`] to
    /// check.
    pub fn project(&self, q: &Point3) -> Result<(Pixel, f64), GeometryError> {
        if !q.z.is_finite() || q.z <= 0.0 {
            return Err(GeometryError::BehindCamera(q.z));
        }
        let u = self.fx * q.x / q.z + self.cx;
        let v = self.fy * q.y / q.z + self.cy;
        Ok((Pixel::new(u, v), q.z))
    }
}
