//! Camera model, rigid transforms, depth rasters and depth-to-color
//! registration.
//!
//! Conventions used throughout:
//!
//! - Camera frame is the optical one: x-right, y-down, z-forward. A point is
//!   in front of the camera iff `z > 0`.
//! - Pixel coordinates are continuous; the sample stored at raster index
//!   `(i, j)` sits at pixel coordinate `(i as f64, j as f64)`. A continuous
//!   pixel is inside the raster iff it rounds to a valid index.
//! - Depth values are meters; `0.0` is the invalid-depth sentinel, in memory
//!   and on disk.

mod camera;
mod depth;
mod pgm;
mod register;
mod transform;

pub use camera::{CameraIntrinsics, GeometryError, Pixel, Point3};
pub use depth::{DepthImage, DepthImageError, INVALID_DEPTH};
pub use pgm::{load_pgm, read_pgm, save_pgm, write_pgm, PgmError};
pub use register::{register_depth, RegistrationDiagnostics};
pub use transform::RigidTransform;
