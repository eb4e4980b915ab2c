use super::camera::{CameraIntrinsics, Pixel};
use super::depth::{DepthImage, INVALID_DEPTH};
use super::transform::RigidTransform;

/// Bookkeeping from one [`register_depth`] call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegistrationDiagnostics {
    /// Valid pixels in the input raster.
    pub input_valid: usize,
    /// Valid pixels whose reprojection fell outside the color raster or
    /// behind the color camera.
    pub dropped: usize,
}

/// Reproject a depth raster into the color camera's pixel grid.
///
/// Each valid depth pixel is back-projected in the depth camera, moved by
/// `color_from_depth`, and re-projected with the color intrinsics; the output
/// stores the resulting z at the nearest integer pixel. When several source
/// pixels land on one target, the nearest depth wins, so the result does not
/// depend on traversal order. Pixels never written hold the invalid sentinel.
///
/// The input raster dimensions must match `depth_intrinsics`.
pub fn register_depth(
    depth: &DepthImage,
    depth_intrinsics: &CameraIntrinsics,
    color_intrinsics: &CameraIntrinsics,
    color_from_depth: &RigidTransform,
) -> (DepthImage, RegistrationDiagnostics) {
    assert_eq!(
        (depth.width(), depth.height()),
        (depth_intrinsics.width, depth_intrinsics.height),
        "depth raster does not match depth intrinsics"
    );
    let mut out = DepthImage::empty(color_intrinsics.width, color_intrinsics.height);
    let mut diag = RegistrationDiagnostics::default();
    for y in 0..depth.height() {
        for x in 0..depth.width() {
            let d = depth.get(x, y);
            if d == INVALID_DEPTH {
                continue;
            }
            diag.input_valid += 1;
            let p = Pixel::new(f64::from(x), f64::from(y));
            // Invariant of DepthImage: valid depths are positive and finite.
            let cam = depth_intrinsics.backproject(p, d).expect("valid depth");
            let in_color = color_from_depth.transform_point(cam);
            let Ok((pixel, z)) = color_intrinsics.project(&in_color) else {
                diag.dropped += 1;
                continue;
            };
            let (u, v) = (pixel.u.round(), pixel.v.round());
            if u < 0.0
                || v < 0.0
                || u >= f64::from(color_intrinsics.width)
                || v >= f64::from(color_intrinsics.height)
            {
                diag.dropped += 1;
                continue;
            }
            let (u, v) = (u as u32, v as u32);
            let current = out.get(u, v);
            if current == INVALID_DEPTH || z < current {
                out.set(u, v, z);
            }
        }
    }
    (out, diag)
}
