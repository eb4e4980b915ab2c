//! Detection centroid + registered depth → 3D world point, gated to the
//! sensor's trusted range.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraIntrinsics, DepthImage, Pixel, Point3, RigidTransform};

#[derive(Debug, Error)]
pub enum LocatorError {
    #[error("invalid locator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocatorConfig {
    /// Trusted depth interval in meters, inclusive at both ends.
    pub min_range: f64,
    pub max_range: f64,
    /// Side length in pixels of the square depth-sampling window; odd.
    pub depth_window: u32,
}

impl Default for LocatorConfig {
    fn default() -> Self {
        Self { min_range: 0.5, max_range: 4.5, depth_window: 5 }
    }
}

impl LocatorConfig {
    pub fn validate(&self) -> Result<(), LocatorError> {
        if !(self.min_range.is_finite() && self.max_range.is_finite())
            || self.min_range <= 0.0
            || self.min_range >= self.max_range
        {
            return Err(LocatorError::InvalidConfig(format!(
                "range [{}, {}] must satisfy 0 < min < max",
                self.min_range, self.max_range
            )));
        }
        if self.depth_window == 0 || self.depth_window.is_multiple_of(2) {
            return Err(LocatorError::InvalidConfig(format!(
                "depth_window must be odd and >= 1, got {}",
                self.depth_window
            )));
        }
        Ok(())
    }
}

/// A detection successfully placed in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocatedDetection {
    pub world_point: Point3,
    /// Pixel the depth was sampled around.
    pub pixel: Pixel,
    /// Sampled depth in meters; within the configured range.
    pub depth: f64,
    pub frame_id: u64,
}

/// Outcome of [`locate`], keeping the rejection reason for frame stats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocateOutcome {
    Located(LocatedDetection),
    /// No valid depth in the sampling window.
    NoDepth,
    /// Sampled depth fell outside the trusted range.
    OutOfRange { depth: f64 },
}

impl LocateOutcome {
    pub fn located(&self) -> Option<&LocatedDetection> {
        match self {
            LocateOutcome::Located(d) => Some(d),
            _ => None,
        }
    }
}

/// Median of the valid depths in the window centered on the nearest raster
/// pixel to `p`; `None` when the window holds no valid depth.
///
/// Window cells outside the raster contribute nothing. An even number of
/// valid samples takes the mean of the two middle values.
pub fn sample_depth(depth: &DepthImage, p: Pixel, config: &LocatorConfig) -> Option<f64> {
    let half = i64::from(config.depth_window / 2);
    let cu = p.u.round() as i64;
    let cv = p.v.round() as i64;
    let mut samples: Vec<f64> = Vec::with_capacity((config.depth_window as usize).pow(2));
    for y in (cv - half)..=(cv + half) {
        for x in (cu - half)..=(cu + half) {
            if let Some(d) = depth.depth_at(x, y) {
                samples.push(d);
            }
        }
    }
    if samples.is_empty() {
        return None;
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    Some(if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    })
}

/// Place a detection centroid in the world frame.
///
/// The depth is sampled from the registered raster around `p`; absence or a
/// value outside `[min_range, max_range]` (inclusive) rejects the detection.
pub fn locate(
    p: Pixel,
    depth: &DepthImage,
    color_intrinsics: &CameraIntrinsics,
    world_from_camera: &RigidTransform,
    config: &LocatorConfig,
    frame_id: u64,
) -> LocateOutcome {
    let Some(d) = sample_depth(depth, p, config) else {
        return LocateOutcome::NoDepth;
    };
    if d < config.min_range || d > config.max_range {
        return LocateOutcome::OutOfRange { depth: d };
    }
    let camera_point = color_intrinsics
        .backproject(p, d)
        .expect("sampled depth is positive and finite");
    LocateOutcome::Located(LocatedDetection {
        world_point: world_from_camera.transform_point(camera_point),
        pixel: p,
        depth: d,
        frame_id,
    })
}
