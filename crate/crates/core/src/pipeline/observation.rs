use std::borrow::Cow;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::counter::CounterConfig;
use crate::geometry::{load_pgm, CameraIntrinsics, DepthImage, PgmError, RigidTransform};
use crate::locator::LocatorConfig;
use crate::tracker::{BoundingBox, TrackerConfig};

/// Tag asserting the pose semantics of a stream; checked on load.
pub const POSE_CONVENTION: &str = "world_from_camera/x-right,y-down,z-forward";

pub const STREAM_VERSION: u32 = 1;

/// One 2D detection: a pixel rectangle plus the detector's confidence.
/// Confidence is carried through but does not gate processing unless a
/// minimum is configured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// Where a frame's depth raster lives.
#[derive(Debug, Clone, PartialEq)]
pub enum DepthSource {
    Inline(DepthImage),
    /// Path to a 16-bit PGM, relative to the stream file.
    Path(PathBuf),
}

impl DepthSource {
    pub fn resolve(&self, base_dir: &Path) -> Result<Cow<'_, DepthImage>, PgmError> {
        match self {
            DepthSource::Inline(d) => Ok(Cow::Borrowed(d)),
            DepthSource::Path(p) => Ok(Cow::Owned(load_pgm(base_dir.join(p))?)),
        }
    }
}

/// One time step of the input stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    /// Strictly increasing within a stream.
    pub frame_id: u64,
    /// Seconds.
    pub timestamp: f64,
    pub world_from_camera: RigidTransform,
    pub detections: Vec<Detection>,
    pub depth: DepthSource,
}

/// Stream-wide data: camera parameters and optional processing configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub version: u32,
    pub pose_convention: String,
    pub color_intrinsics: CameraIntrinsics,
    pub depth_intrinsics: CameraIntrinsics,
    /// Maps depth-camera coordinates into the color camera frame.
    pub color_from_depth: RigidTransform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracker: Option<TrackerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locator: Option<LocatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counter: Option<CounterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl StreamHeader {
    pub fn new(
        color_intrinsics: CameraIntrinsics,
        depth_intrinsics: CameraIntrinsics,
        color_from_depth: RigidTransform,
    ) -> Self {
        Self {
            version: STREAM_VERSION,
            pose_convention: POSE_CONVENTION.to_string(),
            color_intrinsics,
            depth_intrinsics,
            color_from_depth,
            tracker: None,
            locator: None,
            counter: None,
            seed: None,
        }
    }
}
