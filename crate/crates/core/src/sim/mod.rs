//! Synthetic vineyard scenes, camera trajectories and observation synthesis.
//!
//! Everything here is deterministic: a seed plus the configs fully determine
//! every output bit. Random streams are split per subsystem (placement,
//! detections, depth noise, false positives, pose jitter) so changing one
//! noise knob does not perturb the draws of the others.

mod oracle;
mod scene;
mod synth;
mod trajectory;

pub use oracle::oracle_count;
pub use scene::{generate_scene, RowLayout, RowSegment, SceneConfig, SceneTruth};
pub use synth::{synthesize_frame, synthesize_run, CameraRig, NoiseConfig, BACKGROUND_DEPTH};
pub use trajectory::{ScanParams, TrajectoryConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid sim config: {0}")]
    InvalidConfig(String),
    #[error(
        "could not place bunch {placed} of {requested} after {attempts} attempts; \
         spacing rules are infeasible for this layout"
    )]
    InfeasiblePacking { placed: usize, requested: usize, attempts: u32 },
}

// Stream tags for the per-subsystem RNGs. Frame-scoped streams are
// `frame_id * 8 + tag`; scene placement and pose jitter use the fixed tags.
pub(crate) const STREAM_PLACEMENT: u64 = 0;
pub(crate) const STREAM_DETECTION: u64 = 1;
pub(crate) const STREAM_DEPTH: u64 = 2;
pub(crate) const STREAM_FALSE_POSITIVE: u64 = 3;
pub(crate) const STREAM_POSE_JITTER: u64 = 4;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn frame_rng(seed: u64, frame_id: u64, tag: u64) -> ChaCha8Rng {
    stream_rng(seed, frame_id * 8 + tag)
}
