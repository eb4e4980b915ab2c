//! vinecount — multi-view counting of grape bunches from a moving RGB-D rig.
//!
//! The library turns a stream of per-frame observations (camera pose, 2D
//! bounding-box detections, depth image) into a deduplicated count and the 3D
//! world positions of the counted bunches. The stages are:
//!
//! 1. **Geometry** – pinhole camera model, rigid transforms and depth-to-color
//!    registration.
//! 2. **Tracker** – frame-to-frame association of detection centroids by
//!    minimum euclidean distance with persistent IDs (diagnostic only; the
//!    count is position-based).
//! 3. **Locator** – centroid + registered depth → 3D world point, gated to the
//!    sensor's trusted range.
//! 4. **Counter** – the counting list: a new world point within the
//!    mean-absolute-difference threshold of an existing record is a
//!    relocation of that bunch, otherwise a new bunch.
//! 5. **Sim** – synthetic vineyard scenes, camera trajectories and observation
//!    synthesis with ground truth, including a brute-force count oracle.
//! 6. **Pipeline** – per-frame orchestration, the observation-stream file
//!    format, reports and multi-run experiments.

pub mod counter;
pub mod geometry;
pub mod locator;
pub mod pipeline;
pub mod sim;
pub mod tracker;
