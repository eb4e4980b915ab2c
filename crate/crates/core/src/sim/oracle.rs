use super::scene::SceneTruth;
use super::synth::{is_occluded, project_bunches};
use crate::geometry::{CameraIntrinsics, RigidTransform};
use crate::locator::LocatorConfig;

/// Brute-force ground-truth count, independent of the tracking/counting
/// pipeline.
///
/// A bunch is countable iff at some pose its center projects inside the
/// color raster, it is not occluded by a nearer bunch within
/// `occlusion_radius_px`, and its true depth lies within the locator's
/// trusted range (inclusive). Pass radius zero to match noise-free
/// synthesis.
pub fn oracle_count(
    scene: &SceneTruth,
    poses: &[RigidTransform],
    color_intrinsics: &CameraIntrinsics,
    locator: &LocatorConfig,
    occlusion_radius_px: f64,
) -> usize {
    let mut countable = vec![false; scene.bunches.len()];
    for pose in poses {
        let camera_from_world = pose.inverse();
        let views = project_bunches(scene, &camera_from_world, color_intrinsics);
        for (i, view) in views.iter().enumerate() {
            if countable[i] {
                continue;
            }
            let Some(view) = view else { continue };
            if view.in_raster
                && view.z >= locator.min_range
                && view.z <= locator.max_range
                && !is_occluded(&views, i, occlusion_radius_px)
            {
                countable[i] = true;
            }
        }
    }
    countable.iter().filter(|&&c| c).count()
}
