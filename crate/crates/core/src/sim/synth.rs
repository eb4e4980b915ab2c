use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::scene::SceneTruth;
use super::{frame_rng, SimError, STREAM_DEPTH, STREAM_DETECTION, STREAM_FALSE_POSITIVE};
use crate::geometry::{CameraIntrinsics, DepthImage, Pixel, RigidTransform, INVALID_DEPTH};
use crate::pipeline::{DepthSource, Detection, FrameObservation};
use crate::tracker::BoundingBox;

/// Depth of the synthetic planar background, beyond any trusted range.
pub const BACKGROUND_DEPTH: f64 = 10.0;

/// Seconds between synthesized frames.
const FRAME_PERIOD: f64 = 1.0 / 15.0;

/// The color + depth camera pair and their extrinsic offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraRig {
    pub color: CameraIntrinsics,
    pub depth: CameraIntrinsics,
    /// Maps depth-camera coordinates into the color camera frame.
    pub color_from_depth: RigidTransform,
}

impl Default for CameraRig {
    fn default() -> Self {
        let intrinsics = CameraIntrinsics::new(130.0, 130.0, 79.5, 59.5, 160, 120)
            .expect("default intrinsics are valid");
        Self {
            color: intrinsics,
            depth: intrinsics,
            // A small x baseline so registration is a real reprojection.
            color_from_depth: RigidTransform::from_translation(0.025, 0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Gaussian sigma in pixels applied to each bbox corner coordinate.
    pub pixel_jitter_sigma: f64,
    /// Gaussian sigma in meters applied per painted depth pixel.
    pub depth_noise_sigma: f64,
    /// Probability that a visible bunch yields no detection this frame.
    pub dropout_probability: f64,
    /// Poisson mean of spurious detections per frame.
    pub false_positive_rate: f64,
    /// A bunch is occluded when another bunch center projects strictly
    /// within this many pixels of its own and sits strictly nearer.
    /// Zero disables occlusion.
    pub occlusion_radius_px: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            pixel_jitter_sigma: 0.5,
            depth_noise_sigma: 0.01,
            dropout_probability: 0.05,
            false_positive_rate: 0.02,
            occlusion_radius_px: 6.0,
        }
    }
}

impl NoiseConfig {
    /// Noise-free synthesis: detections sit exactly on projected centers and
    /// the depth raster holds exact ranges.
    pub fn zero() -> Self {
        Self {
            pixel_jitter_sigma: 0.0,
            depth_noise_sigma: 0.0,
            dropout_probability: 0.0,
            false_positive_rate: 0.0,
            occlusion_radius_px: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimError::InvalidConfig(format!("{name} must be in [0, 1], got {v}")))
            }
        };
        prob("dropout_probability", self.dropout_probability)?;
        for (name, v) in [
            ("pixel_jitter_sigma", self.pixel_jitter_sigma),
            ("depth_noise_sigma", self.depth_noise_sigma),
            ("false_positive_rate", self.false_positive_rate),
            ("occlusion_radius_px", self.occlusion_radius_px),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-bunch view geometry shared by the synthesizer and the oracle.
pub(crate) struct BunchView {
    pub pixel: Pixel,
    pub z: f64,
    pub in_raster: bool,
}

/// Project every bunch into the given camera; entries are `None` behind the
/// camera.
pub(crate) fn project_bunches(
    scene: &SceneTruth,
    camera_from_world: &RigidTransform,
    intrinsics: &CameraIntrinsics,
) -> Vec<Option<BunchView>> {
    scene
        .bunches
        .iter()
        .map(|center| {
            let p = camera_from_world.transform_point(*center);
            let (pixel, z) = intrinsics.project(&p).ok()?;
            Some(BunchView { pixel, z, in_raster: intrinsics.contains(pixel) })
        })
        .collect()
}

/// Whether view `i` is occluded by any other projected bunch: one strictly
/// nearer whose center falls strictly within the radius in pixels.
pub(crate) fn is_occluded(views: &[Option<BunchView>], i: usize, radius_px: f64) -> bool {
    let Some(me) = views[i].as_ref() else {
        return false;
    };
    views.iter().enumerate().any(|(j, other)| {
        j != i
            && other.as_ref().is_some_and(|o| {
                o.z < me.z && o.pixel.distance(&me.pixel) < radius_px
            })
    })
}

/// Synthesize what the rig observes from one pose.
///
/// The depth raster starts as a planar background at [`BACKGROUND_DEPTH`] and
/// every bunch in front of the depth camera is painted as a filled disc of
/// its projected radius at its true depth (plus per-pixel noise), nearer
/// discs winning. A detection is emitted for each bunch whose center
/// projects inside the color raster and is not occluded, sized from the
/// cylinder's projected extent, with jittered corners, subject to dropout;
/// false positives are appended at the configured rate. Fully deterministic
/// in `(seed, frame_id)`.
pub fn synthesize_frame(
    scene: &SceneTruth,
    world_from_camera: &RigidTransform,
    rig: &CameraRig,
    noise: &NoiseConfig,
    frame_id: u64,
    seed: u64,
) -> FrameObservation {
    let color_from_world = world_from_camera.inverse();
    let world_from_depth = world_from_camera.compose(&rig.color_from_depth);
    let depth_from_world = world_from_depth.inverse();

    // Depth raster: background plane, then bunch discs, nearest wins.
    let mut depth_rng = frame_rng(seed, frame_id, STREAM_DEPTH);
    let mut raster = vec![BACKGROUND_DEPTH; rig.depth.width as usize * rig.depth.height as usize];
    let depth_views = project_bunches(scene, &depth_from_world, &rig.depth);
    for view in depth_views.iter().flatten() {
        paint_disc(
            &mut raster,
            &rig.depth,
            view,
            scene.cylinder_width / 2.0,
            noise.depth_noise_sigma,
            &mut depth_rng,
        );
    }
    let depth = DepthImage::new(rig.depth.width, rig.depth.height, raster)
        .expect("synthesized depths are positive");

    // True detections.
    let mut det_rng = frame_rng(seed, frame_id, STREAM_DETECTION);
    let color_views = project_bunches(scene, &color_from_world, &rig.color);
    let mut detections = Vec::new();
    for (i, view) in color_views.iter().enumerate() {
        let Some(view) = view else { continue };
        if !view.in_raster || is_occluded(&color_views, i, noise.occlusion_radius_px) {
            continue;
        }
        // Fixed draw order per candidate keeps the stream stable.
        let dropout: f64 = det_rng.gen();
        let jitter: [f64; 4] = std::array::from_fn(|_| {
            let n: f64 = det_rng.sample(StandardNormal);
            noise.pixel_jitter_sigma * n
        });
        let confidence = 0.6 + 0.4 * det_rng.gen::<f64>();
        if dropout < noise.dropout_probability {
            continue;
        }
        let half_w = rig.color.fx * (scene.cylinder_width / 2.0) / view.z;
        let half_h = rig.color.fy * (scene.cylinder_height / 2.0) / view.z;
        let Ok(bbox) = BoundingBox::new(
            view.pixel.u - half_w + jitter[0],
            view.pixel.v - half_h + jitter[1],
            view.pixel.u + half_w + jitter[2],
            view.pixel.v + half_h + jitter[3],
        ) else {
            continue;
        };
        detections.push(Detection { bbox, confidence });
    }

    // False positives.
    let mut fp_rng = frame_rng(seed, frame_id, STREAM_FALSE_POSITIVE);
    if noise.false_positive_rate > 0.0 {
        let poisson = Poisson::new(noise.false_positive_rate).expect("validated rate");
        let n = poisson.sample(&mut fp_rng) as u64;
        for _ in 0..n {
            let u = fp_rng.gen_range(0.0..f64::from(rig.color.width) - 1.0);
            let v = fp_rng.gen_range(0.0..f64::from(rig.color.height) - 1.0);
            let half_w = fp_rng.gen_range(3.0..12.0);
            let half_h = fp_rng.gen_range(4.0..16.0);
            let confidence = 0.25 + 0.35 * fp_rng.gen::<f64>();
            if let Ok(bbox) = BoundingBox::new(u - half_w, v - half_h, u + half_w, v + half_h) {
                detections.push(Detection { bbox, confidence });
            }
        }
    }

    FrameObservation {
        frame_id,
        timestamp: frame_id as f64 * FRAME_PERIOD,
        world_from_camera: *world_from_camera,
        detections,
        depth: DepthSource::Inline(depth),
    }
}

/// Synthesize a whole pass: one observation per pose, frame ids 0..n.
pub fn synthesize_run(
    scene: &SceneTruth,
    poses: &[RigidTransform],
    rig: &CameraRig,
    noise: &NoiseConfig,
    seed: u64,
) -> Vec<FrameObservation> {
    poses
        .iter()
        .enumerate()
        .map(|(i, pose)| synthesize_frame(scene, pose, rig, noise, i as u64, seed))
        .collect()
}

fn paint_disc(
    raster: &mut [f64],
    intrinsics: &CameraIntrinsics,
    view: &BunchView,
    radius_m: f64,
    depth_sigma: f64,
    rng: &mut ChaCha8Rng,
) {
    let r_px = intrinsics.fx * radius_m / view.z;
    let x_lo = ((view.pixel.u - r_px).ceil().max(0.0)) as i64;
    let x_hi = ((view.pixel.u + r_px).floor().min(f64::from(intrinsics.width) - 1.0)) as i64;
    let y_lo = ((view.pixel.v - r_px).ceil().max(0.0)) as i64;
    let y_hi = ((view.pixel.v + r_px).floor().min(f64::from(intrinsics.height) - 1.0)) as i64;
    if x_lo > x_hi || y_lo > y_hi {
        return;
    }
    let r2 = r_px * r_px;
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let du = x as f64 - view.pixel.u;
            let dv = y as f64 - view.pixel.v;
            if du * du + dv * dv > r2 {
                continue;
            }
            let n: f64 = rng.sample(StandardNormal);
            let value = view.z + depth_sigma * n;
            if value <= 0.0 || !value.is_finite() {
                continue;
            }
            let idx = y as usize * intrinsics.width as usize + x as usize;
            if raster[idx] == INVALID_DEPTH || value < raster[idx] {
                raster[idx] = value;
            }
        }
    }
}
