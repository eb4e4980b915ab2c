use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::observation::{FrameObservation, StreamHeader};
use super::report::{ConfigEcho, CountReport, FrameStats};
use super::stream::StreamReader;
use super::PipelineError;
use crate::counter::{AddDecision, CounterConfig, CountingList};
use crate::geometry::{register_depth, CameraIntrinsics, Pixel, RigidTransform};
use crate::locator::{locate, LocateOutcome, LocatorConfig};
use crate::tracker::{CentroidTracker, TrackerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub tracker: TrackerConfig,
    pub locator: LocatorConfig,
    pub counter: CounterConfig,
    /// Detections below this confidence are ignored. Zero keeps everything.
    pub min_confidence: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            locator: LocatorConfig::default(),
            counter: CounterConfig::default(),
            min_confidence: 0.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |e: String| PipelineError::Config(e);
        self.tracker.validate().map_err(|e| cfg(e.to_string()))?;
        self.locator.validate().map_err(|e| cfg(e.to_string()))?;
        self.counter.validate().map_err(|e| cfg(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(cfg(format!(
                "min_confidence must be in [0, 1], got {}",
                self.min_confidence
            )));
        }
        Ok(())
    }
}

/// Sequential per-frame processing state: registration, tracking (diagnostic),
/// location and the counting list.
pub struct Pipeline {
    color_intrinsics: CameraIntrinsics,
    depth_intrinsics: CameraIntrinsics,
    color_from_depth: RigidTransform,
    config: PipelineConfig,
    tracker: CentroidTracker,
    list: CountingList,
    per_frame: Vec<FrameStats>,
    last_frame_id: Option<u64>,
}

impl Pipeline {
    pub fn new(
        color_intrinsics: CameraIntrinsics,
        depth_intrinsics: CameraIntrinsics,
        color_from_depth: RigidTransform,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self {
            color_intrinsics,
            depth_intrinsics,
            color_from_depth,
            tracker: CentroidTracker::new(config.tracker)
                .map_err(|e| PipelineError::Config(e.to_string()))?,
            list: CountingList::new(config.counter)
                .map_err(|e| PipelineError::Config(e.to_string()))?,
            config,
            per_frame: Vec::new(),
            last_frame_id: None,
        })
    }

    /// Build from a stream header: header configs override the defaults, and
    /// an explicit `min_confidence` overrides the lot.
    pub fn from_header(
        header: &StreamHeader,
        min_confidence: Option<f64>,
    ) -> Result<Self, PipelineError> {
        let defaults = PipelineConfig::default();
        let config = PipelineConfig {
            tracker: header.tracker.unwrap_or(defaults.tracker),
            locator: header.locator.unwrap_or(defaults.locator),
            counter: header.counter.unwrap_or(defaults.counter),
            min_confidence: min_confidence.unwrap_or(defaults.min_confidence),
        };
        Self::new(
            header.color_intrinsics,
            header.depth_intrinsics,
            header.color_from_depth,
            config,
        )
    }

    pub fn count(&self) -> usize {
        self.list.count()
    }

    pub fn counting_list(&self) -> &CountingList {
        &self.list
    }

    /// Process one observation. Depth paths resolve against `base_dir`.
    ///
    /// A frame whose depth cannot be read (or does not match the depth
    /// intrinsics) is skipped with a warning stat rather than aborting the
    /// stream; an out-of-order frame id is an error.
    pub fn process_frame(
        &mut self,
        obs: &FrameObservation,
        base_dir: &Path,
    ) -> Result<&FrameStats, PipelineError> {
        if let Some(last) = self.last_frame_id {
            if obs.frame_id <= last {
                return Err(PipelineError::OutOfOrderFrame { last, got: obs.frame_id });
            }
        }
        self.last_frame_id = Some(obs.frame_id);

        let mut stats = FrameStats { frame_id: obs.frame_id, ..Default::default() };

        let depth = match obs.depth.resolve(base_dir) {
            Ok(d) => d,
            Err(e) => {
                stats.skipped = true;
                stats.warning = Some(format!("depth unreadable: {e}"));
                self.per_frame.push(stats);
                return Ok(self.per_frame.last().unwrap());
            }
        };
        if (depth.width(), depth.height())
            != (self.depth_intrinsics.width, self.depth_intrinsics.height)
        {
            stats.skipped = true;
            stats.warning = Some(format!(
                "depth raster {}x{} does not match depth intrinsics {}x{}",
                depth.width(),
                depth.height(),
                self.depth_intrinsics.width,
                self.depth_intrinsics.height
            ));
            self.per_frame.push(stats);
            return Ok(self.per_frame.last().unwrap());
        }

        let (registered, reg_diag) = register_depth(
            &depth,
            &self.depth_intrinsics,
            &self.color_intrinsics,
            &self.color_from_depth,
        );
        stats.registration_dropped = reg_diag.dropped as u32;

        // Confidence filter, then clamp boxes into the color raster.
        let mut centroids: Vec<Pixel> = Vec::with_capacity(obs.detections.len());
        for det in &obs.detections {
            if det.confidence < self.config.min_confidence {
                stats.dropped_detections += 1;
                continue;
            }
            match det
                .bbox
                .clamp_to_raster(self.color_intrinsics.width, self.color_intrinsics.height)
            {
                Some(clamped) => centroids.push(clamped.centroid()),
                None => stats.dropped_detections += 1,
            }
        }
        stats.detections = centroids.len() as u32;

        // Tracking is diagnostic; it does not gate counting.
        let tr = self.tracker.update(&centroids);
        stats.tracker_matched = tr.matched.len() as u32;
        stats.tracker_created = tr.created.len() as u32;
        stats.tracker_removed = tr.removed.len() as u32;

        for c in centroids {
            match locate(
                c,
                &registered,
                &self.color_intrinsics,
                &obs.world_from_camera,
                &self.config.locator,
                obs.frame_id,
            ) {
                LocateOutcome::Located(found) => {
                    stats.located += 1;
                    match self.list.try_add(found.world_point) {
                        AddDecision::NewBunch { .. } => stats.new_bunches += 1,
                        AddDecision::Relocated { .. } => stats.relocated += 1,
                    }
                }
                LocateOutcome::NoDepth => stats.rejected_no_depth += 1,
                LocateOutcome::OutOfRange { .. } => stats.rejected_range += 1,
            }
        }

        self.per_frame.push(stats);
        Ok(self.per_frame.last().unwrap())
    }

    pub fn per_frame(&self) -> &[FrameStats] {
        &self.per_frame
    }

    pub fn into_report(self, seed: Option<u64>) -> CountReport {
        CountReport {
            final_count: self.list.count() as u64,
            records: self.list.records().to_vec(),
            configs: ConfigEcho {
                tracker: self.config.tracker,
                locator: self.config.locator,
                counter: *self.list.config(),
                min_confidence: self.config.min_confidence,
            },
            seed,
            per_frame: self.per_frame,
        }
    }
}

/// Fold a whole stream into a report. Depth paths resolve against
/// `base_dir`.
pub fn process_stream<R: BufRead>(
    reader: R,
    base_dir: &Path,
    min_confidence: Option<f64>,
) -> Result<CountReport, PipelineError> {
    let mut stream = StreamReader::new(reader)?;
    let mut pipeline = Pipeline::from_header(stream.header(), min_confidence)?;
    let seed = stream.header().seed;
    while let Some(frame) = stream.next_frame() {
        pipeline.process_frame(&frame?, base_dir)?;
    }
    Ok(pipeline.into_report(seed))
}

/// [`process_stream`] on a file, resolving depth paths against its directory.
pub fn process_stream_file(
    path: &Path,
    min_confidence: Option<f64>,
) -> Result<CountReport, PipelineError> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    process_stream(BufReader::new(File::open(path)?), base, min_confidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::diff;
    use crate::geometry::{DepthImage, Point3};
    use crate::pipeline::observation::{DepthSource, Detection};
    use crate::tracker::BoundingBox;

    fn rig_k() -> CameraIntrinsics {
        CameraIntrinsics::new(130.0, 130.0, 79.5, 59.5, 160, 120).unwrap()
    }

    fn pipeline() -> Pipeline {
        let k = rig_k();
        Pipeline::new(k, k, RigidTransform::identity(), PipelineConfig::default()).unwrap()
    }

    fn obs(frame_id: u64, detections: Vec<Detection>, depth: DepthImage) -> FrameObservation {
        FrameObservation {
            frame_id,
            timestamp: frame_id as f64 / 15.0,
            world_from_camera: RigidTransform::identity(),
            detections,
            depth: DepthSource::Inline(depth),
        }
    }

    fn centered_detection() -> Detection {
        Detection {
            bbox: BoundingBox::new(73.0, 50.0, 86.0, 69.0).unwrap(),
            confidence: 0.9,
        }
    }

    #[test]
    fn empty_frame_only_ages_tracks() {
        let mut p = pipeline();
        let depth = DepthImage::filled(160, 120, 2.0).unwrap();
        p.process_frame(&obs(0, vec![centered_detection()], depth.clone()), Path::new("."))
            .unwrap();
        assert_eq!(p.count(), 1);
        let stats = p.process_frame(&obs(1, vec![], depth), Path::new(".")).unwrap();
        assert_eq!(stats.detections, 0);
        assert_eq!(stats.new_bunches, 0);
        assert_eq!(p.count(), 1);
        assert_eq!(p.tracker.tracks()[0].disappeared, 1);
    }

    #[test]
    fn first_sighting_increments_count() {
        let mut p = pipeline();
        let depth = DepthImage::filled(160, 120, 2.0).unwrap();
        let stats = p
            .process_frame(&obs(0, vec![centered_detection()], depth), Path::new("."))
            .unwrap();
        assert_eq!(stats.located, 1);
        assert_eq!(stats.new_bunches, 1);
        assert_eq!(p.count(), 1);
    }

    #[test]
    fn reobservation_after_small_motion_relocates() {
        let k = rig_k();
        let mut p = pipeline();
        let depth = DepthImage::filled(160, 120, 2.0).unwrap();
        let first = obs(0, vec![centered_detection()], depth.clone());
        p.process_frame(&first, Path::new(".")).unwrap();
        let before = p.counting_list().records()[0].position;

        // Camera slides 0.05 m along x; the same bunch seen from the new
        // pose lands within the threshold of the stored record.
        let mut second = obs(1, vec![centered_detection()], depth);
        second.world_from_camera = RigidTransform::from_translation(0.05, 0.0, 0.0);
        let stats = p.process_frame(&second, Path::new(".")).unwrap().clone();
        let after = p.counting_list().records()[0];

        // The second sighting differs by exactly the camera shift.
        let c = centered_detection().bbox.centroid();
        let cam = k.backproject(c, 2.0).unwrap();
        let moved = Point3::new(cam.x + 0.05, cam.y, cam.z);
        assert!(diff(before, moved) < 0.2, "diff {} not under threshold", diff(before, moved));
        assert_eq!(stats.relocated, 1);
        assert_eq!(p.count(), 1);
        assert_eq!(after.observations, 1);
        assert_eq!(after.position, before, "record position must not move");
    }

    #[test]
    fn out_of_order_frame_is_an_error() {
        let mut p = pipeline();
        let depth = DepthImage::filled(160, 120, 2.0).unwrap();
        p.process_frame(&obs(5, vec![], depth.clone()), Path::new(".")).unwrap();
        let err = p.process_frame(&obs(5, vec![], depth), Path::new(".")).unwrap_err();
        assert!(matches!(err, PipelineError::OutOfOrderFrame { last: 5, got: 5 }));
    }

    #[test]
    fn unreadable_depth_skips_frame_with_warning() {
        let mut p = pipeline();
        let bad = FrameObservation {
            depth: DepthSource::Path("missing/nowhere.pgm".into()),
            ..obs(0, vec![centered_detection()], DepthImage::empty(1, 1))
        };
        let stats = p.process_frame(&bad, Path::new("/nonexistent")).unwrap();
        assert!(stats.skipped);
        assert!(stats.warning.is_some());
        assert_eq!(p.count(), 0);
        // The stream continues afterwards.
        let depth = DepthImage::filled(160, 120, 2.0).unwrap();
        let ok = p.process_frame(&obs(1, vec![centered_detection()], depth), Path::new("."));
        assert_eq!(ok.unwrap().located, 1);
    }

    #[test]
    fn mismatched_depth_raster_skips_frame() {
        let mut p = pipeline();
        let wrong = DepthImage::filled(8, 8, 2.0).unwrap();
        let stats = p.process_frame(&obs(0, vec![], wrong), Path::new(".")).unwrap();
        assert!(stats.skipped);
        assert!(stats.warning.as_deref().unwrap().contains("does not match"));
    }

    #[test]
    fn confidence_filter_drops_detections() {
        let k = rig_k();
        let config = PipelineConfig { min_confidence: 0.5, ..Default::default() };
        let mut p = Pipeline::new(k, k, RigidTransform::identity(), config).unwrap();
        let weak = Detection { confidence: 0.2, ..centered_detection() };
        let depth = DepthImage::filled(160, 120, 2.0).unwrap();
        let stats = p
            .process_frame(&obs(0, vec![weak, centered_detection()], depth), Path::new("."))
            .unwrap();
        assert_eq!(stats.dropped_detections, 1);
        assert_eq!(stats.detections, 1);
    }

    #[test]
    fn stats_conservation_across_outcomes() {
        let mut p = pipeline();
        // Three detections: one over valid depth, one over invalid depth,
        // one over out-of-range depth.
        let mut depth = DepthImage::empty(160, 120);
        for y in 45..75 {
            for x in 10..40 {
                depth.set(x, y, 2.0); // in range
            }
            for x in 110..150 {
                depth.set(x as u32, y, 7.0); // beyond max range
            }
        }
        let dets = vec![
            Detection { bbox: BoundingBox::new(15.0, 50.0, 35.0, 70.0).unwrap(), confidence: 1.0 },
            Detection { bbox: BoundingBox::new(60.0, 50.0, 80.0, 70.0).unwrap(), confidence: 1.0 },
            Detection {
                bbox: BoundingBox::new(115.0, 50.0, 145.0, 70.0).unwrap(),
                confidence: 1.0,
            },
        ];
        let stats = p.process_frame(&obs(0, dets, depth), Path::new(".")).unwrap();
        assert_eq!(stats.detections, 3);
        assert_eq!(stats.located, 1);
        assert_eq!(stats.rejected_no_depth, 1);
        assert_eq!(stats.rejected_range, 1);
        assert_eq!(
            stats.detections,
            stats.located + stats.rejected_range + stats.rejected_no_depth
        );
    }

    #[test]
    fn empty_stream_counts_zero() {
        let k = rig_k();
        let header = StreamHeader::new(k, k, RigidTransform::identity());
        let mut buf = Vec::new();
        crate::pipeline::StreamWriter::new(&mut buf, &header).unwrap();
        let report = super::process_stream(buf.as_slice(), Path::new("."), None).unwrap();
        assert_eq!(report.final_count, 0);
        assert!(report.records.is_empty());
        assert!(report.per_frame.is_empty());
    }

    #[test]
    fn report_count_matches_records() {
        let mut p = pipeline();
        let depth = DepthImage::filled(160, 120, 2.0).unwrap();
        p.process_frame(&obs(0, vec![centered_detection()], depth), Path::new("."))
            .unwrap();
        let report = p.into_report(Some(3));
        assert_eq!(report.final_count, report.records.len() as u64);
        assert_eq!(report.seed, Some(3));
        let back = CountReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }
}
