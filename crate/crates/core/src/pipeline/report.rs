use serde::{Deserialize, Serialize};

use crate::counter::{BunchRecord, CounterConfig};
use crate::locator::LocatorConfig;
use crate::tracker::TrackerConfig;

/// Per-frame processing counters.
///
/// For a processed frame, `detections == located + rejected_range +
/// rejected_no_depth`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frame_id: u64,
    /// Frame could not be processed (e.g. unreadable depth) and was skipped.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub skipped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    /// Detections submitted to location after confidence filtering/clamping.
    pub detections: u32,
    /// Detections removed by the confidence filter or an empty raster clamp.
    pub dropped_detections: u32,
    pub located: u32,
    pub rejected_range: u32,
    pub rejected_no_depth: u32,
    pub new_bunches: u32,
    pub relocated: u32,
    pub tracker_matched: u32,
    pub tracker_created: u32,
    pub tracker_removed: u32,
    /// Valid depth pixels lost to out-of-raster reprojection.
    pub registration_dropped: u32,
}

/// The configs a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub tracker: TrackerConfig,
    pub locator: LocatorConfig,
    pub counter: CounterConfig,
    pub min_confidence: f64,
}

/// Result of processing one observation stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    /// Number of distinct bunches counted; equals `records.len()`.
    pub final_count: u64,
    pub records: Vec<BunchRecord>,
    pub configs: ConfigEcho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub per_frame: Vec<FrameStats>,
}

impl CountReport {
    /// Stable pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Marker-file export of the counted records (one line per record).
    pub fn write_markers<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        crate::counter::write_marker_lines(&self.records, self.configs.counter.threshold, w)
    }
}

/// Counts from repeated runs plus their arithmetic mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: u32,
    pub base_seed: u64,
    pub counts: Vec<u64>,
    pub mean: f64,
}

impl RunSummary {
    pub fn new(base_seed: u64, counts: Vec<u64>) -> Self {
        let mean = if counts.is_empty() {
            0.0
        } else {
            counts.iter().sum::<u64>() as f64 / counts.len() as f64
        };
        Self { runs: counts.len() as u32, base_seed, counts, mean }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
