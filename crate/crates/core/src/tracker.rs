//! Frame-to-frame association of detection centroids.
//!
//! Tracks carry a persistent ID and the last observed centroid. On each
//! update the tracker repeatedly matches the globally closest
//! (track, centroid) pair among the still-unmatched ones, as long as the
//! distance is within the gate. Unmatched centroids become new tracks;
//! tracks unmatched for more than `max_disappeared` consecutive updates are
//! deregistered.
//!
//! IDs are diagnostic: the count comes from 3D positions downstream, so an ID
//! switch between close bunches is tolerated here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pixel;

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error("invalid tracker config: {0}")]
    InvalidConfig(String),
    #[error("degenerate bounding box [{u_min}, {v_min}, {u_max}, {v_max}]")]
    DegenerateBox { u_min: f64, v_min: f64, u_max: f64, v_max: f64 },
}

/// An axis-aligned pixel rectangle with positive extent on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct BoundingBox {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl BoundingBox {
    pub fn new(u_min: f64, v_min: f64, u_max: f64, v_max: f64) -> Result<Self, TrackerError> {
        let finite = [u_min, v_min, u_max, v_max].iter().all(|c| c.is_finite());
        if !finite || u_max <= u_min || v_max <= v_min {
            return Err(TrackerError::DegenerateBox { u_min, v_min, u_max, v_max });
        }
        Ok(Self { u_min, v_min, u_max, v_max })
    }

    /// The rectangle midpoint.
    pub fn centroid(&self) -> Pixel {
        Pixel::new((self.u_min + self.u_max) / 2.0, (self.v_min + self.v_max) / 2.0)
    }

    /// Intersect with `[0, width-1] x [0, height-1]`; `None` when nothing
    /// with positive extent remains.
    pub fn clamp_to_raster(&self, width: u32, height: u32) -> Option<BoundingBox> {
        let u_min = self.u_min.max(0.0);
        let v_min = self.v_min.max(0.0);
        let u_max = self.u_max.min(f64::from(width) - 1.0);
        let v_max = self.v_max.min(f64::from(height) - 1.0);
        BoundingBox::new(u_min, v_min, u_max, v_max).ok()
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.u_min, b.v_min, b.u_max, b.v_max]
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = String;

    fn try_from(a: [f64; 4]) -> Result<Self, String> {
        BoundingBox::new(a[0], a[1], a[2], a[3]).map_err(|e| e.to_string())
    }
}

/// Midpoint of a bounding box (the tracked point of a detection).
pub fn centroid_of(bbox: &BoundingBox) -> Pixel {
    bbox.centroid()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Consecutive missed updates a track survives; one more deregisters it.
    pub max_disappeared: u32,
    /// Matching gate in pixels; pairs farther apart are never associated.
    pub max_match_distance: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { max_disappeared: 5, max_match_distance: 75.0 }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerError> {
        if !self.max_match_distance.is_finite() || self.max_match_distance <= 0.0 {
            return Err(TrackerError::InvalidConfig(format!(
                "max_match_distance must be positive, got {}",
                self.max_match_distance
            )));
        }
        Ok(())
    }
}

/// A persistent centroid identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    /// Monotonically increasing; never reused within one tracker.
    pub id: u64,
    /// Last observed centroid.
    pub centroid: Pixel,
    /// Consecutive updates without a match.
    pub disappeared: u32,
}

/// What one update did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateReport {
    /// (track id, matched centroid), sorted by id.
    pub matched: Vec<(u64, Pixel)>,
    /// IDs created for unmatched centroids.
    pub created: Vec<u64>,
    /// IDs deregistered this update.
    pub removed: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct CentroidTracker {
    config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
}

impl CentroidTracker {
    pub fn new(config: TrackerConfig) -> Result<Self, TrackerError> {
        config.validate()?;
        Ok(Self { config, tracks: Vec::new(), next_id: 1 })
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Associate one frame's centroids with the live tracks.
    ///
    /// Matching is greedy on the global minimum distance, iterated over the
    /// remaining unmatched pairs. Ties break on lower track id, then on the
    /// lexicographically smaller centroid, so the result does not depend on
    /// input order.
    pub fn update(&mut self, centroids: &[Pixel]) -> UpdateReport {
        let gate = self.config.max_match_distance;
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, track) in self.tracks.iter().enumerate() {
            for (ci, c) in centroids.iter().enumerate() {
                let d = track.centroid.distance(c);
                if d <= gate {
                    pairs.push((d, ti, ci));
                }
            }
        }
        pairs.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| self.tracks[a.1].id.cmp(&self.tracks[b.1].id))
                .then_with(|| centroids[a.2].u.total_cmp(&centroids[b.2].u))
                .then_with(|| centroids[a.2].v.total_cmp(&centroids[b.2].v))
        });

        let mut track_used = vec![false; self.tracks.len()];
        let mut centroid_used = vec![false; centroids.len()];
        let mut report = UpdateReport::default();
        for (_, ti, ci) in pairs {
            if track_used[ti] || centroid_used[ci] {
                continue;
            }
            track_used[ti] = true;
            centroid_used[ci] = true;
            let track = &mut self.tracks[ti];
            track.centroid = centroids[ci];
            track.disappeared = 0;
            report.matched.push((track.id, centroids[ci]));
        }
        report.matched.sort_by_key(|(id, _)| *id);

        // Age and deregister unmatched tracks.
        let max_disappeared = self.config.max_disappeared;
        let mut survivors = Vec::with_capacity(self.tracks.len());
        for (ti, mut track) in std::mem::take(&mut self.tracks).into_iter().enumerate() {
            if !track_used[ti] {
                track.disappeared += 1;
                if track.disappeared > max_disappeared {
                    report.removed.push(track.id);
                    continue;
                }
            }
            survivors.push(track);
        }
        self.tracks = survivors;

        // New tracks for unmatched centroids, in lexicographic order so ID
        // assignment is independent of input order.
        let mut fresh: Vec<Pixel> = centroids
            .iter()
            .zip(&centroid_used)
            .filter(|(_, used)| !**used)
            .map(|(c, _)| *c)
            .collect();
        fresh.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v)));
        for c in fresh {
            let id = self.next_id;
            self.next_id += 1;
            self.tracks.push(Track { id, centroid: c, disappeared: 0 });
            report.created.push(id);
        }
        report
    }
}
