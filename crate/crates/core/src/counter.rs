//! The counting list: spatial deduplication of located detections.
//!
//! A bunch is modeled as a cylinder in space; any 3D sighting of the same
//! bunch from another viewpoint must fall inside it. A candidate whose
//! mean absolute coordinate difference ([`diff`]) to some existing record is
//! within the threshold is a relocation of that record; otherwise it is a new
//! bunch and joins the list. Record positions are the first accepted sighting
//! and never move, so the pairwise separation of records is invariant.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point3;

#[derive(Debug, Error)]
pub enum CounterError {
    #[error("invalid counter config: {0}")]
    InvalidConfig(String),
}

/// Mean absolute coordinate difference between two points, in meters:
/// `(|x2-x1| + |y2-y1| + |z2-z1|) / 3`.
///
/// This is the L1 distance scaled by 1/3, not the euclidean distance; see
/// [`euclidean_distance`] for the diagnostic alternative.
pub fn diff(p1: Point3, p2: Point3) -> f64 {
    ((p2.x - p1.x).abs() + (p2.y - p1.y).abs() + (p2.z - p1.z).abs()) / 3.0
}

/// Euclidean distance, exposed for diagnostic comparison against [`diff`]
/// only; the counting rule never uses it.
pub fn euclidean_distance(p1: Point3, p2: Point3) -> f64 {
    let (dx, dy, dz) = (p2.x - p1.x, p2.y - p1.y, p2.z - p1.z);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CounterConfig {
    /// Relocation threshold in meters for [`diff`].
    ///
    /// The default derives from the cylinder model below as
    /// `(width + width + height) / 3 ≈ 0.233`, rounded down for safety.
    pub threshold: f64,
    /// Cylinder diameter in meters; documents how the threshold was derived.
    pub cylinder_width: f64,
    /// Cylinder height in meters.
    pub cylinder_height: f64,
}

impl Default for CounterConfig {
    fn default() -> Self {
        Self { threshold: 0.2, cylinder_width: 0.2, cylinder_height: 0.3 }
    }
}

impl CounterConfig {
    pub fn validate(&self) -> Result<(), CounterError> {
        if !self.threshold.is_finite() || self.threshold <= 0.0 {
            return Err(CounterError::InvalidConfig(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// A counted bunch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BunchRecord {
    /// 1-based count order.
    pub index: u32,
    /// First accepted world point; never updated afterwards.
    pub position: Point3,
    /// Number of relocations absorbed: repeat sightings beyond the first.
    pub observations: u32,
}

/// What [`CountingList::try_add`] decided for a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddDecision {
    NewBunch { index: u32 },
    Relocated { index: u32 },
}

#[derive(Debug, Clone)]
pub struct CountingList {
    config: CounterConfig,
    records: Vec<BunchRecord>,
}

impl CountingList {
    pub fn new(config: CounterConfig) -> Result<Self, CounterError> {
        config.validate()?;
        Ok(Self { config, records: Vec::new() })
    }

    pub fn config(&self) -> &CounterConfig {
        &self.config
    }

    /// Compare a candidate against every record. Within threshold of at
    /// least one record it relocates the nearest such record (ties keep the
    /// lowest index) and the list is unchanged; otherwise it becomes a new
    /// record with the next index.
    pub fn try_add(&mut self, candidate: Point3) -> AddDecision {
        debug_assert!(candidate.is_finite());
        let nearest = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| (i, diff(candidate, r.position)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, d)) = nearest {
            if d <= self.config.threshold {
                self.records[i].observations += 1;
                return AddDecision::Relocated { index: self.records[i].index };
            }
        }
        let index = self.records.len() as u32 + 1;
        self.records.push(BunchRecord { index, position: candidate, observations: 0 });
        AddDecision::NewBunch { index }
    }

    pub fn count(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[BunchRecord] {
        &self.records
    }

    /// Export one line per record: `index x y z radius`, coordinates in
    /// meters with 9 significant digits and the sphere radius equal to the
    /// threshold. File-based stand-in for publishing sphere markers.
    pub fn write_markers<W: Write>(&self, w: W) -> io::Result<()> {
        write_marker_lines(&self.records, self.config.threshold, w)
    }
}

/// Marker-file body used by [`CountingList::write_markers`] and by report
/// exports.
pub fn write_marker_lines<W: Write>(
    records: &[BunchRecord],
    radius: f64,
    mut w: W,
) -> io::Result<()> {
    for r in records {
        writeln!(
            w,
            "{} {} {} {} {}",
            r.index,
            Sig9(r.position.x),
            Sig9(r.position.y),
            Sig9(r.position.z),
            Sig9(radius),
        )?;
    }
    Ok(())
}

/// Formats with exactly 9 significant digits (scientific notation).
struct Sig9(f64);

impl std::fmt::Display for Sig9 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.8e}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    #[test]
    fn diff_of_identical_points_is_zero() {
        let q = p(1.0, 2.0, 3.0);
        assert_eq!(diff(q, q), 0.0);
    }

    #[test]
    fn diff_matches_hand_evaluation() {
        // (|0.3| + 0 + 0) / 3 in f64; one ulp below the literal 0.1.
        let d = diff(p(0.0, 0.0, 0.0), p(0.3, 0.0, 0.0));
        assert_eq!(d, 0.3 / 3.0);
        assert!((d - 0.1).abs() < 1e-16);
        // (|0.3| + |-0.3| + |0.3|) / 3 rounds to exactly 0.3.
        assert_eq!(diff(p(1.0, 2.0, 3.0), p(1.3, 1.7, 3.3)), 0.3);
    }

    #[test]
    fn diff_is_symmetric_translation_invariant_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let a = p(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let b = p(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            assert_eq!(diff(a, b), diff(b, a));
            let t = p(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let at = p(a.x + t.x, a.y + t.y, a.z + t.z);
            let bt = p(b.x + t.x, b.y + t.y, b.z + t.z);
            assert!((diff(at, bt) - diff(a, b)).abs() < 1e-12);
            let s = 3.0;
            let asc = p(a.x * s, a.y * s, a.z * s);
            let bsc = p(b.x * s, b.y * s, b.z * s);
            assert!((diff(asc, bsc) - s * diff(a, b)).abs() < 1e-12);
            // One third of the L1 distance, zero iff equal.
            let l1 = (b.x - a.x).abs() + (b.y - a.y).abs() + (b.z - a.z).abs();
            assert!((diff(a, b) - l1 / 3.0).abs() < 1e-15);
            assert_eq!(diff(a, b) == 0.0, a == b);
        }
    }

    #[test]
    fn first_candidate_is_always_counted() {
        let mut list = CountingList::new(CounterConfig::default()).unwrap();
        assert_eq!(list.try_add(p(4.2, -1.0, 2.0)), AddDecision::NewBunch { index: 1 });
        assert_eq!(list.count(), 1);
    }

    #[test]
    fn within_threshold_relocates() {
        let mut list = CountingList::new(CounterConfig::default()).unwrap();
        list.try_add(p(0.0, 0.0, 0.0));
        // diff = 0.1 <= 0.2
        assert_eq!(list.try_add(p(0.3, 0.0, 0.0)), AddDecision::Relocated { index: 1 });
        assert_eq!(list.count(), 1);
        assert_eq!(list.records()[0].observations, 1);
        // The stored position is the first sighting, unchanged.
        assert_eq!(list.records()[0].position, p(0.0, 0.0, 0.0));
    }

    #[test]
    fn beyond_threshold_counts_a_new_bunch() {
        let mut list = CountingList::new(CounterConfig::default()).unwrap();
        list.try_add(p(0.0, 0.0, 0.0));
        // diff ≈ 0.233 > 0.2
        assert_eq!(list.try_add(p(0.7, 0.0, 0.0)), AddDecision::NewBunch { index: 2 });
        assert_eq!(list.count(), 2);
    }

    #[test]
    fn repeated_identical_adds_stay_one_record() {
        let mut list = CountingList::new(CounterConfig::default()).unwrap();
        for _ in 0..100 {
            list.try_add(p(1.0, 1.0, 1.0));
        }
        assert_eq!(list.count(), 1);
        // 99 relocations after the first sighting.
        assert_eq!(list.records()[0].observations, 99);
    }

    #[test]
    fn relocation_picks_nearest_record() {
        let cfg = CounterConfig { threshold: 0.5, ..Default::default() };
        let mut list = CountingList::new(cfg).unwrap();
        list.try_add(p(0.0, 0.0, 0.0));
        list.try_add(p(3.0, 0.0, 0.0));
        // Within threshold of both would need diff <= 0.5 to each; pick a
        // point clearly nearer the second.
        assert_eq!(list.try_add(p(2.2, 0.0, 0.0)), AddDecision::Relocated { index: 2 });
        assert_eq!(list.records()[1].observations, 1);
    }

    #[test]
    fn separation_invariant_under_randomized_adds() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let cfg = CounterConfig::default();
        let mut list = CountingList::new(cfg).unwrap();
        let clusters: Vec<Point3> = (0..10)
            .map(|_| {
                p(
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                )
            })
            .collect();
        let mut count_before;
        for _ in 0..2000 {
            let candidate = if rng.gen_bool(0.5) {
                let c = clusters[rng.gen_range(0..clusters.len())];
                p(
                    c.x + rng.gen_range(-0.1..0.1),
                    c.y + rng.gen_range(-0.1..0.1),
                    c.z + rng.gen_range(-0.1..0.1),
                )
            } else {
                p(
                    rng.gen_range(-6.0..6.0),
                    rng.gen_range(-6.0..6.0),
                    rng.gen_range(-6.0..6.0),
                )
            };
            count_before = list.count();
            list.try_add(candidate);
            assert!(list.count() >= count_before, "count must never decrease");
        }
        let records = list.records();
        for i in 0..records.len() {
            for j in (i + 1)..records.len() {
                assert!(
                    diff(records[i].position, records[j].position) > cfg.threshold,
                    "records {i} and {j} violate pairwise separation"
                );
            }
        }
        // Idempotence: re-submitting accepted positions changes nothing.
        let n = list.count();
        let positions: Vec<Point3> = records.iter().map(|r| r.position).collect();
        for q in positions {
            assert!(matches!(list.try_add(q), AddDecision::Relocated { .. }));
        }
        assert_eq!(list.count(), n);
    }

    #[test]
    fn marker_export_format() {
        let mut list = CountingList::new(CounterConfig::default()).unwrap();
        list.try_add(p(1.5, -0.25, 2.0));
        let mut buf = Vec::new();
        list.write_markers(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "1 1.50000000e0 -2.50000000e-1 2.00000000e0 2.00000000e-1\n");
    }

    #[test]
    fn config_validation() {
        assert!(CounterConfig::default().validate().is_ok());
        assert!(CounterConfig { threshold: 0.0, ..Default::default() }.validate().is_err());
        assert!(CounterConfig { threshold: -1.0, ..Default::default() }.validate().is_err());
    }
}
