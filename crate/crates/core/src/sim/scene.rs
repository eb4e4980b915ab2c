use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{stream_rng, SimError, STREAM_PLACEMENT};
use crate::counter::diff;
use crate::geometry::Point3;

/// One trellis row, a straight line segment the bunches hang along.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowSegment {
    pub start: Point3,
    pub end: Point3,
}

/// Ground truth for a synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    /// World centers of the bunches, the quantities being counted.
    pub bunches: Vec<Point3>,
    /// Bunch cylinder diameter in meters.
    pub cylinder_width: f64,
    /// Bunch cylinder height in meters.
    pub cylinder_height: f64,
    pub rows: Vec<RowSegment>,
}

impl SceneTruth {
    /// Smallest pairwise mean-absolute-difference between bunch centers;
    /// `None` for fewer than two bunches.
    pub fn min_pairwise_diff(&self) -> Option<f64> {
        let mut min: Option<f64> = None;
        for i in 0..self.bunches.len() {
            for j in (i + 1)..self.bunches.len() {
                let d = diff(self.bunches[i], self.bunches[j]);
                min = Some(match min {
                    Some(m) => m.min(d),
                    None => d,
                });
            }
        }
        min
    }
}

/// Row grid: `count` parallel rows along +x, spaced along +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RowLayout {
    pub count: u32,
    /// Aisle width between adjacent rows, meters.
    pub spacing: f64,
    /// Length of each row, meters.
    pub length: f64,
}

impl Default for RowLayout {
    fn default() -> Self {
        Self { count: 2, spacing: 3.0, length: 50.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub n_bunches: usize,
    pub rows: RowLayout,
    /// Required mean-absolute-difference between any two bunch centers.
    /// The default keeps it above twice the default counting threshold;
    /// lower it explicitly to build a clustered scene.
    pub min_separation: f64,
    /// Bunch heights alternate between these two bands along a row.
    pub height_low: f64,
    pub height_high: f64,
    /// Uniform placement jitter half-widths, meters.
    pub jitter_along: f64,
    pub jitter_lateral: f64,
    pub jitter_vertical: f64,
    /// Placement retries per bunch before giving up.
    pub max_attempts: u32,
    pub cylinder_width: f64,
    pub cylinder_height: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_bunches: 84,
            rows: RowLayout::default(),
            min_separation: 0.45,
            height_low: 1.0,
            height_high: 1.55,
            jitter_along: 0.10,
            jitter_lateral: 0.05,
            jitter_vertical: 0.05,
            max_attempts: 200,
            cylinder_width: 0.2,
            cylinder_height: 0.3,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.rows.count == 0 || self.rows.length <= 0.0 || self.rows.spacing <= 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "row layout must have count > 0 and positive length/spacing, got {:?}",
                self.rows
            )));
        }
        if !self.min_separation.is_finite() || self.min_separation < 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "min_separation must be non-negative, got {}",
                self.min_separation
            )));
        }
        if self.max_attempts == 0 {
            return Err(SimError::InvalidConfig("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

/// Place `config.n_bunches` bunch centers along the rows.
///
/// Bunches occupy evenly spaced slots, alternating between the two height
/// bands, each jittered uniformly. A candidate closer than `min_separation`
/// (in the counting metric) to an accepted bunch is redrawn, up to
/// `max_attempts` times; exhausting the attempts reports the packing as
/// infeasible. Deterministic for a given seed.
pub fn generate_scene(seed: u64, config: &SceneConfig) -> Result<SceneTruth, SimError> {
    config.validate()?;
    let mut rng = stream_rng(seed, STREAM_PLACEMENT);
    let rows: Vec<RowSegment> = (0..config.rows.count)
        .map(|r| {
            let y = f64::from(r) * config.rows.spacing;
            RowSegment {
                start: Point3::new(0.0, y, 0.0),
                end: Point3::new(config.rows.length, y, 0.0),
            }
        })
        .collect();

    let per_row = config.n_bunches.div_ceil(config.rows.count as usize).max(1);
    let slot_dx = config.rows.length / per_row as f64;
    let mut bunches: Vec<Point3> = Vec::with_capacity(config.n_bunches);
    for i in 0..config.n_bunches {
        let row = i / per_row;
        let slot = i % per_row;
        let base_x = (slot as f64 + 0.5) * slot_dx;
        let base_y = row as f64 * config.rows.spacing;
        let base_z =
            if slot.is_multiple_of(2) { config.height_low } else { config.height_high };
        let mut placed = false;
        for _ in 0..config.max_attempts {
            let candidate = Point3::new(
                base_x + jitter(&mut rng, config.jitter_along),
                base_y + jitter(&mut rng, config.jitter_lateral),
                base_z + jitter(&mut rng, config.jitter_vertical),
            );
            if bunches.iter().all(|b| diff(*b, candidate) > config.min_separation) {
                bunches.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SimError::InfeasiblePacking {
                placed: i,
                requested: config.n_bunches,
                attempts: config.max_attempts,
            });
        }
    }
    Ok(SceneTruth {
        bunches,
        cylinder_width: config.cylinder_width,
        cylinder_height: config.cylinder_height,
        rows,
    })
}

fn jitter<R: Rng>(rng: &mut R, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.gen_range(-half_width..half_width)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_gives_identical_scenes() {
        let cfg = SceneConfig::default();
        let a = generate_scene(42, &cfg).unwrap();
        let b = generate_scene(42, &cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(43, &cfg).unwrap();
        assert_ne!(a.bunches, c.bunches);
    }

    #[test]
    fn empty_scene() {
        let cfg = SceneConfig { n_bunches: 0, ..Default::default() };
        let scene = generate_scene(1, &cfg).unwrap();
        assert!(scene.bunches.is_empty());
        assert_eq!(scene.rows.len(), 2);
    }

    #[test]
    fn default_scene_has_84_separated_bunches() {
        let scene = generate_scene(42, &SceneConfig::default()).unwrap();
        assert_eq!(scene.bunches.len(), 84);
        // Exhaustive pairwise check of the spacing invariant.
        let min = scene.min_pairwise_diff().unwrap();
        assert!(min > 0.4, "min pairwise diff {min} too small");
    }

    #[test]
    fn infeasible_packing_is_reported() {
        let cfg = SceneConfig {
            n_bunches: 40,
            rows: RowLayout { count: 1, spacing: 3.0, length: 2.0 },
            min_separation: 1.0,
            max_attempts: 50,
            ..Default::default()
        };
        assert!(matches!(
            generate_scene(7, &cfg),
            Err(SimError::InfeasiblePacking { .. })
        ));
    }

    #[test]
    fn clustered_scene_allowed_when_requested() {
        let cfg = SceneConfig {
            n_bunches: 30,
            rows: RowLayout { count: 1, spacing: 3.0, length: 3.0 },
            min_separation: 0.0,
            ..Default::default()
        };
        let scene = generate_scene(5, &cfg).unwrap();
        assert_eq!(scene.bunches.len(), 30);
    }
}
