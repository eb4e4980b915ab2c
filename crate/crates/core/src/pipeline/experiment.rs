//! Whole-run orchestration over the simulator: single runs, repeated
//! jittered runs, and file export.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::observation::{DepthSource, FrameObservation, StreamHeader};
use super::process::{Pipeline, PipelineConfig};
use super::report::{CountReport, RunSummary};
use super::stream::StreamWriter;
use super::PipelineError;
use crate::geometry::save_pgm;
use crate::sim::{
    generate_scene, synthesize_run, CameraRig, NoiseConfig, SceneConfig, SceneTruth, ScanParams,
    TrajectoryConfig,
};

/// Everything a simulated counting run needs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub trajectory: ScanParams,
    pub rig: CameraRig,
    pub noise: NoiseConfig,
    pub pipeline: PipelineConfig,
}

impl ExperimentConfig {
    /// The same setup with every noise source and the pose jitter disabled.
    pub fn zero_noise(mut self) -> Self {
        self.noise = NoiseConfig::zero();
        self.trajectory.translation_jitter_sigma = 0.0;
        self.trajectory.rotation_jitter_sigma = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.scene.validate()?;
        self.noise.validate()?;
        self.pipeline.validate()?;
        if !self.trajectory.speed.is_finite() || self.trajectory.speed <= 0.0 {
            return Err(PipelineError::Config(format!(
                "trajectory speed must be positive, got {}",
                self.trajectory.speed
            )));
        }
        let locator = &self.pipeline.locator;
        if self.trajectory.standoff < locator.min_range
            || self.trajectory.standoff > locator.max_range
        {
            return Err(PipelineError::Config(format!(
                "trajectory standoff {} is outside the locator range [{}, {}]; \
                 the nominal pass would see nothing",
                self.trajectory.standoff, locator.min_range, locator.max_range
            )));
        }
        Ok(())
    }

    fn header(&self, seed: u64) -> StreamHeader {
        StreamHeader {
            tracker: Some(self.pipeline.tracker),
            locator: Some(self.pipeline.locator),
            counter: Some(self.pipeline.counter),
            seed: Some(seed),
            ..StreamHeader::new(self.rig.color, self.rig.depth, self.rig.color_from_depth)
        }
    }
}

fn simulate_frames(
    cfg: &ExperimentConfig,
    scene: &SceneTruth,
    seed: u64,
) -> Vec<FrameObservation> {
    let trajectory = TrajectoryConfig::row_scan(&scene.rows, &cfg.trajectory);
    let mut jitter_rng = crate::sim::stream_rng(seed, crate::sim::STREAM_POSE_JITTER);
    let poses = trajectory.jittered_poses(&mut jitter_rng);
    synthesize_run(scene, &poses, &cfg.rig, &cfg.noise, seed)
}

fn process_frames(
    cfg: &ExperimentConfig,
    frames: &[FrameObservation],
    seed: u64,
) -> Result<CountReport, PipelineError> {
    let mut pipeline = Pipeline::new(
        cfg.rig.color,
        cfg.rig.depth,
        cfg.rig.color_from_depth,
        cfg.pipeline,
    )?;
    for frame in frames {
        pipeline.process_frame(frame, Path::new("."))?;
    }
    Ok(pipeline.into_report(Some(seed)))
}

/// Simulate one pass (scene, jittered trajectory and observations all seeded
/// by `seed`) and count it.
pub fn run_once(cfg: &ExperimentConfig, seed: u64) -> Result<CountReport, PipelineError> {
    cfg.validate()?;
    let scene = generate_scene(seed, &cfg.scene)?;
    let frames = simulate_frames(cfg, &scene, seed);
    process_frames(cfg, &frames, seed)
}

/// Repeat the counting task over one scene.
///
/// The scene comes from `base_seed`; run `i` draws its pose jitter and
/// observation noise from `base_seed + i`, so runs are independent and the
/// whole summary is reproducible. Also returns the per-run reports.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    n_runs: u32,
    base_seed: u64,
) -> Result<(RunSummary, Vec<CountReport>), PipelineError> {
    cfg.validate()?;
    if n_runs == 0 {
        return Err(PipelineError::Config("n_runs must be at least 1".into()));
    }
    let scene = generate_scene(base_seed, &cfg.scene)?;
    let mut counts = Vec::with_capacity(n_runs as usize);
    let mut reports = Vec::with_capacity(n_runs as usize);
    for i in 0..u64::from(n_runs) {
        let run_seed = base_seed + i;
        let frames = simulate_frames(cfg, &scene, run_seed);
        let report = process_frames(cfg, &frames, run_seed)?;
        counts.push(report.final_count);
        reports.push(report);
    }
    Ok((RunSummary::new(base_seed, counts), reports))
}

/// Simulate one pass and write it to disk as a pipeline-ingestible stream:
/// `stream.jsonl`, per-frame PGM rasters under `depth/`, and the scene truth
/// as `scene.json`. Returns the stream path.
pub fn export_run(
    cfg: &ExperimentConfig,
    seed: u64,
    dir: &Path,
) -> Result<PathBuf, PipelineError> {
    cfg.validate()?;
    let scene = generate_scene(seed, &cfg.scene)?;
    let frames = simulate_frames(cfg, &scene, seed);

    fs::create_dir_all(dir.join("depth"))?;
    let truth = serde_json::to_string_pretty(&scene).expect("scene serializes");
    fs::write(dir.join("scene.json"), truth + "\n")?;

    let stream_path = dir.join("stream.jsonl");
    let file = BufWriter::new(fs::File::create(&stream_path)?);
    let mut writer = StreamWriter::new(file, &cfg.header(seed))?;
    for frame in &frames {
        let DepthSource::Inline(depth) = &frame.depth else {
            unreachable!("synthesized frames carry inline depth");
        };
        let rel = PathBuf::from(format!("depth/{:06}.pgm", frame.frame_id));
        save_pgm(depth, dir.join(&rel))?;
        let on_disk = FrameObservation { depth: DepthSource::Path(rel), ..frame.clone() };
        writer.write_frame(&on_disk)?;
    }
    Ok(stream_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locator::LocatorConfig;
    use crate::sim::{oracle_count, RowLayout};

    /// A small scene keeps unit runs quick; end-to-end defaults are covered
    /// by the acceptance suite.
    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            scene: SceneConfig {
                n_bunches: 10,
                rows: RowLayout { count: 2, spacing: 3.0, length: 6.0 },
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn zero_noise_run_matches_oracle() {
        let cfg = small_cfg().zero_noise();
        let report = run_once(&cfg, 11).unwrap();
        let scene = generate_scene(11, &cfg.scene).unwrap();
        let poses = TrajectoryConfig::row_scan(&scene.rows, &cfg.trajectory).nominal_poses();
        let oracle = oracle_count(&scene, &poses, &cfg.rig.color, &LocatorConfig::default(), 0.0);
        assert_eq!(report.final_count, 10);
        assert_eq!(report.final_count as usize, oracle);
        // Every processed frame conserves its detection outcomes.
        for stats in &report.per_frame {
            assert_eq!(
                stats.detections,
                stats.located + stats.rejected_range + stats.rejected_no_depth
            );
        }
    }

    #[test]
    fn experiment_mean_and_determinism() {
        let cfg = small_cfg();
        let (summary, reports) = run_experiment(&cfg, 3, 101).unwrap();
        assert_eq!(summary.runs, 3);
        assert_eq!(summary.counts.len(), 3);
        assert_eq!(
            summary.mean,
            summary.counts.iter().sum::<u64>() as f64 / 3.0
        );
        assert_eq!(reports.len(), 3);

        let (again, _) = run_experiment(&cfg, 3, 101).unwrap();
        assert_eq!(summary, again);
        // Identical runs produce byte-identical serializations.
        assert_eq!(summary.to_json(), again.to_json());
    }

    #[test]
    fn zero_runs_is_a_config_error() {
        let err = run_experiment(&small_cfg(), 0, 1).unwrap_err();
        assert!(err.is_config_error());
    }

    #[test]
    fn out_of_range_standoff_is_a_config_error() {
        let mut cfg = small_cfg();
        cfg.trajectory.standoff = 10.0;
        assert!(run_once(&cfg, 1).unwrap_err().is_config_error());
        cfg.trajectory.standoff = 0.3;
        assert!(run_once(&cfg, 1).unwrap_err().is_config_error());
    }

    #[test]
    fn single_zero_noise_run_over_the_default_scene() {
        let cfg = ExperimentConfig::default().zero_noise();
        let (summary, reports) = run_experiment(&cfg, 1, 42).unwrap();
        assert_eq!(summary.counts, vec![84]);
        assert_eq!(summary.mean, 84.0);
        assert_eq!(reports[0].final_count, 84);
    }
}
