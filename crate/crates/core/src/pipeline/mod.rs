//! Per-frame orchestration, the observation-stream file format, reports and
//! multi-run experiments.

mod experiment;
mod observation;
mod process;
mod report;
mod stream;

pub use experiment::{export_run, run_experiment, run_once, ExperimentConfig};
pub use observation::{
    DepthSource, Detection, FrameObservation, StreamHeader, POSE_CONVENTION, STREAM_VERSION,
};
pub use process::{process_stream, process_stream_file, Pipeline, PipelineConfig};
pub use report::{ConfigEcho, CountReport, FrameStats, RunSummary};
pub use stream::{StreamError, StreamReader, StreamWriter};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Invalid configuration values; distinct from bad input data.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("frame {got} arrived at or before frame {last}; ids must be strictly increasing")]
    OutOfOrderFrame { last: u64, got: u64 },
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Whether this failure is a configuration problem rather than bad input.
    pub fn is_config_error(&self) -> bool {
        matches!(self, PipelineError::Config(_) | PipelineError::Sim(_))
    }
}
