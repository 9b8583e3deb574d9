//! Episode orchestration, baselines, batch benchmarks and dataset collection.

mod batch;
mod collect;
mod config;
mod episode;
mod predictor;
mod scenario;

pub use batch::{run_batch, write_batch, BatchReport, BatchRow};
pub use collect::{collect_dataset, labelgen, write_collection, Collection, ScriptedDriver};
pub use config::{
    CollectSection, Config, ControllerKind, EpisodeConfig, EstimatorSection, MpcSection, MppiSection, PredictorSection,
    WorldConfig, WorldKind,
};
pub use episode::{run_episode, write_episode, EpisodeOptions, EpisodeResult, EpisodeTrace, Outcome, StepRecord};
pub use predictor::{predictor_for, Predictor};
pub use scenario::{build_field, low_mu_depth};

use crate::control::ControlError;
use crate::estimation::EstimationError;
use crate::labeling::LabelingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown controller kind '{0}' (expected wayfast, blind or geometric)")]
    UnknownController(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
}
