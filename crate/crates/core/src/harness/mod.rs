//! Closed-loop simulation, training and evaluation.

mod compare;
pub mod csvio;
mod episode;
mod metrics;
mod train;
mod trajectory;

pub use compare::{compare, tune_baseline, BaselineGrid, Comparison, Side};
pub use episode::{run_episode, Controller, EpisodeConfig, EpisodeLog, EpisodeOutcome, EpisodeRow, Scenario};
pub use metrics::{metrics, Metrics, SETTLE_FRACTION};
pub use train::{train, train_epoch, EpochRecord, TrainOptions, TrainReport, DIVERGENCE_FACTOR};
pub use trajectory::{eval_trajectory, Reference, Trajectory};
