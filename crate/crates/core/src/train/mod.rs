//! Training, evaluation, checkpoints and hyperparameter search.

mod checkpoint;
mod config;
mod metrics;
mod search;
mod trainer;

pub use checkpoint::{
    read_checkpoint, read_checkpoint_from, write_checkpoint, write_checkpoint_to, Checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{parse_pairs, read_pairs, TrainConfig};
pub use metrics::{argmax, compute_metrics, Metrics};
pub use search::{random_search, trials_csv, LayerSpace, SearchSpace, Trial, MAX_ATTEMPTS};
pub use trainer::{evaluate, history_csv, predict, train, EpochRecord, TrainOutcome};
