//! Mini-batch training of the surrogate.

mod config;
mod history;
mod trainer;

pub use config::TrainConfig;
pub use history::{EpochRecord, TrainHistory, HISTORY_HEADER};
pub use trainer::{evaluate_loss, pack_batch, predict_inputs, predict_physical, train, units, LossReport, TrainOutcome, PREDICT_BATCH};
