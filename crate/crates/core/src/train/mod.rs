//! Minibatch noise-injection training, Adam, and checkpoint files.

pub mod adam;
pub mod checkpoint;
pub mod config;
pub mod init;
pub mod trainer;

pub use adam::{clip_global_norm, Adam};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::TrainConfig;
pub use init::init_params;
pub use trainer::{train, LogRow, StepReport, LOG_CSV_HEADER};
