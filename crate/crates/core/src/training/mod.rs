//! Mini-batch Adam training with early stopping, multi-trial execution and
//! checkpointing.

mod checkpoint;
mod driver;
mod trials;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::AdamConfig;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use driver::{
    run_early_stopped, train_one_trial, EarlyStopOutcome, EpochRecord, ModelDriver, TrainDriver,
};
pub use trials::{run_trials, write_loss_log, TrialResult, TrialsOutcome};

/// A new validation minimum must undercut the old one by this relative margin
/// to count as improvement; ties and float jitter are non-improvements.
pub const IMPROVEMENT_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Stop after this many consecutive epochs without a new validation
    /// minimum.
    pub patience: usize,
    pub max_epochs: usize,
    /// Independent trainings of the same architecture; trial k is seeded with
    /// `base_seed ^ k`.
    pub n_trials: usize,
    pub adam: AdamConfig,
    pub base_seed: u64,
    /// Worker threads for running trials (0 = one per available core).
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            patience: 30,
            max_epochs: 500,
            n_trials: 5,
            adam: AdamConfig::default(),
            base_seed: 0x7261_696e,
            threads: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max epochs must be at least 1".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("need at least one trial".into()));
        }
        self.adam.validate()
    }
}
