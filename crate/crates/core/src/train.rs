//! Pieces shared by the SGNS and GloVe trainers.

use std::time::Duration;

use thiserror::Error;

use crate::model::EmbeddingModel;
use crate::vocab::VocabError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("nothing to train on: corpus is empty after min-count filtering and subsampling")]
    EmptyCorpus,
    #[error("co-occurrence matrix is empty")]
    EmptyMatrix,
    #[error(
        "non-finite loss in epoch {epoch} (worker {worker}, item {item}, lr {lr:.3e}): loss={loss}"
    )]
    NonFinite {
        epoch: usize,
        worker: usize,
        item: usize,
        lr: f64,
        loss: f64,
    },
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainStats {
    /// Updates the learning-rate schedule was planned for.
    pub scheduled_updates: u64,
    /// Center positions (SGNS) or matrix entries (GloVe) actually visited.
    pub positions: u64,
    /// Positive-pair updates (SGNS only).
    pub pairs: u64,
    /// Summed loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub model: EmbeddingModel,
    pub stats: TrainStats,
}

/// Linear decay from `initial` at progress 0 to `initial * 1e-4` at the end
/// of the schedule.
pub fn linear_lr(initial: f64, done: u64, total: u64) -> f64 {
    let frac = if total == 0 {
        1.0
    } else {
        (done as f64 / total as f64).min(1.0)
    };
    initial * (1.0 - (1.0 - 1e-4) * frac)
}

/// Contiguous block `[start, end)` of `n` items owned by `worker`.
pub fn partition(n: usize, workers: usize, worker: usize) -> std::ops::Range<usize> {
    (worker * n / workers)..((worker + 1) * n / workers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lr_endpoints() {
        assert_eq!(linear_lr(0.025, 0, 100), 0.025);
        assert!((linear_lr(0.025, 100, 100) - 0.025e-4).abs() < 1e-15);
        assert!((linear_lr(0.025, 50, 100) - 0.025 * (1.0 - 0.9999 / 2.0)).abs() < 1e-15);
        assert!((linear_lr(0.025, 500, 100) - 0.025e-4).abs() < 1e-15);
    }

    #[test]
    fn partition_covers_range() {
        let parts: Vec<_> = (0..3).map(|w| partition(10, 3, w)).collect();
        assert_eq!(parts, vec![0..3, 3..6, 6..10]);
    }
}
