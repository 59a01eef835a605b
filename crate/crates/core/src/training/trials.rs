use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::architectures::ModelSpec;
use crate::data::normalize::NormStats;
use crate::data::windows::WindowSet;
use crate::error::{Error, Result};
use crate::training::checkpoint::Checkpoint;
use crate::training::driver::{train_one_trial, EpochRecord};
use crate::training::TrainConfig;

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochRecord>,
}

#[derive(Debug)]
pub struct TrialsOutcome {
    /// Surviving trials, ordered by trial number.
    pub trials: Vec<TrialResult>,
    /// Aborted trials as (trial number, diagnostic).
    pub failures: Vec<(usize, String)>,
    /// Index into `trials` of the lowest validation loss.
    pub best: usize,
}

impl TrialsOutcome {
    pub fn best_trial(&self) -> &TrialResult {
        &self.trials[self.best]
    }
}

/// Runs `n_trials` independent trainings of the same architecture, trial k
/// seeded with `base_seed ^ k`. Trials run on a small worker pool; each is
/// fully self-seeded, so the outcome does not depend on scheduling. Aborted
/// trials are recorded and the rest still count; only losing every trial is
/// an error.
pub fn run_trials(
    spec: &ModelSpec,
    stats: &NormStats,
    train: &WindowSet<'_>,
    val: &WindowSet<'_>,
    config: &TrainConfig,
) -> Result<TrialsOutcome> {
    config.validate()?;
    spec.validate()?;
    let workers = if config.threads > 0 {
        config.threads.min(config.n_trials)
    } else {
        std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
            .min(config.n_trials)
    };
    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<std::result::Result<TrialResult, (usize, String)>>> =
        Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= config.n_trials {
                    return;
                }
                let seed = config.base_seed ^ k as u64;
                let result = train_one_trial(spec, stats, train, val, config, seed)
                    .map(|(checkpoint, outcome)| TrialResult {
                        trial: k,
                        seed,
                        checkpoint,
                        log: outcome.log,
                    })
                    .map_err(|e| (k, e.to_string()));
                done.lock().expect("trial sink poisoned").push(result);
            });
        }
    });

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for result in done.into_inner().expect("trial sink poisoned") {
        match result {
            Ok(t) => trials.push(t),
            Err(f) => failures.push(f),
        }
    }
    trials.sort_by_key(|t| t.trial);
    failures.sort_by_key(|f| f.0);
    if trials.is_empty() {
        let detail = failures
            .iter()
            .map(|(k, msg)| format!("trial {k}: {msg}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Numeric(format!("every trial aborted: {detail}")));
    }
    let best = trials
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.checkpoint
                .best_val_loss
                .partial_cmp(&b.checkpoint.best_val_loss)
                .expect("finite validation losses")
        })
        .map(|(i, _)| i)
        .expect("nonempty trials");
    Ok(TrialsOutcome {
        trials,
        failures,
        best,
    })
}

/// Writes the per-epoch loss log of every trial as CSV
/// `trial,epoch,train_loss,val_loss`.
pub fn write_loss_log(trials: &[TrialResult], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["trial", "epoch", "train_loss", "val_loss"])?;
    for trial in trials {
        for rec in &trial.log {
            writer.write_record([
                trial.trial.to_string(),
                rec.epoch.to_string(),
                rec.train_loss.to_string(),
                rec.val_loss.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use ndarray::Array2;

    use crate::architectures::ModelKind;
    use crate::check::miniature_spec;
    use crate::data::series::SeriesTable;
    use crate::numerics::Rng;

    /// A small normalized table with learnable structure: flow echoes a noisy
    /// blend of the two inputs.
    fn toy_table(n_hours: usize, seed: u64) -> SeriesTable {
        let t0 = NaiveDate::from_ymd_opt(2007, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        let mut rng = Rng::new(seed);
        let mut values = Array2::zeros((3, n_hours));
        for t in 0..n_hours {
            values[[0, t]] = (t as f64 * 0.07).sin() + 0.1 * rng.normal();
            values[[1, t]] = (t as f64 * 0.013).cos() + 0.1 * rng.normal();
            values[[2, t]] = 0.6 * values[[0, t]] - 0.3 * values[[1, t]];
        }
        SeriesTable::new_signed(t0, 1, vec!["a".into(), "b".into()], values).unwrap()
    }

    fn toy_stats() -> NormStats {
        // Fit on a small positive table; contents are irrelevant to training
        // mechanics, the checkpoint just needs some stats to carry.
        let t0 = NaiveDate::from_ymd_opt(2007, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        let mut values = Array2::zeros((3, 10));
        for t in 0..10 {
            values[[0, t]] = t as f64;
            values[[1, t]] = 2.0 * t as f64;
            values[[2, t]] = 1.0 + t as f64;
        }
        let table = SeriesTable::new(t0, vec!["a".into(), "b".into()], values).unwrap();
        NormStats::fit(&table, 0..10).unwrap()
    }

    fn quick_config(n_trials: usize) -> TrainConfig {
        TrainConfig {
            batch_size: 16,
            patience: 3,
            max_epochs: 8,
            n_trials,
            base_seed: 0xbeef,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn single_trial_is_best_by_definition() {
        let table = toy_table(200, 3);
        let spec = miniature_spec(ModelKind::LstmWHour);
        let train = WindowSet::build(&table, None, &spec, 0..150).unwrap();
        let val = WindowSet::build(&table, None, &spec, 150..200).unwrap();
        let outcome = run_trials(&spec, &toy_stats(), &train, &val, &quick_config(1)).unwrap();
        assert_eq!(outcome.trials.len(), 1);
        assert_eq!(outcome.best, 0);
        assert_eq!(outcome.best_trial().trial, 0);
        assert!(outcome.failures.is_empty());
    }

    #[test]
    fn best_trial_is_the_argmin_of_validation_loss() {
        let table = toy_table(240, 5);
        let spec = miniature_spec(ModelKind::CnnOnly);
        let train = WindowSet::build(&table, None, &spec, 0..180).unwrap();
        let val = WindowSet::build(&table, None, &spec, 180..240).unwrap();
        let outcome = run_trials(&spec, &toy_stats(), &train, &val, &quick_config(3)).unwrap();
        assert_eq!(outcome.trials.len(), 3);
        let losses: Vec<f64> = outcome
            .trials
            .iter()
            .map(|t| t.checkpoint.best_val_loss)
            .collect();
        let argmin = losses
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(outcome.best, argmin, "losses {losses:?}");
        assert_eq!(outcome.trials[1].seed, 0xbeef ^ 1);
    }

    #[test]
    fn rerun_with_same_base_seed_selects_the_same_best_bitwise() {
        let table = toy_table(220, 9);
        let spec = miniature_spec(ModelKind::LstmWHour);
        let train = WindowSet::build(&table, None, &spec, 0..170).unwrap();
        let val = WindowSet::build(&table, None, &spec, 170..220).unwrap();
        let a = run_trials(&spec, &toy_stats(), &train, &val, &quick_config(3)).unwrap();
        let b = run_trials(&spec, &toy_stats(), &train, &val, &quick_config(3)).unwrap();
        assert_eq!(a.best, b.best);
        for (x, y) in a.trials.iter().zip(&b.trials) {
            assert_eq!(
                x.checkpoint.best_val_loss.to_bits(),
                y.checkpoint.best_val_loss.to_bits()
            );
            for (tx, ty) in x.checkpoint.tensors.iter().zip(&y.checkpoint.tensors) {
                for (vx, vy) in tx.values.iter().zip(&ty.values) {
                    assert_eq!(vx.to_bits(), vy.to_bits());
                }
            }
        }
    }

    #[test]
    fn loss_log_csv_has_one_line_per_epoch() {
        let dir = tempfile::tempdir().unwrap();
        let table = toy_table(200, 3);
        let spec = miniature_spec(ModelKind::LstmWHour);
        let train = WindowSet::build(&table, None, &spec, 0..150).unwrap();
        let val = WindowSet::build(&table, None, &spec, 150..200).unwrap();
        let outcome = run_trials(&spec, &toy_stats(), &train, &val, &quick_config(2)).unwrap();
        let path = dir.path().join("losses.csv");
        write_loss_log(&outcome.trials, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let expected: usize = outcome.trials.iter().map(|t| t.log.len()).sum();
        assert_eq!(lines[0], "trial,epoch,train_loss,val_loss");
        assert_eq!(lines.len(), expected + 1);
    }
}
