use crate::architectures::{Model, ModelSpec};
use crate::data::normalize::NormStats;
use crate::data::windows::WindowSet;
use crate::error::{Error, Result};
use crate::numerics::{adam_step, AdamConfig, Rng};
use crate::training::checkpoint::Checkpoint;
use crate::training::{TrainConfig, IMPROVEMENT_RTOL};

/// One line of the per-epoch loss log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-indexed.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// What the early-stopping loop needs from a trainable thing. The production
/// implementation is [`ModelDriver`]; tests drive the loop with scripted
/// losses instead.
pub trait TrainDriver {
    /// Runs one training epoch and returns its mean training loss.
    fn run_epoch(&mut self, epoch: usize, rng: &mut Rng) -> Result<f64>;

    /// Inference-only validation loss; must not touch parameters or grads.
    fn val_loss(&mut self) -> Result<f64>;

    /// Copies of all parameter values, in a fixed order.
    fn snapshot(&mut self) -> Vec<Vec<f64>>;

    /// Writes a snapshot back.
    fn restore(&mut self, snapshot: &[Vec<f64>]);
}

#[derive(Clone, Debug)]
pub struct EarlyStopOutcome {
    pub best_val_loss: f64,
    /// 1-indexed epoch that achieved the minimum.
    pub epoch_of_best: usize,
    pub epochs_run: usize,
    pub log: Vec<EpochRecord>,
}

/// Epoch loop with patience-based early stopping.
///
/// Validation loss is tracked against its running minimum; an epoch improves
/// only if it undercuts the minimum by a relative [`IMPROVEMENT_RTOL`] (ties
/// don't count). After `patience` consecutive non-improving epochs, or at
/// `max_epochs`, training stops and the parameters from the best epoch — never
/// the final ones — are restored into the driver.
pub fn run_early_stopped(
    driver: &mut dyn TrainDriver,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<EarlyStopOutcome> {
    config.validate()?;
    let mut best_val = f64::INFINITY;
    let mut epoch_of_best = 0usize;
    let mut best_params: Option<Vec<Vec<f64>>> = None;
    let mut stale = 0usize;
    let mut log = Vec::new();
    let mut epochs_run = 0usize;

    for epoch in 1..=config.max_epochs {
        let train_loss = driver.run_epoch(epoch, rng)?;
        let val_loss = driver.val_loss()?;
        if !val_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite validation loss {val_loss} after epoch {epoch}"
            )));
        }
        log.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        epochs_run = epoch;
        // inf - inf*rtol is NaN, so the first (infinite) minimum needs its
        // own arm.
        let improved =
            !best_val.is_finite() || val_loss < best_val - best_val.abs() * IMPROVEMENT_RTOL;
        if improved {
            best_val = val_loss;
            epoch_of_best = epoch;
            best_params = Some(driver.snapshot());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    let best = best_params.expect("at least one epoch ran, and epoch 1 always improves on +inf");
    driver.restore(&best);
    Ok(EarlyStopOutcome {
        best_val_loss: best_val,
        epoch_of_best,
        epochs_run,
        log,
    })
}

/// Trains a [`Model`] on windowed samples: per epoch the sample order is
/// reshuffled, partitioned into batches of `batch_size` (the final short
/// batch included), and every batch gets one Adam update on its mean squared
/// error.
pub struct ModelDriver<'a> {
    pub model: &'a mut Model,
    train: &'a WindowSet<'a>,
    val: &'a WindowSet<'a>,
    batch_size: usize,
    adam: AdamConfig,
}

impl<'a> ModelDriver<'a> {
    pub fn new(
        model: &'a mut Model,
        train: &'a WindowSet<'a>,
        val: &'a WindowSet<'a>,
        config: &TrainConfig,
    ) -> Result<ModelDriver<'a>> {
        if train.is_empty() || val.is_empty() {
            return Err(Error::Config(format!(
                "training needs nonempty sample sets (train {}, val {})",
                train.len(),
                val.len()
            )));
        }
        Ok(ModelDriver {
            model,
            train,
            val,
            batch_size: config.batch_size,
            adam: config.adam,
        })
    }
}

impl TrainDriver for ModelDriver<'_> {
    fn run_epoch(&mut self, epoch: usize, rng: &mut Rng) -> Result<f64> {
        let n = self.train.len();
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let mut sse = 0.0;
        for (b, batch) in order.chunks(self.batch_size).enumerate() {
            self.model.zero_grad();
            let inv = 1.0 / batch.len() as f64;
            let mut batch_sse = 0.0;
            for &s in batch {
                let pred = self.model.forward(&self.train.input(s))?;
                let err = pred - self.train.observed(s);
                batch_sse += err * err;
                // d(mean MSE)/d(pred_s), accumulated across the batch.
                self.model.backward(2.0 * inv * err, false)?;
            }
            if !batch_sse.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite training loss at epoch {epoch}, batch {b} ({} samples)",
                    batch.len()
                )));
            }
            adam_step(&mut self.model.params_mut(), &self.adam)?;
            sse += batch_sse;
        }
        Ok(sse / n as f64)
    }

    fn val_loss(&mut self) -> Result<f64> {
        let mut sse = 0.0;
        for s in 0..self.val.len() {
            let pred = self.model.forward(&self.val.input(s))?;
            let err = pred - self.val.observed(s);
            sse += err * err;
        }
        Ok(sse / self.val.len() as f64)
    }

    fn snapshot(&mut self) -> Vec<Vec<f64>> {
        self.model
            .params_mut()
            .iter()
            .map(|p| p.values_slice().to_vec())
            .collect()
    }

    fn restore(&mut self, snapshot: &[Vec<f64>]) {
        for (param, values) in self.model.params_mut().iter_mut().zip(snapshot) {
            param.values_slice_mut().copy_from_slice(values);
        }
    }
}

/// Builds a model from `seed`, trains it, and captures the best-epoch
/// checkpoint together with the loss log.
pub fn train_one_trial(
    spec: &ModelSpec,
    stats: &NormStats,
    train: &WindowSet<'_>,
    val: &WindowSet<'_>,
    config: &TrainConfig,
    seed: u64,
) -> Result<(Checkpoint, EarlyStopOutcome)> {
    let mut rng = Rng::new(seed);
    let mut model = Model::build(spec, &mut rng)?;
    let mut driver = ModelDriver::new(&mut model, train, val, config)?;
    let outcome = run_early_stopped(&mut driver, config, &mut rng)?;
    let checkpoint = Checkpoint::capture(
        &mut model,
        stats,
        outcome.best_val_loss,
        outcome.epoch_of_best,
        seed,
    );
    Ok((checkpoint, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scripted-loss stub: `run_epoch` costs nothing, `val_loss` replays a
    /// fixed sequence, parameters are one scalar so best-epoch restoration is
    /// observable.
    struct ScriptedDriver {
        losses: Vec<f64>,
        epoch: usize,
        param: f64,
    }

    impl ScriptedDriver {
        fn new(losses: Vec<f64>) -> ScriptedDriver {
            ScriptedDriver {
                losses,
                epoch: 0,
                param: 0.0,
            }
        }
    }

    impl TrainDriver for ScriptedDriver {
        fn run_epoch(&mut self, epoch: usize, _rng: &mut Rng) -> Result<f64> {
            self.epoch = epoch;
            self.param = epoch as f64; // pretend the weights moved
            Ok(self.losses[epoch - 1])
        }

        fn val_loss(&mut self) -> Result<f64> {
            Ok(self.losses[self.epoch - 1])
        }

        fn snapshot(&mut self) -> Vec<Vec<f64>> {
            vec![vec![self.param]]
        }

        fn restore(&mut self, snapshot: &[Vec<f64>]) {
            self.param = snapshot[0][0];
        }
    }

    fn config(patience: usize, max_epochs: usize) -> TrainConfig {
        TrainConfig {
            patience,
            max_epochs,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn stops_exactly_patience_epochs_after_the_minimum() {
        // Strictly decreasing for 10 epochs, then strictly increasing.
        let mut losses: Vec<f64> = (0..10).map(|e| 100.0 - e as f64).collect();
        losses.extend((0..200).map(|e| 91.0 + (e + 1) as f64 * 0.5));
        let mut driver = ScriptedDriver::new(losses);
        let mut rng = Rng::new(0);
        let outcome = run_early_stopped(&mut driver, &config(30, 500), &mut rng).unwrap();
        assert_eq!(outcome.epoch_of_best, 10);
        assert_eq!(outcome.epochs_run, 40); // 10 + patience
        assert_eq!(outcome.best_val_loss, 91.0);
        // Parameters rolled back to the best epoch, not the last one.
        assert_eq!(driver.param, 10.0);
    }

    #[test]
    fn ties_do_not_count_as_improvement() {
        let mut losses = vec![5.0];
        losses.extend(std::iter::repeat_n(5.0, 100)); // exact ties forever
        let mut driver = ScriptedDriver::new(losses);
        let mut rng = Rng::new(0);
        let outcome = run_early_stopped(&mut driver, &config(4, 500), &mut rng).unwrap();
        assert_eq!(outcome.epoch_of_best, 1);
        assert_eq!(outcome.epochs_run, 5); // 1 + patience of ties
    }

    #[test]
    fn max_epochs_caps_a_run_that_keeps_improving() {
        let losses: Vec<f64> = (0..50).map(|e| 50.0 - e as f64).collect();
        let mut driver = ScriptedDriver::new(losses);
        let mut rng = Rng::new(0);
        let outcome = run_early_stopped(&mut driver, &config(30, 20), &mut rng).unwrap();
        assert_eq!(outcome.epochs_run, 20);
        assert_eq!(outcome.epoch_of_best, 20);
        assert_eq!(driver.param, 20.0);
    }

    #[test]
    fn log_records_every_epoch_once() {
        let mut losses: Vec<f64> = (0..5).map(|e| 10.0 - e as f64).collect();
        losses.extend((0..50).map(|_| 20.0));
        let mut driver = ScriptedDriver::new(losses);
        let mut rng = Rng::new(0);
        let outcome = run_early_stopped(&mut driver, &config(3, 500), &mut rng).unwrap();
        assert_eq!(outcome.log.len(), outcome.epochs_run);
        for (i, rec) in outcome.log.iter().enumerate() {
            assert_eq!(rec.epoch, i + 1);
        }
    }

    #[test]
    fn non_finite_validation_loss_aborts() {
        let mut driver = ScriptedDriver::new(vec![3.0, f64::NAN, 1.0]);
        let mut rng = Rng::new(0);
        let err = run_early_stopped(&mut driver, &config(30, 500), &mut rng).unwrap_err();
        assert!(err.to_string().contains("epoch 2"), "{err}");
    }

    mod with_model {
        use chrono::NaiveDate;
        use ndarray::Array2;

        use super::*;
        use crate::architectures::ModelKind;
        use crate::check::miniature_spec;
        use crate::data::series::SeriesTable;

        fn toy_table(n_hours: usize) -> SeriesTable {
            let t0 = NaiveDate::from_ymd_opt(2007, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap();
            let mut rng = Rng::new(40);
            let mut values = Array2::zeros((3, n_hours));
            for t in 0..n_hours {
                values[[0, t]] = (t as f64 * 0.05).sin() + 0.05 * rng.normal();
                values[[1, t]] = (t as f64 * 0.011).cos() + 0.05 * rng.normal();
                values[[2, t]] = 0.5 * values[[0, t]] + 0.2 * values[[1, t]];
            }
            SeriesTable::new_signed(t0, 1, vec!["a".into(), "b".into()], values).unwrap()
        }

        fn toy_stats(table: &SeriesTable) -> NormStats {
            NormStats::fit(table, 0..table.len()).unwrap()
        }

        #[test]
        fn epoch_partitions_samples_into_ceil_batches() {
            // Long window is 24, so 1023 admissible targets need 1046 hours;
            // batch 512 must give exactly 2 Adam updates plus the short rest.
            let table = toy_table(24 + 999);
            let spec = miniature_spec(ModelKind::LstmWHour);
            let train = WindowSet::build(&table, None, &spec, 0..table.len()).unwrap();
            assert_eq!(train.len(), 1000);
            let val = train_like_val(&table, &spec);
            let config = TrainConfig {
                batch_size: 512,
                max_epochs: 1,
                patience: 1,
                ..TrainConfig::default()
            };
            let mut model = Model::build(&spec, &mut Rng::new(1)).unwrap();
            let mut driver = ModelDriver::new(&mut model, &train, &val, &config).unwrap();
            let mut rng = Rng::new(2);
            driver.run_epoch(1, &mut rng).unwrap();
            // One step per batch: 512 + 488 samples -> 2 updates.
            assert_eq!(model.params_mut()[0].step_count(), 2);
        }

        fn train_like_val<'a>(
            table: &'a SeriesTable,
            spec: &'a crate::architectures::ModelSpec,
        ) -> WindowSet<'a> {
            WindowSet::build(table, None, spec, table.len() - 50..table.len()).unwrap()
        }

        #[test]
        fn identical_seeds_give_bitwise_identical_checkpoints() {
            let table = toy_table(260);
            let spec = miniature_spec(ModelKind::CnnOnly);
            let train = WindowSet::build(&table, None, &spec, 0..200).unwrap();
            let val = WindowSet::build(&table, None, &spec, 200..260).unwrap();
            let config = TrainConfig {
                batch_size: 32,
                patience: 2,
                max_epochs: 5,
                ..TrainConfig::default()
            };
            let stats = toy_stats(&table);
            let (a, _) = train_one_trial(&spec, &stats, &train, &val, &config, 7).unwrap();
            let (b, _) = train_one_trial(&spec, &stats, &train, &val, &config, 7).unwrap();
            assert_eq!(a.tensors.len(), b.tensors.len());
            for (ta, tb) in a.tensors.iter().zip(&b.tensors) {
                assert_eq!(ta.meta, tb.meta);
                for (x, y) in ta.values.iter().zip(&tb.values) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            assert_eq!(a.best_val_loss.to_bits(), b.best_val_loss.to_bits());
        }

        #[test]
        fn training_reduces_validation_loss_on_a_learnable_signal() {
            let table = toy_table(400);
            let spec = miniature_spec(ModelKind::LstmWHour);
            let train = WindowSet::build(&table, None, &spec, 0..320).unwrap();
            let val = WindowSet::build(&table, None, &spec, 320..400).unwrap();
            let config = TrainConfig {
                batch_size: 32,
                patience: 10,
                max_epochs: 30,
                adam: AdamConfig {
                    lr: 5e-3,
                    ..AdamConfig::default()
                },
                ..TrainConfig::default()
            };
            let (ckpt, outcome) =
                train_one_trial(&spec, &toy_stats(&table), &train, &val, &config, 11).unwrap();
            let first = outcome.log[0].val_loss;
            assert!(
                ckpt.best_val_loss < 0.5 * first,
                "no learning: first {first}, best {}",
                ckpt.best_val_loss
            );
            assert_eq!(ckpt.epoch_of_best, outcome.epoch_of_best);
        }

        #[test]
        fn empty_sample_sets_are_rejected() {
            let table = toy_table(100);
            let spec = miniature_spec(ModelKind::LstmWHour);
            let full = WindowSet::build(&table, None, &spec, 0..100).unwrap();
            let empty = WindowSet::build(&table, None, &spec, 0..5).unwrap();
            let mut model = Model::build(&spec, &mut Rng::new(1)).unwrap();
            assert!(ModelDriver::new(&mut model, &empty, &full, &TrainConfig::default()).is_err());
        }
    }
}
