use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{bce_loss, binary_accuracy, AdamState, MlpModel, Workspace};
use crate::data::LabeledSplit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_each_epoch: bool,
    pub seed: u64,
    pub learning_rate: f64,
}

impl TrainConfig {
    /// 60 epochs of 256-sample batches (simulated-data setting).
    pub fn simulated() -> Self {
        Self {
            epochs: 60,
            batch_size: 256,
            shuffle_each_epoch: true,
            seed: 0,
            learning_rate: AdamState::DEFAULT_LEARNING_RATE,
        }
    }

    /// 100 epochs of 10-sample batches (per-minute production data).
    pub fn real_data() -> Self {
        Self {
            epochs: 100,
            batch_size: 10,
            ..Self::simulated()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::simulated()
    }
}

/// Test-set loss and binary accuracy after an epoch (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// Minibatch Adam on mean BCE. Training rows are reshuffled every epoch
/// from a generator seeded with `config.seed`; the run is bit-reproducible.
pub fn train(
    model: MlpModel,
    split: &LabeledSplit,
    config: &TrainConfig,
) -> Result<(MlpModel, Vec<EpochRecord>)> {
    config.validate()?;
    let x = &split.train_x;
    let y = &split.train_y;
    if x.cols() != model.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: model.n_inputs(),
            found: x.cols(),
        });
    }
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::SingleClass);
    }

    let mut model = model;
    let mut adam = AdamState::with_learning_rate(model.n_params(), config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut grad = vec![0.0; model.n_params()];
    let mut ws = Workspace::new(&model);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(config.batch_size) {
            grad.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                model.accumulate_gradient(x.row(i), y[i], scale, &mut ws, &mut grad);
            }
            adam.step(model.params_mut(), &grad)?;
        }

        let predicted: Vec<f64> = split
            .test_x
            .iter_rows()
            .map(|r| model.forward_into(r, &mut ws))
            .collect();
        history.push(EpochRecord {
            epoch,
            loss: bce_loss(&predicted, &split.test_y)?,
            accuracy: binary_accuracy(&predicted, &split.test_y)?,
        });
    }
    Ok((model, history))
}

/// Writes `epoch,loss,accuracy` rows.
pub fn write_history_csv<W: Write>(history: &[EpochRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["epoch", "loss", "accuracy"])?;
    for r in history {
        w.write_record([r.epoch.to_string(), r.loss.to_string(), r.accuracy.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
