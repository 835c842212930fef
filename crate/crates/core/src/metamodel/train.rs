//! Mini-batch gradient-descent training of one sub-ANN.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metamodel::ann::{apply_gradients, mse_loss_and_gradients, Activation, SubAnn};

/// Hyperparameters for sub-ANN training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    /// Hidden layer width h.
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of rows held out for validation; 0 validates on the
    /// training rows themselves.
    pub validation_fraction: f64,
    pub seed: u64,
    pub activation: Activation,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            hidden: 8,
            learning_rate: 0.05,
            epochs: 500,
            batch_size: 32,
            validation_fraction: 0.2,
            seed: 0,
            activation: Activation::Tanh,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::Config("hidden layer width must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!(
                "validation fraction must be in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// A trained net with the validation error of the returned weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedSubAnn {
    pub net: SubAnn,
    pub validation_rmse: f64,
    /// Epoch whose weights are returned (0 = the initial weights).
    pub best_epoch: usize,
}

fn gather_rows(inputs: &Matrix, targets: &[f64], idx: &[usize]) -> (Matrix, Vec<f64>) {
    let gathered = Matrix::from_fn(idx.len(), inputs.cols(), |r, c| inputs.get(idx[r], c));
    let y = idx.iter().map(|&r| targets[r]).collect();
    (gathered, y)
}

/// Trains one sub-ANN on rows already restricted to its selected inputs.
///
/// Minimizes mean squared error with plain mini-batch gradient descent and
/// returns the weights achieving the best validation RMSE across epochs.
/// Deterministic under a fixed seed.
pub fn train_subann(
    target: &str,
    input_ids: &[String],
    inputs: &Matrix,
    targets: &[f64],
    params: &TrainParams,
) -> Result<TrainedSubAnn> {
    params.validate()?;
    let n = targets.len();
    if inputs.rows() != n {
        return Err(Error::Dimension(format!(
            "{} input rows vs {} target values for '{target}'",
            inputs.rows(),
            n
        )));
    }
    if n < 10 {
        return Err(Error::Config(format!(
            "training '{target}' needs at least 10 rows, got {n}"
        )));
    }
    if inputs.cols() != input_ids.len() {
        return Err(Error::Dimension(format!(
            "{} input columns vs {} input ids for '{target}'",
            inputs.cols(),
            input_ids.len()
        )));
    }
    if inputs
        .data()
        .iter()
        .chain(targets)
        .any(|v| !(0.0..=1.0).contains(v))
    {
        return Err(Error::Config(format!(
            "training rows for '{target}' must be normalized to [0, 1]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_val = if params.validation_fraction > 0.0 {
        (((n as f64) * params.validation_fraction).round() as usize).clamp(1, n - 1)
    } else {
        0
    };
    let (train_idx, val_idx) = order.split_at(n - n_val);
    let (train_x, train_y) = gather_rows(inputs, targets, train_idx);
    let (val_x, val_y) = if n_val > 0 {
        gather_rows(inputs, targets, val_idx)
    } else {
        (train_x.clone(), train_y.clone())
    };

    let mut net = SubAnn::random(target, input_ids.to_vec(), params.hidden, params.activation, &mut rng);
    let mut best = net.clone();
    let mut best_rmse = net.rmse(&val_x, &val_y);
    let mut best_epoch = 0;

    let n_train = train_y.len();
    let mut batch_order: Vec<usize> = (0..n_train).collect();
    for epoch in 1..=params.epochs {
        batch_order.shuffle(&mut rng);
        for chunk in batch_order.chunks(params.batch_size) {
            let (batch_x, batch_y) = gather_rows(&train_x, &train_y, chunk);
            let (loss, grads) = mse_loss_and_gradients(&net, &batch_x, &batch_y);
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged {
                    target: target.to_string(),
                    epoch,
                    learning_rate: params.learning_rate,
                });
            }
            apply_gradients(&mut net, &grads, params.learning_rate);
        }
        let rmse = net.rmse(&val_x, &val_y);
        if rmse < best_rmse {
            best_rmse = rmse;
            best = net.clone();
            best_epoch = epoch;
        }
    }

    Ok(TrainedSubAnn {
        net: best,
        validation_rmse: best_rmse,
        best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn identity_rows(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = Matrix::from_fn(n, 2, |_, _| rng.random::<f64>());
        let targets = (0..n).map(|r| inputs.get(r, 0)).collect();
        (inputs, targets)
    }

    #[test]
    fn identity_regression_trains_below_one_percent() {
        let (x, y) = identity_rows(400, 5);
        let params = TrainParams {
            hidden: 4,
            epochs: 500,
            ..TrainParams::default()
        };
        let ids = vec!["a".to_string(), "b".to_string()];
        let trained = train_subann("y", &ids, &x, &y, &params).unwrap();
        assert!(
            trained.validation_rmse < 0.01,
            "identity fit RMSE {} not below 0.01",
            trained.validation_rmse
        );
    }

    #[test]
    fn zero_epochs_returns_the_initial_weights() {
        let (x, y) = identity_rows(50, 6);
        let params = TrainParams {
            epochs: 0,
            ..TrainParams::default()
        };
        let ids = vec!["a".to_string(), "b".to_string()];
        let trained = train_subann("y", &ids, &x, &y, &params).unwrap();
        assert_eq!(trained.best_epoch, 0);

        // An untrained clone built from the same seed has identical weights.
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.shuffle(&mut rng);
        let fresh = SubAnn::random("y", ids, params.hidden, params.activation, &mut rng);
        assert_eq!(trained.net, fresh);
    }

    #[test]
    fn same_seed_gives_bit_identical_weights() {
        let (x, y) = identity_rows(120, 7);
        let params = TrainParams {
            epochs: 20,
            ..TrainParams::default()
        };
        let ids = vec!["a".to_string(), "b".to_string()];
        let first = train_subann("y", &ids, &x, &y, &params).unwrap();
        let second = train_subann("y", &ids, &x, &y, &params).unwrap();
        assert_eq!(first.net, second.net);
        assert_eq!(first.validation_rmse, second.validation_rmse);
    }

    /// The returned net is the epoch-wise argmin of validation RMSE, so
    /// training can never come back worse than the untrained net.
    #[test]
    fn training_never_worsens_the_returned_validation_rmse() {
        let (x, y) = identity_rows(120, 10);
        let ids = vec!["a".to_string(), "b".to_string()];
        let untrained = train_subann(
            "y",
            &ids,
            &x,
            &y,
            &TrainParams {
                epochs: 0,
                ..TrainParams::default()
            },
        )
        .unwrap();
        for epochs in [1, 5, 25, 100] {
            let trained = train_subann(
                "y",
                &ids,
                &x,
                &y,
                &TrainParams {
                    epochs,
                    ..TrainParams::default()
                },
            )
            .unwrap();
            assert!(trained.validation_rmse <= untrained.validation_rmse);
        }
    }

    #[test]
    fn tiny_datasets_are_rejected() {
        let (x, y) = identity_rows(9, 8);
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(train_subann("y", &ids, &x, &y, &TrainParams::default()).is_err());
    }

    #[test]
    fn divergence_is_reported_with_the_epoch() {
        let (x, y) = identity_rows(60, 9);
        let params = TrainParams {
            learning_rate: 1e12,
            epochs: 50,
            ..TrainParams::default()
        };
        let ids = vec!["a".to_string(), "b".to_string()];
        match train_subann("y", &ids, &x, &y, &params) {
            Err(Error::TrainingDiverged { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
