//! Fully connected pixel classifier: ReLU hidden layers, softmax output,
//! cross-entropy loss and Adam.
//!
//! The network is generic over the float type. Training uses `f32`; the
//! gradient checks run the same code in `f64`.

mod checkpoint;
mod network;
mod train;

use std::fmt::Debug;
use std::iter::Sum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use network::{cross_entropy, label_to_index, softmax_rows, Dense, ForwardCache, Gradients, Mlp, PROBABILITY_FLOOR};
pub use train::{evaluate, history_to_csv, samples_to_arrays, train, EpochStats, Evaluation};

pub trait Scalar:
    num_traits::Float
    + num_traits::NumAssign
    + num_traits::FromPrimitive
    + ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + Debug
    + Sum
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: num_traits::Float
        + num_traits::NumAssign
        + num_traits::FromPrimitive
        + ndarray::LinalgScalar
        + ndarray::ScalarOperand
        + Debug
        + Sum
        + Send
        + Sync
        + 'static
{
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpArchitecture {
    pub input_size: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_size: usize,
}

impl MlpArchitecture {
    pub fn new(input_size: usize, hidden_sizes: Vec<usize>, output_size: usize) -> Result<Self> {
        let arch = MlpArchitecture {
            input_size,
            hidden_sizes,
            output_size,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// 66 inputs, hidden 128-256-512-256, two classes.
    pub fn bands66() -> Self {
        MlpArchitecture {
            input_size: 66,
            hidden_sizes: vec![128, 256, 512, 256],
            output_size: 2,
        }
    }

    /// 103 inputs, hidden 256-512-256-128, two classes.
    pub fn bands103() -> Self {
        MlpArchitecture {
            input_size: 103,
            hidden_sizes: vec![256, 512, 256, 128],
            output_size: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.output_size == 0 || self.hidden_sizes.contains(&0) {
            return Err(Error::Config(format!("all layer sizes must be >= 1, got {self:?}")));
        }
        Ok(())
    }

    /// `(inputs, outputs)` of each affine layer.
    pub fn layer_shapes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let sizes: Vec<usize> = std::iter::once(self.input_size)
            .chain(self.hidden_sizes.iter().copied())
            .chain(std::iter::once(self.output_size))
            .collect();
        (0..sizes.len() - 1).map(move |i| (sizes[i], sizes[i + 1]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 150,
            learning_rate: 1e-4,
            batch_size: 2048,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::Config("Adam betas must lie in [0, 1) and epsilon be positive".into()));
        }
        Ok(())
    }
}
