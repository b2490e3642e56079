//! Probing classifiers and regressors trained on frozen feature vectors.
//!
//! A probe is either a linear map or a two-layer MLP (512 ReLU units, dropout
//! on the hidden layer), trained with minibatch Adam on softmax
//! cross-entropy or MSE, early-stopped on a validation metric. Higher is
//! better for both metrics (accuracy, R²).

mod gradcheck;
mod metrics;
mod model;
mod normalize;
mod train;

pub use gradcheck::{gradient_check, GRADIENT_CHECK_STEP};
pub use metrics::{accuracy, argmax, r2};
pub use model::{softmax, Adam, Dense, ProbeModel, HIDDEN_UNITS};
pub use normalize::{Normalizer, STD_FLOOR};
pub use train::{evaluate, grid_search, train, GridOutcome, Metrics, ProbeResult, TrainConfig, TrainedProbe};

use std::fmt;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Classification { n_classes: usize },
    Regression,
}

impl Task {
    pub fn output_dim(self) -> usize {
        match self {
            Task::Classification { n_classes } => n_classes,
            Task::Regression => 1,
        }
    }

    pub fn metric_name(self) -> &'static str {
        match self {
            Task::Classification { .. } => "accuracy",
            Task::Regression => "r2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Linear,
    Mlp512Relu,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Mlp512Relu => "mlp512",
        })
    }
}

/// One hyperparameter configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSpec {
    pub normalize: bool,
    pub model: ModelKind,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Hidden-layer dropout probability; ignored by linear probes.
    pub dropout: f64,
    /// L2 coefficient; 0 disables it.
    pub weight_decay: f64,
    pub task: Task,
}

pub const BATCH_SIZES: [usize; 2] = [64, 256];
pub const LEARNING_RATES: [f64; 3] = [1e-5, 1e-4, 1e-3];
pub const DROPOUTS: [f64; 3] = [0.25, 0.5, 0.75];
pub const WEIGHT_DECAYS: [f64; 3] = [0.0, 1e-4, 1e-3];

impl ProbeSpec {
    /// The 216 configurations in lexicographic order of (normalize, model,
    /// batch size, learning rate, dropout, weight decay), false before true
    /// and linear before MLP.
    pub fn grid(task: Task) -> Vec<ProbeSpec> {
        let mut out = Vec::with_capacity(216);
        for normalize in [false, true] {
            for model in [ModelKind::Linear, ModelKind::Mlp512Relu] {
                for batch_size in BATCH_SIZES {
                    for learning_rate in LEARNING_RATES {
                        for dropout in DROPOUTS {
                            for weight_decay in WEIGHT_DECAYS {
                                out.push(ProbeSpec {
                                    normalize,
                                    model,
                                    batch_size,
                                    learning_rate,
                                    dropout,
                                    weight_decay,
                                    task,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Fixed setting used for externally supplied embeddings: normalized
    /// MLP, batch 64, learning rate 1e-3, dropout 0.5, no weight decay.
    pub fn lm_default(task: Task) -> ProbeSpec {
        ProbeSpec {
            normalize: true,
            model: ModelKind::Mlp512Relu,
            batch_size: 64,
            learning_rate: 1e-3,
            dropout: 0.5,
            weight_decay: 0.0,
            task,
        }
    }

    /// Stable text key, used for seed derivation.
    pub fn key(&self) -> String {
        format!(
            "norm={} model={} batch={} lr={:e} dropout={} wd={:e}",
            self.normalize, self.model, self.batch_size, self.learning_rate, self.dropout, self.weight_decay
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Targets {
        match self {
            Targets::Classes(c) => Targets::Classes(rows.iter().map(|&i| c[i]).collect()),
            Targets::Values(v) => Targets::Values(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Feature rows with their targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Targets,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Targets) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Validation(format!(
                "{} feature rows but {} targets",
                x.nrows(),
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("features contain NaN or infinity".into()));
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(rows),
        }
    }

    pub(crate) fn check_task(&self, task: Task) -> Result<()> {
        match (task, &self.y) {
            (Task::Classification { n_classes }, Targets::Classes(c)) => {
                if let Some(bad) = c.iter().find(|&&l| l >= n_classes) {
                    return Err(Error::Validation(format!("label {bad} outside 0..{n_classes}")));
                }
                Ok(())
            }
            (Task::Regression, Targets::Values(v)) => {
                if v.iter().any(|t| !t.is_finite()) {
                    return Err(Error::Validation("non-finite regression target".into()));
                }
                Ok(())
            }
            _ => Err(Error::Validation("targets do not match the probe task".into())),
        }
    }
}
