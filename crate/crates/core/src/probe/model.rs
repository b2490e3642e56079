use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ModelKind, Targets, Task};

pub const HIDDEN_UNITS: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    /// Uniform in `+-1/sqrt(fan_in)` for weights and biases.
    fn init(d_in: usize, d_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (d_in as f64).sqrt();
        Dense {
            weight: Array2::from_shape_fn((d_in, d_out), |_| rng.random_range(-bound..bound)),
            bias: Array1::from_shape_fn(d_out, |_| rng.random_range(-bound..bound)),
        }
    }

    fn zeros_like(&self) -> Self {
        Dense {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }

    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }
}

/// A linear map, or a 512-unit ReLU hidden layer followed by a linear map.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeModel {
    pub layers: Vec<Dense>,
}

/// Gradients, laid out like the model.
pub type Gradients = ProbeModel;

struct Cache {
    pre_activation: Array2<f64>,
    /// Hidden activations after ReLU and dropout.
    hidden: Array2<f64>,
    /// Dropout multipliers (`0` or `1/(1-p)`) or `None` at evaluation.
    mask: Option<Array2<f64>>,
}

impl ProbeModel {
    pub fn new(kind: ModelKind, d_in: usize, d_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let layers = match kind {
            ModelKind::Linear => vec![Dense::init(d_in, d_out, rng)],
            ModelKind::Mlp512Relu => vec![
                Dense::init(d_in, HIDDEN_UNITS, rng),
                Dense::init(HIDDEN_UNITS, d_out, rng),
            ],
        };
        ProbeModel { layers }
    }

    pub fn zeros_like(&self) -> Self {
        ProbeModel {
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        if self.layers.len() == 1 {
            ModelKind::Linear
        } else {
            ModelKind::Mlp512Relu
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Evaluation-mode outputs (logits or the regression value).
    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(x, None).0
    }

    fn forward(&self, x: ArrayView2<f64>, dropout: Option<(f64, &mut ChaCha8Rng)>) -> (Array2<f64>, Option<Cache>) {
        if self.layers.len() == 1 {
            return (self.layers[0].forward(x), None);
        }
        let pre_activation = self.layers[0].forward(x);
        let mut hidden = pre_activation.mapv(|v| v.max(0.0));
        let mask = dropout.filter(|(p, _)| *p > 0.0).map(|(p, rng)| {
            let keep = 1.0 / (1.0 - p);
            let mask = Array2::from_shape_fn(hidden.raw_dim(), |_| if rng.random::<f64>() < p { 0.0 } else { keep });
            hidden *= &mask;
            mask
        });
        let out = self.layers[1].forward(hidden.view());
        (
            out,
            Some(Cache {
                pre_activation,
                hidden,
                mask,
            }),
        )
    }

    /// Mean data loss plus `weight_decay / 2 * sum(W^2)` over weight
    /// matrices, and its gradient. Dropout is applied to the hidden layer
    /// when `dropout` is given.
    pub fn loss_and_gradients(
        &self,
        x: ArrayView2<f64>,
        targets: &Targets,
        task: Task,
        weight_decay: f64,
        dropout: Option<(f64, &mut ChaCha8Rng)>,
    ) -> (f64, Gradients) {
        let (out, cache) = self.forward(x, dropout);
        let (data_loss, d_out) = loss_gradient(&out, targets, task);
        let mut grads = self.zeros_like();
        match cache {
            None => {
                grads.layers[0].weight = x.t().dot(&d_out);
                grads.layers[0].bias = d_out.sum_axis(Axis(0));
            }
            Some(cache) => {
                grads.layers[1].weight = cache.hidden.t().dot(&d_out);
                grads.layers[1].bias = d_out.sum_axis(Axis(0));
                let mut d_hidden = d_out.dot(&self.layers[1].weight.t());
                if let Some(mask) = &cache.mask {
                    d_hidden *= mask;
                }
                Zip::from(&mut d_hidden).and(&cache.pre_activation).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
                grads.layers[0].weight = x.t().dot(&d_hidden);
                grads.layers[0].bias = d_hidden.sum_axis(Axis(0));
            }
        }
        let mut penalty = 0.0;
        if weight_decay > 0.0 {
            for (g, l) in grads.layers.iter_mut().zip(&self.layers) {
                penalty += 0.5 * weight_decay * l.weight.iter().map(|w| w * w).sum::<f64>();
                g.weight.scaled_add(weight_decay, &l.weight);
            }
        }
        (data_loss + penalty, grads)
    }

    /// Mean data loss in evaluation mode.
    pub fn loss(&self, x: ArrayView2<f64>, targets: &Targets, task: Task) -> f64 {
        loss_gradient(&self.predict(x), targets, task).0
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }

    /// Human-readable name of the `index`-th parameter in `params()` order.
    pub(crate) fn param_name(&self, mut index: usize) -> String {
        for (li, l) in self.layers.iter().enumerate() {
            let (rows, cols) = l.weight.dim();
            if index < rows * cols {
                return format!("layer{}.weight[{}, {}]", li + 1, index / cols, index % cols);
            }
            index -= rows * cols;
            if index < l.bias.len() {
                return format!("layer{}.bias[{index}]", li + 1);
            }
            index -= l.bias.len();
        }
        format!("parameter {index} (out of range)")
    }
}

/// Numerically stable softmax rows.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Mean loss and its gradient with respect to the model output.
fn loss_gradient(out: &Array2<f64>, targets: &Targets, task: Task) -> (f64, Array2<f64>) {
    let n = out.nrows() as f64;
    match (task, targets) {
        (Task::Classification { .. }, Targets::Classes(labels)) => {
            let mut loss = 0.0;
            let mut grad = softmax(out);
            for ((i, row), &label) in out.rows().into_iter().enumerate().zip(labels) {
                // log-sum-exp with the max subtracted
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                loss += lse - row[label];
                grad[[i, label]] -= 1.0;
            }
            grad /= n;
            (loss / n, grad)
        }
        (Task::Regression, Targets::Values(values)) => {
            let mut grad = Array2::zeros(out.raw_dim());
            let mut loss = 0.0;
            for (i, &y) in values.iter().enumerate() {
                let diff = out[[i, 0]] - y;
                loss += diff * diff;
                grad[[i, 0]] = 2.0 * diff / n;
            }
            (loss / n, grad)
        }
        _ => panic!("targets do not match the task"),
    }
}

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
pub struct Adam {
    learning_rate: f64,
    first: ProbeModel,
    second: ProbeModel,
    step: i32,
}

impl Adam {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPSILON: f64 = 1e-8;

    pub fn new(model: &ProbeModel, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            first: model.zeros_like(),
            second: model.zeros_like(),
            step: 0,
        }
    }

    pub fn update(&mut self, model: &mut ProbeModel, grads: &Gradients) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        let lr = self.learning_rate;
        for (((p, g), m), v) in model
            .params_mut()
            .zip(grads.params())
            .zip(self.first.params_mut())
            .zip(self.second.params_mut())
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPSILON);
        }
    }
}
