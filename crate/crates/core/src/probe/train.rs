use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::metrics::{accuracy, r2};
use super::model::{Adam, ProbeModel};
use super::normalize::Normalizer;
use super::{Dataset, ModelKind, ProbeSpec, Targets, Task};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 200,
            patience: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub r2: Option<f64>,
    pub loss: f64,
}

impl Metrics {
    /// Accuracy for classification, R² for regression.
    pub fn value(&self) -> f64 {
        self.accuracy.or(self.r2).expect("one metric is always set")
    }
}

/// Evaluates a bare model on data already in the model's input space.
pub fn evaluate(model: &ProbeModel, data: &Dataset, task: Task) -> Metrics {
    let out = model.predict(data.x.view());
    let loss = model.loss(data.x.view(), &data.y, task);
    metrics_from_outputs(&out, &data.y, task, loss)
}

fn metrics_from_outputs(out: &Array2<f64>, targets: &Targets, task: Task, loss: f64) -> Metrics {
    match (task, targets) {
        (Task::Classification { .. }, Targets::Classes(labels)) => Metrics {
            accuracy: Some(accuracy(out.view(), labels)),
            r2: None,
            loss,
        },
        (Task::Regression, Targets::Values(values)) => Metrics {
            accuracy: None,
            r2: Some(r2(&out.column(0).to_vec(), values)),
            loss,
        },
        _ => panic!("targets do not match the task"),
    }
}

/// Affine map of regression targets to zero mean, unit variance.
#[derive(Clone, Copy, Debug, PartialEq)]
struct TargetScale {
    mean: f64,
    std: f64,
}

impl TargetScale {
    fn fit(targets: &Targets) -> Self {
        match targets {
            Targets::Values(v) => {
                let n = v.len() as f64;
                let mean = v.iter().sum::<f64>() / n;
                let std = (v.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n).sqrt();
                TargetScale {
                    mean,
                    std: std.max(super::STD_FLOOR),
                }
            }
            Targets::Classes(_) => TargetScale { mean: 0.0, std: 1.0 },
        }
    }

    fn forward(&self, targets: &Targets) -> Targets {
        match targets {
            Targets::Values(v) => Targets::Values(v.iter().map(|t| (t - self.mean) / self.std).collect()),
            other => other.clone(),
        }
    }

    fn inverse(&self, out: &mut Array2<f64>) {
        out.mapv_inplace(|o| o * self.std + self.mean);
    }
}

/// A trained probe holding its preprocessing and the best-validation
/// checkpoint. Consumed by [`TrainedProbe::evaluate_test`], so the test
/// split is scored once.
#[derive(Clone, Debug)]
pub struct TrainedProbe {
    pub spec: ProbeSpec,
    pub model: ProbeModel,
    normalizer: Option<Normalizer>,
    target_scale: TargetScale,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val_metric: f64,
    pub seed: u64,
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
}

impl TrainedProbe {
    fn prepare(&self, x: ArrayView2<f64>) -> Array2<f64> {
        match &self.normalizer {
            Some(n) => n.apply(x),
            None => x.to_owned(),
        }
    }

    /// Metrics on raw (unnormalized) data in original target units.
    fn score(&self, data: &Dataset) -> Metrics {
        let x = self.prepare(data.x.view());
        let scaled_targets = self.target_scale.forward(&data.y);
        let loss = self.model.loss(x.view(), &scaled_targets, self.spec.task);
        let mut out = self.model.predict(x.view());
        if self.spec.task == Task::Regression {
            self.target_scale.inverse(&mut out);
        }
        metrics_from_outputs(&out, &data.y, self.spec.task, loss)
    }

    pub fn evaluate_test(self, test: &Dataset) -> Result<ProbeResult> {
        test.check_task(self.spec.task)?;
        if test.dim() != self.model.layers[0].weight.nrows() {
            return Err(Error::Validation("test features have the wrong dimension".into()));
        }
        let test_metrics = self.score(test);
        Ok(ProbeResult {
            spec: self.spec,
            best_epoch: self.best_epoch,
            epochs_run: self.epochs_run,
            val_metric: self.val_metric,
            test_metric: test_metrics.value(),
            test_loss: test_metrics.loss,
            seed: self.seed,
            train_losses: self.train_losses,
            val_losses: self.val_losses,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    pub spec: ProbeSpec,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val_metric: f64,
    pub test_metric: f64,
    pub test_loss: f64,
    pub seed: u64,
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
}

/// Trains one probe with minibatch Adam and early stopping on the
/// validation metric. Deterministic in `seed` (initialization, batch order
/// and dropout masks all come from one generator).
pub fn train(
    spec: &ProbeSpec,
    train_set: &Dataset,
    val_set: &Dataset,
    seed: u64,
    config: TrainConfig,
) -> Result<TrainedProbe> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Validation(
            "training and validation sets must be non-empty".into(),
        ));
    }
    if train_set.dim() != val_set.dim() {
        return Err(Error::Validation(format!(
            "train has dimension {} but validation has {}",
            train_set.dim(),
            val_set.dim()
        )));
    }
    train_set.check_task(spec.task)?;
    val_set.check_task(spec.task)?;

    let normalizer = spec.normalize.then(|| Normalizer::fit(train_set.x.view()));
    let x_train = match &normalizer {
        Some(n) => n.apply(train_set.x.view()),
        None => train_set.x.clone(),
    };
    let target_scale = TargetScale::fit(&train_set.y);
    let y_train = target_scale.forward(&train_set.y);

    let mut rng = crate::seed::rng(seed);
    let mut model = ProbeModel::new(spec.model, train_set.dim(), spec.task.output_dim(), &mut rng);
    let mut adam = Adam::new(&model, spec.learning_rate);
    let dropout = if spec.model == ModelKind::Mlp512Relu {
        spec.dropout
    } else {
        0.0
    };

    let mut probe = TrainedProbe {
        spec: *spec,
        model: model.clone(),
        normalizer,
        target_scale,
        best_epoch: 0,
        epochs_run: 0,
        val_metric: f64::NEG_INFINITY,
        seed,
        train_losses: Vec::new(),
        val_losses: Vec::new(),
    };

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut since_best = 0;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_index, rows) in order.chunks(spec.batch_size).enumerate() {
            let xb = x_train.select(ndarray::Axis(0), rows);
            let yb = y_train.select(rows);
            let (loss, grads) =
                model.loss_and_gradients(xb.view(), &yb, spec.task, spec.weight_decay, Some((dropout, &mut rng)));
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    batch: batch_index,
                });
            }
            epoch_loss += loss * rows.len() as f64;
            adam.update(&mut model, &grads);
        }
        if !model.is_finite() {
            return Err(Error::Training {
                epoch,
                batch: order.len().div_ceil(spec.batch_size) - 1,
            });
        }
        probe.train_losses.push(epoch_loss / train_set.len() as f64);
        probe.epochs_run = epoch;

        let current = TrainedProbe {
            model: model.clone(),
            ..probe.clone()
        };
        let val = current.score(val_set);
        probe.val_losses.push(val.loss);
        if val.value() > probe.val_metric {
            probe.val_metric = val.value();
            probe.best_epoch = epoch;
            probe.model = model.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    Ok(probe)
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    /// One result per spec, in the order given.
    pub results: Vec<ProbeResult>,
    /// Index of the selected result.
    pub best: usize,
}

impl GridOutcome {
    pub fn selected(&self) -> &ProbeResult {
        &self.results[self.best]
    }
}

/// Trains every spec (in parallel, each with a seed derived from `seed` and
/// the spec key), scores each on the test split once, and selects by
/// validation metric. Ties go to the linear model, then the lower learning
/// rate, then the earlier spec.
pub fn grid_search(
    specs: &[ProbeSpec],
    train_set: &Dataset,
    val_set: &Dataset,
    test_set: &Dataset,
    seed: u64,
    config: TrainConfig,
) -> Result<GridOutcome> {
    if specs.is_empty() {
        return Err(Error::Argument("no probe configurations given".into()));
    }
    let results = specs
        .par_iter()
        .map(|spec| {
            let run_seed = crate::seed::derive(seed, &["probe", &spec.key()]);
            train(spec, train_set, val_set, run_seed, config)?.evaluate_test(test_set)
        })
        .collect::<Result<Vec<_>>>()?;
    let best = select(&results);
    Ok(GridOutcome { results, best })
}

fn select(results: &[ProbeResult]) -> usize {
    let mut best = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        let b = &results[best];
        let better = r.val_metric > b.val_metric
            || (r.val_metric == b.val_metric
                && (r.spec.model, r.spec.learning_rate) < (b.spec.model, b.spec.learning_rate));
        if better {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr_free::normal;

    /// Box-Muller normals, enough for synthetic blobs.
    mod rand_distr_free {
        use rand::Rng;
        pub fn normal(rng: &mut impl Rng) -> f64 {
            let u1: f64 = rng.random_range(f64::EPSILON..1.0);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        }
    }

    fn blobs(n: usize, seed: u64) -> Dataset {
        let mut rng = crate::seed::rng(seed);
        let mut x = Array2::zeros((n, 4));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let center = if label == 0 { -3.0 } else { 3.0 };
            for j in 0..4 {
                x[[i, j]] = center + 0.5 * normal(&mut rng);
            }
            labels.push(label);
        }
        Dataset::new(x, Targets::Classes(labels)).unwrap()
    }

    fn copy_feature(n: usize, seed: u64) -> Dataset {
        let mut rng = crate::seed::rng(seed);
        let x = Array2::from_shape_fn((n, 5), |_| rng.random_range(-2.0..2.0));
        let y = x.column(2).to_vec();
        Dataset::new(x, Targets::Values(y)).unwrap()
    }

    fn linear(task: Task, lr: f64) -> ProbeSpec {
        ProbeSpec {
            normalize: false,
            model: ModelKind::Linear,
            batch_size: 64,
            learning_rate: lr,
            dropout: 0.5,
            weight_decay: 0.0,
            task,
        }
    }

    #[test]
    fn separable_blobs_reach_full_accuracy() {
        let task = Task::Classification { n_classes: 2 };
        let config = TrainConfig {
            max_epochs: 50,
            patience: 50,
        };
        let probe = train(&linear(task, 1e-2), &blobs(400, 1), &blobs(100, 2), 7, config).unwrap();
        let result = probe.evaluate_test(&blobs(100, 3)).unwrap();
        assert_eq!(result.test_metric, 1.0);
    }

    #[test]
    fn copied_feature_is_recovered() {
        let config = TrainConfig {
            max_epochs: 200,
            patience: 20,
        };
        let probe = train(
            &linear(Task::Regression, 1e-2),
            &copy_feature(500, 1),
            &copy_feature(100, 2),
            3,
            config,
        )
        .unwrap();
        let result = probe.evaluate_test(&copy_feature(100, 4)).unwrap();
        assert!(result.test_metric >= 0.999, "R2 = {}", result.test_metric);
    }

    #[test]
    fn dropout_changes_trajectory_not_finiteness() {
        let task = Task::Classification { n_classes: 2 };
        let mut spec = ProbeSpec::lm_default(task);
        let config = TrainConfig {
            max_epochs: 3,
            patience: 3,
        };
        spec.dropout = 0.25;
        let a = train(&spec, &blobs(200, 1), &blobs(50, 2), 5, config).unwrap();
        spec.dropout = 0.75;
        let b = train(&spec, &blobs(200, 1), &blobs(50, 2), 5, config).unwrap();
        assert_ne!(a.train_losses, b.train_losses);
        assert!(a.train_losses.iter().chain(&b.train_losses).all(|l| l.is_finite()));
        assert!(a.model.is_finite() && b.model.is_finite());
    }

    #[test]
    fn training_is_deterministic() {
        let spec = ProbeSpec::lm_default(Task::Classification { n_classes: 2 });
        let config = TrainConfig {
            max_epochs: 4,
            patience: 4,
        };
        let a = train(&spec, &blobs(200, 1), &blobs(50, 2), 5, config).unwrap();
        let b = train(&spec, &blobs(200, 1), &blobs(50, 2), 5, config).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.train_losses, b.train_losses);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let task = Task::Classification { n_classes: 2 };
        let config = TrainConfig::default();
        let reg = copy_feature(10, 1);
        assert!(train(&linear(task, 1e-3), &reg, &reg, 0, config).is_err());
        let narrow = Dataset::new(Array2::zeros((4, 2)), Targets::Classes(vec![0, 1, 0, 1])).unwrap();
        assert!(train(&linear(task, 1e-3), &blobs(10, 1), &narrow, 0, config).is_err());
        let bad_label = Dataset::new(Array2::zeros((2, 4)), Targets::Classes(vec![0, 2])).unwrap();
        assert!(train(&linear(task, 1e-3), &bad_label, &blobs(10, 1), 0, config).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        // squared residuals of ~1e300 predictions overflow on the first batch
        let x = Array2::from_elem((8, 1), 1e300);
        let data = Dataset::new(x, Targets::Values((0..8).map(f64::from).collect())).unwrap();
        let spec = linear(Task::Regression, 1e-3);
        let err = train(&spec, &data, &data, 0, TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Training { epoch: 1, batch: 0 }), "{err}");
    }

    #[test]
    fn selection_prefers_validation_then_tiebreaks() {
        let task = Task::Regression;
        let mk = |model, lr, val| ProbeResult {
            spec: ProbeSpec {
                model,
                learning_rate: lr,
                ..linear(task, lr)
            },
            best_epoch: 1,
            epochs_run: 1,
            val_metric: val,
            test_metric: 0.0,
            test_loss: 0.0,
            seed: 0,
            train_losses: vec![],
            val_losses: vec![],
        };
        let rs = vec![
            mk(ModelKind::Mlp512Relu, 1e-5, 0.9),
            mk(ModelKind::Linear, 1e-3, 0.9),
            mk(ModelKind::Linear, 1e-4, 0.9),
            mk(ModelKind::Linear, 1e-4, 0.9),
            mk(ModelKind::Mlp512Relu, 1e-5, 0.5),
        ];
        assert_eq!(select(&rs), 2);
        let mut better = rs.clone();
        better[4].val_metric = 0.95;
        assert_eq!(select(&better), 4);
    }

    #[test]
    fn small_grid_selects_max_validation() {
        let task = Task::Classification { n_classes: 2 };
        let specs: Vec<ProbeSpec> = ProbeSpec::grid(task).into_iter().step_by(19).collect();
        let config = TrainConfig {
            max_epochs: 5,
            patience: 2,
        };
        let out = grid_search(&specs, &blobs(120, 1), &blobs(40, 2), &blobs(40, 3), 9, config).unwrap();
        assert_eq!(out.results.len(), specs.len());
        let max = out
            .results
            .iter()
            .map(|r| r.val_metric)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.selected().val_metric, max);
        let again = grid_search(&specs, &blobs(120, 1), &blobs(40, 2), &blobs(40, 3), 9, config).unwrap();
        assert_eq!(out.results, again.results);
    }

    #[test]
    fn evaluate_bare_model() {
        let mut rng = crate::seed::rng(0);
        let mut model = ProbeModel::new(ModelKind::Linear, 1, 1, &mut rng);
        model.layers[0].weight.fill(1.0);
        model.layers[0].bias.fill(0.0);
        let x = Array2::from_shape_vec((4, 1), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let data = Dataset::new(x, Targets::Values(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        let m = evaluate(&model, &data, Task::Regression);
        assert_eq!(m.r2, Some(1.0));
        assert_eq!(m.loss, 0.0);
    }
}
