use ndarray::ArrayView2;

use super::model::ProbeModel;
use super::{Targets, Task};
use crate::error::{Error, Result};

pub const GRADIENT_CHECK_STEP: f64 = 1e-5;
const DENOMINATOR_FLOOR: f64 = 1e-6;

/// Compares analytic gradients (no dropout) against central differences
/// with step [`GRADIENT_CHECK_STEP`]. Returns the largest relative error
/// `|a - n| / max(|a| + |n|, 1e-6)`, or an error naming the worst parameter
/// when it exceeds `tolerance`. The floor keeps gradients that are pure
/// rounding noise (central differences carry about `1e-11` of it) from
/// dominating.
pub fn gradient_check(
    model: &ProbeModel,
    x: ArrayView2<f64>,
    targets: &Targets,
    task: Task,
    weight_decay: f64,
    tolerance: f64,
) -> Result<f64> {
    let (_, analytic) = model.loss_and_gradients(x, targets, task, weight_decay, None);
    let analytic: Vec<f64> = analytic.params().copied().collect();
    let mut probe = model.clone();
    let mut worst = (0.0, 0);
    for (index, &a) in analytic.iter().enumerate() {
        let original = *probe.params().nth(index).expect("index in range");
        set(&mut probe, index, original + GRADIENT_CHECK_STEP);
        let plus = probe.loss_and_gradients(x, targets, task, weight_decay, None).0;
        set(&mut probe, index, original - GRADIENT_CHECK_STEP);
        let minus = probe.loss_and_gradients(x, targets, task, weight_decay, None).0;
        set(&mut probe, index, original);
        let numeric = (plus - minus) / (2.0 * GRADIENT_CHECK_STEP);
        let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(DENOMINATOR_FLOOR);
        if err > worst.0 {
            worst = (err, index);
        }
    }
    if worst.0 > tolerance {
        return Err(Error::GradientCheck {
            parameter: model.param_name(worst.1),
            error: worst.0,
            tolerance,
        });
    }
    Ok(worst.0)
}

fn set(model: &mut ProbeModel, index: usize, value: f64) {
    *model.params_mut().nth(index).expect("index in range") = value;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::ModelKind;
    use ndarray::{array, Array2};
    use rand::Rng;

    #[test]
    fn linear_mse_matches_finite_differences() {
        let mut rng = crate::seed::rng(3);
        let model = ProbeModel::new(ModelKind::Linear, 2, 1, &mut rng);
        let x = array![[0.5, -1.0], [1.5, 0.2], [-0.3, 0.8], [2.0, 1.0]];
        let y = Targets::Values(vec![1.0, -0.5, 0.25, 2.0]);
        let err = gradient_check(&model, x.view(), &y, Task::Regression, 1e-3, 1e-6).unwrap();
        assert!(err <= 1e-6);
    }

    #[test]
    fn mlp_cross_entropy_matches_finite_differences() {
        let mut rng = crate::seed::rng(4);
        // narrow input keeps the 512-unit check fast
        let model = ProbeModel::new(ModelKind::Mlp512Relu, 3, 4, &mut rng);
        let x = Array2::from_shape_fn((6, 3), |_| rng.random_range(-1.0..1.0));
        let y = Targets::Classes(vec![0, 1, 2, 3, 1, 2]);
        gradient_check(&model, x.view(), &y, Task::Classification { n_classes: 4 }, 1e-4, 1e-4).unwrap();
    }

    #[test]
    fn zero_model_has_no_hidden_gradient() {
        let mut rng = crate::seed::rng(5);
        let model = ProbeModel::new(ModelKind::Mlp512Relu, 3, 2, &mut rng).zeros_like();
        let x = array![[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]];
        let y = Targets::Classes(vec![0, 1]);
        let (_, g) = model.loss_and_gradients(x.view(), &y, Task::Classification { n_classes: 2 }, 0.0, None);
        assert!(g.layers[0].weight.iter().all(|&v| v == 0.0));
        assert!(g.layers[0].bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_gradient_names_the_parameter() {
        let mut rng = crate::seed::rng(6);
        let model = ProbeModel::new(ModelKind::Linear, 2, 1, &mut rng);
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        let y = Targets::Values(vec![1.0, 1.0]);
        // a negative tolerance can never be met, so the worst parameter is reported
        match gradient_check(&model, x.view(), &y, Task::Regression, 0.0, -1.0) {
            Err(Error::GradientCheck { parameter, .. }) => assert!(parameter.starts_with("layer1.")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
