use ndarray::{ArrayView1, ArrayView2};

/// Fraction of rows whose argmax equals the label.
pub fn accuracy(scores: ArrayView2<f64>, labels: &[usize]) -> f64 {
    assert_eq!(scores.nrows(), labels.len());
    if labels.is_empty() {
        return 0.0;
    }
    let correct = scores
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &label)| argmax(*row) == label)
        .count();
    correct as f64 / labels.len() as f64
}

/// First index of the maximum.
pub fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Coefficient of determination `1 - SS_res / SS_tot`. Constant targets give
/// 1 for an exact fit and 0 otherwise.
pub fn r2(predictions: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(predictions.len(), targets.len());
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean).powi(2)).sum();
    let ss_res: f64 = predictions.iter().zip(targets).map(|(p, t)| (t - p).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn r2_identities() {
        let t = [3.0, -1.0, 4.0, 1.5, 9.0];
        assert_eq!(r2(&t, &t), 1.0);
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        assert!(r2(&[mean; 5], &t).abs() < 1e-12);
        assert!(r2(&[100.0; 5], &t) < 0.0);
    }

    #[test]
    fn constant_classifier_on_balanced_data() {
        let labels: Vec<usize> = (0..300).map(|i| i % 3).collect();
        let mut scores = Array2::zeros((300, 3));
        scores.column_mut(0).fill(1.0);
        assert!((accuracy(scores.view(), &labels) - 1.0 / 3.0).abs() < 1e-12);
    }
}
