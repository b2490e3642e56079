use ndarray::{Array1, Array2, ArrayView2, Axis};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-dimension standardization fitted on training rows only.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Normalizer {
    /// Population mean and standard deviation of each column.
    ///
    /// Panics on an empty matrix.
    pub fn fit(train: ArrayView2<f64>) -> Self {
        assert!(train.nrows() > 0, "cannot fit normalization on an empty matrix");
        let mean = train.mean_axis(Axis(0)).expect("non-empty");
        let std = train.std_axis(Axis(0), 0.0);
        Normalizer { mean, std }
    }

    /// `(x - mean) / max(std, 1e-8)`.
    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let denom = self.std.mapv(|s| s.max(STD_FLOOR));
        (&x - &self.mean) / &denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn standardizes_training_data() {
        let x = array![[1.0, 10.0, 5.0], [3.0, 20.0, 5.0], [5.0, 60.0, 5.0]];
        let norm = Normalizer::fit(x.view());
        let z = norm.apply(x.view());
        for j in 0..2 {
            let col = z.column(j);
            assert!(col.mean().unwrap().abs() < 1e-12);
            assert!((col.std(0.0) - 1.0).abs() < 1e-12);
        }
        // constant column maps to zero without blowing up
        assert!(z.column(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn validation_keeps_its_shift() {
        let train = Array2::from_shape_fn((100, 2), |(i, j)| i as f64 * (j + 1) as f64);
        let val = &train + 500.0;
        let norm = Normalizer::fit(train.view());
        let z = norm.apply(val.view());
        // validation is expressed in training units, not re-centred
        for j in 0..2 {
            let expected = 500.0 / train.column(j).std(0.0);
            assert!((z.column(j).mean().unwrap() - expected).abs() < 1e-9);
            assert!(z.column(j).mean().unwrap() > 1.0);
        }
    }
}
