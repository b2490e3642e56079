use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Precomputed twiddles and bit-reversal permutation for an in-place
/// iterative radix-2 FFT of one size.
#[derive(Clone, Debug)]
pub struct FftPlan {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Argument(format!("FFT size {n} is not a power of two")));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(FftPlan { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Forward transform, `X[k] = sum_t x[t] e^{-2 pi i k t / n}`.
    pub fn process(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "buffer length must match the plan");
        for i in 0..self.n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.n {
            let half = size / 2;
            let stride = self.n / size;
            for start in (0..self.n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

/// DFT of a real signal zero-padded to `n` (a power of two).
pub fn fft(signal: &[f64], n: usize) -> Result<Vec<Complex64>> {
    let plan = FftPlan::new(n)?;
    if signal.len() > n {
        return Err(Error::Argument(format!(
            "signal of length {} does not fit FFT size {n}",
            signal.len()
        )));
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    plan.process(&mut buf);
    Ok(buf)
}
