use std::f64::consts::PI;
use std::sync::OnceLock;

use ndarray::{Array2, ArrayView2};

use super::{power_spectrogram, Spectrogram, N_BINS, N_MELS, N_MFCC, WINDOW};
use crate::synth::{AudioClip, SAMPLE_RATE};

// Slaney mel scale: linear below 1 kHz, logarithmic above.
const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

pub fn hz_to_mel(hz: f64) -> f64 {
    if hz >= MIN_LOG_HZ {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / log_step()
    } else {
        hz / F_SP
    }
}

pub fn mel_to_hz(mel: f64) -> f64 {
    if mel >= MIN_LOG_MEL {
        MIN_LOG_HZ * (log_step() * (mel - MIN_LOG_MEL)).exp()
    } else {
        mel * F_SP
    }
}

fn build_filterbank(n_mels: usize, n_fft: usize, sample_rate: f64) -> Array2<f64> {
    let n_bins = n_fft / 2 + 1;
    let max_mel = hz_to_mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(max_mel * i as f64 / (n_mels + 1) as f64))
        .collect();
    Array2::from_shape_fn((n_mels, n_bins), |(m, k)| {
        let f = k as f64 * sample_rate / n_fft as f64;
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let rising = (f - lo) / (mid - lo);
        let falling = (hi - f) / (hi - mid);
        let tri = rising.min(falling).max(0.0);
        // area normalization
        tri * 2.0 / (hi - lo)
    })
}

/// Triangular mel filters `[128 x 1025]` for the 2048-point STFT at 22,050 Hz.
pub fn mel_filterbank() -> &'static Array2<f64> {
    static FB: OnceLock<Array2<f64>> = OnceLock::new();
    FB.get_or_init(|| build_filterbank(N_MELS, WINDOW, SAMPLE_RATE as f64))
}

/// Power spectrogram frames projected onto the mel filters (no compression).
pub fn mel_from_power(power: ArrayView2<f64>) -> Array2<f64> {
    debug_assert_eq!(power.ncols(), N_BINS);
    power.dot(&mel_filterbank().t())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogCompression {
    /// `ln(1 + S)`
    Log1p,
    /// `ln(S + eps)`
    LogEps(f64),
}

impl LogCompression {
    pub fn apply(self, mut x: Array2<f64>) -> Array2<f64> {
        match self {
            LogCompression::Log1p => x.mapv_inplace(f64::ln_1p),
            LogCompression::LogEps(eps) => x.mapv_inplace(|v| (v + eps).ln()),
        }
        x
    }
}

/// Log-compressed (`ln(1 + S)`) mel power spectrogram, `[169 x 128]`.
pub fn mel_spectrogram(clip: &AudioClip) -> Spectrogram {
    let power = power_spectrogram(clip);
    let frames = LogCompression::Log1p.apply(mel_from_power(power.frames.view()));
    Spectrogram { frames, ..power }
}

/// Orthonormal DCT-II rows `0..n_out` for length-`n_in` inputs.
pub fn dct_matrix(n_out: usize, n_in: usize) -> Array2<f64> {
    Array2::from_shape_fn((n_out, n_in), |(k, n)| {
        let scale = if k == 0 {
            (1.0 / n_in as f64).sqrt()
        } else {
            (2.0 / n_in as f64).sqrt()
        };
        scale * (PI * k as f64 * (2 * n + 1) as f64 / (2 * n_in) as f64).cos()
    })
}

fn mfcc_dct() -> &'static Array2<f64> {
    static DCT: OnceLock<Array2<f64>> = OnceLock::new();
    DCT.get_or_init(|| dct_matrix(N_MFCC, N_MELS))
}

/// First 20 orthonormal DCT-II coefficients of each log-mel frame.
pub fn mfcc_from_log_mel(log_mel: ArrayView2<f64>) -> Array2<f64> {
    log_mel.dot(&mfcc_dct().t())
}

pub fn mfcc(clip: &AudioClip) -> Spectrogram {
    let mel = mel_spectrogram(clip);
    Spectrogram {
        frames: mfcc_from_log_mel(mel.frames.view()),
        ..mel
    }
}

#[cfg(test)]
mod tests {
    use super::super::stft::tests::sine;
    use super::*;
    use crate::synth::CLIP_LEN;
    use rand::Rng;

    #[test]
    fn slaney_scale_reference_points() {
        assert!((hz_to_mel(440.0) - 6.6).abs() < 1e-12);
        assert!((hz_to_mel(1000.0) - 15.0).abs() < 1e-12);
        for hz in [0.0, 100.0, 999.0, 1000.0, 5000.0, 11025.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
    }

    #[test]
    fn filterbank_covers_the_band() {
        let fb = mel_filterbank();
        assert_eq!(fb.dim(), (128, 1025));
        for m in 0..127 {
            let overlap = (0..1025).any(|k| fb[[m, k]] > 0.0 && fb[[m + 1, k]] > 0.0);
            assert!(overlap, "filters {m} and {} do not overlap", m + 1);
        }
        for k in 1..1024 {
            assert!(fb.column(k).sum() > 0.0, "bin {k} uncovered");
        }
    }

    #[test]
    fn silence_maps_to_zero() {
        let mel = mel_spectrogram(&AudioClip::silence());
        assert_eq!(mel.frames.dim(), (169, 128));
        assert!(mel.frames.iter().all(|&v| v == 0.0));
        assert!(mfcc(&AudioClip::silence()).frames.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_energy_lands_near_its_mel_position() {
        // filter m is centered on edge m+1 of 130 equally spaced mel points
        let max_mel = hz_to_mel(11025.0);
        let analytic = hz_to_mel(440.0) / max_mel * 129.0 - 1.0;
        let mel = mel_spectrogram(&sine(440.0, 0.5));
        for row in mel.frames.rows() {
            let m = (0..128).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert!((m as f64 - analytic).abs() <= 1.0, "argmax {m}, analytic {analytic}");
        }
    }

    #[test]
    fn dct_is_orthonormal() {
        let full = dct_matrix(128, 128);
        let eye = full.dot(&full.t());
        for ((i, j), v) in eye.indexed_iter() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-10);
        }
        // keeping 20 rows and inverting gives the projection onto them
        let mut rng = crate::seed::rng(5);
        let x = ndarray::Array1::from_shape_fn(128, |_| rng.random_range(-1.0..1.0));
        let coeffs = full.dot(&x);
        let truncated = dct_matrix(20, 128).dot(&x);
        let projected = dct_matrix(20, 128).t().dot(&truncated);
        let mut expected = coeffs.clone();
        expected.slice_mut(ndarray::s![20..]).fill(0.0);
        let expected = full.t().dot(&expected);
        for (a, b) in projected.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn gain_only_moves_the_zeroth_coefficient() {
        let mut rng = crate::seed::rng(9);
        let noise: Vec<f32> = (0..CLIP_LEN).map(|_| rng.random_range(-0.4f32..0.4)).collect();
        let gain = 0.5;
        let quiet: Vec<f32> = noise.iter().map(|&s| s * gain as f32).collect();
        let compute = |samples: Vec<f32>| {
            let clip = AudioClip::from_samples(samples).unwrap();
            let power = power_spectrogram(&clip);
            let log_mel = LogCompression::LogEps(1e-12).apply(mel_from_power(power.frames.view()));
            mfcc_from_log_mel(log_mel.view())
        };
        let loud = compute(noise);
        let soft = compute(quiet);
        let offset = 2.0 * f64::ln(gain) * (128.0f64).sqrt();
        for (a, b) in loud.rows().into_iter().zip(soft.rows()) {
            assert!((b[0] - a[0] - offset).abs() < 1e-6);
            for c in 1..20 {
                assert!((a[c] - b[c]).abs() < 1e-6, "coefficient {c}: {} vs {}", a[c], b[c]);
            }
        }
    }
}
