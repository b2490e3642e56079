use std::f64::consts::PI;
use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64;

use super::{FftPlan, Spectrogram};
use crate::synth::{AudioClip, SAMPLE_RATE};

pub const WINDOW: usize = 2048;
pub const HOP: usize = 512;
pub const N_BINS: usize = WINDOW / 2 + 1;

fn plan() -> &'static FftPlan {
    static PLAN: OnceLock<FftPlan> = OnceLock::new();
    PLAN.get_or_init(|| FftPlan::new(WINDOW).expect("window is a power of two"))
}

/// Periodic Hann window.
fn hann() -> &'static [f64] {
    static HANN: OnceLock<Vec<f64>> = OnceLock::new();
    HANN.get_or_init(|| {
        (0..WINDOW)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / WINDOW as f64).cos())
            .collect()
    })
}

fn frames_with(clip: &AudioClip, map: impl Fn(Complex64) -> f64) -> Spectrogram {
    let x = clip.samples();
    let n_frames = if x.len() < WINDOW {
        0
    } else {
        1 + (x.len() - WINDOW) / HOP
    };
    let window = hann();
    let mut out = Array2::zeros((n_frames, N_BINS));
    let mut buf = vec![Complex64::new(0.0, 0.0); WINDOW];
    for (f, mut row) in out.rows_mut().into_iter().enumerate() {
        let start = f * HOP;
        for (slot, (&s, &w)) in buf.iter_mut().zip(x[start..start + WINDOW].iter().zip(window)) {
            *slot = Complex64::new(s as f64 * w, 0.0);
        }
        plan().process(&mut buf);
        for (o, c) in row.iter_mut().zip(&buf[..N_BINS]) {
            *o = map(*c);
        }
    }
    Spectrogram {
        frames: out,
        window: WINDOW,
        hop: HOP,
        sample_rate: SAMPLE_RATE,
    }
}

/// Hann-windowed magnitude STFT; frames start at multiples of the hop with
/// no padding, so a 4 s clip has 169 frames.
pub fn stft(clip: &AudioClip) -> Spectrogram {
    frames_with(clip, |c| c.norm())
}

/// Squared-magnitude STFT.
pub fn power_spectrogram(clip: &AudioClip) -> Spectrogram {
    frames_with(clip, |c| c.norm_sqr())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::synth::CLIP_LEN;

    pub(crate) fn sine(hz: f64, amp: f64) -> AudioClip {
        AudioClip::from_samples(
            (0..CLIP_LEN)
                .map(|i| (amp * (2.0 * PI * hz * i as f64 / SAMPLE_RATE as f64).sin()) as f32)
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn frame_count() {
        let s = stft(&AudioClip::silence());
        assert_eq!(s.n_frames(), 1 + (88_200 - 2048) / 512);
        assert_eq!(s.n_frames(), 169);
        assert_eq!(s.n_bins(), 1025);
        assert!(s.frames.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_peaks_at_expected_bin() {
        let expected = (440.0f64 * 2048.0 / 22050.0).round() as usize;
        assert_eq!(expected, 41);
        let s = stft(&sine(440.0, 0.5));
        for row in s.frames.rows() {
            let k = (0..N_BINS).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(k, expected);
        }
    }

    #[test]
    fn entries_are_non_negative() {
        let s = power_spectrogram(&sine(1234.5, 0.3));
        assert!(s.frames.iter().all(|&v| v >= 0.0));
    }
}
