use std::sync::OnceLock;

use ndarray::{Array2, ArrayView2, Axis};

use super::{power_spectrogram, Spectrogram, N_BINS, N_CHROMA, WINDOW};
use crate::synth::{AudioClip, SAMPLE_RATE};
use crate::theory::midi_to_hz;

/// C1 through C8.
const LOWEST_MIDI: u8 = 24;
const HIGHEST_MIDI: u8 = 108;
/// Frames whose largest chroma energy is at or below this stay all-zero.
const ENERGY_FLOOR: f64 = 1e-12;

/// `[12 x 1025]` projection from STFT power to pitch classes.
///
/// Each semitone C1..=C8 is a Gaussian window over STFT bins centred on its
/// equal-temperament frequency, with a width of a quarter tone or one bin,
/// whichever is wider; semitone rows are then summed by pitch class. With a
/// symmetric kernel at least a bin wide, the semitone whose centre is
/// nearest to a partial collects the most of its energy even where bins are
/// wider than a semitone.
pub fn chroma_filterbank() -> &'static Array2<f64> {
    static FB: OnceLock<Array2<f64>> = OnceLock::new();
    FB.get_or_init(|| {
        let bin_hz = SAMPLE_RATE as f64 / WINDOW as f64;
        let mut fb = Array2::zeros((N_CHROMA, N_BINS));
        for midi in LOWEST_MIDI..=HIGHEST_MIDI {
            let center = midi_to_hz(midi as f64);
            let sigma = (center * (2f64.powf(1.0 / 24.0) - 1.0)).max(bin_hz);
            let pc = (midi % 12) as usize;
            for k in 1..N_BINS {
                let z = (k as f64 * bin_hz - center) / sigma;
                if z.abs() < 6.0 {
                    fb[[pc, k]] += (-0.5 * z * z).exp();
                }
            }
        }
        fb
    })
}

/// Chroma frames from STFT power, each normalized to unit maximum.
pub fn chroma_from_power(power: ArrayView2<f64>) -> Array2<f64> {
    let mut out = power.dot(&chroma_filterbank().t());
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.iter().cloned().fold(0.0, f64::max);
        if max > ENERGY_FLOOR {
            row /= max;
        } else {
            row.fill(0.0);
        }
    }
    out
}

/// `[169 x 12]` chromagram.
pub fn chroma(clip: &AudioClip) -> Spectrogram {
    let power = power_spectrogram(clip);
    Spectrogram {
        frames: chroma_from_power(power.frames.view()),
        ..power
    }
}
