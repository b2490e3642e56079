//! Offline additive synthesizer, metronome clicks, reverb and WAV I/O.
//!
//! Every clip is 4.0 s of mono audio at 22,050 Hz. Rendering is a pure
//! function of its inputs.

mod clicks;
mod presets;
mod reverb;
mod wav;

pub use clicks::{click_settings, render_clicks, ClickEvent, ClickSetting, ClickSound};
pub use presets::{presets, Adsr, TimbrePreset, Vibrato, PRESET_COUNT};
pub use reverb::{apply_reverb, ReverbLevel};
pub use wav::{read_wav, write_wav};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::midi::{EventKind, MidiSequence};

pub const SAMPLE_RATE: u32 = 22_050;
pub const CLIP_SECONDS: f64 = 4.0;
pub const CLIP_LEN: usize = 88_200;

/// Peak gain of a full-velocity note.
const NOTE_GAIN: f64 = 0.5;
const TABLE_LEN: usize = 4096;
/// Partials at or above this frequency are dropped.
const PARTIAL_CEILING_HZ: f64 = 10_000.0;
/// RMS below this counts as silence.
pub const SILENCE_RMS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
}

impl AudioClip {
    pub fn silence() -> Self {
        AudioClip {
            samples: vec![0.0; CLIP_LEN],
        }
    }

    pub fn from_samples(samples: Vec<f32>) -> Result<Self> {
        if samples.len() != CLIP_LEN {
            return Err(Error::Validation(format!(
                "clip has {} samples, expected {CLIP_LEN}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::Validation(format!(
                "sample {i} = {} is outside [-1, 1]",
                samples[i]
            )));
        }
        Ok(AudioClip { samples })
    }

    /// Hard-limits every sample to [-1, 1]; non-finite samples become 0.
    pub fn from_unclipped(mut samples: Vec<f32>) -> Result<Self> {
        for s in &mut samples {
            *s = if s.is_finite() { s.clamp(-1.0, 1.0) } else { 0.0 };
        }
        Self::from_samples(samples)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn rms(&self) -> f64 {
        let energy: f64 = self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
        (energy / self.samples.len() as f64).sqrt()
    }

    pub fn is_silent(&self) -> bool {
        self.rms() < SILENCE_RMS
    }
}

struct Voice {
    start: usize,
    note_off: usize,
    midi: u8,
    velocity: u8,
}

fn seconds_to_sample(t: f64) -> usize {
    (t * SAMPLE_RATE as f64).round() as usize
}

fn collect_voices(seq: &MidiSequence) -> Vec<Voice> {
    let mut voices = Vec::new();
    let mut open: Vec<(u8, u8, usize, u8)> = Vec::new();
    for (t, kind) in seq.timed() {
        match kind {
            EventKind::NoteOn {
                channel,
                note,
                velocity,
            } if velocity > 0 => {
                open.push((channel, note, seconds_to_sample(t), velocity));
            }
            EventKind::NoteOn { channel, note, .. } | EventKind::NoteOff { channel, note, .. } => {
                if let Some(i) = open.iter().position(|&(c, n, _, _)| c == channel && n == note) {
                    let (_, midi, start, velocity) = open.remove(i);
                    voices.push(Voice {
                        start,
                        note_off: seconds_to_sample(t),
                        midi,
                        velocity,
                    });
                }
            }
            _ => {}
        }
    }
    // notes still held at end-of-track are released at the clip end
    for (_, midi, start, velocity) in open {
        voices.push(Voice {
            start,
            note_off: CLIP_LEN,
            midi,
            velocity,
        });
    }
    voices
}

/// One band-limited cycle of the preset's waveform at `fundamental_hz`.
fn wavetable(preset: &TimbrePreset, fundamental_hz: f64) -> Vec<f64> {
    let partials: Vec<(f64, f64)> = preset
        .harmonic_amplitudes
        .iter()
        .enumerate()
        .map(|(i, &a)| ((i + 1) as f64, a))
        .filter(|&(n, a)| a > 0.0 && (n == 1.0 || n * fundamental_hz < PARTIAL_CEILING_HZ))
        .collect();
    (0..TABLE_LEN)
        .map(|k| {
            let phase = std::f64::consts::TAU * k as f64 / TABLE_LEN as f64;
            partials.iter().map(|&(n, a)| a * (n * phase).sin()).sum()
        })
        .collect()
}

fn render_voice(out: &mut [f64], voice: &Voice, preset: &TimbrePreset, table: &[f64]) {
    if voice.start >= out.len() {
        return;
    }
    let sr = SAMPLE_RATE as f64;
    let base_hz = crate::theory::midi_to_hz(voice.midi as f64 + preset.detune_cents / 100.0);
    let gain = NOTE_GAIN * voice.velocity as f64 / 127.0;
    let held = voice.note_off.saturating_sub(voice.start);
    let release = (preset.adsr.release_s * sr).round() as usize;
    let end = (voice.start + held + release).min(out.len());
    let mut phase = 0.0f64;
    for (i, slot) in out[voice.start..end].iter_mut().enumerate() {
        let env = preset.adsr.level(i, held, sr);
        let idx = phase * TABLE_LEN as f64;
        let k = idx as usize;
        let frac = idx - k as f64;
        let a = table[k % TABLE_LEN];
        let b = table[(k + 1) % TABLE_LEN];
        *slot += gain * env * (a + frac * (b - a));
        let hz = match preset.vibrato {
            Some(v) => {
                let t = i as f64 / sr;
                base_hz * 2f64.powf(v.depth_cents / 1200.0 * (std::f64::consts::TAU * v.rate_hz * t).sin())
            }
            None => base_hz,
        };
        phase += hz / sr;
        phase -= phase.floor();
    }
}

/// Renders melodic note events through `preset`. Events past 4.0 s are cut.
pub fn render(seq: &MidiSequence, preset: &TimbrePreset) -> AudioClip {
    let mut mix = vec![0.0f64; CLIP_LEN];
    // one table per distinct note
    let mut tables: HashMap<u8, Vec<f64>> = HashMap::new();
    for voice in collect_voices(seq) {
        let table = tables.entry(voice.midi).or_insert_with(|| {
            wavetable(
                preset,
                crate::theory::midi_to_hz(voice.midi as f64 + preset.detune_cents / 100.0),
            )
        });
        render_voice(&mut mix, &voice, preset, table);
    }
    AudioClip::from_unclipped(mix.into_iter().map(|s| s as f32).collect()).expect("rendered buffer has clip length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::DEFAULT_PPQ;

    pub(crate) fn held_note(midi: u8, seconds: f64) -> MidiSequence {
        let ticks = (seconds * 2.0 * DEFAULT_PPQ as f64) as u32;
        MidiSequence::from_absolute(
            DEFAULT_PPQ,
            vec![
                (0, EventKind::tempo_bpm(120.0)),
                (
                    0,
                    EventKind::NoteOn {
                        channel: 0,
                        note: midi,
                        velocity: 96,
                    },
                ),
                (
                    ticks,
                    EventKind::NoteOff {
                        channel: 0,
                        note: midi,
                        velocity: 0,
                    },
                ),
            ],
        )
    }

    fn peak_bin(clip: &AudioClip) -> (usize, usize) {
        let n = 1 << 17;
        let mut buf: Vec<f64> = clip.samples().iter().map(|&s| s as f64).collect();
        buf.resize(n, 0.0);
        let spec = crate::features::fft(&buf, n).unwrap();
        let mags: Vec<f64> = spec[..n / 2].iter().map(|c| c.norm()).collect();
        let k = (1..n / 2).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap();
        (k, n)
    }

    #[test]
    fn pure_sine_a4_peaks_at_440() {
        let sine = TimbrePreset::pure_sine();
        let clip = render(&held_note(69, 3.5), &sine);
        let (k, n) = peak_bin(&clip);
        let hz = k as f64 * SAMPLE_RATE as f64 / n as f64;
        let bin_width = SAMPLE_RATE as f64 / n as f64;
        assert!((hz - 440.0).abs() <= bin_width, "peak at {hz}");
    }

    #[test]
    fn empty_sequence_renders_silence() {
        let clip = render(&MidiSequence::empty(DEFAULT_PPQ), &presets()[3]);
        assert!(clip.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rendering_is_deterministic() {
        let seq = held_note(60, 2.0);
        for preset in presets().iter().step_by(7) {
            assert_eq!(render(&seq, preset), render(&seq, preset));
        }
    }

    #[test]
    fn notes_past_clip_end_are_truncated() {
        let clip = render(&held_note(60, 10.0), &presets()[0]);
        assert_eq!(clip.samples().len(), CLIP_LEN);
        assert!(!clip.is_silent());
    }

    #[test]
    fn extreme_registers_are_voiced() {
        for midi in [0u8, 1, 11, 107, 120, 127] {
            for preset in presets().iter().step_by(13) {
                let clip = render(&held_note(midi, 0.5), preset);
                assert!(!clip.is_silent(), "note {midi} preset {}", preset.id);
            }
        }
    }

    #[test]
    fn clip_validation() {
        assert!(AudioClip::from_samples(vec![0.0; 10]).is_err());
        let mut bad = vec![0.0; CLIP_LEN];
        bad[5] = 1.5;
        assert!(AudioClip::from_samples(bad.clone()).is_err());
        assert_eq!(AudioClip::from_unclipped(bad).unwrap().samples()[5], 1.0);
        let mut nan = vec![0.0; CLIP_LEN];
        nan[1] = f32::NAN;
        assert!(AudioClip::from_samples(nan).is_err());
    }
}
