use std::sync::OnceLock;

use rand::Rng;

use super::{AudioClip, CLIP_LEN, SAMPLE_RATE};

/// A short percussive hit: a decaying sinusoid (with optional downward pitch
/// sweep and an inharmonic overtone) mixed with decaying white noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClickSound {
    pub base_hz: f64,
    pub noise_mix: f64,
    pub decay_s: f64,
    /// Final frequency as a fraction of `base_hz`, reached exponentially.
    pub sweep_to: f64,
    pub gain: f64,
}

impl ClickSound {
    fn waveform(&self, noise_seed: u64) -> Vec<f32> {
        let sr = SAMPLE_RATE as f64;
        let len = ((self.decay_s * 7.0).min(0.3) * sr) as usize;
        let mut noise = crate::seed::rng(noise_seed);
        let mut phase = 0.0f64;
        (0..len)
            .map(|i| {
                let t = i as f64 / sr;
                let env = (-t / self.decay_s).exp();
                // 1 ms linear fade-in avoids a step discontinuity
                let fade = (t / 0.001).min(1.0);
                let hz = self.base_hz * self.sweep_to.powf((t / (3.0 * self.decay_s)).min(1.0));
                phase += hz / sr;
                let tone = (std::f64::consts::TAU * phase).sin() + 0.3 * (std::f64::consts::TAU * phase * 2.76).sin();
                let n: f64 = noise.random_range(-1.0..1.0);
                (self.gain * fade * env * ((1.0 - self.noise_mix) * tone / 1.3 + self.noise_mix * n)) as f32
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClickSetting {
    pub id: usize,
    pub name: &'static str,
    pub downbeat: ClickSound,
    pub upbeat: ClickSound,
    pub channel: u8,
    pub program: Option<u8>,
    pub downbeat_note: u8,
    pub upbeat_note: u8,
    pub downbeat_velocity: u8,
    pub upbeat_velocity: u8,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClickEvent {
    pub time_s: f64,
    pub is_downbeat: bool,
}

fn sound(base_hz: f64, noise_mix: f64, decay_s: f64, sweep_to: f64, gain: f64) -> ClickSound {
    ClickSound {
        base_hz,
        noise_mix,
        decay_s,
        sweep_to,
        gain,
    }
}

pub fn click_settings() -> &'static [ClickSetting] {
    static SETTINGS: OnceLock<Vec<ClickSetting>> = OnceLock::new();
    SETTINGS.get_or_init(|| {
        vec![
            ClickSetting {
                id: 0,
                name: "Woodblock Light",
                downbeat: sound(1900.0, 0.08, 0.025, 1.0, 0.9),
                upbeat: sound(1350.0, 0.08, 0.025, 1.0, 0.7),
                channel: 0,
                program: Some(115),
                downbeat_note: 77,
                upbeat_note: 76,
                downbeat_velocity: 120,
                upbeat_velocity: 90,
            },
            ClickSetting {
                id: 1,
                name: "Woodblock Dark",
                downbeat: sound(950.0, 0.1, 0.035, 1.0, 0.9),
                upbeat: sound(680.0, 0.1, 0.035, 1.0, 0.7),
                channel: 0,
                program: Some(115),
                downbeat_note: 65,
                upbeat_note: 64,
                downbeat_velocity: 120,
                upbeat_velocity: 90,
            },
            ClickSetting {
                id: 2,
                name: "Taiko",
                downbeat: sound(95.0, 0.25, 0.12, 0.7, 0.95),
                upbeat: sound(150.0, 0.25, 0.08, 0.75, 0.7),
                channel: 0,
                program: Some(116),
                downbeat_note: 48,
                upbeat_note: 55,
                downbeat_velocity: 120,
                upbeat_velocity: 90,
            },
            ClickSetting {
                id: 3,
                name: "Synth Drum",
                downbeat: sound(240.0, 0.05, 0.09, 0.4, 0.9),
                upbeat: sound(420.0, 0.05, 0.06, 0.5, 0.7),
                channel: 0,
                program: Some(118),
                downbeat_note: 60,
                upbeat_note: 67,
                downbeat_velocity: 120,
                upbeat_velocity: 90,
            },
            ClickSetting {
                id: 4,
                name: "Drum Kit",
                downbeat: sound(62.0, 0.12, 0.11, 0.6, 1.0),
                upbeat: sound(6200.0, 0.85, 0.035, 1.0, 0.6),
                channel: crate::midi::PERCUSSION_CHANNEL,
                program: None,
                downbeat_note: 36,
                upbeat_note: 42,
                downbeat_velocity: 120,
                upbeat_velocity: 90,
            },
        ]
    })
}

fn waveforms(id: usize) -> &'static (Vec<f32>, Vec<f32>) {
    static CACHE: OnceLock<Vec<(Vec<f32>, Vec<f32>)>> = OnceLock::new();
    &CACHE.get_or_init(|| {
        click_settings()
            .iter()
            .map(|s| {
                let seed = 0xC11C_0000 + 2 * s.id as u64;
                (s.downbeat.waveform(seed), s.upbeat.waveform(seed + 1))
            })
            .collect()
    })[id]
}

/// Places the downbeat or upbeat sound at each event time. Overlapping tails
/// sum and the result is hard-limited to [-1, 1].
pub fn render_clicks(pattern: &[ClickEvent], click: &ClickSetting) -> AudioClip {
    let (down, up) = waveforms(click.id);
    let mut mix = vec![0.0f32; CLIP_LEN];
    for ev in pattern {
        let start = (ev.time_s * SAMPLE_RATE as f64).round();
        if !(0.0..CLIP_LEN as f64).contains(&start) {
            continue;
        }
        let start = start as usize;
        let wave = if ev.is_downbeat { down } else { up };
        for (slot, &s) in mix[start..].iter_mut().zip(wave) {
            *slot += s;
        }
    }
    AudioClip::from_unclipped(mix).expect("click buffer has clip length")
}
