use std::sync::OnceLock;

pub const PRESET_COUNT: usize = 92;
const MAX_PARTIALS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adsr {
    pub attack_s: f64,
    pub decay_s: f64,
    pub sustain_level: f64,
    pub release_s: f64,
}

impl Adsr {
    /// Envelope level `i` samples after note-on for a note held `held`
    /// samples. Linear segments; release starts from the level reached at
    /// note-off.
    pub fn level(&self, i: usize, held: usize, sample_rate: f64) -> f64 {
        if i < held {
            self.gate_level(i as f64 / sample_rate)
        } else {
            let from = self.gate_level(held as f64 / sample_rate);
            let t = (i - held) as f64 / sample_rate;
            if t >= self.release_s {
                0.0
            } else {
                from * (1.0 - t / self.release_s)
            }
        }
    }

    fn gate_level(&self, t: f64) -> f64 {
        if t < self.attack_s {
            t / self.attack_s
        } else if t < self.attack_s + self.decay_s {
            let u = (t - self.attack_s) / self.decay_s;
            1.0 - u * (1.0 - self.sustain_level)
        } else {
            self.sustain_level
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vibrato {
    pub rate_hz: f64,
    pub depth_cents: f64,
}

/// An additive instrument voice: relative amplitudes of harmonics 1..=20,
/// an ADSR envelope, a fixed detune and optional vibrato.
#[derive(Clone, Debug, PartialEq)]
pub struct TimbrePreset {
    pub id: usize,
    pub harmonic_amplitudes: Vec<f64>,
    pub adsr: Adsr,
    pub detune_cents: f64,
    pub vibrato: Option<Vibrato>,
}

impl TimbrePreset {
    /// Single sinusoid with a plain organ envelope. Not one of the 92.
    pub fn pure_sine() -> Self {
        TimbrePreset {
            id: usize::MAX,
            harmonic_amplitudes: vec![1.0],
            adsr: Adsr {
                attack_s: 0.01,
                decay_s: 0.0,
                sustain_level: 1.0,
                release_s: 0.05,
            },
            detune_cents: 0.0,
            vibrato: None,
        }
    }

    /// Preset `id` in 0..92. The id is decoded as `24*formant + 8*parity +
    /// slope`, which enumerates 92 distinct spectra.
    fn build(id: usize) -> Self {
        let slope = id % 8;
        let parity = (id / 8) % 3;
        let formant = id / 24;
        let rolloff = 0.6 + 0.25 * slope as f64;
        let center = [0.0, 2.5, 4.5, 6.5][formant];

        let mut amps: Vec<f64> = (1..=MAX_PARTIALS)
            .map(|n| {
                let n_f = n as f64;
                let mut a = n_f.powf(-rolloff);
                if n > 1 {
                    a *= match parity {
                        0 => 1.0,
                        1 if n % 2 == 0 => 0.2,
                        1 => 1.0,
                        _ if n % 2 == 0 => 1.0,
                        _ => 0.5,
                    };
                }
                if formant > 0 {
                    a *= 1.0 + 0.8 * (-(n_f - center).powi(2)).exp();
                }
                a
            })
            .collect();
        let fundamental = amps[0];
        for a in amps.iter_mut() {
            *a = (*a / fundamental).min(0.85);
        }
        amps[0] = 1.0;
        let total: f64 = amps.iter().sum();
        for a in amps.iter_mut() {
            *a /= total;
        }

        let adsr = Adsr {
            attack_s: [0.004, 0.012, 0.03, 0.07][id % 4],
            decay_s: [0.05, 0.12, 0.25][id % 3],
            sustain_level: [0.9, 0.7, 0.5, 0.3, 0.6][id % 5],
            release_s: [0.04, 0.1, 0.2][(id / 4) % 3],
        };
        let vibrato = (id % 5 == 2).then_some(Vibrato {
            rate_hz: 4.5 + 0.5 * (id % 3) as f64,
            depth_cents: 6.0 + 2.0 * (id % 2) as f64,
        });
        TimbrePreset {
            id,
            harmonic_amplitudes: amps,
            adsr,
            detune_cents: (id % 7) as f64 - 3.0,
            vibrato,
        }
    }
}

pub fn presets() -> &'static [TimbrePreset] {
    static PRESETS: OnceLock<Vec<TimbrePreset>> = OnceLock::new();
    PRESETS.get_or_init(|| (0..PRESET_COUNT).map(TimbrePreset::build).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_invariants() {
        let all = presets();
        assert_eq!(all.len(), PRESET_COUNT);
        for (i, p) in all.iter().enumerate() {
            assert_eq!(p.id, i);
            assert!(p.harmonic_amplitudes.iter().all(|&a| a >= 0.0));
            assert!(p.harmonic_amplitudes[0] > 0.0);
            // a single note's waveform is bounded by the partial sum
            let bound: f64 = p.harmonic_amplitudes.iter().sum();
            assert!(bound <= 1.0 + 1e-12);
            assert!(p.detune_cents.abs() <= 3.0);
        }
    }

    #[test]
    fn adsr_shape() {
        let env = Adsr {
            attack_s: 0.01,
            decay_s: 0.1,
            sustain_level: 0.5,
            release_s: 0.1,
        };
        let sr = 1000.0;
        assert_eq!(env.level(0, 500, sr), 0.0);
        assert!((env.level(10, 500, sr) - 1.0).abs() < 1e-12);
        assert!((env.level(300, 500, sr) - 0.5).abs() < 1e-12);
        assert!((env.level(550, 500, sr) - 0.25).abs() < 1e-12);
        assert_eq!(env.level(600, 500, sr), 0.0);
    }
}
