use serde::{Deserialize, Serialize};

use super::AudioClip;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReverbLevel {
    Dry,
    Medium,
    Spacious,
}

impl ReverbLevel {
    pub const ALL: [ReverbLevel; 3] = [ReverbLevel::Dry, ReverbLevel::Medium, ReverbLevel::Spacious];

    pub fn wet_mix(self) -> f64 {
        match self {
            ReverbLevel::Dry => 0.0,
            ReverbLevel::Medium => 0.2,
            ReverbLevel::Spacious => 0.4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReverbLevel::Dry => "dry",
            ReverbLevel::Medium => "medium",
            ReverbLevel::Spacious => "spacious",
        }
    }
}

// Delays in samples at 22,050 Hz.
const COMB_DELAYS: [usize; 4] = [558, 594, 638, 678];
const COMB_FEEDBACK: f64 = 0.84;
const ALLPASS_DELAYS: [usize; 2] = [278, 111];
const ALLPASS_GAIN: f64 = 0.5;

fn comb(input: &[f64], delay: usize) -> Vec<f64> {
    let mut out = vec![0.0; input.len()];
    for i in 0..input.len() {
        let fb = if i >= delay { out[i - delay] } else { 0.0 };
        out[i] = input[i] + COMB_FEEDBACK * fb;
    }
    // output is the delayed line
    let mut delayed = vec![0.0; input.len()];
    delayed[delay..].copy_from_slice(&out[..input.len() - delay]);
    delayed
}

fn allpass(input: &[f64], delay: usize) -> Vec<f64> {
    let mut out = vec![0.0; input.len()];
    for i in 0..input.len() {
        let x_d = if i >= delay { input[i - delay] } else { 0.0 };
        let y_d = if i >= delay { out[i - delay] } else { 0.0 };
        out[i] = -ALLPASS_GAIN * input[i] + x_d + ALLPASS_GAIN * y_d;
    }
    out
}

/// Schroeder reverberator (4 parallel combs, 2 series allpasses) mixed as
/// `(1 - wet) * dry + wet * reverb`, then scaled down if the peak exceeds 1.
pub fn apply_reverb(clip: &AudioClip, level: ReverbLevel) -> AudioClip {
    if level == ReverbLevel::Dry {
        return clip.clone();
    }
    let dry: Vec<f64> = clip.samples().iter().map(|&s| s as f64).collect();
    let mut wet = vec![0.0; dry.len()];
    for d in COMB_DELAYS {
        for (w, c) in wet.iter_mut().zip(comb(&dry, d)) {
            *w += c / COMB_DELAYS.len() as f64;
        }
    }
    for d in ALLPASS_DELAYS {
        wet = allpass(&wet, d);
    }
    let mix = level.wet_mix();
    let mut out: Vec<f64> = dry.iter().zip(&wet).map(|(d, w)| (1.0 - mix) * d + mix * w).collect();
    let peak = out.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 1.0 {
        out.iter_mut().for_each(|s| *s /= peak);
    }
    AudioClip::from_unclipped(out.into_iter().map(|s| s as f32).collect()).expect("same length as input")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{CLIP_LEN, SAMPLE_RATE};

    fn impulse() -> AudioClip {
        let mut s = vec![0.0; CLIP_LEN];
        s[0] = 1.0;
        AudioClip::from_samples(s).unwrap()
    }

    #[test]
    fn dry_is_identity() {
        let clip = impulse();
        assert_eq!(apply_reverb(&clip, ReverbLevel::Dry), clip);
    }

    #[test]
    fn silence_stays_silent() {
        let out = apply_reverb(&AudioClip::silence(), ReverbLevel::Spacious);
        assert!(out.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn impulse_response_has_a_tail() {
        let tail_start = (0.1 * SAMPLE_RATE as f64) as usize;
        let tail = |level| -> f64 {
            apply_reverb(&impulse(), level).samples()[tail_start..]
                .iter()
                .map(|&s| (s as f64).powi(2))
                .sum()
        };
        assert!(tail(ReverbLevel::Medium) > 1e-6);
        assert!(tail(ReverbLevel::Spacious) > tail(ReverbLevel::Medium));
    }

    #[test]
    fn output_is_bounded() {
        let loud = AudioClip::from_samples(
            (0..CLIP_LEN)
                .map(|i| if (i / 300) % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
        )
        .unwrap();
        let out = apply_reverb(&loud, ReverbLevel::Spacious);
        assert!(out.samples().iter().all(|s| s.abs() <= 1.0));
    }
}
