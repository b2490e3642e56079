//! Spectral features computed from scratch: STFT, log-mel spectrogram, MFCC
//! and a folded log-frequency chromagram, plus the mean/std aggregation over
//! time (and over first and second differences) that turns a clip into one
//! fixed-length vector.

mod aggregate;
mod chroma;
mod fft;
mod mel;
mod stft;

pub use aggregate::{aggregate, aggregate_handcrafted};
pub use chroma::{chroma, chroma_filterbank, chroma_from_power};
pub use fft::{fft, FftPlan};
pub use mel::{
    dct_matrix, hz_to_mel, mel_filterbank, mel_from_power, mel_spectrogram, mel_to_hz, mfcc, mfcc_from_log_mel,
    LogCompression,
};
pub use stft::{power_spectrogram, stft, HOP, N_BINS, WINDOW};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::AudioClip;

pub const N_MELS: usize = 128;
pub const N_MFCC: usize = 20;
pub const N_CHROMA: usize = 12;

/// Per-frame feature matrix `[n_frames x n_bins]` with its analysis settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub frames: Array2<f64>,
    pub window: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.frames.ncols()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    MelSpec,
    Mfcc,
    Chroma,
    AggregateHandcrafted,
    External,
}

impl FeatureKind {
    pub const HANDCRAFTED: [FeatureKind; 4] = [
        FeatureKind::MelSpec,
        FeatureKind::Mfcc,
        FeatureKind::Chroma,
        FeatureKind::AggregateHandcrafted,
    ];

    /// Per-frame bin count before aggregation.
    pub fn base_bins(self) -> Option<usize> {
        match self {
            FeatureKind::MelSpec => Some(N_MELS),
            FeatureKind::Mfcc => Some(N_MFCC),
            FeatureKind::Chroma => Some(N_CHROMA),
            FeatureKind::AggregateHandcrafted => Some(N_MELS + N_CHROMA + N_MFCC),
            FeatureKind::External => None,
        }
    }

    pub fn dim(self) -> Option<usize> {
        self.base_bins().map(|b| b * 6)
    }

    /// CLI spelling.
    pub fn cli_name(self) -> &'static str {
        match self {
            FeatureKind::MelSpec => "mel",
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Chroma => "chroma",
            FeatureKind::AggregateHandcrafted => "aggregate",
            FeatureKind::External => "external",
        }
    }

    /// Row label in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            FeatureKind::MelSpec => "Mel Spectrogram",
            FeatureKind::Mfcc => "MFCC",
            FeatureKind::Chroma => "Chroma",
            FeatureKind::AggregateHandcrafted => "Aggregate Handcrafted",
            FeatureKind::External => "External",
        }
    }

    pub fn from_cli(name: &str) -> Result<Self> {
        match name {
            "mel" => Ok(FeatureKind::MelSpec),
            "mfcc" => Ok(FeatureKind::Mfcc),
            "chroma" => Ok(FeatureKind::Chroma),
            "aggregate" => Ok(FeatureKind::AggregateHandcrafted),
            other => Err(Error::Argument(format!(
                "unknown feature {other:?} (expected mel, mfcc, chroma or aggregate)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub kind: FeatureKind,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Aggregated feature vector of `kind` for one clip.
pub fn extract(kind: FeatureKind, clip: &AudioClip) -> Result<FeatureVector> {
    let frames = match kind {
        FeatureKind::MelSpec => mel_spectrogram(clip).frames,
        FeatureKind::Mfcc => mfcc(clip).frames,
        FeatureKind::Chroma => chroma(clip).frames,
        FeatureKind::AggregateHandcrafted => return aggregate_handcrafted(clip),
        FeatureKind::External => {
            return Err(Error::Argument(
                "external embeddings are not extracted from audio".into(),
            ))
        }
    };
    Ok(FeatureVector {
        kind,
        values: aggregate(frames.view())?,
    })
}
