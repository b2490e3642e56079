//! The seven concept datasets: enumeration of sample records, MIDI and audio
//! rendering, splits, stratified subsampling and the on-disk layout.
//!
//! ```text
//! <out>/<concept>/manifest.jsonl
//! <out>/<concept>/midi/<id>.mid
//! <out>/<concept>/audio/<id>.wav
//! <out>/<concept>/splits/<seed>.json
//! ```

mod layout;
mod records;
mod render;
mod split;

pub use layout::{generate, manifest_path, read_manifest, write_manifest, GenerateOptions};
pub use records::{records, targets, SampleRecord};
pub use render::{click_pattern, render_record, RHYTHM_NOTE_TICKS, TONAL_BPM};
pub use split::{make_split, subsample, Split, SplitAssignment};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::Task;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Concept {
    Tempo,
    TimeSignatures,
    Notes,
    Intervals,
    Scales,
    Chords,
    ChordProgressions,
}

impl Concept {
    pub const ALL: [Concept; 7] = [
        Concept::Tempo,
        Concept::TimeSignatures,
        Concept::Notes,
        Concept::Intervals,
        Concept::Scales,
        Concept::Chords,
        Concept::ChordProgressions,
    ];

    /// Column order of the report table.
    pub const REPORT_ORDER: [Concept; 7] = [
        Concept::Notes,
        Concept::Intervals,
        Concept::Scales,
        Concept::Chords,
        Concept::ChordProgressions,
        Concept::Tempo,
        Concept::TimeSignatures,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Concept::Tempo => "tempo",
            Concept::TimeSignatures => "time_signatures",
            Concept::Notes => "notes",
            Concept::Intervals => "intervals",
            Concept::Scales => "scales",
            Concept::Chords => "chords",
            Concept::ChordProgressions => "chord_progressions",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Concept::Tempo => "Tempos",
            Concept::TimeSignatures => "Time Signatures",
            Concept::Notes => "Notes",
            Concept::Intervals => "Intervals",
            Concept::Scales => "Scales",
            Concept::Chords => "Chords",
            Concept::ChordProgressions => "Chord Progressions",
        }
    }

    pub fn expected_count(self) -> usize {
        match self {
            Concept::Tempo => 4_025,
            Concept::TimeSignatures => 1_200,
            Concept::Notes => 9_936,
            Concept::Intervals => 39_744,
            Concept::Scales => 15_456,
            Concept::Chords => 13_248,
            Concept::ChordProgressions => 20_976,
        }
    }

    /// `None` for tempo, which is a regression target.
    pub fn n_classes(self) -> Option<usize> {
        match self {
            Concept::Tempo => None,
            Concept::TimeSignatures => Some(8),
            Concept::Notes => Some(12),
            Concept::Intervals => Some(12),
            Concept::Scales => Some(7),
            Concept::Chords => Some(4),
            Concept::ChordProgressions => Some(19),
        }
    }

    pub fn task(self) -> Task {
        match self.n_classes() {
            Some(n_classes) => Task::Classification { n_classes },
            None => Task::Regression,
        }
    }

    pub fn is_rhythmic(self) -> bool {
        matches!(self, Concept::Tempo | Concept::TimeSignatures)
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Concept {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.replace('-', "_");
        Concept::ALL
            .into_iter()
            .find(|c| c.name() == wanted || (wanted == "time_signature" && *c == Concept::TimeSignatures))
            .ok_or_else(|| {
                let names: Vec<&str> = Concept::ALL.iter().map(|c| c.name()).collect();
                Error::Argument(format!("unknown concept {s:?}; expected one of {}", names.join(", ")))
            })
    }
}
