use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Concept;
use crate::error::{Error, Result};
use crate::probe::Targets;
use crate::synth::{click_settings, ReverbLevel, PRESET_COUNT};
use crate::theory::{ChordQuality, Direction, IntervalStyle, Inversion, Mode, ProgressionSpec, Tempo, TimeSignature};

const TEMPO_OFFSETS: usize = 5;
const TIME_SIGNATURE_OFFSETS: usize = 10;
const NOTE_OCTAVES: std::ops::RangeInclusive<i32> = -1..=7;

/// One manifest line. Fields that do not apply to the record's concept are
/// omitted from the JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub concept: Concept,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bpm: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_signature: Option<TimeSignature>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_class: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub octave: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_steps: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<ChordQuality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inversion: Option<Inversion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progression_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_root: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub play_style: Option<String>,
    /// Click setting for rhythmic concepts, timbre preset otherwise.
    pub timbre_or_click_id: usize,
    pub reverb_level: ReverbLevel,
    pub offset_s: f64,
    pub rng_seed: u64,
    pub midi_path: String,
    pub wav_path: String,
}

impl SampleRecord {
    fn new(concept: Concept, id: String, timbre_or_click_id: usize, global_seed: u64) -> Self {
        let rng_seed = crate::seed::derive(global_seed, &["datasets", concept.name(), &id]);
        SampleRecord {
            midi_path: format!("midi/{id}.mid"),
            wav_path: format!("audio/{id}.wav"),
            id,
            concept,
            bpm: None,
            time_signature: None,
            pitch_class: None,
            octave: None,
            half_steps: None,
            mode: None,
            root: None,
            quality: None,
            inversion: None,
            progression_index: None,
            key_root: None,
            play_style: None,
            timbre_or_click_id,
            reverb_level: ReverbLevel::Dry,
            offset_s: 0.0,
            rng_seed,
        }
    }

    /// Uniform offset in `[0, bar_s)` from the record's own generator,
    /// rounded to the microsecond.
    fn draw_offset(&mut self, bar_s: f64) {
        let raw: f64 = crate::seed::rng(self.rng_seed).random_range(0.0..bar_s);
        self.offset_s = ((raw * 1e6).floor() / 1e6).min(bar_s);
    }

    /// Class index for classification concepts.
    pub fn class_label(&self) -> Option<usize> {
        match self.concept {
            Concept::Tempo => None,
            Concept::TimeSignatures => self.time_signature.map(TimeSignature::index),
            Concept::Notes => self.pitch_class.map(usize::from),
            Concept::Intervals => self.half_steps.map(|h| h as usize - 1),
            Concept::Scales => self.mode.map(Mode::index),
            Concept::Chords => self.quality.map(ChordQuality::index),
            Concept::ChordProgressions => self.progression_index,
        }
    }

    /// Stratum used for balanced subsampling: the class, or the BPM for tempo.
    pub fn stratum(&self) -> Result<usize> {
        match self.concept {
            Concept::Tempo => self.bpm.map(usize::from),
            _ => self.class_label(),
        }
        .ok_or_else(|| Error::Validation(format!("record {} lacks its label field", self.id)))
    }

    /// Checks that every label field the concept needs is present and valid.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Validation(format!("record {}: {what}", self.id)));
        match self.concept {
            Concept::Tempo => match self.bpm {
                Some(b) if Tempo::new(b).is_ok() => {}
                _ => return bad("bpm missing or outside 50..=210"),
            },
            Concept::TimeSignatures => {
                if self.time_signature.is_none() {
                    return bad("time_signature missing");
                }
            }
            Concept::Notes => {
                if !matches!(self.pitch_class, Some(p) if p < 12)
                    || !matches!(self.octave, Some(o) if NOTE_OCTAVES.contains(&o))
                {
                    return bad("pitch_class or octave missing or out of range");
                }
            }
            Concept::Intervals => {
                if !matches!(self.half_steps, Some(1..=12)) || !matches!(self.root, Some(0..=11)) {
                    return bad("half_steps or root missing or out of range");
                }
            }
            Concept::Scales => {
                if self.mode.is_none() || !matches!(self.root, Some(0..=11)) {
                    return bad("mode or root missing");
                }
            }
            Concept::Chords => {
                if self.quality.is_none() || self.inversion.is_none() || !matches!(self.root, Some(0..=11)) {
                    return bad("quality, inversion or root missing");
                }
            }
            Concept::ChordProgressions => {
                if !matches!(self.progression_index, Some(i) if i < ProgressionSpec::COUNT)
                    || !matches!(self.key_root, Some(0..=11))
                {
                    return bad("progression_index or key_root missing or out of range");
                }
            }
        }
        let limit = if self.concept.is_rhythmic() {
            click_settings().len()
        } else {
            PRESET_COUNT
        };
        if self.timbre_or_click_id >= limit {
            return bad("timbre_or_click_id out of range");
        }
        Ok(())
    }
}

/// Labels of `records` as probe targets: class indices, or BPM for tempo.
pub fn targets(concept: Concept, records: &[SampleRecord]) -> Result<Targets> {
    if concept == Concept::Tempo {
        let values = records
            .iter()
            .map(|r| {
                r.bpm
                    .map(f64::from)
                    .ok_or_else(|| Error::Validation(format!("record {} has no bpm", r.id)))
            })
            .collect::<Result<_>>()?;
        return Ok(Targets::Values(values));
    }
    let classes = records
        .iter()
        .map(|r| {
            r.class_label()
                .ok_or_else(|| Error::Validation(format!("record {} has no label", r.id)))
        })
        .collect::<Result<_>>()?;
    Ok(Targets::Classes(classes))
}

fn slug(s: &str) -> String {
    s.to_ascii_lowercase()
}

/// Every record of `concept`, sorted by id.
pub fn records(concept: Concept, seed: u64) -> Vec<SampleRecord> {
    let mut out = Vec::with_capacity(concept.expected_count());
    match concept {
        Concept::Tempo => {
            for click in click_settings() {
                for tempo in Tempo::all() {
                    for k in 0..TEMPO_OFFSETS {
                        let id = format!("tempo-c{}-b{:03}-o{k}", click.id, tempo.bpm());
                        let mut r = SampleRecord::new(concept, id, click.id, seed);
                        r.bpm = Some(tempo.bpm());
                        r.time_signature = Some(TimeSignature::ALL[2]);
                        r.draw_offset(4.0 * tempo.beat_seconds());
                        out.push(r);
                    }
                }
            }
        }
        Concept::TimeSignatures => {
            for ts in TimeSignature::ALL {
                for reverb in ReverbLevel::ALL {
                    for click in click_settings() {
                        for k in 0..TIME_SIGNATURE_OFFSETS {
                            let id = format!(
                                "time_signatures-{}_{}-{}-c{}-o{k}",
                                ts.numerator,
                                ts.denominator,
                                reverb.name(),
                                click.id
                            );
                            let mut r = SampleRecord::new(concept, id, click.id, seed);
                            r.bpm = Some(super::TONAL_BPM);
                            r.time_signature = Some(ts);
                            r.reverb_level = reverb;
                            r.draw_offset(ts.bar_quarters() * 60.0 / super::TONAL_BPM as f64);
                            out.push(r);
                        }
                    }
                }
            }
        }
        Concept::Notes => {
            for pc in 0..12u8 {
                for octave in NOTE_OCTAVES {
                    for inst in 0..PRESET_COUNT {
                        let id = format!("notes-p{pc:02}-o{octave}-i{inst:02}");
                        let mut r = SampleRecord::new(concept, id, inst, seed);
                        r.pitch_class = Some(pc);
                        r.octave = Some(octave);
                        out.push(r);
                    }
                }
            }
        }
        Concept::Intervals => {
            for pc in 0..12u8 {
                for half_steps in 1..=12u8 {
                    for inst in 0..PRESET_COUNT {
                        for style in IntervalStyle::ALL {
                            let id = format!("intervals-p{pc:02}-h{half_steps:02}-{}-i{inst:02}", style.name());
                            let mut r = SampleRecord::new(concept, id, inst, seed);
                            r.root = Some(pc);
                            r.half_steps = Some(half_steps);
                            r.play_style = Some(style.name().to_string());
                            out.push(r);
                        }
                    }
                }
            }
        }
        Concept::Scales => {
            for mode in Mode::ALL {
                for pc in 0..12u8 {
                    for inst in 0..PRESET_COUNT {
                        for dir in [Direction::Ascending, Direction::Descending] {
                            let style = direction_name(dir);
                            let id = format!("scales-{}-p{pc:02}-{style}-i{inst:02}", slug(mode.name()));
                            let mut r = SampleRecord::new(concept, id, inst, seed);
                            r.mode = Some(mode);
                            r.root = Some(pc);
                            r.play_style = Some(style.to_string());
                            out.push(r);
                        }
                    }
                }
            }
        }
        Concept::Chords => {
            for pc in 0..12u8 {
                for quality in ChordQuality::ALL {
                    for inst in 0..PRESET_COUNT {
                        for inversion in Inversion::ALL {
                            let id = format!(
                                "chords-p{pc:02}-{}-{}-i{inst:02}",
                                slug(quality.name()),
                                slug(inversion.name())
                            );
                            let mut r = SampleRecord::new(concept, id, inst, seed);
                            r.root = Some(pc);
                            r.quality = Some(quality);
                            r.inversion = Some(inversion);
                            out.push(r);
                        }
                    }
                }
            }
        }
        Concept::ChordProgressions => {
            for index in 0..ProgressionSpec::COUNT {
                for pc in 0..12u8 {
                    for inst in 0..PRESET_COUNT {
                        let id = format!("chord_progressions-g{index:02}-k{pc:02}-i{inst:02}");
                        let mut r = SampleRecord::new(concept, id, inst, seed);
                        r.progression_index = Some(index);
                        r.key_root = Some(pc);
                        out.push(r);
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

pub(crate) fn direction_name(dir: Direction) -> &'static str {
    match dir {
        Direction::Ascending => "ascending",
        Direction::Descending => "descending",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, HashSet};

    #[test]
    fn counts_match_the_published_sizes() {
        let mut corpus = HashSet::new();
        for c in Concept::ALL {
            let rs = records(c, 0);
            assert_eq!(rs.len(), c.expected_count(), "{c}");
            let ids: HashSet<&str> = rs.iter().map(|r| r.id.as_str()).collect();
            assert_eq!(ids.len(), rs.len(), "{c} ids unique");
            assert!(rs.windows(2).all(|w| w[0].id < w[1].id), "{c} sorted");
            assert!(rs.iter().all(|r| r.validate().is_ok()), "{c} valid");
            corpus.extend(rs.into_iter().map(|r| r.id));
        }
        let total: usize = Concept::ALL.iter().map(|c| c.expected_count()).sum();
        assert_eq!(corpus.len(), total, "ids unique across the corpus");
    }

    #[test]
    fn classes_are_balanced() {
        let per_class = [
            (Concept::TimeSignatures, 150),
            (Concept::Notes, 828),
            (Concept::Intervals, 3_312),
            (Concept::Scales, 2_208),
            (Concept::Chords, 3_312),
            (Concept::ChordProgressions, 1_104),
        ];
        for (c, expected) in per_class {
            let mut counts = BTreeMap::new();
            for r in records(c, 1) {
                *counts.entry(r.class_label().unwrap()).or_insert(0) += 1;
            }
            assert_eq!(counts.len(), c.n_classes().unwrap(), "{c}");
            assert!(counts.values().all(|&n| n == expected), "{c}: {counts:?}");
        }
    }

    #[test]
    fn tempo_covers_every_bpm_with_offsets_inside_one_bar() {
        let rs = records(Concept::Tempo, 3);
        let bpms: HashSet<u16> = rs.iter().map(|r| r.bpm.unwrap()).collect();
        assert_eq!(bpms.len(), 161);
        assert_eq!(bpms.iter().min(), Some(&50));
        assert_eq!(bpms.iter().max(), Some(&210));
        for r in &rs {
            let bar = 240.0 / r.bpm.unwrap() as f64;
            assert!((0.0..bar).contains(&r.offset_s), "{}", r.id);
        }
        let distinct: HashSet<u64> = rs.iter().map(|r| r.offset_s.to_bits()).collect();
        assert!(distinct.len() > 4_000);
    }

    #[test]
    fn records_depend_on_the_seed_only_through_randomness() {
        let a = records(Concept::TimeSignatures, 1);
        let b = records(Concept::TimeSignatures, 1);
        let c = records(Concept::TimeSignatures, 2);
        assert_eq!(a, b);
        assert_eq!(
            a.iter().map(|r| &r.id).collect::<Vec<_>>(),
            c.iter().map(|r| &r.id).collect::<Vec<_>>()
        );
        assert_ne!(a[0].offset_s, c[0].offset_s);
    }

    #[test]
    fn concept_isolation() {
        for r in records(Concept::TimeSignatures, 0) {
            assert_eq!(r.bpm, Some(120));
        }
        for c in [
            Concept::Notes,
            Concept::Intervals,
            Concept::Scales,
            Concept::Chords,
            Concept::ChordProgressions,
        ] {
            assert!(records(c, 0)
                .iter()
                .all(|r| r.reverb_level == ReverbLevel::Dry && r.offset_s == 0.0));
        }
        assert!(records(Concept::Tempo, 0)
            .iter()
            .all(|r| r.reverb_level == ReverbLevel::Dry));
    }

    #[test]
    fn json_round_trip_is_exact() {
        for c in Concept::ALL {
            let r = &records(c, 9)[17];
            let line = serde_json::to_string(r).unwrap();
            assert!(line.starts_with("{\"id\":"));
            let back: SampleRecord = serde_json::from_str(&line).unwrap();
            assert_eq!(&back, r);
        }
    }

    #[test]
    fn validation_catches_missing_labels() {
        let mut r = records(Concept::Chords, 0).remove(0);
        r.quality = None;
        assert!(r.validate().is_err());
        assert!(r.stratum().is_err());
    }
}
