use super::records::SampleRecord;
use super::Concept;
use crate::error::{Error, Result};
use crate::midi::{EventKind, MidiSequence, DEFAULT_PPQ, MELODIC_CHANNEL, MELODIC_VELOCITY};
use crate::synth::{apply_reverb, click_settings, presets, render, render_clicks, AudioClip, ClickEvent, CLIP_SECONDS};
use crate::theory::{
    chord_notes, interval_notes, resolve_progression, scale_notes, Direction, IntervalStyle, Note, PitchClass,
    ProgressionSpec, TimeSignature,
};

/// Tempo of every tonal clip and of the time-signature clips.
pub const TONAL_BPM: u16 = 120;
/// Length of a click note in the MIDI files (a sixteenth).
pub const RHYTHM_NOTE_TICKS: u32 = DEFAULT_PPQ as u32 / 4;

const QUARTER: u32 = DEFAULT_PPQ as u32;
const QUARTERS_PER_CLIP: usize = 8;

/// Metronome whose first downbeat sits at `-offset_s`: clicks at
/// `k * beat_s - offset_s` that fall inside the clip, with a downbeat every
/// `beats_per_bar` clicks.
pub fn click_pattern(beat_s: f64, beats_per_bar: usize, offset_s: f64) -> Vec<ClickEvent> {
    (0..)
        .map(|k| (k, k as f64 * beat_s - offset_s))
        .take_while(|&(_, t)| t < CLIP_SECONDS)
        .filter(|&(_, t)| t >= 0.0)
        .map(|(k, time_s)| ClickEvent {
            time_s,
            is_downbeat: k % beats_per_bar == 0,
        })
        .collect()
}

fn meta(bpm: f64, ts: TimeSignature) -> Vec<(u32, EventKind)> {
    // MIDI clocks per metronome click: 24 per quarter
    let clocks = (24.0 * ts.beat_quarters()) as u8;
    vec![
        (0, EventKind::tempo_bpm(bpm)),
        (
            0,
            EventKind::TimeSignature {
                numerator: ts.numerator,
                denominator_power: ts.denominator_power(),
                clocks_per_click: clocks,
                thirty_seconds_per_quarter: 8,
            },
        ),
    ]
}

fn rhythm_sequence(record: &SampleRecord, bpm: f64, ts: TimeSignature, pattern: &[ClickEvent]) -> MidiSequence {
    let click = &click_settings()[record.timbre_or_click_id];
    let mut events = meta(bpm, ts);
    if let Some(program) = click.program {
        events.push((
            0,
            EventKind::ProgramChange {
                channel: click.channel,
                program,
            },
        ));
    }
    let ticks_per_second = bpm / 60.0 * DEFAULT_PPQ as f64;
    for ev in pattern {
        let tick = (ev.time_s * ticks_per_second).round() as u32;
        let (note, velocity) = if ev.is_downbeat {
            (click.downbeat_note, click.downbeat_velocity)
        } else {
            (click.upbeat_note, click.upbeat_velocity)
        };
        events.push((
            tick,
            EventKind::NoteOn {
                channel: click.channel,
                note,
                velocity,
            },
        ));
        events.push((
            tick + RHYTHM_NOTE_TICKS,
            EventKind::NoteOff {
                channel: click.channel,
                note,
                velocity: 0,
            },
        ));
    }
    MidiSequence::from_absolute(DEFAULT_PPQ, events)
}

/// Quarter-note onsets at 120 BPM, each a set of notes held for one quarter.
fn tonal_sequence(onsets: &[Vec<Note>], program: u8) -> MidiSequence {
    let mut events = meta(TONAL_BPM as f64, TimeSignature::ALL[2]);
    events.push((
        0,
        EventKind::ProgramChange {
            channel: MELODIC_CHANNEL,
            program,
        },
    ));
    for (i, chord) in onsets.iter().enumerate() {
        let on = i as u32 * QUARTER;
        for note in chord {
            let note = note.midi();
            events.push((
                on,
                EventKind::NoteOn {
                    channel: MELODIC_CHANNEL,
                    note,
                    velocity: MELODIC_VELOCITY,
                },
            ));
            events.push((
                on + QUARTER,
                EventKind::NoteOff {
                    channel: MELODIC_CHANNEL,
                    note,
                    velocity: 0,
                },
            ));
        }
    }
    MidiSequence::from_absolute(DEFAULT_PPQ, events)
}

fn field<T>(value: Option<T>, record: &SampleRecord, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Validation(format!("record {} has no {name}", record.id)))
}

fn middle_octave(pc: u8) -> Result<Note> {
    Note::from_pitch(PitchClass::new(pc)?, 4)
}

/// The onsets of a tonal record, filling eight quarter notes.
fn tonal_onsets(record: &SampleRecord) -> Result<Vec<Vec<Note>>> {
    let style = record.play_style.as_deref();
    let onsets = match record.concept {
        Concept::Notes => {
            let pc = PitchClass::new(field(record.pitch_class, record, "pitch_class")?)?;
            let note = Note::from_pitch(pc, field(record.octave, record, "octave")?)?;
            vec![vec![note]; QUARTERS_PER_CLIP]
        }
        Concept::Intervals => {
            let root = middle_octave(field(record.root, record, "root")?)?;
            let style = match style {
                Some("unison") => IntervalStyle::Unison,
                Some("up") => IntervalStyle::Up,
                Some("down") => IntervalStyle::Down,
                _ => {
                    return Err(Error::Validation(format!(
                        "record {} has no valid play_style",
                        record.id
                    )))
                }
            };
            let figure = interval_notes(root, field(record.half_steps, record, "half_steps")?, style)?;
            figure.iter().cycle().take(QUARTERS_PER_CLIP).cloned().collect()
        }
        Concept::Scales => {
            let root = middle_octave(field(record.root, record, "root")?)?;
            let dir = match style {
                Some("ascending") => Direction::Ascending,
                Some("descending") => Direction::Descending,
                _ => {
                    return Err(Error::Validation(format!(
                        "record {} has no valid play_style",
                        record.id
                    )))
                }
            };
            scale_notes(root, field(record.mode, record, "mode")?, dir)?
                .into_iter()
                .map(|n| vec![n])
                .collect()
        }
        Concept::Chords => {
            let root = middle_octave(field(record.root, record, "root")?)?;
            let triad = chord_notes(
                root,
                field(record.quality, record, "quality")?,
                field(record.inversion, record, "inversion")?,
            )?;
            vec![triad.to_vec(); QUARTERS_PER_CLIP]
        }
        Concept::ChordProgressions => {
            let spec = ProgressionSpec::get(field(record.progression_index, record, "progression_index")?)?;
            let key = PitchClass::new(field(record.key_root, record, "key_root")?)?;
            let chords = resolve_progression(key, &spec)?;
            chords
                .iter()
                .cycle()
                .take(QUARTERS_PER_CLIP)
                .map(|c| c.to_vec())
                .collect()
        }
        Concept::Tempo | Concept::TimeSignatures => unreachable!("rhythmic concepts have no tonal onsets"),
    };
    Ok(onsets)
}

/// MIDI and audio of one record. Depends on nothing but the record.
pub fn render_record(record: &SampleRecord) -> Result<(MidiSequence, AudioClip)> {
    record.validate()?;
    match record.concept {
        Concept::Tempo | Concept::TimeSignatures => {
            let bpm = field(record.bpm, record, "bpm")? as f64;
            let ts = field(record.time_signature, record, "time_signature")?;
            // one click per denominator unit: beat_quarters quarters at `bpm`
            let beat_s = ts.beat_quarters() * 60.0 / bpm;
            let pattern = click_pattern(beat_s, ts.numerator as usize, record.offset_s);
            let seq = rhythm_sequence(record, bpm, ts, &pattern);
            let clicks = render_clicks(&pattern, &click_settings()[record.timbre_or_click_id]);
            Ok((seq, apply_reverb(&clicks, record.reverb_level)))
        }
        _ => {
            let onsets = tonal_onsets(record)?;
            let preset = &presets()[record.timbre_or_click_id];
            let seq = tonal_sequence(&onsets, record.timbre_or_click_id as u8);
            let clip = render(&seq, preset);
            Ok((seq, clip))
        }
    }
}
