//! Symbolic music theory: pitch arithmetic, modes, triads and Roman-numeral
//! progressions.
//!
//! Middle C is C4 = MIDI 60. Everything here is a pure function on small
//! `Copy` values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PITCH_NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/// Pitch class, C = 0 through B = 11.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PitchClass(u8);

impl PitchClass {
    pub const C: PitchClass = PitchClass(0);
    pub const A: PitchClass = PitchClass(9);

    pub fn new(value: u8) -> Result<Self> {
        if value < 12 {
            Ok(PitchClass(value))
        } else {
            Err(Error::Range(format!("pitch class {value} not in 0..=11")))
        }
    }

    pub fn all() -> impl Iterator<Item = PitchClass> {
        (0..12).map(PitchClass)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        PITCH_NAMES[self.0 as usize]
    }

    /// Shift by a signed number of semitones, wrapping mod 12.
    pub fn transpose(self, semitones: i32) -> PitchClass {
        PitchClass((self.0 as i32 + semitones).rem_euclid(12) as u8)
    }
}

impl TryFrom<u8> for PitchClass {
    type Error = Error;
    fn try_from(value: u8) -> Result<Self> {
        PitchClass::new(value)
    }
}

impl From<PitchClass> for u8 {
    fn from(pc: PitchClass) -> u8 {
        pc.0
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A MIDI note number, 0..=127.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Note(u8);

impl Note {
    pub const MIDDLE_C: Note = Note(60);

    pub fn new(midi_number: i32) -> Result<Self> {
        if (0..=127).contains(&midi_number) {
            Ok(Note(midi_number as u8))
        } else {
            Err(Error::Range(format!("MIDI note {midi_number} not in 0..=127")))
        }
    }

    /// `12 * (octave + 1) + pc`, so `(C, 4)` is 60.
    pub fn from_pitch(pc: PitchClass, octave: i32) -> Result<Self> {
        Note::new(12 * (octave + 1) + pc.0 as i32)
    }

    pub fn midi(self) -> u8 {
        self.0
    }

    pub fn pitch_class(self) -> PitchClass {
        PitchClass(self.0 % 12)
    }

    pub fn octave(self) -> i32 {
        (self.0 / 12) as i32 - 1
    }

    pub fn offset(self, semitones: i32) -> Result<Note> {
        Note::new(self.0 as i32 + semitones)
    }

    /// Equal-temperament frequency with A4 = 440 Hz.
    pub fn frequency(self) -> f64 {
        midi_to_hz(self.0 as f64)
    }
}

impl TryFrom<u8> for Note {
    type Error = Error;
    fn try_from(value: u8) -> Result<Self> {
        Note::new(value as i32)
    }
}

impl From<Note> for u8 {
    fn from(n: Note) -> u8 {
        n.0
    }
}

pub fn midi_to_hz(midi: f64) -> f64 {
    440.0 * 2f64.powf((midi - 69.0) / 12.0)
}

/// See [`Note::from_pitch`].
pub fn note_from(pc: PitchClass, octave: i32) -> Result<Note> {
    Note::from_pitch(pc, octave)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Ionian,
    Dorian,
    Phrygian,
    Lydian,
    Mixolydian,
    Aeolian,
    Locrian,
}

const IONIAN_STEPS: [u8; 7] = [2, 2, 1, 2, 2, 2, 1];

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Ionian,
        Mode::Dorian,
        Mode::Phrygian,
        Mode::Lydian,
        Mode::Mixolydian,
        Mode::Aeolian,
        Mode::Locrian,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Ionian => "Ionian",
            Mode::Dorian => "Dorian",
            Mode::Phrygian => "Phrygian",
            Mode::Lydian => "Lydian",
            Mode::Mixolydian => "Mixolydian",
            Mode::Aeolian => "Aeolian",
            Mode::Locrian => "Locrian",
        }
    }

    /// Whole/half-step pattern: Ionian's pattern rotated left by the mode's
    /// degree.
    pub fn steps(self) -> [u8; 7] {
        let mut out = IONIAN_STEPS;
        out.rotate_left(self.index());
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Ascending,
    Descending,
}

/// Eight scale tones from `root` up to the octave, or the reverse.
pub fn scale_notes(root: Note, mode: Mode, direction: Direction) -> Result<Vec<Note>> {
    if root.midi() as i32 + 12 > 127 {
        return Err(Error::Range(format!("scale on {} runs past MIDI 127", root.midi())));
    }
    let mut notes = Vec::with_capacity(8);
    let mut current = root.midi() as i32;
    notes.push(root);
    for step in mode.steps() {
        current += step as i32;
        notes.push(Note::new(current)?);
    }
    if direction == Direction::Descending {
        notes.reverse();
    }
    Ok(notes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChordQuality {
    Major,
    Minor,
    Diminished,
    Augmented,
}

impl ChordQuality {
    pub const ALL: [ChordQuality; 4] = [
        ChordQuality::Major,
        ChordQuality::Minor,
        ChordQuality::Diminished,
        ChordQuality::Augmented,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ChordQuality::Major => "Major",
            ChordQuality::Minor => "Minor",
            ChordQuality::Diminished => "Diminished",
            ChordQuality::Augmented => "Augmented",
        }
    }

    pub fn semitone_stack(self) -> [u8; 3] {
        match self {
            ChordQuality::Major => [0, 4, 7],
            ChordQuality::Minor => [0, 3, 7],
            ChordQuality::Diminished => [0, 3, 6],
            ChordQuality::Augmented => [0, 4, 8],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Inversion {
    Root,
    First,
    Second,
}

impl Inversion {
    pub const ALL: [Inversion; 3] = [Inversion::Root, Inversion::First, Inversion::Second];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Inversion::Root => "Root",
            Inversion::First => "First",
            Inversion::Second => "Second",
        }
    }
}

/// Closed triad voicing. Tones displaced below the bass by an inversion are
/// raised exactly one octave.
pub fn chord_notes(root: Note, quality: ChordQuality, inversion: Inversion) -> Result<[Note; 3]> {
    let [_, a, b] = quality.semitone_stack().map(i32::from);
    let offsets = match inversion {
        Inversion::Root => [0, a, b],
        Inversion::First => [a, b, 12],
        Inversion::Second => [b, 12, a + 12],
    };
    Ok([
        root.offset(offsets[0])?,
        root.offset(offsets[1])?,
        root.offset(offsets[2])?,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntervalStyle {
    Unison,
    Up,
    Down,
}

impl IntervalStyle {
    pub const ALL: [IntervalStyle; 3] = [IntervalStyle::Unison, IntervalStyle::Up, IntervalStyle::Down];

    pub fn name(self) -> &'static str {
        match self {
            IntervalStyle::Unison => "unison",
            IntervalStyle::Up => "up",
            IntervalStyle::Down => "down",
        }
    }
}

/// One repetition of an interval figure as a list of onsets, each onset a
/// set of notes sounded together.
pub fn interval_notes(root: Note, half_steps: u8, style: IntervalStyle) -> Result<Vec<Vec<Note>>> {
    if !(1..=12).contains(&half_steps) {
        return Err(Error::Range(format!(
            "interval of {half_steps} half steps not in 1..=12"
        )));
    }
    let upper = root.offset(half_steps as i32)?;
    Ok(match style {
        IntervalStyle::Unison => vec![vec![root, upper]],
        IntervalStyle::Up => vec![vec![root], vec![upper]],
        IntervalStyle::Down => vec![vec![upper], vec![root]],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeyMode {
    Major,
    NaturalMinor,
}

impl KeyMode {
    pub fn degree_offsets(self) -> [u8; 7] {
        match self {
            KeyMode::Major => [0, 2, 4, 5, 7, 9, 11],
            KeyMode::NaturalMinor => [0, 2, 3, 5, 7, 8, 10],
        }
    }
}

/// A scale-degree chord. Case of the numeral gives the quality: upper case is
/// major, lower case minor, a trailing `°` diminished.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RomanNumeral {
    pub degree: u8,
    pub quality: ChordQuality,
}

const NUMERALS: [&str; 7] = ["i", "ii", "iii", "iv", "v", "vi", "vii"];

impl RomanNumeral {
    pub fn parse(text: &str) -> Result<Self> {
        let (body, diminished) = if let Some(b) = text.strip_suffix('°') {
            (b, true)
        } else if let Some(b) = text.strip_suffix("^o") {
            (b, true)
        } else if let Some(b) = text.strip_suffix('ᵒ') {
            (b, true)
        } else {
            (text, false)
        };
        let lower = body.to_ascii_lowercase();
        let degree = NUMERALS
            .iter()
            .position(|n| *n == lower)
            .ok_or_else(|| Error::Validation(format!("not a roman numeral: {text:?}")))?;
        let upper = body.chars().all(|c| c.is_ascii_uppercase());
        let all_lower = body.chars().all(|c| c.is_ascii_lowercase());
        let quality = match (diminished, upper, all_lower) {
            (true, _, true) => ChordQuality::Diminished,
            (false, true, _) => ChordQuality::Major,
            (false, _, true) => ChordQuality::Minor,
            _ => return Err(Error::Validation(format!("mixed-case numeral: {text:?}"))),
        };
        Ok(RomanNumeral {
            degree: degree as u8 + 1,
            quality,
        })
    }
}

impl fmt::Display for RomanNumeral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = NUMERALS[self.degree as usize - 1];
        match self.quality {
            ChordQuality::Major | ChordQuality::Augmented => f.write_str(&base.to_ascii_uppercase()),
            ChordQuality::Minor => f.write_str(base),
            ChordQuality::Diminished => write!(f, "{base}°"),
        }
    }
}

const PROGRESSIONS: [(KeyMode, [&str; 4]); 19] = [
    (KeyMode::Major, ["I", "IV", "V", "I"]),
    (KeyMode::Major, ["I", "IV", "vi", "V"]),
    (KeyMode::Major, ["I", "V", "vi", "IV"]),
    (KeyMode::Major, ["I", "vi", "IV", "V"]),
    (KeyMode::Major, ["ii", "V", "I", "vi"]),
    (KeyMode::Major, ["IV", "I", "V", "vi"]),
    (KeyMode::Major, ["IV", "V", "iii", "vi"]),
    (KeyMode::Major, ["V", "IV", "I", "V"]),
    (KeyMode::Major, ["V", "vi", "IV", "I"]),
    (KeyMode::Major, ["vi", "IV", "I", "V"]),
    (KeyMode::NaturalMinor, ["i", "ii°", "v", "i"]),
    (KeyMode::NaturalMinor, ["i", "III", "iv", "i"]),
    (KeyMode::NaturalMinor, ["i", "iv", "v", "i"]),
    (KeyMode::NaturalMinor, ["i", "VI", "III", "VII"]),
    (KeyMode::NaturalMinor, ["i", "VI", "VII", "i"]),
    (KeyMode::NaturalMinor, ["i", "VI", "VII", "III"]),
    (KeyMode::NaturalMinor, ["i", "VII", "VI", "IV"]),
    (KeyMode::NaturalMinor, ["iv", "VII", "i", "i"]),
    (KeyMode::NaturalMinor, ["VII", "vi", "VII", "i"]),
];

/// One of the 19 four-chord progressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProgressionSpec {
    pub index: usize,
    pub key_mode: KeyMode,
    pub chords: [RomanNumeral; 4],
}

impl ProgressionSpec {
    pub const COUNT: usize = PROGRESSIONS.len();

    pub fn get(index: usize) -> Result<Self> {
        let (key_mode, numerals) = PROGRESSIONS
            .get(index)
            .ok_or_else(|| Error::Range(format!("progression index {index} not in 0..19")))?;
        let mut chords = [RomanNumeral {
            degree: 1,
            quality: ChordQuality::Major,
        }; 4];
        for (slot, text) in chords.iter_mut().zip(numerals) {
            *slot = RomanNumeral::parse(text)?;
        }
        Ok(ProgressionSpec {
            index,
            key_mode: *key_mode,
            chords,
        })
    }

    pub fn all() -> Vec<ProgressionSpec> {
        (0..Self::COUNT)
            .map(|i| Self::get(i).expect("progression table is valid"))
            .collect()
    }

    /// Display name, e.g. `I-IV-V-I`.
    pub fn name(&self) -> String {
        self.chords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("-")
    }
}

/// Chord roots sit in the MIDI octave 60..=71 and are voiced in root position.
pub fn resolve_progression(key_root: PitchClass, spec: &ProgressionSpec) -> Result<[[Note; 3]; 4]> {
    let offsets = spec.key_mode.degree_offsets();
    let mut out = [[Note::MIDDLE_C; 3]; 4];
    for (slot, numeral) in out.iter_mut().zip(&spec.chords) {
        let pc = key_root.transpose(offsets[numeral.degree as usize - 1] as i32);
        let root = Note::from_pitch(pc, 4)?;
        *slot = chord_notes(root, numeral.quality, Inversion::Root)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeSignature {
    pub numerator: u8,
    pub denominator: u8,
}

impl TimeSignature {
    pub const ALL: [TimeSignature; 8] = [
        TimeSignature::new_unchecked(2, 2),
        TimeSignature::new_unchecked(3, 4),
        TimeSignature::new_unchecked(4, 4),
        TimeSignature::new_unchecked(3, 8),
        TimeSignature::new_unchecked(4, 8),
        TimeSignature::new_unchecked(6, 8),
        TimeSignature::new_unchecked(9, 8),
        TimeSignature::new_unchecked(12, 8),
    ];

    const fn new_unchecked(numerator: u8, denominator: u8) -> Self {
        TimeSignature { numerator, denominator }
    }

    pub fn new(numerator: u8, denominator: u8) -> Result<Self> {
        let ts = TimeSignature::new_unchecked(numerator, denominator);
        if Self::ALL.contains(&ts) {
            Ok(ts)
        } else {
            Err(Error::Validation(format!(
                "time signature {numerator}/{denominator} is not one of the eight classes"
            )))
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).expect("member of ALL")
    }

    /// Beat length in quarter notes (a quarter is 1.0, an eighth 0.5).
    pub fn beat_quarters(self) -> f64 {
        4.0 / self.denominator as f64
    }

    pub fn bar_quarters(self) -> f64 {
        self.numerator as f64 * self.beat_quarters()
    }

    pub fn denominator_power(self) -> u8 {
        self.denominator.trailing_zeros() as u8
    }
}

impl fmt::Display for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Integer tempo, 50..=210 BPM.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tempo(u16);

impl Tempo {
    pub const MIN: u16 = 50;
    pub const MAX: u16 = 210;

    pub fn new(bpm: u16) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&bpm) {
            Ok(Tempo(bpm))
        } else {
            Err(Error::Range(format!("tempo {bpm} not in 50..=210")))
        }
    }

    pub fn all() -> impl Iterator<Item = Tempo> {
        (Self::MIN..=Self::MAX).map(Tempo)
    }

    pub fn bpm(self) -> u16 {
        self.0
    }

    pub fn beat_seconds(self) -> f64 {
        60.0 / self.0 as f64
    }
}
