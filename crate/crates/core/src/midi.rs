//! MIDI event model and Standard MIDI File (format 0) encoding/decoding.

use crate::error::{Error, Result};

pub const DEFAULT_PPQ: u16 = 480;
pub const MELODIC_CHANNEL: u8 = 0;
pub const PERCUSSION_CHANNEL: u8 = 9;
pub const MELODIC_VELOCITY: u8 = 96;

const MAX_VLQ: u32 = 0x0FFF_FFFF;
const MAX_TEMPO: u32 = 0xFF_FFFF;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    NoteOn {
        channel: u8,
        note: u8,
        velocity: u8,
    },
    NoteOff {
        channel: u8,
        note: u8,
        velocity: u8,
    },
    ProgramChange {
        channel: u8,
        program: u8,
    },
    Tempo {
        micros_per_quarter: u32,
    },
    TimeSignature {
        numerator: u8,
        denominator_power: u8,
        clocks_per_click: u8,
        thirty_seconds_per_quarter: u8,
    },
    EndOfTrack,
}

impl EventKind {
    /// Ordering among events sharing a tick: meta, program, note-off, note-on.
    fn priority(&self) -> u8 {
        match self {
            EventKind::Tempo { .. } | EventKind::TimeSignature { .. } => 0,
            EventKind::ProgramChange { .. } => 1,
            EventKind::NoteOff { .. } => 2,
            EventKind::NoteOn { .. } => 3,
            EventKind::EndOfTrack => 4,
        }
    }

    pub fn tempo_bpm(bpm: f64) -> EventKind {
        EventKind::Tempo {
            micros_per_quarter: (60_000_000.0 / bpm).round() as u32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MidiEvent {
    pub delta_ticks: u32,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MidiSequence {
    pub ppq: u16,
    pub events: Vec<MidiEvent>,
}

impl MidiSequence {
    /// Sequence holding only an end-of-track marker.
    pub fn empty(ppq: u16) -> Self {
        MidiSequence {
            ppq,
            events: vec![MidiEvent {
                delta_ticks: 0,
                kind: EventKind::EndOfTrack,
            }],
        }
    }

    /// Build from events at absolute tick positions. Events are stably sorted
    /// by tick (meta before program changes before note-offs before
    /// note-ons), and an end-of-track is appended at the last tick.
    pub fn from_absolute(ppq: u16, mut events: Vec<(u32, EventKind)>) -> Self {
        events.retain(|(_, k)| *k != EventKind::EndOfTrack);
        events.sort_by_key(|(tick, kind)| (*tick, kind.priority()));
        let mut out = Vec::with_capacity(events.len() + 1);
        let mut last = 0;
        for (tick, kind) in events {
            out.push(MidiEvent {
                delta_ticks: tick - last,
                kind,
            });
            last = tick;
        }
        out.push(MidiEvent {
            delta_ticks: 0,
            kind: EventKind::EndOfTrack,
        });
        MidiSequence { ppq, events: out }
    }

    /// Events paired with their absolute tick.
    pub fn absolute(&self) -> impl Iterator<Item = (u64, &EventKind)> {
        self.events.iter().scan(0u64, |tick, ev| {
            *tick += ev.delta_ticks as u64;
            Some((*tick, &ev.kind))
        })
    }

    /// Events paired with their onset in seconds, honouring tempo changes
    /// (120 BPM until the first tempo event).
    pub fn timed(&self) -> Vec<(f64, EventKind)> {
        let mut micros_per_quarter = 500_000.0;
        let mut seconds = 0.0;
        let mut out = Vec::with_capacity(self.events.len());
        for ev in &self.events {
            seconds += ev.delta_ticks as f64 * micros_per_quarter / 1e6 / self.ppq as f64;
            if let EventKind::Tempo { micros_per_quarter: m } = ev.kind {
                micros_per_quarter = m as f64;
            }
            out.push((seconds, ev.kind));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.ppq == 0 || self.ppq > 0x7FFF {
            return Err(Error::Validation(format!("ppq {} not in 1..=32767", self.ppq)));
        }
        let Some(last) = self.events.last() else {
            return Err(Error::Validation("sequence has no events".into()));
        };
        if last.kind != EventKind::EndOfTrack {
            return Err(Error::Validation("final event is not end-of-track".into()));
        }
        let mut sounding = std::collections::HashMap::<(u8, u8), usize>::new();
        for (i, ev) in self.events.iter().enumerate() {
            if ev.delta_ticks > MAX_VLQ {
                return Err(Error::Validation(format!(
                    "event {i}: delta {} too large",
                    ev.delta_ticks
                )));
            }
            let bad = |what: &str| Error::Validation(format!("event {i}: {what} out of range"));
            match ev.kind {
                EventKind::NoteOn {
                    channel,
                    note,
                    velocity,
                }
                | EventKind::NoteOff {
                    channel,
                    note,
                    velocity,
                } => {
                    if channel > 15 {
                        return Err(bad("channel"));
                    }
                    if note > 127 {
                        return Err(bad("note"));
                    }
                    if velocity > 127 {
                        return Err(bad("velocity"));
                    }
                    let key = (channel, note);
                    if matches!(ev.kind, EventKind::NoteOn { .. }) {
                        *sounding.entry(key).or_default() += 1;
                    } else if let Some(n) = sounding.get_mut(&key) {
                        *n = n.saturating_sub(1);
                    }
                }
                EventKind::ProgramChange { channel, program } => {
                    if channel > 15 {
                        return Err(bad("channel"));
                    }
                    if program > 127 {
                        return Err(bad("program"));
                    }
                }
                EventKind::Tempo { micros_per_quarter } => {
                    if !(1..=MAX_TEMPO).contains(&micros_per_quarter) {
                        return Err(bad("tempo"));
                    }
                }
                EventKind::TimeSignature { .. } => {}
                EventKind::EndOfTrack => {
                    if i + 1 != self.events.len() {
                        return Err(Error::Validation(format!(
                            "event {i}: end-of-track before the last event"
                        )));
                    }
                }
            }
        }
        if let Some(((channel, note), _)) = sounding.iter().filter(|(_, n)| **n > 0).min() {
            return Err(Error::Validation(format!(
                "note {note} on channel {channel} has no matching note-off"
            )));
        }
        Ok(())
    }
}

/// Minimal-length variable-length quantity.
pub fn write_vlq(out: &mut Vec<u8>, value: u32) {
    debug_assert!(value <= MAX_VLQ);
    let mut started = false;
    for shift in [21u32, 14, 7] {
        let group = (value >> shift) & 0x7F;
        if started || group != 0 {
            out.push(0x80 | group as u8);
            started = true;
        }
    }
    out.push((value & 0x7F) as u8);
}

/// Reads a VLQ at `*pos`, advancing it.
pub fn read_vlq(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    let start = *pos;
    let mut value = 0u32;
    for i in 0..4 {
        let b = *bytes
            .get(*pos)
            .ok_or_else(|| Error::parse(*pos, "truncated variable-length quantity"))?;
        *pos += 1;
        value = (value << 7) | (b & 0x7F) as u32;
        if b & 0x80 == 0 {
            return Ok(value);
        }
        if i == 3 {
            break;
        }
    }
    Err(Error::parse(start, "variable-length quantity longer than 4 bytes"))
}

pub fn encode_smf(seq: &MidiSequence) -> Result<Vec<u8>> {
    seq.validate()?;
    let mut track = Vec::with_capacity(seq.events.len() * 4);
    for ev in &seq.events {
        write_vlq(&mut track, ev.delta_ticks);
        match ev.kind {
            EventKind::NoteOn {
                channel,
                note,
                velocity,
            } => track.extend([0x90 | channel, note, velocity]),
            EventKind::NoteOff {
                channel,
                note,
                velocity,
            } => track.extend([0x80 | channel, note, velocity]),
            EventKind::ProgramChange { channel, program } => track.extend([0xC0 | channel, program]),
            EventKind::Tempo { micros_per_quarter } => {
                track.extend([0xFF, 0x51, 0x03]);
                track.extend(&micros_per_quarter.to_be_bytes()[1..]);
            }
            EventKind::TimeSignature {
                numerator,
                denominator_power,
                clocks_per_click,
                thirty_seconds_per_quarter,
            } => track.extend([
                0xFF,
                0x58,
                0x04,
                numerator,
                denominator_power,
                clocks_per_click,
                thirty_seconds_per_quarter,
            ]),
            EventKind::EndOfTrack => track.extend([0xFF, 0x2F, 0x00]),
        }
    }
    let mut out = Vec::with_capacity(22 + track.len());
    out.extend(b"MThd");
    out.extend(6u32.to_be_bytes());
    out.extend(0u16.to_be_bytes());
    out.extend(1u16.to_be_bytes());
    out.extend(seq.ppq.to_be_bytes());
    out.extend(b"MTrk");
    out.extend((track.len() as u32).to_be_bytes());
    out.extend(track);
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::parse(
                self.bytes.len(),
                format!("expected {n} bytes, input ends"),
            ));
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn byte(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn data_byte(&mut self) -> Result<u8> {
        let at = self.pos;
        let b = self.byte()?;
        if b & 0x80 != 0 {
            return Err(Error::parse(at, format!("data byte {b:#04x} has the high bit set")));
        }
        Ok(b)
    }
}

pub fn decode_smf(bytes: &[u8]) -> Result<MidiSequence> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != b"MThd" {
        return Err(Error::parse(0, "missing MThd header"));
    }
    let header_len = r.u32()?;
    if header_len < 6 {
        return Err(Error::parse(4, format!("header length {header_len} < 6")));
    }
    let format_at = r.pos;
    let format = r.u16()?;
    if format != 0 {
        return Err(Error::parse(format_at, format!("SMF format {format} unsupported")));
    }
    let tracks_at = r.pos;
    let tracks = r.u16()?;
    if tracks != 1 {
        return Err(Error::parse(
            tracks_at,
            format!("format 0 requires 1 track, found {tracks}"),
        ));
    }
    let division_at = r.pos;
    let ppq = r.u16()?;
    if ppq == 0 || ppq & 0x8000 != 0 {
        return Err(Error::parse(
            division_at,
            "only positive ticks-per-quarter division supported",
        ));
    }
    r.take(header_len as usize - 6)?;

    let chunk_at = r.pos;
    if r.take(4)? != b"MTrk" {
        return Err(Error::parse(chunk_at, "missing MTrk chunk"));
    }
    let track_len = r.u32()? as usize;
    let track_start = r.pos;
    let track_end = track_start + track_len;
    if track_end > bytes.len() {
        return Err(Error::parse(bytes.len(), "track chunk extends past end of input"));
    }
    let mut r = Reader {
        bytes: &bytes[..track_end],
        pos: track_start,
    };

    let mut events = Vec::new();
    let mut running: Option<u8> = None;
    loop {
        if r.pos >= track_end {
            return Err(Error::parse(r.pos, "track ended without end-of-track"));
        }
        let delta_ticks = read_vlq(r.bytes, &mut r.pos)?;
        let status_at = r.pos;
        let mut status = r.byte()?;
        if status & 0x80 == 0 {
            status = running.ok_or_else(|| Error::parse(status_at, "data byte without running status"))?;
            r.pos -= 1;
        }
        let channel = status & 0x0F;
        let kind = match status & 0xF0 {
            0x80 | 0x90 => {
                running = Some(status);
                let note = r.data_byte()?;
                let velocity = r.data_byte()?;
                if status & 0xF0 == 0x90 {
                    EventKind::NoteOn {
                        channel,
                        note,
                        velocity,
                    }
                } else {
                    EventKind::NoteOff {
                        channel,
                        note,
                        velocity,
                    }
                }
            }
            0xC0 => {
                running = Some(status);
                EventKind::ProgramChange {
                    channel,
                    program: r.data_byte()?,
                }
            }
            0xF0 if status == 0xFF => {
                running = None;
                let meta_type = r.byte()?;
                let len_at = r.pos;
                let len = read_vlq(r.bytes, &mut r.pos)? as usize;
                let data = r.take(len)?;
                match (meta_type, len) {
                    (0x51, 3) => EventKind::Tempo {
                        micros_per_quarter: u32::from_be_bytes([0, data[0], data[1], data[2]]),
                    },
                    (0x58, 4) => EventKind::TimeSignature {
                        numerator: data[0],
                        denominator_power: data[1],
                        clocks_per_click: data[2],
                        thirty_seconds_per_quarter: data[3],
                    },
                    (0x2F, 0) => EventKind::EndOfTrack,
                    (0x51 | 0x58 | 0x2F, _) => {
                        return Err(Error::parse(
                            len_at,
                            format!("meta {meta_type:#04x} has bad length {len}"),
                        ))
                    }
                    _ => {
                        return Err(Error::parse(
                            status_at,
                            format!("unsupported meta event {meta_type:#04x}"),
                        ))
                    }
                }
            }
            _ => {
                return Err(Error::parse(
                    status_at,
                    format!("unsupported status byte {status:#04x}"),
                ))
            }
        };
        events.push(MidiEvent { delta_ticks, kind });
        if kind == EventKind::EndOfTrack {
            if r.pos != track_end {
                return Err(Error::parse(r.pos, "bytes after end-of-track"));
            }
            break;
        }
    }
    Ok(MidiSequence { ppq, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vlq(v: u32) -> Vec<u8> {
        let mut out = Vec::new();
        write_vlq(&mut out, v);
        out
    }

    #[test]
    fn vlq_examples() {
        assert_eq!(vlq(0), [0x00]);
        assert_eq!(vlq(127), [0x7F]);
        assert_eq!(vlq(128), [0x81, 0x00]);
        assert_eq!(vlq(0x0FFF_FFFF), [0xFF, 0xFF, 0xFF, 0x7F]);
    }

    #[test]
    fn tempo_bytes_for_120_bpm() {
        let seq = MidiSequence::from_absolute(DEFAULT_PPQ, vec![(0, EventKind::tempo_bpm(120.0))]);
        let bytes = encode_smf(&seq).unwrap();
        let body = &bytes[22..];
        assert_eq!(body[..7], [0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20]);
    }

    #[test]
    fn empty_round_trip() {
        let seq = MidiSequence::empty(DEFAULT_PPQ);
        let bytes = encode_smf(&seq).unwrap();
        assert_eq!(bytes.len(), 14 + 8 + 4);
        assert_eq!(decode_smf(&bytes).unwrap(), seq);
    }

    #[test]
    fn truncated_header_reports_offset() {
        let bytes = encode_smf(&MidiSequence::empty(DEFAULT_PPQ)).unwrap();
        match decode_smf(&bytes[..10]) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 10),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(decode_smf(b"MThx"), Err(Error::Parse { offset: 0, .. })));
    }

    #[test]
    fn validation_rejects_bad_sequences() {
        let on = EventKind::NoteOn {
            channel: 0,
            note: 60,
            velocity: 96,
        };
        let dangling = MidiSequence::from_absolute(480, vec![(0, on)]);
        assert!(encode_smf(&dangling).is_err());
        let no_eot = MidiSequence {
            ppq: 480,
            events: vec![MidiEvent {
                delta_ticks: 0,
                kind: EventKind::tempo_bpm(120.0),
            }],
        };
        assert!(encode_smf(&no_eot).is_err());
        let bad_channel = MidiSequence::from_absolute(
            480,
            vec![(
                0,
                EventKind::ProgramChange {
                    channel: 16,
                    program: 0,
                },
            )],
        );
        assert!(encode_smf(&bad_channel).is_err());
    }

    #[test]
    fn running_status_decodes() {
        let mut bytes = encode_smf(&MidiSequence::empty(480)).unwrap();
        bytes.truncate(18); // header chunk plus "MTrk"
        let track = [0x00, 0x90, 60, 96, 0x10, 60, 0, 0x00, 0xFF, 0x2F, 0x00];
        bytes.extend((track.len() as u32).to_be_bytes());
        bytes.extend(track);
        let seq = decode_smf(&bytes).unwrap();
        assert_eq!(seq.events.len(), 3);
        assert_eq!(
            seq.events[1].kind,
            EventKind::NoteOn {
                channel: 0,
                note: 60,
                velocity: 0
            }
        );
        assert_eq!(seq.events[1].delta_ticks, 16);
    }

    #[test]
    fn timed_events_follow_tempo() {
        let on = EventKind::NoteOn {
            channel: 0,
            note: 60,
            velocity: 96,
        };
        let off = EventKind::NoteOff {
            channel: 0,
            note: 60,
            velocity: 0,
        };
        let seq = MidiSequence::from_absolute(480, vec![(0, EventKind::tempo_bpm(60.0)), (480, on), (960, off)]);
        let timed = seq.timed();
        assert!((timed[1].0 - 1.0).abs() < 1e-12);
        assert!((timed[2].0 - 2.0).abs() < 1e-12);
    }

    fn arb_kind() -> impl Strategy<Value = EventKind> {
        prop_oneof![
            (0u8..16, 0u8..128).prop_map(|(channel, program)| EventKind::ProgramChange { channel, program }),
            (1u32..=MAX_TEMPO).prop_map(|m| EventKind::Tempo { micros_per_quarter: m }),
            (1u8..=32, 0u8..6, any::<u8>(), any::<u8>()).prop_map(|(n, d, c, t)| EventKind::TimeSignature {
                numerator: n,
                denominator_power: d,
                clocks_per_click: c,
                thirty_seconds_per_quarter: t,
            }),
            (0u8..16, 0u8..128, 0u8..128).prop_map(|(channel, note, velocity)| EventKind::NoteOn {
                channel,
                note,
                velocity
            }),
        ]
    }

    proptest! {
        #[test]
        fn vlq_round_trip_minimal(v in 0u32..=MAX_VLQ) {
            let bytes = vlq(v);
            let expected_len = match v { 0..=0x7F => 1, 0x80..=0x3FFF => 2, 0x4000..=0x1F_FFFF => 3, _ => 4 };
            prop_assert_eq!(bytes.len(), expected_len);
            let mut pos = 0;
            prop_assert_eq!(read_vlq(&bytes, &mut pos).unwrap(), v);
            prop_assert_eq!(pos, bytes.len());
        }

        #[test]
        fn smf_round_trip(
            ppq in 1u16..=0x7FFF,
            raw in prop::collection::vec((0u32..5000, arb_kind(), 1u32..2000), 0..60),
        ) {
            let mut events = Vec::new();
            for (tick, kind, len) in raw {
                events.push((tick, kind));
                if let EventKind::NoteOn { channel, note, .. } = kind {
                    events.push((tick + len, EventKind::NoteOff { channel, note, velocity: 0 }));
                }
            }
            let seq = MidiSequence::from_absolute(ppq, events);
            let bytes = encode_smf(&seq).unwrap();
            prop_assert_eq!(&bytes, &encode_smf(&seq.clone()).unwrap());
            prop_assert_eq!(decode_smf(&bytes).unwrap(), seq);
        }
    }
}
