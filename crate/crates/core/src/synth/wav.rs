//! RIFF/WAVE, PCM 16-bit little-endian, mono, 22,050 Hz.

use super::{AudioClip, CLIP_LEN, SAMPLE_RATE};
use crate::error::{Error, Result};

const HEADER_LEN: usize = 44;

pub fn write_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = (clip.samples().len() * 2) as u32;
    let mut out = Vec::with_capacity(HEADER_LEN + data_len as usize);
    out.extend(b"RIFF");
    out.extend((36 + data_len).to_le_bytes());
    out.extend(b"WAVE");
    out.extend(b"fmt ");
    out.extend(16u32.to_le_bytes());
    out.extend(1u16.to_le_bytes()); // PCM
    out.extend(1u16.to_le_bytes()); // mono
    out.extend(SAMPLE_RATE.to_le_bytes());
    out.extend((SAMPLE_RATE * 2).to_le_bytes());
    out.extend(2u16.to_le_bytes());
    out.extend(16u16.to_le_bytes());
    out.extend(b"data");
    out.extend(data_len.to_le_bytes());
    for &s in clip.samples() {
        let q = (s as f64 * 32767.0).round().clamp(-32767.0, 32767.0) as i16;
        out.extend(q.to_le_bytes());
    }
    out
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

pub fn read_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 {
        return Err(Error::parse(bytes.len(), "truncated RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(Error::parse(0, "missing RIFF tag"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(Error::parse(8, "missing WAVE tag"));
    }
    let mut pos = 12;
    let mut format_seen = false;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        if body + len > bytes.len() {
            return Err(Error::parse(
                pos + 4,
                format!("chunk length {len} runs past end of input"),
            ));
        }
        match id {
            b"fmt " => {
                if len < 16 {
                    return Err(Error::parse(pos + 4, "fmt chunk shorter than 16 bytes"));
                }
                let (tag, channels, rate, bits) = (
                    u16_at(bytes, body),
                    u16_at(bytes, body + 2),
                    u32_at(bytes, body + 4),
                    u16_at(bytes, body + 14),
                );
                if tag != 1 || channels != 1 || rate != SAMPLE_RATE || bits != 16 {
                    return Err(Error::parse(
                        body,
                        format!("unsupported format: tag {tag}, {channels} ch, {rate} Hz, {bits} bit"),
                    ));
                }
                format_seen = true;
            }
            b"data" => {
                if !format_seen {
                    return Err(Error::parse(pos, "data chunk before fmt chunk"));
                }
                if len != CLIP_LEN * 2 {
                    return Err(Error::parse(
                        pos + 4,
                        format!("data chunk of {len} bytes, expected {}", CLIP_LEN * 2),
                    ));
                }
                let samples = bytes[body..body + len]
                    .chunks_exact(2)
                    .map(|b| (i16::from_le_bytes([b[0], b[1]]) as f32 / 32767.0).max(-1.0))
                    .collect();
                return AudioClip::from_samples(samples);
            }
            _ => {}
        }
        pos = body + len + (len & 1);
    }
    Err(Error::parse(bytes.len(), "no data chunk"))
}
