//! Minimal RIFF/WAVE reader and writer.
//!
//! Only what the toolkit needs: mono, 16-bit PCM (normalized to [-1, 1) by
//! 1/32768) or 32-bit IEEE float (lossless round trip). Anything else is a
//! format error naming the offense.

use std::fs;
use std::path::Path;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// On-disk sample encoding for [`write_wav`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFormat {
    /// 16-bit PCM; samples are scaled by 32768, rounded and clamped.
    Pcm16,
    /// 32-bit IEEE float, written as-is (f64 -> f32 narrowing).
    Float32,
}

const PCM_SCALE: f64 = 32768.0;

/// Reads a mono WAV file into an [`AudioBuffer`].
pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let bytes = fs::read(path)?;
    parse_wav(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes a mono WAV file in the requested encoding.
pub fn write_wav(path: &Path, buffer: &AudioBuffer, format: SampleFormat) -> Result<()> {
    let bytes = encode_wav(buffer, format);
    fs::write(path, bytes)?;
    Ok(())
}

fn parse_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    let header = bytes
        .get(..12)
        .ok_or_else(|| Error::Format("truncated file: missing RIFF header".into()))?;
    if &header[0..4] != b"RIFF" {
        return Err(Error::Format("missing RIFF magic".into()));
    }
    if &header[8..12] != b"WAVE" {
        return Err(Error::Format("missing WAVE form type".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format tag, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut off = 12;
    while off + 8 <= bytes.len() {
        let id = &bytes[off..off + 4];
        let size = u32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap()) as usize;
        let body = bytes.get(off + 8..off + 8 + size).ok_or_else(|| {
            Error::Format(format!(
                "truncated chunk {:?}: declared {size} bytes past end of file",
                String::from_utf8_lossy(id)
            ))
        })?;
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::Format("fmt chunk shorter than 16 bytes".into()));
                }
                let tag = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                fmt = Some((tag, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {} // LIST, fact, cue ... skipped
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        off += 8 + size + (size & 1);
    }

    let (tag, channels, rate, bits) =
        fmt.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    if channels != 1 {
        return Err(Error::Format(format!(
            "expected mono audio, file has {channels} channels"
        )));
    }
    if rate == 0 {
        return Err(Error::Format("sample rate is zero".into()));
    }

    let samples = match (tag, bits) {
        (1, 16) => {
            if data.len() % 2 != 0 {
                return Err(Error::Format("pcm16 data chunk has odd byte length".into()));
            }
            data.chunks_exact(2)
                .map(|c| i16::from_le_bytes(c.try_into().unwrap()) as f64 / PCM_SCALE)
                .collect()
        }
        (3, 32) => {
            if data.len() % 4 != 0 {
                return Err(Error::Format(
                    "float32 data chunk length is not a multiple of 4".into(),
                ));
            }
            data.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect()
        }
        (tag, bits) => {
            return Err(Error::Format(format!(
                "unsupported encoding: format tag {tag} with {bits} bits per sample \
                 (supported: pcm16, float32)"
            )))
        }
    };
    AudioBuffer::new(samples, rate)
}

fn encode_wav(buffer: &AudioBuffer, format: SampleFormat) -> Vec<u8> {
    let (tag, bits, data): (u16, u16, Vec<u8>) = match format {
        SampleFormat::Pcm16 => {
            let mut d = Vec::with_capacity(buffer.len() * 2);
            for &s in &buffer.samples {
                let v = (s * PCM_SCALE).round().clamp(-32768.0, 32767.0) as i16;
                d.extend_from_slice(&v.to_le_bytes());
            }
            (1, 16, d)
        }
        SampleFormat::Float32 => {
            let mut d = Vec::with_capacity(buffer.len() * 4);
            for &s in &buffer.samples {
                d.extend_from_slice(&(s as f32).to_le_bytes());
            }
            (3, 32, d)
        }
    };
    let block_align = (bits / 8) as u32;
    let byte_rate = buffer.sample_rate * block_align;
    let mut out = Vec::with_capacity(44 + data.len());
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&buffer.sample_rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(&data);
    out
}
