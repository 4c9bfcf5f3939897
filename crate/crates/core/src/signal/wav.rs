//! Minimal RIFF/WAVE reader and writer for mono PCM16 and float32 audio.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Waveform;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChannelPolicy {
    #[default]
    Reject,
    /// Average all channels into one.
    Downmix,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    #[default]
    Float32,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::WavFormat {
                offset: self.bytes.len() as u64,
                message: format!(
                    "file ends while reading {what} ({n} bytes needed from offset {})",
                    self.pos
                ),
            }),
        }
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

struct Format {
    code: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Decodes a WAV byte buffer.
pub fn parse_wav(bytes: &[u8], policy: ChannelPolicy) -> Result<Waveform> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "RIFF tag")? != b"RIFF" {
        return Err(Error::WavFormat {
            offset: 0,
            message: "missing RIFF tag".into(),
        });
    }
    r.u32("RIFF size")?;
    if r.take(4, "WAVE tag")? != b"WAVE" {
        return Err(Error::WavFormat {
            offset: 8,
            message: "missing WAVE tag".into(),
        });
    }

    let mut format: Option<Format> = None;
    loop {
        let chunk_at = r.pos;
        let id = r.take(4, "chunk id")?;
        let size = r.u32("chunk size")? as usize;
        match id {
            b"fmt " => {
                let body_at = r.pos;
                let body = r.take(size, "fmt chunk")?;
                let mut f = Reader { bytes: body, pos: 0 };
                let wrap = |e: Error| match e {
                    Error::WavFormat { message, .. } => Error::WavFormat {
                        offset: (body_at + size) as u64,
                        message,
                    },
                    e => e,
                };
                let mut code = f.u16("format code").map_err(wrap)?;
                let channels = f.u16("channel count").map_err(wrap)?;
                let sample_rate = f.u32("sample rate").map_err(wrap)?;
                f.u32("byte rate").map_err(wrap)?;
                f.u16("block align").map_err(wrap)?;
                let bits = f.u16("bits per sample").map_err(wrap)?;
                if code == FORMAT_EXTENSIBLE {
                    f.u16("extension size").map_err(wrap)?;
                    f.u16("valid bits").map_err(wrap)?;
                    f.u32("channel mask").map_err(wrap)?;
                    code = f.u16("sub-format").map_err(wrap)?;
                }
                format = Some(Format {
                    code,
                    channels,
                    sample_rate,
                    bits,
                });
            }
            b"data" => {
                let fmt = format.ok_or_else(|| Error::WavFormat {
                    offset: chunk_at as u64,
                    message: "data chunk before fmt chunk".into(),
                })?;
                let data = r.take(size, "data chunk")?;
                return decode(data, &fmt, policy);
            }
            _ => {
                r.take(size, "chunk body")?;
            }
        }
        if size % 2 == 1 && r.pos < bytes.len() {
            r.pos += 1;
        }
    }
}

fn decode(data: &[u8], fmt: &Format, policy: ChannelPolicy) -> Result<Waveform> {
    let channels = fmt.channels as usize;
    if channels == 0 {
        return Err(Error::WavUnsupported("zero channels".into()));
    }
    if channels > 1 && policy == ChannelPolicy::Reject {
        return Err(Error::WavUnsupported(format!(
            "{channels} channels; only mono input is accepted"
        )));
    }
    let interleaved: Vec<f64> = match (fmt.code, fmt.bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
            .collect(),
        (FORMAT_FLOAT, 32) => data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect(),
        (code, bits) => {
            return Err(Error::WavUnsupported(format!(
                "format code {code} with {bits} bits per sample"
            )))
        }
    };
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|f| f.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Waveform::new(samples, fmt.sample_rate)
}

pub fn load_wav(path: impl AsRef<Path>, policy: ChannelPolicy) -> Result<Waveform> {
    let bytes = fs::read(path)?;
    parse_wav(&bytes, policy)
}

/// Encodes `w` as a mono WAV file image.
pub fn write_wav<W: Write>(mut out: W, w: &Waveform, format: SampleFormat) -> Result<()> {
    let (code, bits) = match format {
        SampleFormat::Pcm16 => (FORMAT_PCM, 16u16),
        SampleFormat::Float32 => (FORMAT_FLOAT, 32u16),
    };
    let block = bits as u32 / 8;
    let data_len = w.len() as u32 * block;
    let mut buf = Vec::with_capacity(44 + data_len as usize);
    buf.extend_from_slice(b"RIFF");
    buf.extend_from_slice(&(36 + data_len).to_le_bytes());
    buf.extend_from_slice(b"WAVEfmt ");
    buf.extend_from_slice(&16u32.to_le_bytes());
    buf.extend_from_slice(&code.to_le_bytes());
    buf.extend_from_slice(&1u16.to_le_bytes());
    buf.extend_from_slice(&w.sample_rate().to_le_bytes());
    buf.extend_from_slice(&(w.sample_rate() * block).to_le_bytes());
    buf.extend_from_slice(&(block as u16).to_le_bytes());
    buf.extend_from_slice(&bits.to_le_bytes());
    buf.extend_from_slice(b"data");
    buf.extend_from_slice(&data_len.to_le_bytes());
    for &s in w.samples() {
        match format {
            SampleFormat::Pcm16 => {
                let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                buf.extend_from_slice(&q.to_le_bytes());
            }
            SampleFormat::Float32 => buf.extend_from_slice(&(s as f32).to_le_bytes()),
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn save_wav(path: impl AsRef<Path>, w: &Waveform, format: SampleFormat) -> Result<()> {
    let file = fs::File::create(path)?;
    write_wav(std::io::BufWriter::new(file), w, format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn encode(w: &Waveform, f: SampleFormat) -> Vec<u8> {
        let mut buf = Vec::new();
        write_wav(&mut buf, w, f).unwrap();
        buf
    }

    fn random(len: usize) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = (0..len).map(|_| rng.random_range(-1.0f32..1.0) as f64).collect();
        Waveform::new(s, 16000).unwrap()
    }

    #[test]
    fn float32_round_trip_is_exact() {
        let w = random(1000);
        let back = parse_wav(&encode(&w, SampleFormat::Float32), ChannelPolicy::Reject).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn pcm16_round_trip_within_one_lsb() {
        let mut w = random(1000).into_samples();
        w.extend([1.0, -1.0, 0.0]);
        let w = Waveform::new(w, 8000).unwrap();
        let back = parse_wav(&encode(&w, SampleFormat::Pcm16), ChannelPolicy::Reject).unwrap();
        assert_eq!(back.sample_rate(), 8000);
        let err = w
            .samples()
            .iter()
            .zip(back.samples())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 2f64.powi(-15), "{err}");
    }

    #[test]
    fn truncated_file_reports_offset() {
        let bytes = encode(&random(100), SampleFormat::Pcm16);
        let cut = &bytes[..bytes.len() - 10];
        match parse_wav(cut, ChannelPolicy::Reject) {
            Err(Error::WavFormat { offset, message }) => {
                assert_eq!(offset, cut.len() as u64);
                assert!(message.contains("data chunk"), "{message}");
                assert!(message.contains("offset 44"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_wav(&bytes[..20], ChannelPolicy::Reject), Err(Error::WavFormat { .. })));
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode(&random(10), SampleFormat::Pcm16);
        bytes[0] = b'X';
        assert!(matches!(
            parse_wav(&bytes, ChannelPolicy::Reject),
            Err(Error::WavFormat { offset: 0, .. })
        ));
    }

    fn stereo_pcm16(frames: &[(i16, i16)]) -> Vec<u8> {
        let data: Vec<u8> = frames
            .iter()
            .flat_map(|(l, r)| l.to_le_bytes().into_iter().chain(r.to_le_bytes()))
            .collect();
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        b.extend_from_slice(b"WAVEfmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&2u16.to_le_bytes());
        b.extend_from_slice(&16000u32.to_le_bytes());
        b.extend_from_slice(&64000u32.to_le_bytes());
        b.extend_from_slice(&4u16.to_le_bytes());
        b.extend_from_slice(&16u16.to_le_bytes());
        b.extend_from_slice(b"LIST");
        b.extend_from_slice(&3u32.to_le_bytes());
        b.extend_from_slice(&[1, 2, 3, 0]);
        b.extend_from_slice(b"data");
        b.extend_from_slice(&(data.len() as u32).to_le_bytes());
        b.extend_from_slice(&data);
        b
    }

    #[test]
    fn multichannel_policy() {
        let bytes = stereo_pcm16(&[(16384, 0), (-16384, -16384)]);
        assert!(matches!(parse_wav(&bytes, ChannelPolicy::Reject), Err(Error::WavUnsupported(_))));
        let w = parse_wav(&bytes, ChannelPolicy::Downmix).unwrap();
        assert_eq!(w.samples(), &[0.25, -0.5]);
    }

    #[test]
    fn unsupported_encoding() {
        let mut bytes = encode(&random(4), SampleFormat::Pcm16);
        bytes[34] = 24; // bits per sample
        assert!(matches!(parse_wav(&bytes, ChannelPolicy::Reject), Err(Error::WavUnsupported(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let w = random(64);
        save_wav(&path, &w, SampleFormat::Float32).unwrap();
        assert_eq!(load_wav(&path, ChannelPolicy::Reject).unwrap(), w);
        assert!(matches!(load_wav(dir.path().join("missing.wav"), ChannelPolicy::Reject), Err(Error::Io(_))));
    }
}
