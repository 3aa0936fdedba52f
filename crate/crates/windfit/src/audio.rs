//! Mono audio buffers and WAV file I/O.

use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// A mono sample sequence with its sample rate. Samples are f64 in nominal
/// [-1, 1] range, though no clipping is enforced in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }
}

/// Sample encoding of a WAV file. Reads accept both; writes preserve the
/// format of the input they derive from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavFormat {
    Pcm16,
    Float32,
}

/// Result of reading a WAV file: the (possibly downmixed) mono buffer plus
/// enough metadata to write a matching output.
#[derive(Debug, Clone)]
pub struct WavContents {
    pub buffer: AudioBuffer,
    pub format: WavFormat,
    pub source_channels: u16,
    /// True when a multi-channel input was averaged down to mono.
    pub downmixed: bool,
}

pub fn read_wav(path: &Path) -> Result<WavContents> {
    let mut reader = hound::WavReader::open(path).map_err(|source| Error::Wav {
        path: path.to_path_buf(),
        source,
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::UnsupportedWav {
            path: path.to_path_buf(),
            detail: "zero channels".into(),
        });
    }

    let format = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => WavFormat::Pcm16,
        (hound::SampleFormat::Float, 32) => WavFormat::Float32,
        (fmt, bits) => {
            return Err(Error::UnsupportedWav {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {fmt:?} (supported: 16-bit PCM, 32-bit float)"),
            })
        }
    };

    let interleaved: Vec<f64> = match format {
        WavFormat::Pcm16 => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|source| Error::Wav {
                path: path.to_path_buf(),
                source,
            })?,
        WavFormat::Float32 => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|source| Error::Wav {
                path: path.to_path_buf(),
                source,
            })?,
    };

    let frames = interleaved.len() / channels;
    let mono: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        (0..frames)
            .map(|i| {
                interleaved[i * channels..(i + 1) * channels].iter().sum::<f64>()
                    / channels as f64
            })
            .collect()
    };

    Ok(WavContents {
        buffer: AudioBuffer::new(mono, spec.sample_rate)?,
        format,
        source_channels: spec.channels,
        downmixed: channels > 1,
    })
}

/// Write a mono WAV file. The full payload is assembled in memory and written
/// in one call, so a failure part-way through processing leaves no file behind.
pub fn write_wav(path: &Path, audio: &AudioBuffer, format: WavFormat) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate(),
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => hound::SampleFormat::Int,
            WavFormat::Float32 => hound::SampleFormat::Float,
        },
    };

    let mut cursor = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut cursor, spec).map_err(|source| Error::Wav {
            path: path.to_path_buf(),
            source,
        })?;
        match format {
            WavFormat::Pcm16 => {
                for &x in audio.samples() {
                    let v = (x * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64);
                    writer.write_sample(v as i16).map_err(|source| Error::Wav {
                        path: path.to_path_buf(),
                        source,
                    })?;
                }
            }
            WavFormat::Float32 => {
                for &x in audio.samples() {
                    writer.write_sample(x as f32).map_err(|source| Error::Wav {
                        path: path.to_path_buf(),
                        source,
                    })?;
                }
            }
        }
        writer.finalize().map_err(|source| Error::Wav {
            path: path.to_path_buf(),
            source,
        })?;
    }

    std::fs::write(path, cursor.into_inner()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
