use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{check_rate, AudioClip, AudioError, Result};

const I16_SCALE: f32 = 32768.0;

impl From<hound::Error> for AudioError {
    fn from(err: hound::Error) -> Self {
        match err {
            hound::Error::IoError(e) => AudioError::Io(e),
            hound::Error::Unsupported => AudioError::UnsupportedCodec("unsupported WAV encoding".into()),
            hound::Error::FormatError(msg) => AudioError::Format(msg.to_string()),
            other => AudioError::Format(other.to_string()),
        }
    }
}

/// Reads a 16-bit PCM or 32-bit float WAV file, mono or stereo. Stereo is
/// downmixed by averaging the two channels.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let reader = WavReader::open(path)?;
    let spec = reader.spec();
    check_rate(spec.sample_rate)?;
    let channels = usize::from(spec.channels);
    if channels == 0 || channels > 2 {
        return Err(AudioError::UnsupportedCodec(format!("{channels} channels")));
    }

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f32::from(v) / I16_SCALE))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v.clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()?,
        (format, bits) => {
            return Err(AudioError::UnsupportedCodec(format!("{bits}-bit {format:?}")));
        }
    };

    let samples = if channels == 2 {
        interleaved
            .chunks_exact(2)
            .map(|pair| 0.5 * (pair[0] + pair[1]))
            .collect()
    } else {
        interleaved
    };

    let label = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    AudioClip::new(samples, spec.sample_rate, label)
}

/// Writes a clip as 16-bit PCM mono little-endian RIFF/WAVE.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    if clip.is_empty() {
        return Err(AudioError::Empty);
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec)?;
    {
        let mut samples = writer.get_i16_writer(clip.len() as u32);
        for &s in clip.samples() {
            samples.write_sample(quantize(s));
        }
        samples.flush()?;
    }
    writer.finalize()?;
    Ok(())
}

fn quantize(sample: f32) -> i16 {
    (sample * I16_SCALE).round().clamp(-32768.0, 32767.0) as i16
}
