use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::Waveform;

pub const WAV_SAMPLE_RATE: u32 = 16_000;

const FULL_SCALE: f64 = 32768.0;

fn hound_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::CorruptFile(format!("{}: {other}", path.display())),
    }
}

/// Reads a PCM16 mono 16 kHz file; anything else is rejected with the
/// offending property named.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| hound_error(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::invalid(format!(
            "{}: expected 16-bit PCM, found {}-bit {:?}",
            path.display(),
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    if spec.channels != 1 {
        return Err(Error::invalid(format!(
            "{}: expected mono, found {} channels",
            path.display(),
            spec.channels
        )));
    }
    if spec.sample_rate != WAV_SAMPLE_RATE {
        return Err(Error::invalid(format!(
            "{}: expected a {WAV_SAMPLE_RATE} Hz sample rate, found {} Hz",
            path.display(),
            spec.sample_rate
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / FULL_SCALE))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| hound_error(path, e))?;
    Waveform::new(samples, spec.sample_rate)
}

/// Writes PCM16 mono; samples become `round(x·32768)` clamped to the i16 range.
pub fn write_wav(path: impl AsRef<Path>, wave: &Waveform) -> Result<()> {
    let path = path.as_ref();
    if wave.sample_rate() != WAV_SAMPLE_RATE {
        return Err(Error::invalid(format!(
            "only {WAV_SAMPLE_RATE} Hz audio can be written, got {} Hz",
            wave.sample_rate()
        )));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: WAV_SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| hound_error(path, e))?;
    for &x in wave.samples() {
        let v = (x * FULL_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(v).map_err(|e| hound_error(path, e))?;
    }
    writer.finalize().map_err(|e| hound_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clamps_and_rounds() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let w = Waveform::new(vec![1.5, -2.0, 0.5, 1.0 / 65536.0, -0.3], 16000).unwrap();
        write_wav(&p, &w).unwrap();
        let r = read_wav(&p).unwrap();
        assert_eq!(r.samples()[0], 32767.0 / 32768.0);
        assert_eq!(r.samples()[1], -1.0);
        assert_eq!(r.samples()[2], 0.5);
        assert_eq!(r.samples()[3], 1.0 / 32768.0);
    }

    #[test]
    fn rejects_other_formats() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("stereo", 2, 16000, 16),
            ("rate", 1, 44100, 16),
            ("depth", 1, 16000, 24),
        ];
        for (name, channels, rate, bits) in cases {
            let p = dir.path().join(format!("{name}.wav"));
            let spec = WavSpec { channels, sample_rate: rate, bits_per_sample: bits, sample_format: SampleFormat::Int };
            let mut w = WavWriter::create(&p, spec).unwrap();
            for _ in 0..channels {
                w.write_sample(0i32).unwrap();
            }
            w.finalize().unwrap();
            let err = read_wav(&p).unwrap_err().to_string();
            let needle = match name {
                "stereo" => "mono",
                "rate" => "44100",
                _ => "24-bit",
            };
            assert!(err.contains(needle), "{err}");
        }
        let p = dir.path().join("junk.wav");
        std::fs::write(&p, b"not a wav file").unwrap();
        assert!(matches!(read_wav(&p), Err(Error::CorruptFile(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn pcm16_round_trip(codes in proptest::collection::vec(any::<i16>(), 0..500)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("x.wav");
            let w = Waveform::new(codes.iter().map(|&c| c as f64 / 32768.0).collect(), 16000).unwrap();
            write_wav(&p, &w).unwrap();
            let back = read_wav(&p).unwrap();
            prop_assert_eq!(back, w);
        }
    }
}
