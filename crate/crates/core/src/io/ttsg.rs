//! `.ttsg` layout, little-endian throughout:
//!
//! ```text
//! "TTSG" u8 version=1 u8 repr u16 0
//! u32 frames u32 bins u32 sample_rate u32 hop
//! f64 f_min f64 bins_per_octave f64 gamma
//! u8 normalization state
//! f32 payload, frame-major (complex cells as re, im)
//! u32 CRC32 of the payload bytes
//! ```
//!
//! Repr codes: 0 STFT log-magnitude, 1 CQT log-magnitude, 2 CQT complex,
//! 3 STFT complex. STFT files store zeros for the CQT fields; the window
//! length is recovered as `2·(bins − 1)`. Log-magnitude files assume the
//! default magnitude floor, and complex files reconstruct `frames·hop`
//! samples.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tf::{
    ComplexSpectrogram, CqtParams, LogMagSpectrogram, NormalizationState, StftParams,
    TransformParams, DEFAULT_FLOOR,
};

const MAGIC: &[u8; 4] = b"TTSG";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 2 + 4 * 4 + 3 * 8 + 1;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrogramFile {
    LogMag(LogMagSpectrogram),
    Complex(ComplexSpectrogram),
}

impl SpectrogramFile {
    pub fn params(&self) -> &TransformParams {
        match self {
            SpectrogramFile::LogMag(s) => s.params(),
            SpectrogramFile::Complex(s) => s.params(),
        }
    }

    pub fn frames(&self) -> usize {
        match self {
            SpectrogramFile::LogMag(s) => s.frames(),
            SpectrogramFile::Complex(s) => s.frames(),
        }
    }

    pub fn bins(&self) -> usize {
        self.params().n_bins()
    }

    fn repr_code(&self) -> u8 {
        match (self, self.params()) {
            (SpectrogramFile::LogMag(_), TransformParams::Stft(_)) => 0,
            (SpectrogramFile::LogMag(_), TransformParams::Cqt(_)) => 1,
            (SpectrogramFile::Complex(_), TransformParams::Cqt(_)) => 2,
            (SpectrogramFile::Complex(_), TransformParams::Stft(_)) => 3,
        }
    }

    /// The log-magnitude grid, taking `ln(|X| + floor)` of complex content.
    pub fn into_log_magnitude(self) -> Result<LogMagSpectrogram> {
        match self {
            SpectrogramFile::LogMag(s) => Ok(s),
            SpectrogramFile::Complex(c) => crate::tf::log_magnitude(&c, DEFAULT_FLOOR),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (sample_rate, state, payload): (u32, NormalizationState, Vec<f32>) = match self {
            SpectrogramFile::LogMag(s) => (
                s.sample_rate(),
                s.state(),
                s.data().iter().map(|&v| v as f32).collect(),
            ),
            SpectrogramFile::Complex(s) => (
                s.sample_rate(),
                NormalizationState::Raw,
                s.data().iter().flat_map(|c| [c.re as f32, c.im as f32]).collect(),
            ),
        };
        let (f_min, bpo, gamma) = match self.params() {
            TransformParams::Cqt(p) => (p.f_min, p.bins_per_octave as f64, p.gamma),
            TransformParams::Stft(_) => (0.0, 0.0, 0.0),
        };
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * payload.len() + 4);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.repr_code());
        out.extend_from_slice(&0u16.to_le_bytes());
        for v in [self.frames(), self.bins(), sample_rate as usize, self.params().hop()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for v in [f_min, bpo, gamma] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(state.code());
        let start = out.len();
        for v in payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: String| Error::CorruptFile(m);
        if bytes.len() < HEADER_LEN + 4 {
            return Err(corrupt(format!("{} bytes is too short for a spectrogram file", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("missing TTSG magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(corrupt(format!("unsupported version {}", bytes[4])));
        }
        let repr = bytes[5];
        if repr > 3 {
            return Err(corrupt(format!("unknown representation code {repr}")));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let (frames, bins, sample_rate, hop) =
            (u32_at(8) as usize, u32_at(12) as usize, u32_at(16), u32_at(20) as usize);
        let (f_min, bpo, gamma) = (f64_at(24), f64_at(32), f64_at(40));
        let state = NormalizationState::from_code(bytes[48])
            .ok_or_else(|| corrupt(format!("unknown normalization state {}", bytes[48])))?;
        let complex = repr >= 2;
        let values = frames
            .checked_mul(bins)
            .and_then(|n| n.checked_mul(if complex { 2 } else { 1 }))
            .ok_or_else(|| corrupt("frame/bin counts overflow".into()))?;
        let expected = HEADER_LEN + 4 * values + 4;
        if bytes.len() != expected {
            return Err(corrupt(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let payload = &bytes[HEADER_LEN..expected - 4];
        if crc32fast::hash(payload) != u32_at(expected - 4) {
            return Err(corrupt("payload checksum mismatch".into()));
        }
        let floats: Vec<f64> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();

        let params = if repr == 1 || repr == 2 {
            if bpo.fract() != 0.0 || bpo < 1.0 {
                return Err(corrupt(format!("bins per octave {bpo} is not a positive integer")));
            }
            let p = CqtParams {
                f_min,
                bins_per_octave: bpo as usize,
                n_bins: bins,
                hop,
                gamma,
                sample_rate,
            };
            p.validate().map_err(|e| corrupt(e.to_string()))?;
            TransformParams::Cqt(p)
        } else {
            let p = StftParams::new(2 * bins.saturating_sub(1), hop).map_err(|e| corrupt(e.to_string()))?;
            TransformParams::Stft(p)
        };
        let bad = |e: Error| corrupt(e.to_string());
        if complex {
            if state != NormalizationState::Raw {
                return Err(corrupt("complex spectrograms are always raw".into()));
            }
            let cells: Vec<Complex64> = floats.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let data = Array2::from_shape_vec((frames, bins), cells).map_err(|e| corrupt(e.to_string()))?;
            Ok(SpectrogramFile::Complex(
                ComplexSpectrogram::new(data, params, sample_rate, frames * hop).map_err(bad)?,
            ))
        } else {
            let data = Array2::from_shape_vec((frames, bins), floats).map_err(|e| corrupt(e.to_string()))?;
            Ok(SpectrogramFile::LogMag(
                LogMagSpectrogram::new(data, params, sample_rate, DEFAULT_FLOOR, state).map_err(bad)?,
            ))
        }
    }
}

pub fn write_spectrogram(path: impl AsRef<Path>, spec: &SpectrogramFile) -> Result<()> {
    std::fs::write(path, spec.to_bytes())?;
    Ok(())
}

pub fn read_spectrogram(path: impl AsRef<Path>) -> Result<SpectrogramFile> {
    SpectrogramFile::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::sine;
    use crate::tf::{cqt, log_magnitude, stft};

    fn samples() -> Vec<SpectrogramFile> {
        let w = sine(440.0, 0.5, 3000, 16000);
        let c = cqt(&w, &CqtParams::default()).unwrap();
        let s = stft(&w, &StftParams::default()).unwrap();
        vec![
            SpectrogramFile::LogMag(log_magnitude(&s, DEFAULT_FLOOR).unwrap()),
            SpectrogramFile::LogMag(log_magnitude(&c, DEFAULT_FLOOR).unwrap()),
            SpectrogramFile::Complex(c),
            SpectrogramFile::Complex(s),
        ]
    }

    #[test]
    fn header_layout() {
        for (code, f) in samples().iter().enumerate() {
            let b = f.to_bytes();
            assert_eq!(&b[..4], b"TTSG");
            assert_eq!(b[4], 1);
            assert_eq!(b[5] as usize, code);
            assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()) as usize, f.frames());
            assert_eq!(u32::from_le_bytes(b[20..24].try_into().unwrap()), 256);
        }
    }

    #[test]
    fn bytes_are_stable_after_one_round_trip() {
        for f in samples() {
            let once = SpectrogramFile::from_bytes(&f.to_bytes()).unwrap();
            assert_eq!(once.params(), f.params());
            let bytes = once.to_bytes();
            assert_eq!(SpectrogramFile::from_bytes(&bytes).unwrap().to_bytes(), bytes);
        }
    }

    #[test]
    fn values_within_f32_precision() {
        let f = &samples()[1];
        let SpectrogramFile::LogMag(orig) = f else { unreachable!() };
        let SpectrogramFile::LogMag(back) = SpectrogramFile::from_bytes(&f.to_bytes()).unwrap() else {
            panic!()
        };
        assert_eq!(back.state(), orig.state());
        for (a, b) in back.data().iter().zip(orig.data()) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn corruption_detected() {
        let good = samples()[1].to_bytes();
        let mut flipped = good.clone();
        let mid = good.len() / 2;
        flipped[mid] ^= 0x10;
        assert!(matches!(SpectrogramFile::from_bytes(&flipped), Err(Error::CorruptFile(_))));
        assert!(SpectrogramFile::from_bytes(&good[..good.len() - 1]).is_err());
        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(SpectrogramFile::from_bytes(&magic).is_err());
        let mut state = good.clone();
        state[48] = 9;
        assert!(SpectrogramFile::from_bytes(&state).is_err());
        assert!(SpectrogramFile::from_bytes(b"TTSG").is_err());
    }
}
