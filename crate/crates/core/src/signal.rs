//! Time-domain signals and a few deterministic test-tone generators.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono waveform with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
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

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Largest absolute sample value.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }
}

/// `amplitude * sin(2π f n / sr)` for `len` samples.
pub fn sine(freq: f64, amplitude: f64, len: usize, sample_rate: u32) -> Waveform {
    let sr = sample_rate as f64;
    let samples = (0..len)
        .map(|n| amplitude * (2.0 * PI * freq * n as f64 / sr).sin())
        .collect();
    Waveform {
        samples,
        sample_rate,
    }
}

/// Fundamental plus `harmonics` integer overtones; partial `h` (1-based) has
/// amplitude `amplitude * decay^(h-1)`.
pub fn harmonic_tone(
    f0: f64,
    harmonics: usize,
    decay: f64,
    amplitude: f64,
    len: usize,
    sample_rate: u32,
) -> Waveform {
    let sr = sample_rate as f64;
    let partials: Vec<(f64, f64)> = (1..=harmonics + 1)
        .map(|h| (f0 * h as f64, amplitude * decay.powi(h as i32 - 1)))
        .filter(|(f, _)| *f < sr / 2.0)
        .collect();
    let samples = (0..len)
        .map(|n| {
            let t = n as f64 / sr;
            partials
                .iter()
                .map(|(f, a)| a * (2.0 * PI * f * t).sin())
                .sum()
        })
        .collect();
    Waveform {
        samples,
        sample_rate,
    }
}

/// Frequency of `semitones` above `freq` in twelve-tone equal temperament.
pub fn transpose(freq: f64, semitones: f64) -> f64 {
    freq * 2f64.powf(semitones / 12.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_samples() {
        assert!(Waveform::new(vec![0.0, f64::NAN], 16000).is_err());
        assert!(Waveform::new(vec![0.0], 0).is_err());
    }

    #[test]
    fn harmonic_tone_drops_partials_above_nyquist() {
        let w = harmonic_tone(3000.0, 5, 1.0, 0.1, 16, 16000);
        // 3000 and 6000 Hz survive, 9000+ are above 8 kHz
        let expected = sine(3000.0, 0.1, 16, 16000).samples()[3]
            + sine(6000.0, 0.1, 16, 16000).samples()[3];
        assert!((w.samples()[3] - expected).abs() < 1e-12);
    }

    #[test]
    fn transpose_octave_doubles() {
        assert!((transpose(440.0, 12.0) - 880.0).abs() < 1e-9);
    }
}
