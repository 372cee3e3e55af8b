//! Constant-Q transform by direct correlation with windowed complex
//! exponentials.
//!
//! Each bin's kernel is a Hann window spanning `Q` periods of the bin's centre
//! frequency, normalised to unit sum, multiplied by `exp(-i 2π f_k τ / sr)`
//! where `τ` is the offset from the frame centre. The phase is therefore
//! referenced to absolute time: a stationary sinusoid at `f` advances by
//! `2π f hop / sr` between frames.

use ndarray::Array2;
use num_complex::Complex64;

use super::pad::reflect_pad;
use super::params::{CqtParams, TransformParams};
use super::spectrogram::ComplexSpectrogram;
use super::stft::frame_count;
use super::window::hann_periodic;
use crate::error::{Error, Result};
use crate::signal::Waveform;

struct Kernel {
    /// Index of the frame centre within the kernel.
    center: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Precomputed constant-Q filter bank.
pub struct Cqt {
    params: CqtParams,
    kernels: Vec<Kernel>,
    margin: usize,
}

impl Cqt {
    pub fn new(params: CqtParams) -> Result<Self> {
        params.validate()?;
        let sr = params.sample_rate as f64;
        let kernels: Vec<Kernel> = (0..params.n_bins)
            .map(|k| {
                let n = params.kernel_len(k);
                let f = params.center_freq(k);
                let window = if n < 2 { vec![1.0] } else { hann_periodic(n) };
                let norm: f64 = window.iter().sum();
                let center = n / 2;
                let (re, im) = window
                    .iter()
                    .enumerate()
                    .map(|(m, w)| {
                        let tau = m as f64 - center as f64;
                        let ang = -2.0 * std::f64::consts::PI * f * tau / sr;
                        let a = w / norm;
                        (a * ang.cos(), a * ang.sin())
                    })
                    .unzip();
                Kernel { center, re, im }
            })
            .collect();
        let margin = kernels.iter().map(|k| k.re.len()).max().unwrap_or(1);
        Ok(Self {
            params,
            kernels,
            margin,
        })
    }

    pub fn params(&self) -> &CqtParams {
        &self.params
    }

    pub fn analyze(&self, wave: &Waveform) -> Result<ComplexSpectrogram> {
        if wave.is_empty() {
            return Err(Error::invalid("cannot transform an empty waveform"));
        }
        if wave.sample_rate() != self.params.sample_rate {
            return Err(Error::invalid(format!(
                "waveform is {} Hz but the transform expects {} Hz",
                wave.sample_rate(),
                self.params.sample_rate
            )));
        }
        let len = wave.len();
        let hop = self.params.hop;
        let frames = frame_count(len, hop);
        let padded = reflect_pad(wave.samples(), self.margin, frames * hop + self.margin);

        let mut data = Array2::zeros((frames, self.params.n_bins));
        for t in 0..frames {
            let center = self.margin + t * hop;
            for (k, kernel) in self.kernels.iter().enumerate() {
                let start = center - kernel.center;
                let seg = &padded[start..start + kernel.re.len()];
                let (mut re, mut im) = (0.0, 0.0);
                for ((s, kr), ki) in seg.iter().zip(&kernel.re).zip(&kernel.im) {
                    re += s * kr;
                    im += s * ki;
                }
                data[[t, k]] = Complex64::new(re, im);
            }
        }
        ComplexSpectrogram::new(
            data,
            TransformParams::Cqt(self.params),
            wave.sample_rate(),
            len,
        )
    }
}

pub fn cqt(wave: &Waveform, params: &CqtParams) -> Result<ComplexSpectrogram> {
    Cqt::new(*params)?.analyze(wave)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::sine;

    #[test]
    fn four_seconds_default_shape() {
        let w = sine(440.0, 0.5, 64000, 16000);
        let s = cqt(&w, &CqtParams::default()).unwrap();
        assert_eq!(s.data().dim(), (250, 336));
    }

    #[test]
    fn rejects_wrong_rate_and_empty() {
        let p = CqtParams::default();
        assert!(cqt(&sine(440.0, 0.5, 100, 8000), &p).is_err());
        let empty = Waveform::new(vec![], 16000).unwrap();
        assert!(matches!(cqt(&empty, &p), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bin_centred_sine_has_half_amplitude() {
        let p = CqtParams::default();
        let f = p.center_freq(200);
        let w = sine(f, 0.8, 16000, 16000);
        let s = cqt(&w, &p).unwrap();
        let mag = s.data()[[30, 200]].norm();
        assert!((mag - 0.4).abs() < 1e-3, "{mag}");
    }

    #[test]
    fn short_signals_are_padded_by_reflection() {
        let w = sine(1000.0, 0.5, 10, 16000);
        let s = cqt(&w, &CqtParams::default()).unwrap();
        assert_eq!(s.frames(), 1);
        assert!(s.data().iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    }
}
