//! Short-time Fourier transform with centred, reflect-padded frames and its
//! least-squares inverse.
//!
//! Frame `t` is centred on sample `t * hop`, so a signal of `len` samples has
//! `ceil(len / hop)` frames. Frames reaching past either end read the signal
//! mirrored about its end samples.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::pad::reflect_index;
use super::params::{StftParams, TransformParams};
use super::spectrogram::ComplexSpectrogram;
use super::window::hann_periodic;
use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Window-power floor guarding the least-squares division.
const WINDOW_POWER_FLOOR: f64 = 1e-8;

pub(crate) fn frame_count(len: usize, hop: usize) -> usize {
    len.div_ceil(hop)
}

/// Reusable forward/inverse transform with cached FFT plans and window.
pub struct Stft {
    params: StftParams,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Stft {
    pub fn new(params: StftParams) -> Self {
        let mut planner = FftPlanner::new();
        let n = params.window_len();
        Self {
            params,
            window: hann_periodic(n),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn params(&self) -> &StftParams {
        &self.params
    }

    pub fn analyze(&self, wave: &Waveform) -> Result<ComplexSpectrogram> {
        if wave.is_empty() {
            return Err(Error::invalid("cannot transform an empty waveform"));
        }
        let x = wave.samples();
        let len = x.len();
        let n = self.params.window_len();
        let hop = self.params.hop();
        let half = (n / 2) as isize;
        let frames = frame_count(len, hop);
        let bins = self.params.n_bins();

        let mut data = Array2::zeros((frames, bins));
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for t in 0..frames {
            let start = (t * hop) as isize - half;
            for (m, slot) in buf.iter_mut().enumerate() {
                let s = x[reflect_index(start + m as isize, len)];
                *slot = Complex64::new(s * self.window[m], 0.0);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..bins {
                data[[t, k]] = buf[k];
            }
        }
        ComplexSpectrogram::new(
            data,
            TransformParams::Stft(self.params),
            wave.sample_rate(),
            len,
        )
    }

    /// Least-squares inverse. The result minimises the squared distance
    /// between its own STFT (full two-sided spectrum) and `spec`.
    pub fn synthesize(&self, spec: &ComplexSpectrogram) -> Result<Waveform> {
        match spec.params() {
            TransformParams::Stft(p) if *p == self.params => {}
            TransformParams::Stft(p) => {
                return Err(Error::invalid(format!(
                    "spectrogram was produced with {p:?}, transform configured with {:?}",
                    self.params
                )))
            }
            TransformParams::Cqt(_) => {
                return Err(Error::UnsupportedRepresentation(
                    "least-squares inverse is only defined for STFT spectrograms".into(),
                ))
            }
        }
        let len = spec.signal_len();
        let n = self.params.window_len();
        let hop = self.params.hop();
        let half = (n / 2) as isize;
        let bins = self.params.n_bins();

        let mut num = vec![0.0; len];
        let mut den = vec![0.0; len];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        let scale = 1.0 / n as f64;
        for (t, row) in spec.data().rows().into_iter().enumerate() {
            // Hermitian extension of the one-sided spectrum
            for k in 0..bins {
                buf[k] = row[k];
            }
            for k in bins..n {
                buf[k] = row[n - k].conj();
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = (t * hop) as isize - half;
            for m in 0..n {
                // Padded samples fold back onto the sample they mirror.
                let i = reflect_index(start + m as isize, len);
                let w = self.window[m];
                num[i] += w * buf[m].re * scale;
                den[i] += w * w;
            }
        }
        let samples = num
            .into_iter()
            .zip(den)
            .map(|(a, d)| a / d.max(WINDOW_POWER_FLOOR))
            .collect();
        Waveform::new(samples, spec.sample_rate())
    }
}

pub fn stft(wave: &Waveform, params: &StftParams) -> Result<ComplexSpectrogram> {
    Stft::new(*params).analyze(wave)
}

pub fn istft_ls(spec: &ComplexSpectrogram) -> Result<Waveform> {
    match spec.params() {
        TransformParams::Stft(p) => Stft::new(*p).synthesize(spec),
        TransformParams::Cqt(_) => Err(Error::UnsupportedRepresentation(
            "least-squares inverse is only defined for STFT spectrograms".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn noise(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 16000).unwrap()
    }

    /// Plain DFT of one reflect-padded, windowed frame.
    fn dft_frame(x: &[f64], center: usize, n: usize, bin: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..n {
            let idx = center as isize - (n / 2) as isize + m as isize;
            let s = x[reflect_index(idx, x.len())];
            let w = 0.5 * (1.0 - (2.0 * PI * m as f64 / n as f64).cos());
            let ang = -2.0 * PI * (bin * m) as f64 / n as f64;
            acc += Complex64::from_polar(s * w, ang);
        }
        acc
    }

    #[test]
    fn default_shape_for_four_seconds() {
        let s = stft(&noise(64000, 1), &StftParams::default()).unwrap();
        assert_eq!(s.data().dim(), (250, 337));
    }

    #[test]
    fn matches_direct_dft() {
        let w = noise(3000, 2);
        let p = StftParams::default();
        let s = stft(&w, &p).unwrap();
        for (t, k) in [(0, 0), (3, 17), (5, 336), (11, 100)] {
            let expected = dft_frame(w.samples(), t * 256, 672, k);
            assert!((s.data()[[t, k]] - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_input_gives_zero_magnitude() {
        let w = Waveform::new(vec![0.0; 1000], 16000).unwrap();
        let s = stft(&w, &StftParams::default()).unwrap();
        assert!(s.magnitude().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn bin_centred_sine_peaks_at_its_bin() {
        let bin = 30;
        let freq = bin as f64 * 16000.0 / 672.0;
        let w = crate::signal::sine(freq, 0.5, 8000, 16000);
        let s = stft(&w, &StftParams::default()).unwrap();
        let mag = s.magnitude();
        let row = mag.row(10);
        let best = crate::tf::spectrogram::argmax(row.iter().copied());
        assert_eq!(best, bin);
        let oracle = dft_frame(w.samples(), 10 * 256, 672, bin).norm();
        assert!((row[bin] - oracle).abs() < 1e-9);
    }

    #[test]
    fn roundtrip_reconstructs_noise() {
        let w = noise(16000, 3);
        let s = stft(&w, &StftParams::default()).unwrap();
        let y = istft_ls(&s).unwrap();
        assert_eq!(y.len(), w.len());
        let err = w
            .samples()
            .iter()
            .zip(y.samples())
            .skip(672)
            .take(16000 - 2 * 672)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "max error {err}");
    }

    #[test]
    fn roundtrip_is_exact_at_edges_and_odd_lengths() {
        for len in [1, 5, 300, 1001] {
            let w = noise(len, len as u64);
            let y = istft_ls(&stft(&w, &StftParams::default()).unwrap()).unwrap();
            let err = w
                .samples()
                .iter()
                .zip(y.samples())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-9, "len {len}: {err}");
        }
    }

    #[test]
    fn inverse_is_linear() {
        let s = stft(&noise(4000, 4), &StftParams::default()).unwrap();
        let y = istft_ls(&s).unwrap();
        let scaled = s.with_data(s.data().mapv(|c| c * 2.5)).unwrap();
        let y2 = istft_ls(&scaled).unwrap();
        for (a, b) in y.samples().iter().zip(y2.samples()) {
            assert!((2.5 * a - b).abs() < 1e-12);
        }
        let zero = s.with_data(Array2::zeros(s.data().dim())).unwrap();
        assert!(istft_ls(&zero).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_input_rejected() {
        let w = Waveform::new(vec![], 16000).unwrap();
        assert!(matches!(stft(&w, &StftParams::default()), Err(Error::InvalidArgument(_))));
    }
}
