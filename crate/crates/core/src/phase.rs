//! Griffin-Lim phase reconstruction for STFT magnitude spectrograms.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::tf::{ComplexSpectrogram, LogMagSpectrogram, Stft, StftParams, TransformParams};

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseInit {
    /// Independent `U[-π, π)` draws per cell from the config seed.
    RandomUniform,
    Zero,
    /// Caller-supplied phase grid (radians), same shape as the magnitude.
    Provided(Array2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GriffinLimConfig {
    pub iterations: usize,
    pub phase_init: PhaseInit,
    pub seed: u64,
}

impl Default for GriffinLimConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            phase_init: PhaseInit::RandomUniform,
            seed: 0,
        }
    }
}

/// Target magnitude for reconstruction.
#[derive(Debug, Clone, Copy)]
pub enum MagnitudeInput<'a> {
    /// Log-magnitude STFT; exponentiated and the floor removed first.
    Log(&'a LogMagSpectrogram),
    /// Linear magnitude grid with the STFT configuration that produced it.
    Linear {
        magnitude: &'a Array2<f64>,
        params: StftParams,
        sample_rate: u32,
    },
}

#[derive(Debug, Clone)]
pub struct GriffinLimOutput {
    pub waveform: Waveform,
    /// `mse[i]` is the inconsistency after iteration `i`; `mse[0]` is the
    /// initial estimate's. Length `iterations + 1`.
    pub mse: Vec<f64>,
}

/// Runs Griffin-Lim: the magnitude is held fixed while the phase is replaced
/// by that of the STFT of the current least-squares estimate.
///
/// The reported error is the mean squared difference between the target
/// magnitude and `|STFT(x_i)|` over the full two-sided spectrum (interior
/// bins counted twice, DC and Nyquist once), which is the quantity each
/// iteration cannot increase.
pub fn griffin_lim(input: MagnitudeInput<'_>, cfg: &GriffinLimConfig) -> Result<GriffinLimOutput> {
    let (magnitude, params, sample_rate) = match input {
        MagnitudeInput::Log(spec) => {
            let TransformParams::Stft(p) = spec.params() else {
                return Err(Error::UnsupportedRepresentation(
                    "Griffin-Lim needs an STFT magnitude".into(),
                ));
            };
            (spec.linear_magnitude()?, *p, spec.sample_rate())
        }
        MagnitudeInput::Linear {
            magnitude,
            params,
            sample_rate,
        } => {
            if magnitude.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return Err(Error::invalid(
                    "magnitudes must be finite and non-negative",
                ));
            }
            (magnitude.clone(), params, sample_rate)
        }
    };
    let (frames, bins) = magnitude.dim();
    if bins != params.n_bins() {
        return Err(Error::ShapeMismatch(format!(
            "{bins} bins but STFT parameters give {}",
            params.n_bins()
        )));
    }
    let phase = match &cfg.phase_init {
        PhaseInit::Zero => Array2::zeros((frames, bins)),
        PhaseInit::RandomUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Array2::from_shape_simple_fn((frames, bins), || rng.random_range(-PI..PI))
        }
        PhaseInit::Provided(p) => {
            if p.dim() != magnitude.dim() {
                return Err(Error::ShapeMismatch(format!(
                    "phase grid {:?} does not match magnitude {:?}",
                    p.dim(),
                    magnitude.dim()
                )));
            }
            p.clone()
        }
    };

    let stft = Stft::new(params);
    let tparams = TransformParams::Stft(params);
    let signal_len = frames * params.hop();
    let weights = bin_weights(params);
    let mut estimate = Zip::from(&magnitude)
        .and(&phase)
        .map_collect(|&m, &p| Complex64::from_polar(m, p));

    let mut mse = Vec::with_capacity(cfg.iterations + 1);
    let mut wave;
    let mut i = 0;
    loop {
        let spec = ComplexSpectrogram::new(estimate, tparams, sample_rate, signal_len)?;
        wave = stft.synthesize(&spec)?;
        let rebuilt = stft.analyze(&wave)?;
        mse.push(inconsistency(&magnitude, rebuilt.data(), &weights, params));
        if i == cfg.iterations {
            break;
        }
        estimate = Zip::from(&magnitude)
            .and(rebuilt.data())
            .map_collect(|&m, c| Complex64::from_polar(m, c.arg()));
        i += 1;
    }
    Ok(GriffinLimOutput { waveform: wave, mse })
}

fn bin_weights(params: StftParams) -> Vec<f64> {
    let n = params.window_len();
    (0..params.n_bins())
        .map(|k| if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 })
        .collect()
}

fn inconsistency(
    target: &Array2<f64>,
    actual: &Array2<Complex64>,
    weights: &[f64],
    params: StftParams,
) -> f64 {
    let mut total = 0.0;
    for (trow, arow) in target.rows().into_iter().zip(actual.rows()) {
        for ((m, c), w) in trow.iter().zip(arow.iter()).zip(weights) {
            let d = m - c.norm();
            total += w * d * d;
        }
    }
    total / (target.nrows() * params.window_len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::harmonic_tone;
    use crate::tf::{log_magnitude, stft, DEFAULT_FLOOR};

    fn tone_spec() -> ComplexSpectrogram {
        let w = harmonic_tone(330.0, 4, 0.6, 0.3, 16384, 16000);
        stft(&w, &StftParams::default()).unwrap()
    }

    #[test]
    fn true_phase_reconstructs_original() {
        let w = harmonic_tone(330.0, 4, 0.6, 0.3, 16384, 16000);
        let spec = stft(&w, &StftParams::default()).unwrap();
        let mag = spec.magnitude();
        let cfg = GriffinLimConfig {
            iterations: 0,
            phase_init: PhaseInit::Provided(spec.data().mapv(|c| c.arg())),
            seed: 0,
        };
        let out = griffin_lim(
            MagnitudeInput::Linear {
                magnitude: &mag,
                params: StftParams::default(),
                sample_rate: 16000,
            },
            &cfg,
        )
        .unwrap();
        let (num, den) = w
            .samples()
            .iter()
            .zip(out.waveform.samples())
            .skip(672)
            .take(16384 - 1344)
            .fold((0.0, 0.0), |(n, d), (a, b)| (n + (a - b).powi(2), d + a * a));
        assert!((num / den).sqrt() < 1e-3);
        assert_eq!(out.mse.len(), 1);
        assert!(out.mse[0] < 1e-8);
    }

    #[test]
    fn fixed_point_stays_put() {
        let spec = tone_spec();
        let mag = spec.magnitude();
        let cfg = GriffinLimConfig {
            iterations: 5,
            phase_init: PhaseInit::Provided(spec.data().mapv(|c| c.arg())),
            seed: 0,
        };
        let input = MagnitudeInput::Linear {
            magnitude: &mag,
            params: StftParams::default(),
            sample_rate: 16000,
        };
        let out = griffin_lim(input, &cfg).unwrap();
        assert!(out.mse.iter().all(|&e| e < 1e-8), "{:?}", out.mse);
    }

    #[test]
    fn zero_phase_baseline_is_plain_inverse() {
        let spec = tone_spec();
        let mag = spec.magnitude();
        let cfg = GriffinLimConfig {
            iterations: 0,
            phase_init: PhaseInit::Zero,
            seed: 0,
        };
        let out = griffin_lim(
            MagnitudeInput::Linear {
                magnitude: &mag,
                params: StftParams::default(),
                sample_rate: 16000,
            },
            &cfg,
        )
        .unwrap();
        let direct = crate::tf::istft_ls(
            &spec.with_data(mag.mapv(|m| Complex64::new(m, 0.0))).unwrap(),
        )
        .unwrap();
        assert_eq!(out.waveform.samples(), direct.samples());
    }

    #[test]
    fn random_init_reduces_error_monotonically_and_deterministically() {
        let lm = log_magnitude(&tone_spec(), DEFAULT_FLOOR).unwrap();
        let cfg = GriffinLimConfig {
            iterations: 20,
            ..GriffinLimConfig::default()
        };
        let a = griffin_lim(MagnitudeInput::Log(&lm), &cfg).unwrap();
        let b = griffin_lim(MagnitudeInput::Log(&lm), &cfg).unwrap();
        assert_eq!(a.waveform, b.waveform);
        assert!(a.mse[20] < a.mse[0]);
        for w in a.mse.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-7), "{:?}", a.mse);
        }
    }

    #[test]
    fn rejects_cqt_and_negative_input() {
        let w = harmonic_tone(330.0, 2, 0.6, 0.3, 2000, 16000);
        let c = crate::tf::cqt(&w, &crate::tf::CqtParams::default()).unwrap();
        let lm = log_magnitude(&c, DEFAULT_FLOOR).unwrap();
        assert!(matches!(
            griffin_lim(MagnitudeInput::Log(&lm), &GriffinLimConfig::default()),
            Err(Error::UnsupportedRepresentation(_))
        ));
        let neg = Array2::from_elem((3, 337), -1.0);
        let r = griffin_lim(
            MagnitudeInput::Linear {
                magnitude: &neg,
                params: StftParams::default(),
                sample_rate: 16000,
            },
            &GriffinLimConfig::default(),
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}
