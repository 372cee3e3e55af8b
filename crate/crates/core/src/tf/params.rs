use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::DEFAULT_SAMPLE_RATE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowKind {
    HannPeriodic,
}

/// Short-time Fourier transform configuration. `n_bins` is always
/// `window_len / 2 + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftParams {
    window_len: usize,
    hop: usize,
    window: WindowKind,
}

impl StftParams {
    pub fn new(window_len: usize, hop: usize) -> Result<Self> {
        if window_len < 2 {
            return Err(Error::invalid("window length must be at least 2"));
        }
        if hop == 0 || hop > window_len {
            return Err(Error::invalid(format!(
                "hop must be in 1..={window_len}, got {hop}"
            )));
        }
        Ok(Self {
            window_len,
            hop,
            window: WindowKind::HannPeriodic,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn n_bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    pub fn window_kind(&self) -> WindowKind {
        self.window
    }
}

impl Default for StftParams {
    /// 672-sample Hann window, 256-sample (16 ms) hop: 337 bins.
    fn default() -> Self {
        Self {
            window_len: 672,
            hop: 256,
            window: WindowKind::HannPeriodic,
        }
    }
}

/// Constant-Q transform configuration.
///
/// Bin `k` (0-based) is centred on `f_min * 2^(k / bins_per_octave)`. The
/// analysis kernel of each bin spans `Q` cycles of its centre frequency, where
/// `Q = gamma / (2^(1/b) - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqtParams {
    pub f_min: f64,
    pub bins_per_octave: usize,
    pub n_bins: usize,
    pub hop: usize,
    pub gamma: f64,
    pub sample_rate: u32,
}

impl Default for CqtParams {
    /// C1 (32.70 Hz) upward, 48 bins per octave over seven octaves, 16 ms hop
    /// at 16 kHz, gamma 0.8.
    fn default() -> Self {
        Self {
            f_min: 32.70,
            bins_per_octave: 48,
            n_bins: 336,
            hop: 256,
            gamma: 0.8,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl CqtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_min.is_finite() && self.f_min > 0.0) {
            return Err(Error::invalid("f_min must be positive"));
        }
        if self.bins_per_octave == 0 || self.n_bins == 0 || self.hop == 0 {
            return Err(Error::invalid(
                "bins_per_octave, n_bins and hop must be positive",
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let top = self.center_freq(self.n_bins - 1);
        let nyquist = self.sample_rate as f64 / 2.0;
        if top >= nyquist {
            return Err(Error::invalid(format!(
                "top bin {top:.2} Hz is at or above Nyquist ({nyquist} Hz)"
            )));
        }
        Ok(())
    }

    pub fn center_freq(&self, bin: usize) -> f64 {
        self.f_min * 2f64.powf(bin as f64 / self.bins_per_octave as f64)
    }

    /// Effective quality factor, `gamma / (2^(1/b) - 1)`.
    pub fn q(&self) -> f64 {
        self.gamma / (2f64.powf(1.0 / self.bins_per_octave as f64) - 1.0)
    }

    /// Kernel length in samples for `bin`: `Q` periods of its centre frequency.
    pub fn kernel_len(&self, bin: usize) -> usize {
        let len = self.q() * self.sample_rate as f64 / self.center_freq(bin);
        (len.ceil() as usize).max(1)
    }

    /// Bins per equal-tempered semitone, when that is an integer.
    pub fn bins_per_semitone(&self) -> Option<usize> {
        (self.bins_per_octave % 12 == 0).then_some(self.bins_per_octave / 12)
    }
}

/// Which transform produced a spectrogram, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransformParams {
    Stft(StftParams),
    Cqt(CqtParams),
}

impl TransformParams {
    pub fn hop(&self) -> usize {
        match self {
            TransformParams::Stft(p) => p.hop(),
            TransformParams::Cqt(p) => p.hop,
        }
    }

    pub fn n_bins(&self) -> usize {
        match self {
            TransformParams::Stft(p) => p.n_bins(),
            TransformParams::Cqt(p) => p.n_bins,
        }
    }

    pub fn repr(&self) -> Repr {
        match self {
            TransformParams::Stft(_) => Repr::Stft,
            TransformParams::Cqt(_) => Repr::Cqt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Repr {
    Stft,
    Cqt,
}
