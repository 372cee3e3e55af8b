use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::params::{Repr, TransformParams};
use crate::error::{Error, Result};

/// Default magnitude floor added before taking the log.
pub const DEFAULT_FLOOR: f64 = 1e-5;

/// Frames × bins complex time-frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub(crate) data: Array2<Complex64>,
    pub(crate) params: TransformParams,
    pub(crate) sample_rate: u32,
    /// Length of the analysed signal; inverse transforms reconstruct this many
    /// samples.
    pub(crate) signal_len: usize,
}

impl ComplexSpectrogram {
    pub fn new(
        data: Array2<Complex64>,
        params: TransformParams,
        sample_rate: u32,
        signal_len: usize,
    ) -> Result<Self> {
        check_grid(data.dim(), &params)?;
        if data.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("spectrogram contains non-finite values"));
        }
        if signal_len == 0 {
            return Err(Error::invalid("signal length must be positive"));
        }
        Ok(Self {
            data,
            params,
            sample_rate,
            signal_len,
        })
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn params(&self) -> &TransformParams {
        &self.params
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn bins(&self) -> usize {
        self.data.ncols()
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.data.mapv(|c| c.norm())
    }

    /// Same grid with every entry replaced.
    pub fn with_data(&self, data: Array2<Complex64>) -> Result<Self> {
        if data.dim() != self.data.dim() {
            return Err(Error::ShapeMismatch(format!(
                "expected {:?}, got {:?}",
                self.data.dim(),
                data.dim()
            )));
        }
        Ok(Self {
            data,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationState {
    Raw,
    DomainNormalized,
    ConditioningShifted,
}

impl NormalizationState {
    pub fn code(self) -> u8 {
        match self {
            NormalizationState::Raw => 0,
            NormalizationState::DomainNormalized => 1,
            NormalizationState::ConditioningShifted => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(NormalizationState::Raw),
            1 => Some(NormalizationState::DomainNormalized),
            2 => Some(NormalizationState::ConditioningShifted),
            _ => None,
        }
    }
}

/// Natural-log magnitude grid, `ln(|X| + floor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMagSpectrogram {
    pub(crate) data: Array2<f64>,
    pub(crate) params: TransformParams,
    pub(crate) sample_rate: u32,
    pub(crate) floor: f64,
    pub(crate) state: NormalizationState,
}

impl LogMagSpectrogram {
    pub fn new(
        data: Array2<f64>,
        params: TransformParams,
        sample_rate: u32,
        floor: f64,
        state: NormalizationState,
    ) -> Result<Self> {
        check_grid(data.dim(), &params)?;
        if !(floor > 0.0) {
            return Err(Error::invalid("magnitude floor must be positive"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("spectrogram contains non-finite values"));
        }
        Ok(Self {
            data,
            params,
            sample_rate,
            floor,
            state,
        })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn params(&self) -> &TransformParams {
        &self.params
    }

    pub fn repr(&self) -> Repr {
        self.params.repr()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Log-magnitude of silence, `ln(floor)`.
    pub fn silence(&self) -> f64 {
        self.floor.ln()
    }

    pub fn state(&self) -> NormalizationState {
        self.state
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn bins(&self) -> usize {
        self.data.ncols()
    }

    pub(crate) fn with_data_and_state(&self, data: Array2<f64>, state: NormalizationState) -> Self {
        Self {
            data,
            state,
            ..self.clone()
        }
    }

    /// Linear magnitude, `exp(x) - floor` clamped at zero. Only meaningful
    /// for raw spectrograms.
    pub fn linear_magnitude(&self) -> Result<Array2<f64>> {
        self.expect_state(NormalizationState::Raw)?;
        Ok(self.data.mapv(|v| (v.exp() - self.floor).max(0.0)))
    }

    pub(crate) fn expect_state(&self, expected: NormalizationState) -> Result<()> {
        if self.state != expected {
            return Err(Error::WrongNormalizationState {
                expected,
                found: self.state,
            });
        }
        Ok(())
    }

    /// Per-frame index of the loudest bin.
    pub fn argmax_bins(&self) -> Vec<usize> {
        self.data
            .rows()
            .into_iter()
            .map(|row| argmax(row.iter().copied()))
            .collect()
    }
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn check_grid((frames, bins): (usize, usize), params: &TransformParams) -> Result<()> {
    if frames == 0 {
        return Err(Error::invalid("spectrogram needs at least one frame"));
    }
    if bins != params.n_bins() {
        return Err(Error::ShapeMismatch(format!(
            "{bins} bins but transform parameters specify {}",
            params.n_bins()
        )));
    }
    Ok(())
}

/// `ln(|X| + floor)` elementwise.
pub fn log_magnitude(spec: &ComplexSpectrogram, floor: f64) -> Result<LogMagSpectrogram> {
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::invalid(format!(
            "magnitude floor must be positive, got {floor}"
        )));
    }
    let data = spec.data.mapv(|c| (c.norm() + floor).ln());
    Ok(LogMagSpectrogram {
        data,
        params: spec.params,
        sample_rate: spec.sample_rate,
        floor,
        state: NormalizationState::Raw,
    })
}

/// Wraps an angle into `[-π, π)`.
#[inline]
pub fn wrap_phase(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Per-bin phase advance between consecutive frames, wrapped to `[-π, π)`.
/// Row 0 is zero. Together with [`log_magnitude`] this is the data behind a
/// rainbowgram.
pub fn instantaneous_frequency(spec: &ComplexSpectrogram) -> Result<Array2<f64>> {
    let (frames, bins) = spec.data.dim();
    if frames < 2 {
        return Err(Error::invalid(
            "instantaneous frequency needs at least two frames",
        ));
    }
    let phase = spec.data.mapv(|c| c.arg());
    let mut out = Array2::zeros((frames, bins));
    for t in 1..frames {
        for k in 0..bins {
            out[[t, k]] = wrap_phase(phase[[t, k]] - phase[[t - 1, k]]);
        }
    }
    Ok(out)
}
