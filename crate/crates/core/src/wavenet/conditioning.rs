use std::sync::Arc;

use ndarray::{Array2, ArrayView1, Axis};

use super::real::Real;
use crate::error::{Error, Result};
use crate::musical::ConditioningSchedule;
use crate::tf::{LogMagSpectrogram, NormalizationState};

pub const DEFAULT_COND_SHIFT: f64 = 2.0;

/// Per-sample conditioning stored as distinct frames plus a sample→frame map
/// (nearest-neighbour upsampling without materialising repeated rows).
#[derive(Debug, Clone, PartialEq)]
pub struct Conditioning<F> {
    frames: Arc<Array2<F>>,
    index: Arc<[usize]>,
}

impl<F: Real> Conditioning<F> {
    pub fn new(frames: Array2<F>, index: Vec<usize>) -> Result<Self> {
        if index.is_empty() {
            return Err(Error::invalid("conditioning must cover at least one sample"));
        }
        if let Some(&bad) = index.iter().find(|&&f| f >= frames.nrows()) {
            return Err(Error::invalid(format!(
                "sample mapped to frame {bad} but only {} frames exist",
                frames.nrows()
            )));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("conditioning contains non-finite values"));
        }
        Ok(Self {
            frames: Arc::new(frames.as_standard_layout().into_owned()),
            index: index.into(),
        })
    }

    /// One row per sample.
    pub fn from_dense(rows: Array2<F>) -> Result<Self> {
        let n = rows.nrows();
        Self::new(rows, (0..n).collect())
    }

    /// Number of samples covered.
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.frames.ncols()
    }

    pub fn frames(&self) -> &Array2<F> {
        &self.frames
    }

    pub fn frame_index(&self) -> &[usize] {
        &self.index
    }

    pub fn frame_of(&self, t: usize) -> usize {
        self.index[t]
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, F> {
        self.frames.row(self.index[t])
    }

    pub fn to_dense(&self) -> Array2<F> {
        self.frames.select(Axis(0), &self.index)
    }

    pub fn mean(&self) -> f64 {
        let c = self.channels() as f64;
        let total: f64 = self
            .index
            .iter()
            .map(|&f| self.frames.row(f).iter().map(|v| v.f64()).sum::<f64>())
            .sum();
        total / (self.len() as f64 * c)
    }

    /// Time-reversed copy; frame data is shared.
    pub fn reversed(&self) -> Self {
        let index: Vec<usize> = self.index.iter().rev().copied().collect();
        Self {
            frames: self.frames.clone(),
            index: index.into(),
        }
    }

    /// Samples `start..end`.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::invalid(format!(
                "window {start}..{end} outside conditioning of length {}",
                self.len()
            )));
        }
        Ok(Self {
            frames: self.frames.clone(),
            index: self.index[start..end].into(),
        })
    }

    pub fn cast<G: Real>(&self) -> Conditioning<G> {
        Conditioning {
            frames: Arc::new(self.frames.mapv(|v| G::of(v.f64()))),
            index: self.index.clone(),
        }
    }
}

/// Adds `shift` to a raw log-magnitude spectrogram, marking it as
/// conditioning-ready.
pub fn shift_for_conditioning(spec: &LogMagSpectrogram, shift: f64) -> Result<LogMagSpectrogram> {
    spec.expect_state(NormalizationState::Raw)?;
    if !shift.is_finite() {
        return Err(Error::invalid("conditioning shift must be finite"));
    }
    Ok(spec.with_data_and_state(spec.data() + shift, NormalizationState::ConditioningShifted))
}

/// Shifted spectrogram frames held for `schedule.samples_per_frame` samples each.
pub fn prepare_conditioning(
    spec: &LogMagSpectrogram,
    shift: f64,
    schedule: &ConditioningSchedule,
) -> Result<Conditioning<f64>> {
    let shifted = shift_for_conditioning(spec, shift)?;
    if schedule.frames != spec.frames() || schedule.samples_per_frame == 0 {
        return Err(Error::invalid(format!(
            "schedule of {} frames × {} samples does not fit a {}-frame spectrogram",
            schedule.frames,
            schedule.samples_per_frame,
            spec.frames()
        )));
    }
    let index = (0..schedule.total_samples()).map(|t| schedule.frame_of(t)).collect();
    Conditioning::new(shifted.data().clone(), index)
}
