//! Pitch and tempo manipulation in the constant-Q domain, plus a
//! fundamental-frequency estimator used to check the results.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::tf::{LogMagSpectrogram, TransformParams};

/// Translates a log-magnitude CQT along the frequency axis by whole
/// semitones. Vacated bins are filled with the silence value `ln(floor)`.
pub fn pitch_shift_cqt(spec: &LogMagSpectrogram, semitones: i32) -> Result<LogMagSpectrogram> {
    let TransformParams::Cqt(params) = spec.params() else {
        return Err(Error::UnsupportedRepresentation(
            "pitch shifting by translation needs a CQT spectrogram".into(),
        ));
    };
    let per_semitone = params.bins_per_semitone().ok_or_else(|| {
        Error::invalid(format!(
            "bins per octave ({}) is not a multiple of 12",
            params.bins_per_octave
        ))
    })?;
    let shift = semitones as i64 * per_semitone as i64;
    let bins = spec.bins() as i64;
    if shift.abs() >= bins {
        return Err(Error::invalid(format!(
            "shift of {semitones} semitones ({shift} bins) exceeds the {bins}-bin range"
        )));
    }
    let fill = spec.silence();
    let src = spec.data();
    let out = Array2::from_shape_fn(src.dim(), |(t, k)| {
        let from = k as i64 - shift;
        if (0..bins).contains(&from) {
            src[[t, from as usize]]
        } else {
            fill
        }
    });
    Ok(spec.with_data_and_state(out, spec.state()))
}

/// How many waveform samples each conditioning frame is held for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditioningSchedule {
    pub frames: usize,
    pub samples_per_frame: usize,
}

impl ConditioningSchedule {
    /// One frame per analysis hop.
    pub fn native(spec: &LogMagSpectrogram) -> Self {
        Self {
            frames: spec.frames(),
            samples_per_frame: spec.params().hop(),
        }
    }

    pub fn total_samples(&self) -> usize {
        self.frames * self.samples_per_frame
    }

    /// Frame that sample `n` is conditioned on.
    pub fn frame_of(&self, n: usize) -> usize {
        n / self.samples_per_frame
    }
}

pub const MIN_STRETCH: f64 = 0.25;
pub const MAX_STRETCH: f64 = 4.0;

/// Changes tempo by changing how many samples are generated per frame:
/// `round(hop * stretch)`.
pub fn retime_conditioning(spec: &LogMagSpectrogram, stretch: f64) -> Result<ConditioningSchedule> {
    if !(MIN_STRETCH..=MAX_STRETCH).contains(&stretch) {
        return Err(Error::invalid(format!(
            "stretch must lie in [{MIN_STRETCH}, {MAX_STRETCH}], got {stretch}"
        )));
    }
    let samples_per_frame = (spec.params().hop() as f64 * stretch).round() as usize;
    Ok(ConditioningSchedule {
        frames: spec.frames(),
        samples_per_frame,
    })
}

/// Minimum peak amplitude for [`detect_f0`].
pub const SILENCE_PEAK: f64 = 1e-4;

/// Fundamental-frequency estimate from the normalised autocorrelation.
///
/// The first local maximum within `0.9` of the global maximum over the lag
/// range `[sr/f_hi, sr/f_lo]` is taken (which avoids locking onto multiples of
/// the period), then refined by parabolic interpolation.
pub fn detect_f0(wave: &Waveform, search_range: (f64, f64)) -> Result<f64> {
    let (f_lo, f_hi) = search_range;
    let sr = wave.sample_rate() as f64;
    if !(f_lo > 0.0 && f_hi > f_lo && f_hi < sr / 2.0) {
        return Err(Error::invalid(format!(
            "search range [{f_lo}, {f_hi}] Hz is not valid at {sr} Hz"
        )));
    }
    if wave.peak() <= SILENCE_PEAK {
        return Err(Error::NoSignal(format!(
            "peak amplitude {} is below {SILENCE_PEAK}",
            wave.peak()
        )));
    }
    let x = wave.samples();
    let min_len = (4.0 * sr / f_lo).ceil() as usize;
    if x.len() < min_len {
        return Err(Error::invalid(format!(
            "need at least {min_len} samples (four periods of {f_lo} Hz), got {}",
            x.len()
        )));
    }
    let lag_lo = ((sr / f_hi).floor() as usize).max(1);
    let lag_hi = (sr / f_lo).ceil() as usize;

    // Prefix energies make each lag's normalisation O(1).
    let mut energy = Vec::with_capacity(x.len() + 1);
    energy.push(0.0);
    for v in x {
        energy.push(energy.last().unwrap() + v * v);
    }
    let n = x.len();
    let acf = |lag: usize| -> f64 {
        if lag == 0 || lag >= n {
            return 0.0;
        }
        let dot: f64 = x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
        let e0 = energy[n - lag];
        let e1 = energy[n] - energy[lag];
        let den = (e0 * e1).sqrt();
        if den > 0.0 {
            dot / den
        } else {
            0.0
        }
    };
    let lo = lag_lo.saturating_sub(1).max(1);
    let hi = (lag_hi + 1).min(n - 1);
    let r: Vec<f64> = (lo..=hi).map(acf).collect();
    let at = |lag: usize| r[lag - lo];

    let best = (lag_lo..=lag_hi.min(hi))
        .map(at)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(best > 0.0) {
        return Err(Error::NoSignal("no periodicity in the search range".into()));
    }
    let threshold = 0.9 * best;
    let lag = (lag_lo..=lag_hi.min(hi))
        .find(|&l| {
            let v = at(l);
            v >= threshold && (l == lo || v >= at(l - 1)) && (l == hi || v >= at(l + 1))
        })
        .unwrap_or(lag_lo);

    let mut refined = lag as f64;
    if lag > lo && lag < hi {
        let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
        let den = a - 2.0 * b + c;
        if den.abs() > 1e-12 {
            refined += (0.5 * (a - c) / den).clamp(-0.5, 0.5);
        }
    }
    Ok(sr / refined)
}
