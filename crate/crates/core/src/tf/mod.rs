//! Time-frequency analysis: STFT and its least-squares inverse, the
//! constant-Q transform, log-magnitude mapping and instantaneous frequency.

mod cqt;
mod pad;
mod params;
mod spectrogram;
mod stft;
mod window;

pub use cqt::{cqt, Cqt};
pub use params::{CqtParams, Repr, StftParams, TransformParams, WindowKind};
pub use spectrogram::{
    instantaneous_frequency, log_magnitude, wrap_phase, ComplexSpectrogram, LogMagSpectrogram,
    NormalizationState, DEFAULT_FLOOR,
};
pub use stft::{istft_ls, stft, Stft};
pub use window::hann_window;

pub(crate) use spectrogram::argmax;
