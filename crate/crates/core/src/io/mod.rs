//! File formats: PCM16 WAV, the `.ttsg` spectrogram container and
//! rainbowgram PNG images.

mod rainbow;
mod ttsg;
mod wav;

pub use rainbow::{rainbowgram, write_rainbowgram};
pub use ttsg::{read_spectrogram, write_spectrogram, SpectrogramFile};
pub use wav::{read_wav, write_wav, WAV_SAMPLE_RATE};
