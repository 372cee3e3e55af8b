pub mod beam;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod gan;
pub mod io;
pub mod musical;
pub mod phase;
pub mod signal;
pub mod tf;
pub mod wavenet;

pub use error::{Error, Result};
pub use signal::Waveform;
