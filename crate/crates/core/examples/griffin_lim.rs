//! Rebuilds a tone from its STFT magnitude alone and reports how the
//! spectral error falls with each iteration.

use timbre::musical::detect_f0;
use timbre::phase::{griffin_lim, GriffinLimConfig, MagnitudeInput};
use timbre::signal::harmonic_tone;
use timbre::tf::{log_magnitude, stft, StftParams, DEFAULT_FLOOR};

fn main() -> timbre::Result<()> {
    let tone = harmonic_tone(330.0, 4, 0.6, 0.4, 16000, 16000);
    let spec = log_magnitude(&stft(&tone, &StftParams::default())?, DEFAULT_FLOOR)?;
    let cfg = GriffinLimConfig {
        iterations: 100,
        seed: 3,
        ..GriffinLimConfig::default()
    };
    let out = griffin_lim(MagnitudeInput::Log(&spec), &cfg)?;
    for (i, e) in out.mse.iter().enumerate().step_by(10) {
        println!("iteration {i:3}  error {e:.3e}");
    }
    let search = (100.0, 2000.0);
    println!(
        "f0: source {:.2} Hz, reconstruction {:.2} Hz",
        detect_f0(&tone, search)?,
        detect_f0(&out.waveform, search)?
    );
    Ok(())
}
