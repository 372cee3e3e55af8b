//! Constant-Q analysis of a harmonic tone, written out as a rainbowgram.
//!
//! Usage: `cqt_rainbowgram [out.png]`

use timbre::io::write_rainbowgram;
use timbre::signal::harmonic_tone;
use timbre::tf::{cqt, log_magnitude, CqtParams, DEFAULT_FLOOR};

fn main() -> timbre::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "rainbowgram.png".into());
    let params = CqtParams::default();
    let tone = harmonic_tone(220.0, 5, 0.7, 0.3, 32000, params.sample_rate);
    let spec = cqt(&tone, &params)?;
    let logmag = log_magnitude(&spec, DEFAULT_FLOOR)?;

    println!("{} frames x {} bins, Q = {:.2}", spec.frames(), spec.bins(), params.q());
    let frame = spec.frames() / 2;
    let row = logmag.data().row(frame);
    let mut peaks: Vec<usize> = (1..spec.bins() - 1)
        .filter(|&k| row[k] > row[k - 1] && row[k] >= row[k + 1] && row[k] > -4.0)
        .collect();
    peaks.sort();
    for k in peaks {
        println!("peak bin {k:3}  {:8.2} Hz  {:6.2}", params.center_freq(k), row[k]);
    }
    write_rainbowgram(&out, &spec, DEFAULT_FLOOR)?;
    println!("wrote {out}");
    Ok(())
}
