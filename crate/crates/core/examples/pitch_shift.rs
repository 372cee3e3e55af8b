//! Transposes a constant-Q spectrogram by bin translation and compares it
//! with the analysis of a truly transposed tone.

use std::f64::consts::PI;

use timbre::musical::pitch_shift_cqt;
use timbre::signal::{harmonic_tone, transpose};
use timbre::tf::{cqt, log_magnitude, CqtParams, LogMagSpectrogram, DEFAULT_FLOOR};
use timbre::Waveform;

/// Two-second six-partial tone with 50 ms raised-cosine fades. Hard edges
/// would smear a click across the long low-frequency kernels.
fn analyse(f0: f64) -> timbre::Result<LogMagSpectrogram> {
    let tone = harmonic_tone(f0, 5, 0.7, 0.3, 32000, 16000);
    let n = tone.len();
    let fade = 800;
    let enveloped = tone
        .samples()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let e = i.min(n - 1 - i);
            if e < fade {
                x * (0.5 - 0.5 * (PI * e as f64 / fade as f64).cos())
            } else {
                *x
            }
        })
        .collect();
    log_magnitude(&cqt(&Waveform::new(enveloped, 16000)?, &CqtParams::default())?, DEFAULT_FLOOR)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn main() -> timbre::Result<()> {
    let base_f0 = 196.0;
    let base = analyse(base_f0)?;
    for semitones in [-12, -4, -1, 1, 4, 12] {
        let shifted = pitch_shift_cqt(&base, semitones)?;
        let truth = analyse(transpose(base_f0, semitones as f64))?;
        let r = correlation(
            shifted.data().as_slice().unwrap(),
            truth.data().as_slice().unwrap(),
        );
        println!("{semitones:+3} semitones: correlation {r:.4}");
    }
    Ok(())
}
