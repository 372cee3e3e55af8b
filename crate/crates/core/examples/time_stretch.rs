//! Tempo change by holding each conditioning frame for more or fewer
//! samples; pitch content is untouched.

use timbre::musical::retime_conditioning;
use timbre::signal::sine;
use timbre::tf::{cqt, log_magnitude, CqtParams, DEFAULT_FLOOR};
use timbre::wavenet::prepare_conditioning;

fn main() -> timbre::Result<()> {
    let wave = sine(440.0, 0.5, 64000, 16000);
    let spec = log_magnitude(&cqt(&wave, &CqtParams::default())?, DEFAULT_FLOOR)?;
    for stretch in [0.5, 0.75, 1.0, 1.5, 2.0] {
        let schedule = retime_conditioning(&spec, stretch)?;
        let cond = prepare_conditioning(&spec, 2.0, &schedule)?;
        println!(
            "stretch {stretch:4}: {} samples/frame, {} samples ({:.2} s), conditioning rows {}",
            schedule.samples_per_frame,
            schedule.total_samples(),
            schedule.total_samples() as f64 / 16000.0,
            cond.len()
        );
    }
    Ok(())
}
