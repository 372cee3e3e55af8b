//! Overfits a small WaveNet to a short 440 Hz clip, then decodes it greedily
//! from its own conditioning and reports the pitch of the result.

use std::time::Instant;

use timbre::musical::{detect_f0, ConditioningSchedule};
use timbre::signal::sine;
use timbre::tf::{cqt, log_magnitude, CqtParams, DEFAULT_FLOOR};
use timbre::wavenet::{
    generate, prepare_conditioning, Direction, SamplingMode, TrainConfig, Trainer, TrainingClip, WaveNet,
    WaveNetConfig,
};

fn main() -> timbre::Result<()> {
    let steps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let wave = sine(440.0, 0.9, 2000, 16000);
    let spec = cqt(&wave, &CqtParams::default())?;
    let clip = TrainingClip::new(wave.samples().to_vec(), spec.magnitude(), 256, DEFAULT_FLOOR)?;

    let tc = TrainConfig {
        learning_rate: 1e-3,
        batch_size: 1,
        sample_length: 2000,
        augment: false,
        ..TrainConfig::default()
    };
    let cfg = WaveNetConfig::toy(10, 32, 336);
    let mut trainer = Trainer::new(WaveNet::<f32>::init(cfg, 0)?, tc.clone())?;
    let batch = vec![clip.example::<f32>(0, 2000, 1.0, tc.cond_shift, false)?];

    let start = Instant::now();
    let first = trainer.step(&batch)?;
    let mut last = first;
    for step in 2..=steps {
        last = trainer.step(&batch)?;
        if step % 50 == 0 {
            println!("step {step:4}  nll {last:.4}");
        }
    }
    println!(
        "nll {first:.3} -> {last:.3} ({:.1}% of initial) in {:.1?}",
        100.0 * last / first,
        start.elapsed()
    );

    let logmag = log_magnitude(&spec, DEFAULT_FLOOR)?;
    let cond = prepare_conditioning(&logmag, tc.cond_shift, &ConditioningSchedule::native(&logmag))?;
    let cond = cond.window(0, 2000)?.cast::<f32>();
    let out = generate(&trainer.net, &cond, SamplingMode::Greedy, Direction::Forward)?;
    let out = timbre::Waveform::new(out, 16000)?;
    println!("decoded f0 = {:.2} Hz", detect_f0(&out, (100.0, 1000.0))?);
    Ok(())
}
