//! Beam search on a deterministic two-tone synthesizer: every block of audio
//! is one of two sines, and the search has to recover the block sequence of a
//! target spectrogram.

use timbre::beam::{beam_synthesize, BeamConfig, BranchingTones, Probe, Synthesizer};
use timbre::musical::ConditioningSchedule;
use timbre::tf::{cqt, log_magnitude, CqtParams, DEFAULT_FLOOR};
use timbre::Waveform;

fn main() -> timbre::Result<()> {
    let synth = BranchingTones {
        block_len: 1024,
        freqs: [600.0, 1100.0],
        amplitude: 0.5,
        sample_rate: 16000,
    };
    let params = CqtParams {
        f_min: 500.0,
        bins_per_octave: 12,
        n_bins: 24,
        ..CqtParams::default()
    };

    // Target: blocks low, high, high, low, high, low, low, high.
    let pattern = [0usize, 1, 1, 0, 1, 0, 0, 1];
    let mut state = synth.start()?;
    let mut target_audio = Vec::new();
    for (i, &bit) in pattern.iter().enumerate() {
        let probe = Probe { iteration: i, index: bit, seed: 0 };
        target_audio.extend(synth.extend(&mut state, synth.block_len, probe)?);
    }
    let target = log_magnitude(&cqt(&Waveform::new(target_audio, 16000)?, &params)?, DEFAULT_FLOOR)?;
    let schedule = ConditioningSchedule {
        frames: target.frames(),
        samples_per_frame: params.hop,
    };

    for width in [1, 2, 4, 8] {
        let cfg = BeamConfig {
            beam_width: width,
            step: 1024,
            lookahead: 1024,
            seed: 0,
        };
        let out = beam_synthesize(&target, &schedule, &synth, &cfg)?;
        let picks: Vec<usize> = out.iterations.iter().map(|it| it.chosen).collect();
        println!("width {width}: score {:10.2}  probes chosen {picks:?}", out.final_score);
    }
    Ok(())
}
