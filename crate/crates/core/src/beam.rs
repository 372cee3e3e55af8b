//! Beam search over autoregressive synthesis, steering generated audio
//! towards a target constant-Q spectrogram.
//!
//! Each iteration forks `beam_width` probes from the committed prefix, runs
//! each for `step + lookahead` samples, scores the log-magnitude CQT of every
//! extension against the aligned target frames, and commits the first `step`
//! samples of the best probe.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::musical::ConditioningSchedule;
use crate::signal::Waveform;
use crate::tf::{log_magnitude, Cqt, CqtParams, LogMagSpectrogram, TransformParams};
use crate::wavenet::{Conditioning, GenerationStream, Real, SamplingMode, WaveNet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BeamConfig {
    pub beam_width: usize,
    /// Samples committed per iteration.
    pub step: usize,
    /// Extra samples each probe runs past the committed step before scoring.
    pub lookahead: usize,
    pub seed: u64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            beam_width: 8,
            step: 2048,
            lookahead: 2048,
            seed: 0,
        }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 || self.step == 0 {
            return Err(Error::invalid("beam width and step must be positive"));
        }
        Ok(())
    }
}

/// Identity of one probe, handed to the synthesizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Probe {
    pub iteration: usize,
    pub index: usize,
    pub seed: u64,
}

/// Seed of a probe: the run seed for probe 0, otherwise the run seed mixed
/// with a hash of `(iteration, index)`.
pub fn probe_seed(seed: u64, iteration: usize, index: usize) -> u64 {
    if index == 0 {
        return seed;
    }
    let key = ((iteration as u64) << 32) | index as u64;
    seed ^ ChaCha8Rng::seed_from_u64(key).next_u64()
}

/// An autoregressive generator whose state can be forked.
pub trait Synthesizer {
    type State: Clone;

    fn start(&self) -> Result<Self::State>;

    /// Appends `n` samples to `state` and returns them.
    fn extend(&self, state: &mut Self::State, n: usize, probe: Probe) -> Result<Vec<f64>>;
}

/// Scores of one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub committed: usize,
    pub extension: usize,
    pub scores: Vec<f64>,
    pub chosen: usize,
}

#[derive(Debug, Clone)]
pub struct BeamOutput {
    pub waveform: Waveform,
    /// Squared log-magnitude CQT error of the whole returned waveform.
    pub final_score: f64,
    pub iterations: Vec<IterationLog>,
    pub config: BeamConfig,
}

/// Squared error between the CQT of `audio` and the target frames starting
/// at `first_frame`, over the frames both cover.
fn region_score(cqt: &Cqt, target: &LogMagSpectrogram, audio: &[f64], first_frame: usize) -> Result<f64> {
    let wave = Waveform::new(audio.to_vec(), target.sample_rate())?;
    let spec = log_magnitude(&cqt.analyze(&wave)?, target.floor())?;
    let frames = spec.frames().min(target.frames().saturating_sub(first_frame));
    let mut total = 0.0;
    for f in 0..frames {
        for (a, b) in spec.data().row(f).iter().zip(target.data().row(first_frame + f)) {
            total += (a - b) * (a - b);
        }
    }
    Ok(total)
}

fn probe_context(err: Error, probe: Probe) -> Error {
    let ctx = |m: String| format!("probe {} of iteration {}: {m}", probe.index, probe.iteration);
    match err {
        Error::NumericFailure { position, detail } => Error::NumericFailure {
            position,
            detail: ctx(detail),
        },
        Error::InvalidArgument(m) => Error::InvalidArgument(ctx(m)),
        Error::InvalidWeights(m) => Error::InvalidWeights(ctx(m)),
        other => other,
    }
}

/// Analysis used for scoring: the target's CQT geometry with one frame per
/// scheduled `samples_per_frame`.
fn scoring_cqt(target: &LogMagSpectrogram, schedule: &ConditioningSchedule) -> Result<Cqt> {
    let params = match target.params() {
        TransformParams::Cqt(p) => p,
        TransformParams::Stft(_) => {
            return Err(Error::UnsupportedRepresentation(
                "beam search scores against a constant-Q target".into(),
            ))
        }
    };
    if schedule.frames != target.frames() {
        return Err(Error::invalid("schedule and target differ in frame count"));
    }
    Cqt::new(CqtParams {
        hop: schedule.samples_per_frame,
        ..*params
    })
}

pub fn beam_synthesize<S: Synthesizer>(
    target: &LogMagSpectrogram,
    schedule: &ConditioningSchedule,
    synth: &S,
    cfg: &BeamConfig,
) -> Result<BeamOutput> {
    cfg.validate()?;
    let cqt = scoring_cqt(target, schedule)?;
    let total = schedule.total_samples();
    let hop = schedule.samples_per_frame;
    let mut state = synth.start()?;
    let mut out = Vec::with_capacity(total);
    let mut iterations = Vec::new();

    if total < cfg.step {
        let probe = Probe {
            iteration: 0,
            index: 0,
            seed: cfg.seed,
        };
        out = synth.extend(&mut state, total, probe).map_err(|e| probe_context(e, probe))?;
    }
    let mut iteration = 0;
    while out.len() < total {
        let committed = out.len();
        let remaining = total - committed;
        let (commit, extension) = if remaining <= cfg.step {
            (remaining, remaining)
        } else {
            (cfg.step, (cfg.step + cfg.lookahead).min(remaining))
        };
        let first_frame = ((committed as f64) / hop as f64).round() as usize;
        let mut best: Option<(f64, usize, S::State, Vec<f64>)> = None;
        let mut scores = Vec::with_capacity(cfg.beam_width);
        for index in 0..cfg.beam_width {
            let probe = Probe {
                iteration,
                index,
                seed: probe_seed(cfg.seed, iteration, index),
            };
            let mut fork = state.clone();
            let mut audio = synth.extend(&mut fork, commit, probe).map_err(|e| probe_context(e, probe))?;
            let at_commit = fork.clone();
            if extension > commit {
                let more = synth
                    .extend(&mut fork, extension - commit, probe)
                    .map_err(|e| probe_context(e, probe))?;
                audio.extend(more);
            }
            let score = region_score(&cqt, target, &audio, first_frame)?;
            if !score.is_finite() {
                return Err(probe_context(Error::numeric(None, "probe score is not finite"), probe));
            }
            scores.push(score);
            if best.as_ref().is_none_or(|b| score < b.0) {
                audio.truncate(commit);
                best = Some((score, index, at_commit, audio));
            }
        }
        let (_, chosen, next_state, audio) = best.expect("beam width is positive");
        log::debug!("beam iteration {iteration}: chose probe {chosen} of {}", cfg.beam_width);
        iterations.push(IterationLog {
            iteration,
            committed,
            extension,
            scores,
            chosen,
        });
        state = next_state;
        out.extend(audio);
        iteration += 1;
    }

    let final_score = region_score(&Cqt::new(*cqt.params())?, target, &out, 0)?;
    Ok(BeamOutput {
        waveform: Waveform::new(out, target.sample_rate())?,
        final_score,
        iterations,
        config: *cfg,
    })
}

/// WaveNet generation as a beam-search synthesizer.
#[derive(Debug, Clone)]
pub struct WaveNetSynthesizer<'a, F> {
    pub net: &'a WaveNet<F>,
    pub cond: Conditioning<F>,
    pub greedy: bool,
}

impl<'a, F: Real> Synthesizer for WaveNetSynthesizer<'a, F> {
    type State = GenerationStream<'a, F>;

    fn start(&self) -> Result<Self::State> {
        GenerationStream::new(self.net, &self.cond)
    }

    fn extend(&self, state: &mut Self::State, n: usize, probe: Probe) -> Result<Vec<f64>> {
        let mode = if self.greedy {
            SamplingMode::Greedy
        } else {
            SamplingMode::Sample { seed: probe.seed }
        };
        state.advance(n, mode)
    }
}

/// Deterministic reference synthesizer: each block of `block_len` samples is
/// a sine at one of two frequencies, chosen by a bit of the probe index
/// (bit `j` for the `j`-th block after the probe's starting point).
#[derive(Debug, Clone)]
pub struct BranchingTones {
    pub block_len: usize,
    pub freqs: [f64; 2],
    pub amplitude: f64,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, Default)]
pub struct ToneState {
    position: usize,
    phase: f64,
    start_block: Option<(usize, usize)>,
}

impl Synthesizer for BranchingTones {
    type State = ToneState;

    fn start(&self) -> Result<ToneState> {
        Ok(ToneState::default())
    }

    fn extend(&self, state: &mut ToneState, n: usize, probe: Probe) -> Result<Vec<f64>> {
        let block_now = state.position / self.block_len;
        let start = match state.start_block {
            Some((iter, b)) if iter == probe.iteration => b,
            _ => {
                state.start_block = Some((probe.iteration, block_now));
                block_now
            }
        };
        let sr = self.sample_rate as f64;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let block = state.position / self.block_len;
            let bit = (probe.index >> (block - start).min(63)) & 1;
            let f = self.freqs[bit];
            out.push(self.amplitude * state.phase.sin());
            state.phase = (state.phase + 2.0 * std::f64::consts::PI * f / sr) % (2.0 * std::f64::consts::PI);
            state.position += 1;
        }
        Ok(out)
    }
}
