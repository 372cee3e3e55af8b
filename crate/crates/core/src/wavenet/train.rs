use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conditioning::Conditioning;
use super::config::TrainConfig;
use super::mulaw::MuLawParams;
use super::params::WaveNet;
use super::real::Real;
use crate::error::{Error, Result};

/// One training window: target waveform and its per-sample conditioning.
#[derive(Debug, Clone)]
pub struct TrainExample<F> {
    pub wave: Vec<f64>,
    pub cond: Conditioning<F>,
}

/// Network inputs (previous sample after a codec round trip, zero first)
/// and target codes for `wave`.
pub fn teacher_forcing<F: Real>(wave: &[f64], mulaw: &MuLawParams) -> (Vec<F>, Vec<u8>) {
    let targets: Vec<u8> = wave.iter().map(|&x| mulaw.encode_unchecked(x)).collect();
    let mut inputs = Vec::with_capacity(wave.len());
    inputs.push(F::zero());
    inputs.extend(targets[..wave.len().saturating_sub(1)].iter().map(|&c| F::of(mulaw.decode_unchecked(c))));
    inputs.truncate(wave.len());
    (inputs, targets)
}

/// Mean NLL (nats per sample) over the batch and its gradient.
pub fn batch_loss_and_gradient<F: Real>(
    net: &WaveNet<F>,
    batch: &[TrainExample<F>],
) -> Result<(f64, WaveNet<F>)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let mulaw = MuLawParams::default();
    let total: usize = batch.iter().map(|e| e.wave.len()).sum();
    let mut grad = WaveNet::zeros(*net.config())?;
    let mut nll = 0.0;
    for ex in batch {
        if ex.wave.len() != ex.cond.len() {
            return Err(Error::invalid("waveform and conditioning lengths differ"));
        }
        if ex.wave.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("training waveform has non-finite samples"));
        }
        let (inputs, targets) = teacher_forcing::<F>(&ex.wave, &mulaw);
        let (n, g) = net.nll_and_gradient(&inputs, &targets, &ex.cond)?;
        nll += n;
        grad.blend(F::one(), &g, F::one());
    }
    let scale = F::of(1.0 / total as f64);
    grad.blend(scale, &WaveNet::zeros(*net.config())?, F::zero());
    let mean = nll / total as f64;
    if !mean.is_finite() {
        return Err(Error::numeric(None, "loss is not finite"));
    }
    Ok((mean, grad))
}

/// `ema ← decay·ema + (1 − decay)·w`
pub fn ema_update<F: Real>(ema: &mut WaveNet<F>, weights: &WaveNet<F>, decay: f64) {
    ema.blend(F::of(decay), weights, F::of(1.0 - decay));
}

/// Adam moment estimates.
#[derive(Debug, Clone)]
pub struct OptimizerState<F> {
    pub m: WaveNet<F>,
    pub v: WaveNet<F>,
    pub step: u64,
}

impl<F: Real> OptimizerState<F> {
    pub fn new(net: &WaveNet<F>) -> Result<Self> {
        Ok(Self {
            m: WaveNet::zeros(*net.config())?,
            v: WaveNet::zeros(*net.config())?,
            step: 0,
        })
    }

    pub fn apply(&mut self, net: &mut WaveNet<F>, grad: &WaveNet<F>, cfg: &TrainConfig) {
        self.step += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let lr = F::of(cfg.learning_rate);
        let eps = F::of(cfg.adam_epsilon);
        let (b1f, b2f) = (F::of(b1), F::of(b2));
        let (c1f, c2f) = (F::of(c1), F::of(c2));
        let tensors = net
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for (((w, g), m), v) in tensors {
            for i in 0..w.len() {
                m[i] = b1f * m[i] + (F::one() - b1f) * g[i];
                v[i] = b2f * v[i] + (F::one() - b2f) * g[i] * g[i];
                let mhat = m[i] / c1f;
                let vhat = v[i] / c2f;
                w[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

/// Weights, their moving average and optimiser state.
#[derive(Debug, Clone)]
pub struct Trainer<F> {
    pub net: WaveNet<F>,
    pub ema: WaveNet<F>,
    pub opt: OptimizerState<F>,
    pub config: TrainConfig,
}

impl<F: Real> Trainer<F> {
    pub fn new(net: WaveNet<F>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            ema: net.clone(),
            opt: OptimizerState::new(&net)?,
            net,
            config,
        })
    }

    /// One Adam step on the batch followed by the moving-average update.
    /// Returns the mean NLL before the update.
    pub fn step(&mut self, batch: &[TrainExample<F>]) -> Result<f64> {
        let (loss, grad) = batch_loss_and_gradient(&self.net, batch)?;
        self.opt.apply(&mut self.net, &grad, &self.config);
        ema_update(&mut self.ema, &self.net, self.config.ema_decay);
        Ok(loss)
    }
}

/// A full training recording: waveform plus the linear magnitude of its
/// analysis, from which rescaled and shifted conditioning is derived.
#[derive(Debug, Clone)]
pub struct TrainingClip {
    pub wave: Vec<f64>,
    pub magnitude: Array2<f64>,
    pub samples_per_frame: usize,
    pub floor: f64,
}

impl TrainingClip {
    pub fn new(wave: Vec<f64>, magnitude: Array2<f64>, samples_per_frame: usize, floor: f64) -> Result<Self> {
        if wave.is_empty() || samples_per_frame == 0 {
            return Err(Error::invalid("training clip needs samples and a positive hop"));
        }
        let frames = wave.len().div_ceil(samples_per_frame);
        if magnitude.nrows() < frames {
            return Err(Error::invalid(format!(
                "{} samples need {frames} frames, clip has {}",
                wave.len(),
                magnitude.nrows()
            )));
        }
        Ok(Self {
            wave,
            magnitude,
            samples_per_frame,
            floor,
        })
    }

    /// Window `start..start+len` with amplitude scaled by `gain`. Because the
    /// analysis is linear the conditioning is `ln(gain·|X| + floor) + shift`.
    pub fn example<F: Real>(
        &self,
        start: usize,
        len: usize,
        gain: f64,
        shift: f64,
        reverse: bool,
    ) -> Result<TrainExample<F>> {
        let end = start + len;
        if len == 0 || end > self.wave.len() {
            return Err(Error::invalid("training window outside clip"));
        }
        let first = start / self.samples_per_frame;
        let last = (end - 1) / self.samples_per_frame;
        let frames = self
            .magnitude
            .slice(ndarray::s![first..=last, ..])
            .mapv(|m| F::of((gain * m + self.floor).ln() + shift));
        let index = (start..end).map(|t| t / self.samples_per_frame - first).collect();
        let mut cond = Conditioning::new(frames, index)?;
        let mut wave: Vec<f64> = self.wave[start..end].iter().map(|x| x * gain).collect();
        if reverse {
            wave.reverse();
            cond = cond.reversed();
        }
        Ok(TrainExample { wave, cond })
    }
}

/// Draws training batches: random clip, random window, optional peak rescale.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    rng: ChaCha8Rng,
}

impl BatchSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn batch<F: Real>(&mut self, clips: &[TrainingClip], cfg: &TrainConfig) -> Result<Vec<TrainExample<F>>> {
        if clips.is_empty() {
            return Err(Error::invalid("no training clips"));
        }
        (0..cfg.batch_size)
            .map(|_| {
                let clip = &clips[self.rng.random_range(0..clips.len())];
                let len = cfg.sample_length.min(clip.wave.len());
                let start = self.rng.random_range(0..=clip.wave.len() - len);
                let gain = if cfg.augment {
                    let peak = clip.wave[start..start + len].iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    let (lo, hi) = cfg.augment_peak_range;
                    let target = if hi > lo { self.rng.random_range(lo..hi) } else { lo };
                    if peak > 0.0 { target / peak } else { 1.0 }
                } else {
                    1.0
                };
                clip.example(start, len, gain, cfg.cond_shift, cfg.reverse)
            })
            .collect()
    }
}
