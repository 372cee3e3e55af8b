//! CycleGAN objective terms and training schedules, evaluated over abstract
//! differentiable maps so they can be checked without training networks.
//!
//! Batches are `Array2<f64>` with one flattened example per row.

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// A map from flat vectors to flat vectors. Discriminators have a scalar
/// output and expose the gradient of that output with respect to the input.
pub trait DifferentiableMap {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn value(&self, x: ArrayView1<f64>) -> Result<Vec<f64>>;

    fn input_gradient(&self, _x: ArrayView1<f64>) -> Option<Result<Vec<f64>>> {
        None
    }
}

/// Applies `map` to every row.
pub fn apply_batch(map: &dyn DifferentiableMap, batch: &Array2<f64>) -> Result<Array2<f64>> {
    if batch.ncols() != map.input_len() {
        return Err(Error::invalid(format!(
            "batch rows have {} elements, map expects {}",
            batch.ncols(),
            map.input_len()
        )));
    }
    let mut out = Array2::zeros((batch.nrows(), map.output_len()));
    for (row, mut dst) in batch.rows().into_iter().zip(out.rows_mut()) {
        let v = map.value(row)?;
        if v.len() != map.output_len() {
            return Err(Error::invalid("map returned the wrong number of outputs"));
        }
        dst.assign(&ArrayView1::from(&v));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveConfig {
    pub cycle_weight: f64,
    pub identity_weight_base: f64,
    pub gp_alpha: f64,
    pub identity_constant_steps: u64,
    pub total_steps: u64,
    pub warmup_steps: u64,
    pub lr_start: f64,
    pub lr_peak: f64,
    pub lr_decay_start: u64,
    /// Use `-mean ln D(fake)` for the generator instead of `mean ln(1 - D(fake))`.
    pub non_saturating: bool,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            cycle_weight: 10.0,
            identity_weight_base: 5.0,
            gp_alpha: 10.0,
            identity_constant_steps: 100_000,
            total_steps: 1_500_000,
            warmup_steps: 2_500,
            lr_start: 1e-6,
            lr_peak: 1e-4,
            lr_decay_start: 100_000,
            non_saturating: false,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            self.cycle_weight,
            self.identity_weight_base,
            self.gp_alpha,
            self.lr_start,
            self.lr_peak,
        ];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("objective weights must be finite and non-negative"));
        }
        if self.lr_decay_start > self.total_steps || self.identity_constant_steps > self.total_steps {
            return Err(Error::invalid("decay must start before the final step"));
        }
        if self.warmup_steps > self.lr_decay_start {
            return Err(Error::invalid("warm-up must end before the decay starts"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdversarialLosses {
    pub discriminator: f64,
    pub generator: f64,
}

const PROB_CLAMP: f64 = 1e-7;

fn check_probs(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{name} is empty")));
    }
    if let Some(bad) = v.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("{name} contains {bad}, outside [0, 1]")));
    }
    Ok(())
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Discriminator loss `-mean ln D(real) - mean ln(1 - D(fake))` and the
/// generator loss `mean ln(1 - D(fake))`, with outputs clamped away from 0 and 1.
pub fn adversarial_losses(d_real: &[f64], d_fake: &[f64], non_saturating: bool) -> Result<AdversarialLosses> {
    check_probs("d_real", d_real)?;
    check_probs("d_fake", d_fake)?;
    let clamp = |p: f64| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let real = mean(d_real.iter().map(|&p| clamp(p).ln()));
    let fake_neg = mean(d_fake.iter().map(|&p| (1.0 - clamp(p)).ln()));
    let generator = if non_saturating {
        -mean(d_fake.iter().map(|&p| clamp(p).ln()))
    } else {
        fake_neg
    };
    Ok(AdversarialLosses {
        discriminator: -real - fake_neg,
        generator,
    })
}

fn mean_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!("shapes {:?} and {:?} differ", a.dim(), b.dim())));
    }
    if a.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    Ok(mean(a.iter().zip(b).map(|(x, y)| (x - y).abs())))
}

fn check_pair(f: &dyn DifferentiableMap, g: &dyn DifferentiableMap) -> Result<()> {
    if f.output_len() != g.input_len() || g.output_len() != f.input_len() {
        return Err(Error::invalid("mappings are not shape-compatible inverses"));
    }
    Ok(())
}

/// `mean |G(F(x)) - x| + mean |F(G(y)) - y|` with `F: X → Y`, `G: Y → X`.
pub fn cycle_consistency_loss(
    x: &Array2<f64>,
    y: &Array2<f64>,
    f: &dyn DifferentiableMap,
    g: &dyn DifferentiableMap,
) -> Result<f64> {
    check_pair(f, g)?;
    let x_cycle = apply_batch(g, &apply_batch(f, x)?)?;
    let y_cycle = apply_batch(f, &apply_batch(g, y)?)?;
    Ok(mean_abs_diff(&x_cycle, x)? + mean_abs_diff(&y_cycle, y)?)
}

/// `mean |F(y) - y| + mean |G(x) - x|`: each generator fed a sample of its
/// own target domain should leave it unchanged.
pub fn identity_loss(
    x: &Array2<f64>,
    y: &Array2<f64>,
    f: &dyn DifferentiableMap,
    g: &dyn DifferentiableMap,
) -> Result<f64> {
    check_pair(f, g)?;
    if f.input_len() != f.output_len() {
        return Err(Error::invalid("identity loss needs maps between same-shaped domains"));
    }
    Ok(mean_abs_diff(&apply_batch(f, y)?, y)? + mean_abs_diff(&apply_batch(g, x)?, x)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientPenalty {
    /// `mean (‖∇D(x̂)‖ - 1)²`
    pub raw: f64,
    /// `alpha · raw`
    pub weighted: f64,
}

/// Penalty on the critic's gradient norm along random interpolates
/// `x̂ = ε·real + (1-ε)·fake`, one `ε ~ U(0,1)` per batch row.
pub fn gradient_penalty(
    d: &dyn DifferentiableMap,
    x_real: &Array2<f64>,
    x_fake: &Array2<f64>,
    alpha: f64,
    seed: u64,
) -> Result<GradientPenalty> {
    if x_real.dim() != x_fake.dim() {
        return Err(Error::invalid("real and fake batches differ in shape"));
    }
    if x_real.nrows() == 0 || x_real.ncols() != d.input_len() {
        return Err(Error::invalid("batch does not match the critic input"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for (i, (r, f)) in x_real.rows().into_iter().zip(x_fake.rows()).enumerate() {
        let eps: f64 = rng.random();
        let hat = &r * eps + &f * (1.0 - eps);
        let grad = d
            .input_gradient(hat.view())
            .ok_or_else(|| Error::invalid("critic does not expose an input gradient"))??;
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::numeric(Some(i), "critic gradient is not finite"));
        }
        total += (norm - 1.0) * (norm - 1.0);
    }
    let raw = total / x_real.nrows() as f64;
    Ok(GradientPenalty {
        raw,
        weighted: alpha * raw,
    })
}

fn clamp_step(step: u64, cfg: &ObjectiveConfig) -> Option<u64> {
    if step > cfg.total_steps {
        log::warn!("step {step} is past the final step {}; schedule is 0", cfg.total_steps);
        None
    } else {
        Some(step)
    }
}

/// Linear fall from `value` at `start` to 0 at `end`.
fn linear_decay(value: f64, step: u64, start: u64, end: u64) -> f64 {
    if end == start {
        return 0.0;
    }
    value * (end - step) as f64 / (end - start) as f64
}

/// Identity-loss weight: constant, then linear decay to 0 at the final step.
pub fn identity_weight(step: u64, cfg: &ObjectiveConfig) -> f64 {
    let Some(step) = clamp_step(step, cfg) else {
        return 0.0;
    };
    if step <= cfg.identity_constant_steps {
        cfg.identity_weight_base
    } else {
        linear_decay(cfg.identity_weight_base, step, cfg.identity_constant_steps, cfg.total_steps)
    }
}

/// Learning rate: exponential warm-up from `lr_start`, constant at `lr_peak`,
/// then linear decay to 0 at the final step.
pub fn learning_rate(step: u64, cfg: &ObjectiveConfig) -> f64 {
    let Some(step) = clamp_step(step, cfg) else {
        return 0.0;
    };
    if step < cfg.warmup_steps {
        let frac = step as f64 / cfg.warmup_steps as f64;
        cfg.lr_start * (cfg.lr_peak / cfg.lr_start).powf(frac)
    } else if step <= cfg.lr_decay_start {
        cfg.lr_peak
    } else {
        linear_decay(cfg.lr_peak, step, cfg.lr_decay_start, cfg.total_steps)
    }
}

/// Unweighted objective terms of one generator/discriminator evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ObjectiveParts {
    pub adversarial: f64,
    pub cycle: f64,
    pub identity: f64,
    /// Unweighted penalty, [`GradientPenalty::raw`].
    pub gradient_penalty: f64,
}

/// `adversarial + cycle_weight·cycle + identity_weight(step)·identity + gp_alpha·gp`
pub fn total_objective(parts: &ObjectiveParts, cfg: &ObjectiveConfig, step: u64) -> Result<f64> {
    let v = [parts.adversarial, parts.cycle, parts.identity, parts.gradient_penalty];
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("objective parts must be finite"));
    }
    Ok(parts.adversarial
        + cfg.cycle_weight * parts.cycle
        + identity_weight(step, cfg) * parts.identity
        + cfg.gp_alpha * parts.gradient_penalty)
}

/// `x ↦ scale ⊙ x + shift`, element-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementwiseAffine {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl ElementwiseAffine {
    pub fn uniform(len: usize, scale: f64, shift: f64) -> Self {
        Self {
            scale: vec![scale; len],
            shift: vec![shift; len],
        }
    }

    /// The inverse map; every scale must be non-zero.
    pub fn inverse(&self) -> Result<Self> {
        if self.scale.contains(&0.0) {
            return Err(Error::invalid("zero scale has no inverse"));
        }
        Ok(Self {
            scale: self.scale.iter().map(|s| 1.0 / s).collect(),
            shift: self.shift.iter().zip(&self.scale).map(|(b, s)| -b / s).collect(),
        })
    }
}

impl DifferentiableMap for ElementwiseAffine {
    fn input_len(&self) -> usize {
        self.scale.len()
    }

    fn output_len(&self) -> usize {
        self.scale.len()
    }

    fn value(&self, x: ArrayView1<f64>) -> Result<Vec<f64>> {
        Ok(x.iter()
            .zip(&self.scale)
            .zip(&self.shift)
            .map(|((x, s), b)| s * x + b)
            .collect())
    }
}

/// Critic `x ↦ w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCritic {
    pub w: Vec<f64>,
    pub b: f64,
}

impl DifferentiableMap for LinearCritic {
    fn input_len(&self) -> usize {
        self.w.len()
    }

    fn output_len(&self) -> usize {
        1
    }

    fn value(&self, x: ArrayView1<f64>) -> Result<Vec<f64>> {
        Ok(vec![x.iter().zip(&self.w).map(|(x, w)| x * w).sum::<f64>() + self.b])
    }

    fn input_gradient(&self, _x: ArrayView1<f64>) -> Option<Result<Vec<f64>>> {
        Some(Ok(self.w.clone()))
    }
}

/// Critic `x ↦ ½‖x‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCritic {
    pub len: usize,
}

impl DifferentiableMap for QuadraticCritic {
    fn input_len(&self) -> usize {
        self.len
    }

    fn output_len(&self) -> usize {
        1
    }

    fn value(&self, x: ArrayView1<f64>) -> Result<Vec<f64>> {
        Ok(vec![0.5 * x.dot(&x)])
    }

    fn input_gradient(&self, x: ArrayView1<f64>) -> Option<Result<Vec<f64>>> {
        Some(Ok(x.to_vec()))
    }
}
