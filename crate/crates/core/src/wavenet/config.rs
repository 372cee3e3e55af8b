use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters of the conditional WaveNet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveNetConfig {
    pub n_layers: usize,
    /// Layer `k` has dilation `2^(k mod dilation_cycle)`.
    pub dilation_cycle: usize,
    pub kernel_size: usize,
    pub residual_width: usize,
    pub skip_width: usize,
    /// Width of the pre-activation, split in two halves for the gate.
    pub gate_width: usize,
    pub cond_channels: usize,
    pub quant_levels: usize,
    pub input_channels: usize,
}

impl Default for WaveNetConfig {
    fn default() -> Self {
        Self {
            n_layers: 40,
            dilation_cycle: 10,
            kernel_size: 3,
            residual_width: 256,
            skip_width: 256,
            gate_width: 512,
            cond_channels: 336,
            quant_levels: 256,
            input_channels: 1,
        }
    }
}

impl WaveNetConfig {
    /// Small network with equal residual and skip widths.
    pub fn toy(n_layers: usize, width: usize, cond_channels: usize) -> Self {
        Self {
            n_layers,
            residual_width: width,
            skip_width: width,
            gate_width: 2 * width,
            cond_channels,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.n_layers == 0 || self.kernel_size == 0 || self.residual_width == 0 {
            return bad("layers, kernel size and residual width must be positive".into());
        }
        if self.skip_width == 0 || self.cond_channels == 0 {
            return bad("skip width and conditioning channels must be positive".into());
        }
        if !(1..=30).contains(&self.dilation_cycle) {
            return bad(format!("dilation cycle {} not in 1..=30", self.dilation_cycle));
        }
        if self.gate_width != 2 * self.residual_width {
            return bad(format!(
                "gate width {} must be twice the residual width {}",
                self.gate_width, self.residual_width
            ));
        }
        if self.quant_levels != 256 {
            return bad(format!("quant_levels must be 256, got {}", self.quant_levels));
        }
        if self.input_channels != 1 {
            return bad("only a single scalar input channel is supported".into());
        }
        Ok(())
    }

    pub fn dilation(&self, layer: usize) -> usize {
        1 << (layer % self.dilation_cycle)
    }

    /// Number of input positions that can influence one output position.
    pub fn receptive_field(&self) -> usize {
        let k = self.kernel_size - 1;
        1 + k + (0..self.n_layers).map(|l| k * self.dilation(l)).sum::<usize>()
    }
}

/// Optimisation and data settings for WaveNet training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    /// Samples per training window. 8196 as published; 8192 was likely meant.
    pub sample_length: usize,
    pub ema_decay: f64,
    pub augment: bool,
    pub augment_peak_range: (f64, f64),
    /// Constant added to the log-magnitude conditioning.
    pub cond_shift: f64,
    /// Train on time-reversed audio and conditioning.
    pub reverse: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            batch_size: 4,
            sample_length: 8196,
            ema_decay: 0.999,
            augment: true,
            augment_peak_range: (0.1, 1.0),
            cond_shift: 2.0,
            reverse: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("adam_epsilon", self.adam_epsilon),
            ("ema_decay", self.ema_decay),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2), ("ema_decay", self.ema_decay)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if self.batch_size == 0 || self.sample_length == 0 {
            return Err(Error::invalid("batch size and sample length must be positive"));
        }
        let (lo, hi) = self.augment_peak_range;
        if !(lo > 0.0 && hi >= lo && hi <= 1.0) {
            return Err(Error::invalid(format!(
                "augment_peak_range must satisfy 0 < lo <= hi <= 1, got ({lo}, {hi})"
            )));
        }
        if !self.cond_shift.is_finite() {
            return Err(Error::invalid("cond_shift must be finite"));
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment. Keys are the
    /// field names; anything else is rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let err = |e: String| Error::invalid(format!("line {}: {key}: {e}", lineno + 1));
            match key {
                "learning_rate" => cfg.learning_rate = parse(value).map_err(err)?,
                "beta1" => cfg.beta1 = parse(value).map_err(err)?,
                "beta2" => cfg.beta2 = parse(value).map_err(err)?,
                "adam_epsilon" => cfg.adam_epsilon = parse(value).map_err(err)?,
                "batch_size" => cfg.batch_size = parse(value).map_err(err)?,
                "sample_length" => cfg.sample_length = parse(value).map_err(err)?,
                "ema_decay" => cfg.ema_decay = parse(value).map_err(err)?,
                "augment" => cfg.augment = parse(value).map_err(err)?,
                "augment_peak_range" => {
                    let (lo, hi) = value
                        .split_once(',')
                        .ok_or_else(|| err("expected lo,hi".into()))?;
                    cfg.augment_peak_range =
                        (parse(lo.trim()).map_err(err)?, parse(hi.trim()).map_err(err)?);
                }
                "cond_shift" => cfg.cond_shift = parse(value).map_err(err)?,
                "reverse" => cfg.reverse = parse(value).map_err(err)?,
                "seed" => cfg.seed = parse(value).map_err(err)?,
                other => {
                    return Err(Error::invalid(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "learning_rate = {}", self.learning_rate);
        let _ = writeln!(s, "beta1 = {}", self.beta1);
        let _ = writeln!(s, "beta2 = {}", self.beta2);
        let _ = writeln!(s, "adam_epsilon = {}", self.adam_epsilon);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "sample_length = {}", self.sample_length);
        let _ = writeln!(s, "ema_decay = {}", self.ema_decay);
        let _ = writeln!(s, "augment = {}", self.augment);
        let (lo, hi) = self.augment_peak_range;
        let _ = writeln!(s, "augment_peak_range = {lo},{hi}");
        let _ = writeln!(s, "cond_shift = {}", self.cond_shift);
        let _ = writeln!(s, "reverse = {}", self.reverse);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

fn parse<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
}
