//! `.ttwn` weight files.
//!
//! Layout: magic `TTWN`, `u8` version (1), eight little-endian `u32`
//! (layers, dilation cycle, kernel, residual, skip, gate, conditioning
//! channels, quantisation levels), `u8` moving-average flag, every tensor as
//! `f32` LE in [`WaveNet`] order (then the moving-average copy, if present),
//! and a CRC-32 of all preceding bytes.

use std::path::Path;

use super::config::WaveNetConfig;
use super::params::WaveNet;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TTWN";
const VERSION: u8 = 1;

/// Weights as stored on disk, with the optional moving-average copy.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveNetWeights {
    pub net: WaveNet<f32>,
    pub ema: Option<WaveNet<f32>>,
}

impl WaveNetWeights {
    pub fn config(&self) -> &WaveNetConfig {
        self.net.config()
    }

    /// The moving average when present, else the raw weights.
    pub fn for_generation(&self) -> &WaveNet<f32> {
        self.ema.as_ref().unwrap_or(&self.net)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = self.config();
        let mut out = Vec::with_capacity(64 + 4 * self.net.parameter_count() * 2);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        for v in [
            c.n_layers,
            c.dilation_cycle,
            c.kernel_size,
            c.residual_width,
            c.skip_width,
            c.gate_width,
            c.cond_channels,
            c.quant_levels,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.push(self.ema.is_some() as u8);
        for net in std::iter::once(&self.net).chain(self.ema.as_ref()) {
            for t in net.tensors() {
                for v in t {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// Parses a weight file. With `expected`, the stored configuration must
    /// match it exactly.
    pub fn from_bytes(bytes: &[u8], expected: Option<&WaveNetConfig>) -> Result<Self> {
        let corrupt = |m: &str| Error::CorruptFile(m.to_string());
        if bytes.len() < 4 + 1 + 32 + 1 + 4 {
            return Err(corrupt("file too short"));
        }
        if &bytes[..4] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored {
            return Err(corrupt("checksum mismatch"));
        }
        if body[4] != VERSION {
            return Err(corrupt(&format!("unsupported version {}", body[4])));
        }
        let field = |i: usize| u32::from_le_bytes(body[5 + 4 * i..9 + 4 * i].try_into().expect("4 bytes")) as usize;
        let config = WaveNetConfig {
            n_layers: field(0),
            dilation_cycle: field(1),
            kernel_size: field(2),
            residual_width: field(3),
            skip_width: field(4),
            gate_width: field(5),
            cond_channels: field(6),
            quant_levels: field(7),
            input_channels: 1,
        };
        if let Some(want) = expected {
            if *want != config {
                return Err(Error::ShapeMismatch(format!(
                    "file holds {config:?}, expected {want:?}"
                )));
            }
        }
        config
            .validate()
            .map_err(|e| Error::CorruptFile(format!("stored configuration invalid: {e}")))?;
        let has_ema = match body[37] {
            0 => false,
            1 => true,
            v => return Err(corrupt(&format!("bad moving-average flag {v}"))),
        };
        let mut net = WaveNet::<f32>::zeros(config)?;
        let count = net.parameter_count();
        let payload = &body[38..];
        let copies = 1 + has_ema as usize;
        if payload.len() != 4 * count * copies {
            return Err(corrupt(&format!(
                "payload of {} bytes, configuration needs {}",
                payload.len(),
                4 * count * copies
            )));
        }
        let mut floats = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")));
        let mut fill = |net: &mut WaveNet<f32>| {
            for t in net.tensors_mut() {
                for v in t {
                    *v = floats.next().expect("length checked");
                }
            }
        };
        fill(&mut net);
        let ema = if has_ema {
            let mut e = WaveNet::<f32>::zeros(config)?;
            fill(&mut e);
            Some(e)
        } else {
            None
        };
        let weights = Self { net, ema };
        weights.net.check_finite()?;
        if let Some(e) = &weights.ema {
            e.check_finite()?;
        }
        Ok(weights)
    }
}

pub fn save_weights(path: impl AsRef<Path>, weights: &WaveNetWeights) -> Result<()> {
    std::fs::write(path, weights.to_bytes())?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>, expected: Option<&WaveNetConfig>) -> Result<WaveNetWeights> {
    WaveNetWeights::from_bytes(&std::fs::read(path)?, expected)
}
