//! 8-bit mu-law companding.
//!
//! `F(x) = sign(x) ln(1 + μ|x|) / ln(1 + μ)`, quantised to `levels` codes with
//! round-half-up; decoding returns the amplitude at the centre of the code's
//! companded bin.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuLawParams {
    pub mu: f64,
    pub levels: u16,
}

impl Default for MuLawParams {
    fn default() -> Self {
        Self {
            mu: 255.0,
            levels: 256,
        }
    }
}

impl MuLawParams {
    fn check(&self) -> Result<()> {
        if !(self.mu > 0.0) || !(2..=256).contains(&self.levels) {
            return Err(Error::invalid(format!(
                "mu-law needs mu > 0 and 2..=256 levels, got mu={} levels={}",
                self.mu, self.levels
            )));
        }
        Ok(())
    }

    pub fn encode(&self, x: f64) -> Result<u8> {
        self.check()?;
        if !x.is_finite() {
            return Err(Error::invalid(format!("cannot encode non-finite sample {x}")));
        }
        Ok(self.encode_unchecked(x))
    }

    pub fn decode(&self, code: u8) -> Result<f64> {
        self.check()?;
        if code as u16 >= self.levels {
            return Err(Error::invalid(format!(
                "code {code} out of range for {} levels",
                self.levels
            )));
        }
        Ok(self.decode_unchecked(code))
    }

    /// Amplitudes saturate at ±1. `x` must be finite.
    #[inline]
    pub(crate) fn encode_unchecked(&self, x: f64) -> u8 {
        let x = x.clamp(-1.0, 1.0);
        let f = x.signum() * (self.mu * x.abs()).ln_1p() / self.mu.ln_1p();
        let top = (self.levels - 1) as f64;
        let code = ((f + 1.0) / 2.0 * top + 0.5).floor();
        code.clamp(0.0, top) as u8
    }

    #[inline]
    pub(crate) fn decode_unchecked(&self, code: u8) -> f64 {
        let top = (self.levels - 1) as f64;
        let y = 2.0 * code as f64 / top - 1.0;
        y.signum() * ((1.0 + self.mu).powf(y.abs()) - 1.0) / self.mu
    }
}

pub fn mulaw_encode(x: f64, params: &MuLawParams) -> Result<u8> {
    params.encode(x)
}

pub fn mulaw_decode(code: u8, params: &MuLawParams) -> Result<f64> {
    params.decode(code)
}
