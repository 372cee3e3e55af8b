use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic Hann window, `w[n] = 0.5 (1 - cos(2πn/len))`.
pub fn hann_window(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::invalid(format!(
            "hann window length must be at least 2, got {len}"
        )));
    }
    Ok(hann_periodic(len))
}

pub(crate) fn hann_periodic(len: usize) -> Vec<f64> {
    let n = len as f64;
    (0..len)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n).cos()))
        .collect()
}
