use std::f64::consts::PI;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::tf::{instantaneous_frequency, ComplexSpectrogram};

/// HSV with full saturation to RGB; `h` in turns, `v` in `[0, 1]`.
fn hsv_to_rgb(h: f64, v: f64) -> [u8; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = h6.floor() as u32 % 6;
    let f = h6 - h6.floor();
    let (p, q, t) = (0.0, v * (1.0 - f), v * f);
    let (r, g, b) = match sector {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r, g, b].map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// One pixel per cell, lowest bin on the bottom row. Hue encodes
/// instantaneous frequency (`[-π, π)` around the colour circle), brightness
/// the min-max scaled log magnitude.
pub fn rainbowgram(spec: &ComplexSpectrogram, floor: f64) -> Result<RgbImage> {
    let inf = instantaneous_frequency(spec)?;
    let logmag = crate::tf::log_magnitude(spec, floor)?;
    let data = logmag.data();
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let range = hi - lo;
    let (frames, bins) = data.dim();
    let width = u32::try_from(frames).map_err(|_| Error::invalid("too many frames for an image"))?;
    let height = u32::try_from(bins).map_err(|_| Error::invalid("too many bins for an image"))?;
    Ok(RgbImage::from_fn(width, height, |x, y| {
        let (t, k) = (x as usize, bins - 1 - y as usize);
        let v = if range > 0.0 { (data[[t, k]] - lo) / range } else { 0.0 };
        let h = (inf[[t, k]] + PI) / (2.0 * PI);
        Rgb(hsv_to_rgb(h, v))
    }))
}

pub fn write_rainbowgram(path: impl AsRef<Path>, spec: &ComplexSpectrogram, floor: f64) -> Result<()> {
    let img = rainbowgram(spec, floor)?;
    img.save_with_format(path.as_ref(), image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::Io(io),
            other => Error::invalid(other.to_string()),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::sine;
    use crate::tf::{cqt, CqtParams, DEFAULT_FLOOR};

    #[test]
    fn primary_hues() {
        assert_eq!(hsv_to_rgb(0.0, 1.0), [255, 0, 0]);
        assert_eq!(hsv_to_rgb(1.0 / 3.0, 1.0), [0, 255, 0]);
        assert_eq!(hsv_to_rgb(2.0 / 3.0, 1.0), [0, 0, 255]);
        assert_eq!(hsv_to_rgb(0.5, 0.0), [0, 0, 0]);
    }

    #[test]
    fn geometry_and_orientation() {
        let w = sine(440.0, 0.5, 8000, 16000);
        let spec = cqt(&w, &CqtParams::default()).unwrap();
        let img = rainbowgram(&spec, DEFAULT_FLOOR).unwrap();
        assert_eq!(img.dimensions(), (spec.frames() as u32, 336));
        let t = (spec.frames() / 2) as u32;
        let brightest = (0..336u32)
            .max_by_key(|&y| img.get_pixel(t, y).0.iter().map(|&c| c as u32).max().unwrap())
            .unwrap();
        assert_eq!(brightest, 335 - 180);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.png");
        write_rainbowgram(&p, &spec, DEFAULT_FLOOR).unwrap();
        let back = image::open(&p).unwrap().to_rgb8();
        assert_eq!(back, img);
    }
}
