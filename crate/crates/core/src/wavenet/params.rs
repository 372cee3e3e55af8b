use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::WaveNetConfig;
use super::real::Real;
use crate::error::{Error, Result};

/// Tensors of one residual layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<F> {
    /// `[kernel, residual, gate]`; tap `j` reads the input `(kernel-1-j)·dilation` samples back.
    pub dilated_w: Array3<F>,
    pub dilated_b: Array1<F>,
    /// `[cond_channels, gate]`
    pub cond_w: Array2<F>,
    /// `[residual, residual]`
    pub res_w: Array2<F>,
    pub res_b: Array1<F>,
    /// `[residual, skip]`
    pub skip_w: Array2<F>,
    pub skip_b: Array1<F>,
}

/// A conditional WaveNet: configuration plus its full tensor set.
///
/// Tensor order (also the on-disk order): `input_w [kernel, residual]`,
/// `input_b`, then per layer `dilated_w, dilated_b, cond_w, res_w, res_b,
/// skip_w, skip_b`, then `out1_w [skip, skip]`, `out1_b`,
/// `out2_w [skip, 256]`, `out2_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveNet<F> {
    pub(crate) config: WaveNetConfig,
    pub input_w: Array2<F>,
    pub input_b: Array1<F>,
    pub layers: Vec<LayerParams<F>>,
    pub out1_w: Array2<F>,
    pub out1_b: Array1<F>,
    pub out2_w: Array2<F>,
    pub out2_b: Array1<F>,
}

const INPUT_GAIN: f64 = 30.0;

impl<F: Real> WaveNet<F> {
    pub fn zeros(config: WaveNetConfig) -> Result<Self> {
        config.validate()?;
        let (k, r, s, g, c, q) = (
            config.kernel_size,
            config.residual_width,
            config.skip_width,
            config.gate_width,
            config.cond_channels,
            config.quant_levels,
        );
        let layers = (0..config.n_layers)
            .map(|_| LayerParams {
                dilated_w: Array3::zeros((k, r, g)),
                dilated_b: Array1::zeros(g),
                cond_w: Array2::zeros((c, g)),
                res_w: Array2::zeros((r, r)),
                res_b: Array1::zeros(r),
                skip_w: Array2::zeros((r, s)),
                skip_b: Array1::zeros(s),
            })
            .collect();
        Ok(Self {
            config,
            input_w: Array2::zeros((k, r)),
            input_b: Array1::zeros(r),
            layers,
            out1_w: Array2::zeros((s, s)),
            out1_b: Array1::zeros(s),
            out2_w: Array2::zeros((s, q)),
            out2_b: Array1::zeros(q),
        })
    }

    /// Uniform `±1/sqrt(fan_in)` weights and zero biases, except that the
    /// input convolution gets a large gain (adjacent mu-law codes near zero
    /// are less than 1e-3 apart in amplitude) and the conditioning projection
    /// starts small since log-magnitude inputs are large.
    pub fn init(config: WaveNetConfig, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |t: &mut [F], fan_in: usize, scale: f64| {
            let bound = scale / (fan_in as f64).sqrt();
            for v in t {
                *v = F::of(rng.random_range(-bound..bound));
            }
        };
        let (k, r, s, c) = (
            config.kernel_size,
            config.residual_width,
            config.skip_width,
            config.cond_channels,
        );
        fill(slice_mut(&mut net.input_w), k, INPUT_GAIN);
        for layer in &mut net.layers {
            fill(slice_mut(&mut layer.dilated_w), k * r, 1.0);
            fill(slice_mut(&mut layer.cond_w), c, 0.1);
            fill(slice_mut(&mut layer.res_w), r, 1.0);
            fill(slice_mut(&mut layer.skip_w), r, 1.0);
        }
        fill(slice_mut(&mut net.out1_w), s, 1.0);
        fill(slice_mut(&mut net.out2_w), s, 1.0);
        Ok(net)
    }

    pub fn config(&self) -> &WaveNetConfig {
        &self.config
    }

    pub fn tensors(&self) -> Vec<&[F]> {
        let mut out: Vec<&[F]> = vec![slice(&self.input_w), slice(&self.input_b)];
        for l in &self.layers {
            out.push(slice(&l.dilated_w));
            out.push(slice(&l.dilated_b));
            out.push(slice(&l.cond_w));
            out.push(slice(&l.res_w));
            out.push(slice(&l.res_b));
            out.push(slice(&l.skip_w));
            out.push(slice(&l.skip_b));
        }
        out.extend([
            slice(&self.out1_w),
            slice(&self.out1_b),
            slice(&self.out2_w),
            slice(&self.out2_b),
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [F]> {
        let mut out: Vec<&mut [F]> = vec![slice_mut(&mut self.input_w), slice_mut(&mut self.input_b)];
        for l in &mut self.layers {
            out.push(slice_mut(&mut l.dilated_w));
            out.push(slice_mut(&mut l.dilated_b));
            out.push(slice_mut(&mut l.cond_w));
            out.push(slice_mut(&mut l.res_w));
            out.push(slice_mut(&mut l.res_b));
            out.push(slice_mut(&mut l.skip_w));
            out.push(slice_mut(&mut l.skip_b));
        }
        out.push(slice_mut(&mut self.out1_w));
        out.push(slice_mut(&mut self.out1_b));
        out.push(slice_mut(&mut self.out2_w));
        out.push(slice_mut(&mut self.out2_b));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        for (i, t) in self.tensors().iter().enumerate() {
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidWeights(format!("tensor {i} has non-finite values")));
            }
        }
        Ok(())
    }

    /// Same network with every element converted to `G`.
    pub fn cast<G: Real>(&self) -> WaveNet<G> {
        let mut out = WaveNet::<G>::zeros(self.config).expect("config already validated");
        for (dst, src) in out.tensors_mut().into_iter().zip(self.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = G::of(s.f64());
            }
        }
        out
    }

    /// Element-wise `self ← self·a + other·b` over every tensor.
    pub(crate) fn blend(&mut self, a: F, other: &Self, b: F) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *d * a + *s * b;
            }
        }
    }
}

fn slice<F, D: ndarray::Dimension>(a: &ndarray::Array<F, D>) -> &[F] {
    a.as_slice().expect("parameter tensors are contiguous")
}

fn slice_mut<F, D: ndarray::Dimension>(a: &mut ndarray::Array<F, D>) -> &mut [F] {
    a.as_slice_mut().expect("parameter tensors are contiguous")
}
