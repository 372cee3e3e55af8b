use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conditioning::Conditioning;
use super::mulaw::MuLawParams;
use super::params::WaveNet;
use super::real::{sigmoid, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Draw from the softmax; the draw at sample `n` depends only on `(seed, n)`.
    Sample { seed: u64 },
    /// Most probable code, lowest index on ties.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Forward,
    /// Generate from the last conditioning row backwards, then flip the result.
    Reverse,
}

/// History of one layer's inputs, long enough for its widest tap.
#[derive(Debug, Clone)]
struct Ring<F> {
    data: Vec<F>,
    width: usize,
    cap: usize,
    head: usize,
}

impl<F: Real> Ring<F> {
    fn new(cap: usize, width: usize) -> Self {
        Self {
            data: vec![F::zero(); cap * width],
            width,
            cap,
            head: 0,
        }
    }

    fn push(&mut self, row: &[F]) {
        let start = self.head * self.width;
        self.data[start..start + self.width].copy_from_slice(row);
        self.head = (self.head + 1) % self.cap;
    }

    /// Row pushed `back` pushes before the newest one.
    fn back(&self, back: usize) -> &[F] {
        let idx = (self.head + 2 * self.cap - 1 - back) % self.cap;
        &self.data[idx * self.width..(idx + 1) * self.width]
    }
}

/// `out += x · w` for a row-major `w` of shape `[x.len(), out.len()]`.
#[inline]
fn vec_mat_acc<F: Real>(x: &[F], w: &[F], out: &mut [F]) {
    let cols = out.len();
    for (r, &xv) in x.iter().enumerate() {
        if xv == F::zero() {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (o, &wv) in out.iter_mut().zip(row) {
            *o += xv * wv;
        }
    }
}

/// Incremental autoregressive generator with per-layer caches. Cloning a
/// stream forks it; both copies continue independently.
#[derive(Debug, Clone)]
pub struct GenerationStream<'a, F> {
    net: &'a WaveNet<F>,
    /// Per layer, conditioning projection plus bias for every frame.
    cond_proj: Arc<Vec<Array2<F>>>,
    index: Arc<[usize]>,
    mulaw: MuLawParams,
    inputs: Vec<F>,
    rings: Vec<Ring<F>>,
    position: usize,
    prev: f64,
    h: Vec<F>,
    z: Vec<F>,
    gated: Vec<F>,
    skip: Vec<F>,
    hidden: Vec<F>,
    logits: Vec<F>,
}

impl<'a, F: Real> GenerationStream<'a, F> {
    pub fn new(net: &'a WaveNet<F>, cond: &Conditioning<F>) -> Result<Self> {
        net.check_finite()?;
        let cfg = *net.config();
        if cond.is_empty() {
            return Err(Error::invalid("conditioning is empty"));
        }
        if cond.channels() != cfg.cond_channels {
            return Err(Error::ShapeMismatch(format!(
                "conditioning has {} channels, network expects {}",
                cond.channels(),
                cfg.cond_channels
            )));
        }
        let cond_proj = net
            .layers
            .iter()
            .map(|l| cond.frames().dot(&l.cond_w) + &l.dilated_b)
            .collect();
        let rings = (0..cfg.n_layers)
            .map(|l| Ring::new((cfg.kernel_size - 1) * cfg.dilation(l) + 1, cfg.residual_width))
            .collect();
        Ok(Self {
            net,
            cond_proj: Arc::new(cond_proj),
            index: cond.frame_index().into(),
            mulaw: MuLawParams::default(),
            inputs: vec![F::zero(); cfg.kernel_size],
            rings,
            position: 0,
            prev: 0.0,
            h: vec![F::zero(); cfg.residual_width],
            z: vec![F::zero(); cfg.gate_width],
            gated: vec![F::zero(); cfg.residual_width],
            skip: vec![F::zero(); cfg.skip_width],
            hidden: vec![F::zero(); cfg.skip_width],
            logits: vec![F::zero(); cfg.quant_levels],
        })
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn remaining(&self) -> usize {
        self.index.len() - self.position
    }

    fn compute_logits(&mut self) {
        let net = self.net;
        let cfg = net.config();
        let (k, r) = (cfg.kernel_size, cfg.residual_width);
        let frame = self.index[self.position];

        self.inputs.rotate_left(1);
        self.inputs[k - 1] = F::of(self.prev);
        self.h.copy_from_slice(net.input_b.as_slice().expect("contiguous"));
        let win = net.input_w.as_slice().expect("contiguous");
        for (j, &x) in self.inputs.iter().enumerate() {
            for (h, &w) in self.h.iter_mut().zip(&win[j * r..(j + 1) * r]) {
                *h += x * w;
            }
        }

        self.skip.fill(F::zero());
        for (l, layer) in net.layers.iter().enumerate() {
            let d = cfg.dilation(l);
            let ring = &mut self.rings[l];
            ring.push(&self.h);
            self.z.copy_from_slice(self.cond_proj[l].row(frame).as_slice().expect("contiguous"));
            let wd = layer.dilated_w.as_slice().expect("contiguous");
            let tap = r * cfg.gate_width;
            for j in 0..k {
                vec_mat_acc(ring.back((k - 1 - j) * d), &wd[j * tap..(j + 1) * tap], &mut self.z);
            }
            for c in 0..r {
                self.gated[c] = self.z[c].tanh() * sigmoid(self.z[r + c]);
            }
            for (h, &b) in self.h.iter_mut().zip(layer.res_b.iter()) {
                *h += b;
            }
            vec_mat_acc(&self.gated, layer.res_w.as_slice().expect("contiguous"), &mut self.h);
            for (s, &b) in self.skip.iter_mut().zip(layer.skip_b.iter()) {
                *s += b;
            }
            vec_mat_acc(&self.gated, layer.skip_w.as_slice().expect("contiguous"), &mut self.skip);
        }

        for s in &mut self.skip {
            *s = s.max(F::zero());
        }
        self.hidden.copy_from_slice(net.out1_b.as_slice().expect("contiguous"));
        vec_mat_acc(&self.skip, net.out1_w.as_slice().expect("contiguous"), &mut self.hidden);
        for v in &mut self.hidden {
            *v = v.max(F::zero());
        }
        self.logits.copy_from_slice(net.out2_b.as_slice().expect("contiguous"));
        vec_mat_acc(&self.hidden, net.out2_w.as_slice().expect("contiguous"), &mut self.logits);
    }

    /// Emits the next sample and its code.
    pub fn step(&mut self, mode: SamplingMode) -> Result<(f64, u8)> {
        if self.remaining() == 0 {
            return Err(Error::invalid("generation stream exhausted"));
        }
        self.compute_logits();
        let pos = self.position;
        let logits: Vec<f64> = self.logits.iter().map(|v| v.f64()).collect();
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(Some(pos), "non-finite logits"));
        }
        let code = match mode {
            SamplingMode::Greedy => crate::tf::argmax(logits.iter().copied()),
            SamplingMode::Sample { seed } => draw(&logits, seed, pos),
        } as u8;
        let x = self.mulaw.decode_unchecked(code);
        self.prev = x;
        self.position += 1;
        Ok((x, code))
    }

    /// Emits up to `n` further samples.
    pub fn advance(&mut self, n: usize, mode: SamplingMode) -> Result<Vec<f64>> {
        let n = n.min(self.remaining());
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.step(mode)?.0);
        }
        Ok(out)
    }
}

fn draw(logits: &[f64], seed: u64, position: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(position as u64);
    let u: f64 = rng.random();
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let target = u * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc > target {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Autoregressively generates one sample per conditioning row.
pub fn generate<F: Real>(
    net: &WaveNet<F>,
    cond: &Conditioning<F>,
    mode: SamplingMode,
    direction: Direction,
) -> Result<Vec<f64>> {
    match direction {
        Direction::Forward => GenerationStream::new(net, cond)?.advance(cond.len(), mode),
        Direction::Reverse => {
            let mut out = GenerationStream::new(net, &cond.reversed())?.advance(cond.len(), mode)?;
            out.reverse();
            Ok(out)
        }
    }
}
