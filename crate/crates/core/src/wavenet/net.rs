use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};

use super::conditioning::Conditioning;
use super::params::WaveNet;
use super::real::{sigmoid, Real};
use crate::error::{Error, Result};

/// Intermediate activations kept for the backward pass.
struct Tape<F> {
    /// Input to each residual layer, `T × residual`.
    h: Vec<Array2<F>>,
    /// `tanh` and `sigmoid` halves of each gate.
    a: Vec<Array2<F>>,
    g: Vec<Array2<F>>,
    skip: Array2<F>,
    p: Array2<F>,
    logits: Array2<F>,
}

/// `dst[shift..] += src[..T-shift] · w`
fn causal_tap<F: Real>(src: &Array2<F>, w: ArrayView2<F>, shift: usize, dst: &mut Array2<F>) {
    let t = src.nrows();
    if shift >= t {
        return;
    }
    general_mat_mul(
        F::one(),
        &src.slice(s![..t - shift, ..]),
        &w,
        F::one(),
        &mut dst.slice_mut(s![shift.., ..]),
    );
}

fn relu<F: Real>(x: F) -> F {
    x.max(F::zero())
}

impl<F: Real> WaveNet<F> {
    fn check_inputs(&self, wave_in: &[F], cond: &Conditioning<F>) -> Result<()> {
        if wave_in.len() != cond.len() {
            return Err(Error::invalid(format!(
                "{} input samples but {} conditioning rows",
                wave_in.len(),
                cond.len()
            )));
        }
        if wave_in.is_empty() {
            return Err(Error::invalid("empty input sequence"));
        }
        if cond.channels() != self.config.cond_channels {
            return Err(Error::ShapeMismatch(format!(
                "conditioning has {} channels, network expects {}",
                cond.channels(),
                self.config.cond_channels
            )));
        }
        self.check_finite()
    }

    fn input_conv(&self, x: &[F]) -> Array2<F> {
        let k = self.config.kernel_size;
        let mut h = Array2::from_shape_fn((x.len(), self.config.residual_width), |(_, c)| {
            self.input_b[c]
        });
        for j in 0..k {
            let shift = k - 1 - j;
            let w = self.input_w.row(j);
            for t in shift..x.len() {
                let xv = x[t - shift];
                h.row_mut(t).scaled_add(xv, &w);
            }
        }
        h
    }

    /// Gate halves `(tanh(z_a), sigmoid(z_b))` of layer `l`.
    fn gate(&self, l: usize, h: &Array2<F>, cond: &Conditioning<F>) -> (Array2<F>, Array2<F>) {
        let layer = &self.layers[l];
        let (k, r) = (self.config.kernel_size, self.config.residual_width);
        let d = self.config.dilation(l);
        let cp = cond.frames().dot(&layer.cond_w) + &layer.dilated_b;
        let mut z = Array2::<F>::zeros((h.nrows(), self.config.gate_width));
        for (t, mut row) in z.rows_mut().into_iter().enumerate() {
            row.assign(&cp.row(cond.frame_of(t)));
        }
        for j in 0..k {
            causal_tap(h, layer.dilated_w.index_axis(Axis(0), j), (k - 1 - j) * d, &mut z);
        }
        let a = z.slice(s![.., ..r]).mapv(|v| v.tanh());
        let g = z.slice(s![.., r..]).mapv(sigmoid);
        (a, g)
    }

    fn run(&self, wave_in: &[F], cond: &Conditioning<F>, keep: bool) -> Tape<F> {
        let t = wave_in.len();
        let mut h = self.input_conv(wave_in);
        let mut skip = Array2::<F>::zeros((t, self.config.skip_width));
        let mut tape_h = Vec::new();
        let mut tape_a = Vec::new();
        let mut tape_g = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let (a, g) = self.gate(l, &h, cond);
            let gated = &a * &g;
            let next = &h + &gated.dot(&layer.res_w) + &layer.res_b;
            general_mat_mul(F::one(), &gated, &layer.skip_w, F::one(), &mut skip);
            skip += &layer.skip_b;
            let prev = std::mem::replace(&mut h, next);
            if keep {
                tape_h.push(prev);
                tape_a.push(a);
                tape_g.push(g);
            }
        }
        let p = skip.mapv(relu).dot(&self.out1_w) + &self.out1_b;
        let logits = p.mapv(relu).dot(&self.out2_w) + &self.out2_b;
        Tape {
            h: tape_h,
            a: tape_a,
            g: tape_g,
            skip,
            p,
            logits,
        }
    }

    /// Teacher-forced logits, `T × 256`. Row `t` depends on `wave_in[..=t]`,
    /// where `wave_in[t]` holds the previous sample (`wave_in[0] = 0`).
    pub fn logits(&self, wave_in: &[F], cond: &Conditioning<F>) -> Result<Array2<F>> {
        self.check_inputs(wave_in, cond)?;
        Ok(self.run(wave_in, cond, false).logits)
    }

    /// Smallest magnitude of any ReLU input in the output head; finite
    /// differences are only meaningful when this is well above the step size.
    #[cfg(test)]
    pub(crate) fn relu_margin(&self, wave_in: &[F], cond: &Conditioning<F>) -> f64 {
        let tape = self.run(wave_in, cond, false);
        tape.skip
            .iter()
            .chain(tape.p.iter())
            .map(|v| v.f64().abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Summed negative log-likelihood of `targets` and its gradient with
    /// respect to every parameter.
    pub fn nll_and_gradient(
        &self,
        wave_in: &[F],
        targets: &[u8],
        cond: &Conditioning<F>,
    ) -> Result<(f64, WaveNet<F>)> {
        self.check_inputs(wave_in, cond)?;
        if targets.len() != wave_in.len() {
            return Err(Error::invalid("targets and inputs differ in length"));
        }
        let tape = self.run(wave_in, cond, true);
        let (nll, dlogits) = nll_backward(&tape.logits, targets)?;
        Ok((nll, self.backward(&tape, wave_in, cond, dlogits)))
    }

    fn backward(
        &self,
        tape: &Tape<F>,
        wave_in: &[F],
        cond: &Conditioning<F>,
        dlogits: Array2<F>,
    ) -> WaveNet<F> {
        let cfg = self.config;
        let (k, r) = (cfg.kernel_size, cfg.residual_width);
        let t = wave_in.len();
        let mut grad = WaveNet::zeros(cfg).expect("validated config");

        let y2 = tape.p.mapv(relu);
        grad.out2_w = y2.t().dot(&dlogits);
        grad.out2_b = dlogits.sum_axis(Axis(0));
        let mut dp = dlogits.dot(&self.out2_w.t());
        Zip::from(&mut dp).and(&tape.p).for_each(|d, &p| {
            if p <= F::zero() {
                *d = F::zero();
            }
        });
        let y1 = tape.skip.mapv(relu);
        grad.out1_w = y1.t().dot(&dp);
        grad.out1_b = dp.sum_axis(Axis(0));
        let mut dskip = dp.dot(&self.out1_w.t());
        Zip::from(&mut dskip).and(&tape.skip).for_each(|d, &s| {
            if s <= F::zero() {
                *d = F::zero();
            }
        });
        let dskip_b = dskip.sum_axis(Axis(0));

        let mut dh = Array2::<F>::zeros((t, r));
        for l in (0..cfg.n_layers).rev() {
            let layer = &self.layers[l];
            let gl = &mut grad.layers[l];
            let (a, g) = (&tape.a[l], &tape.g[l]);
            let gated = a * g;
            gl.skip_w = gated.t().dot(&dskip);
            gl.skip_b = dskip_b.clone();
            gl.res_w = gated.t().dot(&dh);
            gl.res_b = dh.sum_axis(Axis(0));
            let mut dgated = dskip.dot(&layer.skip_w.t());
            general_mat_mul(F::one(), &dh, &layer.res_w.t(), F::one(), &mut dgated);

            let mut dz = Array2::<F>::zeros((t, cfg.gate_width));
            Zip::from(dz.slice_mut(s![.., ..r]))
                .and(&dgated)
                .and(a)
                .and(g)
                .for_each(|dz, &dg, &a, &g| *dz = dg * g * (F::one() - a * a));
            Zip::from(dz.slice_mut(s![.., r..]))
                .and(&dgated)
                .and(a)
                .and(g)
                .for_each(|dz, &dg, &a, &g| *dz = dg * a * g * (F::one() - g));

            gl.dilated_b = dz.sum_axis(Axis(0));
            let mut dcp = Array2::<F>::zeros((cond.frames().nrows(), cfg.gate_width));
            for (ti, row) in dz.rows().into_iter().enumerate() {
                dcp.row_mut(cond.frame_of(ti)).add_assign_row(&row);
            }
            gl.cond_w = cond.frames().t().dot(&dcp);

            let h = &tape.h[l];
            let d = cfg.dilation(l);
            for j in 0..k {
                let shift = (k - 1 - j) * d;
                if shift >= t {
                    continue;
                }
                let w = layer.dilated_w.index_axis(Axis(0), j);
                let mut gw = gl.dilated_w.index_axis_mut(Axis(0), j);
                general_mat_mul(
                    F::one(),
                    &h.slice(s![..t - shift, ..]).t(),
                    &dz.slice(s![shift.., ..]),
                    F::zero(),
                    &mut gw,
                );
                general_mat_mul(
                    F::one(),
                    &dz.slice(s![shift.., ..]),
                    &w.t(),
                    F::one(),
                    &mut dh.slice_mut(s![..t - shift, ..]),
                );
            }
        }

        grad.input_b = dh.sum_axis(Axis(0));
        for j in 0..k {
            let shift = k - 1 - j;
            let mut acc = Array1::<F>::zeros(r);
            for ti in shift..t {
                acc.scaled_add(wave_in[ti - shift], &dh.row(ti));
            }
            grad.input_w.row_mut(j).assign(&acc);
        }
        grad
    }
}

trait AddRow<F> {
    fn add_assign_row(&mut self, row: &ndarray::ArrayView1<F>);
}

impl<F: Real> AddRow<F> for ndarray::ArrayViewMut1<'_, F> {
    fn add_assign_row(&mut self, row: &ndarray::ArrayView1<F>) {
        Zip::from(self).and(row).for_each(|a, &b| *a += b);
    }
}

/// Summed NLL of `targets` under row-wise softmax of `logits`, and the
/// gradient of that sum with respect to the logits.
fn nll_backward<F: Real>(logits: &Array2<F>, targets: &[u8]) -> Result<(f64, Array2<F>)> {
    let mut grad = Array2::<F>::zeros(logits.dim());
    let mut total = 0.0f64;
    for (t, (row, mut g)) in logits.rows().into_iter().zip(grad.rows_mut()).enumerate() {
        let lse = log_sum_exp(row.iter().map(|v| v.f64()));
        let target = targets[t] as usize;
        if target >= row.len() {
            return Err(Error::invalid(format!("target code {target} out of range")));
        }
        let nll = lse - row[target].f64();
        if !nll.is_finite() {
            return Err(Error::numeric(Some(t), "non-finite loss"));
        }
        total += nll;
        for (gv, &v) in g.iter_mut().zip(row.iter()) {
            *gv = F::of((v.f64() - lse).exp());
        }
        g[target] -= F::one();
    }
    Ok((total, grad))
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Row-wise softmax.
pub fn softmax_rows<F: Real>(logits: &Array2<F>) -> Array2<f64> {
    let mut out = logits.mapv(|v| v.f64());
    for mut row in out.rows_mut() {
        let lse = log_sum_exp(row.iter().copied());
        row.mapv_inplace(|v| (v - lse).exp());
    }
    out
}

/// Teacher-forced logits of `weights` on `wave_in`.
pub fn wavenet_forward<F: Real>(
    wave_in: &[F],
    cond: &Conditioning<F>,
    weights: &WaveNet<F>,
) -> Result<Array2<F>> {
    weights.logits(wave_in, cond)
}
