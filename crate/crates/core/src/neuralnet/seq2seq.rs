//! The 2-layer LSTM encoder–decoder with state-repetition bridging.
//!
//! Architecture: the encoder LSTM consumes the h-step scalar input; its final
//! hidden state (after inverted dropout during training) is repeated p times
//! as the decoder LSTM's input sequence (the decoder starts from a zero
//! state); each decoder output step (again dropout during training) feeds one
//! shared linear head producing one scalar per step.
//!
//! Because the decoder input is the same vector at every step, its input
//! projection `W_dec·x` is computed once per batch and reused for all p
//! steps; backward correspondingly contracts the summed preactivation
//! gradient with that shared input. This is an exact algebraic rewrite, not
//! an approximation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::lstm::{cell_backward, cell_forward, CellCache, LstmLayerParams};
use super::tensor::{add_matmul, add_matmul_pret, add_outer_acc, Mat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Seq2SeqModel {
    pub h: usize,
    pub p: usize,
    pub hidden: usize,
    pub dropout_rate: f64,
    pub encoder: LstmLayerParams,
    pub decoder: LstmLayerParams,
    /// Linear head hidden → 1.
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

/// Gradients in the same shapes as the parameters.
pub type Gradients = Seq2SeqModel;

/// Inverted-dropout masks for one forward pass: entries are 0 (dropped) or
/// 1/(1−rate) (kept). `encoder` applies to the encoder's final hidden state;
/// `decoder[t]` to the decoder output of step t.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub encoder: Mat,
    pub decoder: Vec<Mat>,
}

impl DropoutMasks {
    /// Draw masks for a batch of the given size. One Bernoulli(1−rate) draw
    /// per (sample, unit), encoder first, then decoder steps in order.
    pub fn draw(batch: usize, hidden: usize, p: usize, rate: f64, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / (1.0 - rate);
        let mut draw_mat = |rows: usize, cols: usize| {
            let mut m = Mat::zeros(rows, cols);
            for v in m.data.iter_mut() {
                *v = if rng.gen::<f64>() >= rate { scale } else { 0.0 };
            }
            m
        };
        let encoder = draw_mat(batch, hidden);
        let decoder = (0..p).map(|_| draw_mat(batch, hidden)).collect();
        DropoutMasks { encoder, decoder }
    }

    /// All-ones masks (inference / dropout disabled).
    pub fn ones(batch: usize, hidden: usize, p: usize) -> Self {
        let mut m = Mat::zeros(batch, hidden);
        m.fill(1.0);
        DropoutMasks { encoder: m.clone(), decoder: vec![m; p] }
    }
}

/// Everything backward needs from a forward pass.
pub struct ForwardCache {
    pub inputs: Mat, // (B × h)
    pub enc_steps: Vec<CellCache>,
    /// Encoder final hidden state after dropout (the decoder's shared input).
    pub enc_dropped: Mat,
    pub dec_steps: Vec<CellCache>,
    /// Decoder outputs after dropout, per step (each B × H).
    pub dec_dropped: Vec<Mat>,
    pub masks: DropoutMasks,
    pub predictions: Mat, // (B × p)
}

fn xavier_fill(m: &mut Mat, rng: &mut ChaCha8Rng) {
    // fan_in = cols, fan_out = rows.
    let limit = (6.0 / (m.rows + m.cols) as f64).sqrt();
    for v in m.data.iter_mut() {
        *v = rng.gen_range(-limit..limit);
    }
}

impl Seq2SeqModel {
    /// Xavier-uniform weights (per matrix, ±sqrt(6/(fan_in+fan_out))), zero
    /// biases except the forget-gate block at 1.0. Deterministic given `rng`.
    /// Draw order: encoder W, U; decoder W, U; head w.
    pub fn init(h: usize, p: usize, hidden: usize, dropout_rate: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut encoder = LstmLayerParams::zeros(1, hidden);
        let mut decoder = LstmLayerParams::zeros(hidden, hidden);
        xavier_fill(&mut encoder.w, rng);
        xavier_fill(&mut encoder.u, rng);
        xavier_fill(&mut decoder.w, rng);
        xavier_fill(&mut decoder.u, rng);
        for layer in [&mut encoder, &mut decoder] {
            for k in hidden..2 * hidden {
                layer.b[k] = 1.0; // forget-gate bias
            }
        }
        let limit = (6.0 / (hidden + 1) as f64).sqrt();
        let head_w = (0..hidden).map(|_| rng.gen_range(-limit..limit)).collect();
        Seq2SeqModel {
            h,
            p,
            hidden,
            dropout_rate,
            encoder,
            decoder,
            head_w,
            head_b: 0.0,
        }
    }

    /// All-zero parameters (used for gradient buffers and tests).
    pub fn zeros_like(&self) -> Seq2SeqModel {
        Seq2SeqModel {
            h: self.h,
            p: self.p,
            hidden: self.hidden,
            dropout_rate: self.dropout_rate,
            encoder: LstmLayerParams::zeros(1, self.hidden),
            decoder: LstmLayerParams::zeros(self.hidden, self.hidden),
            head_w: vec![0.0; self.hidden],
            head_b: 0.0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count() + self.head_w.len() + 1
    }

    /// Canonical flat parameter order: encoder W, U, b; decoder W, U, b;
    /// head w, head b — matrices row-major.
    pub fn get_weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in [&self.encoder, &self.decoder] {
            out.extend_from_slice(&layer.w.data);
            out.extend_from_slice(&layer.u.data);
            out.extend_from_slice(&layer.b);
        }
        out.extend_from_slice(&self.head_w);
        out.push(self.head_b);
        out
    }

    pub fn set_weights(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Data(format!(
                "weight vector length {} does not match model parameter count {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        let mut fill = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[off..off + dst.len()]);
            off += dst.len();
        };
        for layer in [&mut self.encoder, &mut self.decoder] {
            fill(&mut layer.w.data);
            fill(&mut layer.u.data);
            fill(&mut layer.b);
        }
        fill(&mut self.head_w);
        self.head_b = flat[off];
        Ok(())
    }

    /// Forward pass for a batch of inputs (B × h). With `training` true and a
    /// positive dropout rate, masks are drawn from `rng`; `training=false`
    /// never touches `rng`.
    pub fn forward(
        &self,
        inputs: &Mat,
        training: bool,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Mat, ForwardCache)> {
        if inputs.cols != self.h {
            return Err(Error::Data(format!(
                "forward: input width {} != h {}",
                inputs.cols, self.h
            )));
        }
        if inputs.rows == 0 {
            return Err(Error::Data("forward: empty batch".into()));
        }
        let batch = inputs.rows;
        let hd = self.hidden;
        let masks = if training && self.dropout_rate > 0.0 {
            let rng = rng.ok_or_else(|| {
                Error::Usage("forward: training with dropout requires an rng".into())
            })?;
            DropoutMasks::draw(batch, hd, self.p, self.dropout_rate, rng)
        } else {
            DropoutMasks::ones(batch, hd, self.p)
        };
        self.forward_with_masks(inputs, masks)
    }

    /// Forward with caller-provided dropout masks (deterministic replay; used
    /// by finite-difference verification of the dropout path).
    pub fn forward_with_masks(
        &self,
        inputs: &Mat,
        masks: DropoutMasks,
    ) -> Result<(Mat, ForwardCache)> {
        let batch = inputs.rows;
        let hd = self.hidden;

        let enc_wt = self.encoder.w.transposed();
        let enc_ut = self.encoder.u.transposed();
        let dec_wt = self.decoder.w.transposed();
        let dec_ut = self.decoder.u.transposed();

        // ---- encoder ----
        let mut enc_steps: Vec<CellCache> = Vec::with_capacity(self.h);
        let mut x_t = Mat::zeros(batch, 1);
        for t in 0..self.h {
            for b in 0..batch {
                x_t.data[b] = inputs.at(b, t);
            }
            let mut z = Mat::zeros(batch, 4 * hd);
            for b in 0..batch {
                z.row_mut(b).copy_from_slice(&self.encoder.b);
            }
            add_matmul_pret(&mut z, &x_t, &enc_wt);
            if let Some(prev) = enc_steps.last() {
                add_matmul_pret(&mut z, &prev.h, &enc_ut);
            }
            let c_prev = enc_steps.last().map(|s| &s.c);
            enc_steps.push(cell_forward(&z, c_prev, hd));
        }

        // ---- bridge: dropout, then repeat as decoder input ----
        let enc_final = &enc_steps.last().expect("h >= 1").h;
        let mut enc_dropped = Mat::zeros(batch, hd);
        for i in 0..batch * hd {
            enc_dropped.data[i] = enc_final.data[i] * masks.encoder.data[i];
        }

        // Shared decoder input projection, computed once.
        let mut zdec_x = Mat::zeros(batch, 4 * hd);
        add_matmul_pret(&mut zdec_x, &enc_dropped, &dec_wt);

        // ---- decoder + head ----
        let mut dec_steps: Vec<CellCache> = Vec::with_capacity(self.p);
        let mut dec_dropped: Vec<Mat> = Vec::with_capacity(self.p);
        let mut predictions = Mat::zeros(batch, self.p);
        for t in 0..self.p {
            let mut z = zdec_x.clone();
            for b in 0..batch {
                let zrow = z.row_mut(b);
                for (k, bv) in self.decoder.b.iter().enumerate() {
                    zrow[k] += bv;
                }
            }
            if let Some(prev) = dec_steps.last() {
                add_matmul_pret(&mut z, &prev.h, &dec_ut);
            }
            let c_prev = dec_steps.last().map(|s| &s.c);
            let step = cell_forward(&z, c_prev, hd);

            let mask = &masks.decoder[t];
            let mut dropped = Mat::zeros(batch, hd);
            for i in 0..batch * hd {
                dropped.data[i] = step.h.data[i] * mask.data[i];
            }
            for b in 0..batch {
                let drow = dropped.row(b);
                let mut y = self.head_b;
                for k in 0..hd {
                    y += self.head_w[k] * drow[k];
                }
                predictions.data[b * self.p + t] = y;
            }
            dec_steps.push(step);
            dec_dropped.push(dropped);
        }

        if !predictions.all_finite() {
            return Err(Error::Numeric(
                "forward pass produced non-finite predictions (diverged)".into(),
            ));
        }
        let cache = ForwardCache {
            inputs: inputs.clone(),
            enc_steps,
            enc_dropped,
            dec_steps,
            dec_dropped,
            masks,
            predictions: predictions.clone(),
        };
        Ok((predictions, cache))
    }

    /// Inference-only forward (no dropout, no cache retained).
    pub fn predict(&self, inputs: &Mat) -> Result<Mat> {
        Ok(self.forward(inputs, false, None)?.0)
    }

    /// Exact BPTT gradient of the loss whose prediction-gradient is `dpred`
    /// (B × p), for the pass recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache, dpred: &Mat) -> Result<Gradients> {
        if dpred.rows != cache.predictions.rows || dpred.cols != self.p {
            return Err(Error::Data("backward: dpred shape mismatch with cache".into()));
        }
        let batch = dpred.rows;
        let hd = self.hidden;
        let mut grads = self.zeros_like();

        // ---- head and decoder dropout ----
        // dh for each decoder step, from the shared linear head.
        let mut dec_dh: Vec<Mat> = (0..self.p).map(|_| Mat::zeros(batch, hd)).collect();
        for t in 0..self.p {
            let dropped = &cache.dec_dropped[t];
            let mask = &cache.masks.decoder[t];
            let dh = &mut dec_dh[t];
            for b in 0..batch {
                let g = dpred.at(b, t);
                grads.head_b += g;
                let drow = dropped.row(b);
                let dhrow = dh.row_mut(b);
                let mrow = mask.row(b);
                for k in 0..hd {
                    grads.head_w[k] += g * drow[k];
                    dhrow[k] = g * self.head_w[k] * mrow[k];
                }
            }
        }

        // ---- decoder BPTT (shared-input form) ----
        let mut dz_sum = Mat::zeros(batch, 4 * hd);
        let mut dh_next = Mat::zeros(batch, hd);
        let mut dc_next = Mat::zeros(batch, hd);
        for t in (0..self.p).rev() {
            let mut dh = dec_dh[t].clone();
            for i in 0..batch * hd {
                dh.data[i] += dh_next.data[i];
            }
            let c_prev = if t > 0 { Some(&cache.dec_steps[t - 1].c) } else { None };
            let (dz, dc_prev) = cell_backward(&cache.dec_steps[t], c_prev, &dh, &dc_next, hd);
            if t > 0 {
                add_outer_acc(&mut grads.decoder.u, &dz, &cache.dec_steps[t - 1].h);
            }
            for b in 0..batch {
                let zrow = dz.row(b);
                for k in 0..4 * hd {
                    grads.decoder.b[k] += zrow[k];
                }
            }
            for i in 0..batch * 4 * hd {
                dz_sum.data[i] += dz.data[i];
            }
            dh_next.fill(0.0);
            if t > 0 {
                add_matmul(&mut dh_next, &dz, &self.decoder.u);
            }
            dc_next = dc_prev;
        }
        // Shared input: dW_dec = Σ_t dz_tᵀ · enc_dropped; d(enc_dropped) = Σ_t dz_t · W_dec.
        add_outer_acc(&mut grads.decoder.w, &dz_sum, &cache.enc_dropped);
        let mut d_enc_dropped = Mat::zeros(batch, hd);
        add_matmul(&mut d_enc_dropped, &dz_sum, &self.decoder.w);

        // ---- encoder dropout ----
        let mut dh_enc = Mat::zeros(batch, hd);
        for i in 0..batch * hd {
            dh_enc.data[i] = d_enc_dropped.data[i] * cache.masks.encoder.data[i];
        }

        // ---- encoder BPTT ----
        let mut dc_in = Mat::zeros(batch, hd);
        let mut x_t = Mat::zeros(batch, 1);
        for t in (0..self.h).rev() {
            let c_prev = if t > 0 { Some(&cache.enc_steps[t - 1].c) } else { None };
            let (dz, dc_prev) = cell_backward(&cache.enc_steps[t], c_prev, &dh_enc, &dc_in, hd);
            for b in 0..batch {
                x_t.data[b] = cache.inputs.at(b, t);
            }
            add_outer_acc(&mut grads.encoder.w, &dz, &x_t);
            if t > 0 {
                add_outer_acc(&mut grads.encoder.u, &dz, &cache.enc_steps[t - 1].h);
            }
            for b in 0..batch {
                let zrow = dz.row(b);
                for k in 0..4 * hd {
                    grads.encoder.b[k] += zrow[k];
                }
            }
            dh_enc.fill(0.0);
            if t > 0 {
                add_matmul(&mut dh_enc, &dz, &self.encoder.u);
            }
            dc_in = dc_prev;
        }
        Ok(grads)
    }
}

/// Mean squared error over all B·p entries: (1/(B·p))·ΣΣ (pred − target)².
pub fn mse_loss(pred: &Mat, target: &Mat) -> Result<f64> {
    if pred.rows != target.rows || pred.cols != target.cols {
        return Err(Error::Data(format!(
            "mse_loss: shape mismatch ({}x{} vs {}x{})",
            pred.rows, pred.cols, target.rows, target.cols
        )));
    }
    let n = (pred.rows * pred.cols) as f64;
    let s: f64 = pred.data.iter().zip(&target.data).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / n)
}

/// Gradient of [`mse_loss`] w.r.t. the predictions: 2(pred − target)/(B·p).
pub fn mse_loss_grad(pred: &Mat, target: &Mat) -> Mat {
    let n = (pred.rows * pred.cols) as f64;
    let mut out = Mat::zeros(pred.rows, pred.cols);
    for i in 0..pred.data.len() {
        out.data[i] = 2.0 * (pred.data[i] - target.data[i]) / n;
    }
    out
}

/// Verification utility: max over all parameters of the relative difference
/// between the analytic gradient and central finite differences (ε = 1e-5,
/// absolute floor 1e-6) for the MSE loss on (x, y). With `masks` given, the
/// check runs through the dropout path with those masks replayed on every
/// perturbed evaluation.
pub fn finite_difference_max_err(
    model: &Seq2SeqModel,
    x: &Mat,
    y: &Mat,
    masks: Option<DropoutMasks>,
) -> f64 {
    let run = |m: &Seq2SeqModel| -> (Mat, ForwardCache) {
        match &masks {
            Some(mk) => m.forward_with_masks(x, mk.clone()).expect("forward"),
            None => m.forward(x, false, None).expect("forward"),
        }
    };
    let (pred, cache) = run(model);
    let analytic = model
        .backward(&cache, &mse_loss_grad(&pred, y))
        .expect("backward")
        .get_weights();
    let theta = model.get_weights();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let mut probe = model.clone();
        let mut tp = theta.clone();
        tp[i] += eps;
        probe.set_weights(&tp).expect("set");
        let lp = mse_loss(&run(&probe).0, y).expect("loss");
        tp[i] = theta[i] - eps;
        probe.set_weights(&tp).expect("set");
        let lm = mse_loss(&run(&probe).0, y).expect("loss");
        let fd = (lp - lm) / (2.0 * eps);
        let denom = analytic[i].abs().max(fd.abs()).max(1e-6);
        worst = worst.max((analytic[i] - fd).abs() / denom);
    }
    worst
}
