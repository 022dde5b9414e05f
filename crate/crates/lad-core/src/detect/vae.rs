//! Variational autoencoder scored by reconstruction error.
//!
//! A small tanh MLP: encoder `d -> h -> (mu, logvar)` over a `z`-dimensional
//! latent, decoder `z -> h -> d`. Training minimizes per-feature mean
//! squared reconstruction error (decoding from a sampled latent) plus the
//! KL divergence of the encoded Gaussian to the standard normal, with
//! adaptive moment estimation. Scoring decodes from the latent mean with no
//! sampling, so scores are deterministic.
//!
//! Parameters live in one flat buffer; gradients are hand-derived and are
//! checked against central finite differences in the test suite.

use alloc::vec;
use alloc::vec::Vec;

use crate::detect::DetectorError;
use crate::math;
use crate::matrix::Matrix;
use crate::rng::RngStream;

/// Hyperparameters. `hidden`/`latent` default to `max(8, ceil(d/2))` and
/// `max(2, ceil(d/8))` when unset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct VaeParams {
    pub hidden: Option<usize>,
    pub latent: Option<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for VaeParams {
    fn default() -> Self {
        Self { hidden: None, latent: None, epochs: 50, batch_size: 32, learning_rate: 1e-3 }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Offsets of each weight block inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    d: usize,
    h: usize,
    z: usize,
}

impl Layout {
    // Blocks in order: W1 (h x d), b1, Wm (z x h), bm, Wv (z x h), bv,
    // W2 (h x z), b2, W3 (d x h), b3.
    fn w1(&self) -> usize {
        0
    }
    fn b1(&self) -> usize {
        self.h * self.d
    }
    fn wm(&self) -> usize {
        self.b1() + self.h
    }
    fn bm(&self) -> usize {
        self.wm() + self.z * self.h
    }
    fn wv(&self) -> usize {
        self.bm() + self.z
    }
    fn bv(&self) -> usize {
        self.wv() + self.z * self.h
    }
    fn w2(&self) -> usize {
        self.bv() + self.z
    }
    fn b2(&self) -> usize {
        self.w2() + self.h * self.z
    }
    fn w3(&self) -> usize {
        self.b2() + self.h
    }
    fn b3(&self) -> usize {
        self.w3() + self.d * self.h
    }
    fn total(&self) -> usize {
        self.b3() + self.d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    layout: Layout,
    params: Vec<f64>,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
    adam_t: u64,
    train_stream: RngStream,
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    epoch_losses: Vec<f64>,
}

struct Forward {
    h1: Vec<f64>,
    mu: Vec<f64>,
    logvar: Vec<f64>,
    latent: Vec<f64>,
    h2: Vec<f64>,
    recon: Vec<f64>,
}

impl VaeModel {
    /// Initializes weights (scaled-uniform per layer) and trains for the
    /// configured number of epochs.
    pub fn fit(data: &Matrix, params: &VaeParams, seed: u64) -> Result<Self, DetectorError> {
        let d = data.n_cols();
        if d < 1 {
            return Err(DetectorError::NotEnoughTrainingRows { needed: 1, got: 0 });
        }
        if data.n_rows() == 0 {
            return Err(DetectorError::NotEnoughTrainingRows { needed: 1, got: 0 });
        }
        let h = params.hidden.unwrap_or_else(|| (d.div_ceil(2)).max(8));
        let z = params.latent.unwrap_or_else(|| (d.div_ceil(8)).max(2));
        let layout = Layout { d, h, z };

        let mut init_stream = RngStream::derive(seed, "vae-init");
        let mut weights = vec![0.0; layout.total()];
        init_block(&mut weights, layout.w1(), layout.h * layout.d, layout.d, layout.h, &mut init_stream);
        init_block(&mut weights, layout.wm(), layout.z * layout.h, layout.h, layout.z, &mut init_stream);
        init_block(&mut weights, layout.wv(), layout.z * layout.h, layout.h, layout.z, &mut init_stream);
        init_block(&mut weights, layout.w2(), layout.h * layout.z, layout.z, layout.h, &mut init_stream);
        init_block(&mut weights, layout.w3(), layout.d * layout.h, layout.h, layout.d, &mut init_stream);

        let total = layout.total();
        let mut model = Self {
            layout,
            params: weights,
            adam_m: vec![0.0; total],
            adam_v: vec![0.0; total],
            adam_t: 0,
            train_stream: RngStream::derive(seed, "vae-train"),
            epochs: params.epochs,
            batch_size: params.batch_size.max(1),
            learning_rate: params.learning_rate,
            epoch_losses: Vec::new(),
        };
        model.train(data)?;
        Ok(model)
    }

    /// Continues training from the current weights and optimizer state on
    /// new data.
    pub fn finetune(&mut self, data: &Matrix) -> Result<(), DetectorError> {
        if data.n_cols() != self.layout.d {
            return Err(DetectorError::DimensionMismatch {
                expected: self.layout.d,
                got: data.n_cols(),
            });
        }
        self.train(data)
    }

    fn train(&mut self, data: &Matrix) -> Result<(), DetectorError> {
        let n = data.n_rows();
        for epoch in 0..self.epochs {
            let mut order: Vec<usize> = (0..n).collect();
            self.train_stream.shuffle(&mut order);
            let mut epoch_loss = 0.0;
            let mut batches = 0usize;
            for (batch_index, chunk) in order.chunks(self.batch_size).enumerate() {
                let mut eps = Matrix::zeros(chunk.len(), self.layout.z);
                for i in 0..chunk.len() {
                    for j in 0..self.layout.z {
                        eps.set(i, j, self.train_stream.standard_normal());
                    }
                }
                let (loss, grads) = self.loss_and_grads(data, chunk, &eps, true);
                if !loss.is_finite() {
                    return Err(DetectorError::NonFiniteLoss { epoch, batch: batch_index });
                }
                self.adam_step(&grads);
                epoch_loss += loss;
                batches += 1;
            }
            self.epoch_losses.push(epoch_loss / batches.max(1) as f64);
        }
        Ok(())
    }

    fn adam_step(&mut self, grads: &[f64]) {
        self.adam_t += 1;
        let t = self.adam_t as i32;
        let bias1 = 1.0 - libm::pow(ADAM_BETA1, t as f64);
        let bias2 = 1.0 - libm::pow(ADAM_BETA2, t as f64);
        for i in 0..self.params.len() {
            let g = grads[i];
            self.adam_m[i] = ADAM_BETA1 * self.adam_m[i] + (1.0 - ADAM_BETA1) * g;
            self.adam_v[i] = ADAM_BETA2 * self.adam_v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.adam_m[i] / bias1;
            let v_hat = self.adam_v[i] / bias2;
            self.params[i] -= self.learning_rate * m_hat / (math::sqrt(v_hat) + ADAM_EPS);
        }
    }

    fn forward(&self, x: &[f64], eps: Option<&[f64]>) -> Forward {
        let Layout { d, h, z } = self.layout;
        let p = &self.params;
        let l = self.layout;

        let mut h1 = vec![0.0; h];
        for u in 0..h {
            let mut a = p[l.b1() + u];
            for j in 0..d {
                a += p[l.w1() + u * d + j] * x[j];
            }
            h1[u] = math::tanh(a);
        }
        let mut mu = vec![0.0; z];
        let mut logvar = vec![0.0; z];
        for v in 0..z {
            let mut am = p[l.bm() + v];
            let mut av = p[l.bv() + v];
            for u in 0..h {
                am += p[l.wm() + v * h + u] * h1[u];
                av += p[l.wv() + v * h + u] * h1[u];
            }
            mu[v] = am;
            logvar[v] = av;
        }
        let latent: Vec<f64> = match eps {
            Some(e) => (0..z).map(|v| mu[v] + math::exp(0.5 * logvar[v]) * e[v]).collect(),
            None => mu.clone(),
        };
        let mut h2 = vec![0.0; h];
        for u in 0..h {
            let mut a = p[l.b2() + u];
            for v in 0..z {
                a += p[l.w2() + u * z + v] * latent[v];
            }
            h2[u] = math::tanh(a);
        }
        let mut recon = vec![0.0; d];
        for t in 0..d {
            let mut a = p[l.b3() + t];
            for u in 0..h {
                a += p[l.w3() + t * h + u] * h2[u];
            }
            recon[t] = a;
        }
        Forward { h1, mu, logvar, latent, h2, recon }
    }

    /// Mean loss over the given rows and its gradient with respect to every
    /// parameter. With `sample_latent`, each row decodes from
    /// `mu + exp(logvar/2) * eps_row` (the training path); otherwise from
    /// `mu`. Exposed so the finite-difference oracle can drive the exact
    /// training objective.
    pub fn loss_and_grads(
        &self,
        data: &Matrix,
        rows: &[usize],
        eps: &Matrix,
        sample_latent: bool,
    ) -> (f64, Vec<f64>) {
        let Layout { d, h, z } = self.layout;
        let l = self.layout;
        let p = &self.params;
        let mut grads = vec![0.0; l.total()];
        let mut loss = 0.0;
        let batch = rows.len() as f64;

        for (bi, &row) in rows.iter().enumerate() {
            let x = data.row(row);
            let eps_row = sample_latent.then(|| eps.row(bi));
            let f = self.forward(x, eps_row);

            let mut recon_err = 0.0;
            for t in 0..d {
                let delta = f.recon[t] - x[t];
                recon_err += delta * delta;
            }
            recon_err /= d as f64;
            let mut kl = 0.0;
            for v in 0..z {
                kl += 0.5 * (f.mu[v] * f.mu[v] + math::exp(f.logvar[v]) - f.logvar[v] - 1.0);
            }
            loss += recon_err + kl;

            // Backward pass, mirroring forward block by block.
            let mut d_recon = vec![0.0; d];
            for t in 0..d {
                d_recon[t] = 2.0 * (f.recon[t] - x[t]) / d as f64;
            }
            let mut d_h2 = vec![0.0; h];
            for t in 0..d {
                grads[l.b3() + t] += d_recon[t];
                for u in 0..h {
                    grads[l.w3() + t * h + u] += d_recon[t] * f.h2[u];
                    d_h2[u] += p[l.w3() + t * h + u] * d_recon[t];
                }
            }
            let mut d_latent = vec![0.0; z];
            for u in 0..h {
                let d_a2 = d_h2[u] * (1.0 - f.h2[u] * f.h2[u]);
                grads[l.b2() + u] += d_a2;
                for v in 0..z {
                    grads[l.w2() + u * z + v] += d_a2 * f.latent[v];
                    d_latent[v] += p[l.w2() + u * z + v] * d_a2;
                }
            }
            let mut d_mu = vec![0.0; z];
            let mut d_logvar = vec![0.0; z];
            for v in 0..z {
                d_mu[v] = d_latent[v] + f.mu[v];
                let kl_term = 0.5 * (math::exp(f.logvar[v]) - 1.0);
                d_logvar[v] = match eps_row {
                    Some(e) => d_latent[v] * e[v] * 0.5 * math::exp(0.5 * f.logvar[v]) + kl_term,
                    None => kl_term,
                };
            }
            let mut d_h1 = vec![0.0; h];
            for v in 0..z {
                grads[l.bm() + v] += d_mu[v];
                grads[l.bv() + v] += d_logvar[v];
                for u in 0..h {
                    grads[l.wm() + v * h + u] += d_mu[v] * f.h1[u];
                    grads[l.wv() + v * h + u] += d_logvar[v] * f.h1[u];
                    d_h1[u] += p[l.wm() + v * h + u] * d_mu[v] + p[l.wv() + v * h + u] * d_logvar[v];
                }
            }
            for u in 0..h {
                let d_a1 = d_h1[u] * (1.0 - f.h1[u] * f.h1[u]);
                grads[l.b1() + u] += d_a1;
                for j in 0..d {
                    grads[l.w1() + u * d + j] += d_a1 * x[j];
                }
            }
        }

        loss /= batch;
        for g in &mut grads {
            *g /= batch;
        }
        (loss, grads)
    }

    /// Deterministic anomaly score: per-feature mean squared reconstruction
    /// error decoding from the latent mean.
    pub fn score(&self, x: &[f64]) -> f64 {
        let f = self.forward(x, None);
        let mut err = 0.0;
        for (r, v) in f.recon.iter().zip(x) {
            let delta = r - v;
            err += delta * delta;
        }
        err / self.layout.d as f64
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Mean batch loss per epoch, across fit and every finetune.
    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }

    pub fn input_dim(&self) -> usize {
        self.layout.d
    }
}

/// Scaled-uniform init: `U(-s, s)` with `s = sqrt(6 / (fan_in + fan_out))`.
fn init_block(
    params: &mut [f64],
    offset: usize,
    len: usize,
    fan_in: usize,
    fan_out: usize,
    stream: &mut RngStream,
) {
    let scale = math::sqrt(6.0 / (fan_in + fan_out) as f64);
    for w in &mut params[offset..offset + len] {
        *w = (stream.unit_f64() * 2.0 - 1.0) * scale;
    }
}

/// KL divergence of `N(mu, exp(logvar))` to the standard normal.
pub fn kl_divergence(mu: &[f64], logvar: &[f64]) -> f64 {
    mu.iter()
        .zip(logvar)
        .map(|(m, lv)| 0.5 * (m * m + math::exp(*lv) - lv - 1.0))
        .sum()
}
