//! A single sparse autoencoder layer.
//!
//! The layer maps a visible vector through a sigmoid hidden layer and back:
//! `h = sigmoid(w_enc x + b_enc)`, `y = sigmoid(w_dec h + b_dec)`. Inputs are
//! expected in `[0, 1]`, which is why the decoder is also sigmoid.
//!
//! The training objective is mean squared reconstruction error with a KL
//! sparsity penalty on the batch-mean hidden activations:
//!
//! ```text
//! L = 1/(2n) sum_i ||y_i - x_i||^2  +  beta * sum_j KL(rho || rho_hat_j)
//! KL(rho || q) = rho ln(rho/q) + (1 - rho) ln((1 - rho)/(1 - q))
//! ```
//!
//! `rho_hat_j` is clamped to `[1e-6, 1 - 1e-6]` before the logs so dead units
//! cannot produce infinities; the gradient treats a clamped unit as having
//! zero sparsity derivative, consistent with the clamp.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{init_weights, sigmoid_grad_from_output, sigmoid_scalar, Matrix, Vector};
use crate::rng::SeededRng;

pub(crate) const RHO_HAT_CLAMP: f64 = 1e-6;

/// Parameters of one autoencoder layer. Also used as the container for
/// gradients and momentum velocities, which share the same shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderParams {
    /// Encoder weights, hidden x visible.
    pub w_enc: Matrix,
    /// Encoder bias, length hidden.
    pub b_enc: Vector,
    /// Decoder weights, visible x hidden.
    pub w_dec: Matrix,
    /// Decoder bias, length visible.
    pub b_dec: Vector,
}

impl AutoencoderParams {
    /// Fresh layer with uniform `[-1/sqrt(fan_in), +1/sqrt(fan_in)]` weights
    /// and zero biases. Draw order: encoder weights, then decoder weights.
    pub fn init(visible: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        AutoencoderParams {
            w_enc: init_weights(hidden, visible, rng),
            b_enc: Vector::zeros(hidden),
            w_dec: init_weights(visible, hidden, rng),
            b_dec: Vector::zeros(visible),
        }
    }

    /// All-zero parameters with the given shape (gradient / velocity buffer).
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        AutoencoderParams {
            w_enc: Matrix::zeros(hidden, visible),
            b_enc: Vector::zeros(hidden),
            w_dec: Matrix::zeros(visible, hidden),
            b_dec: Vector::zeros(visible),
        }
    }

    pub fn zeros_like(other: &AutoencoderParams) -> Self {
        Self::zeros(other.visible(), other.hidden())
    }

    pub fn visible(&self) -> usize {
        self.w_enc.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_enc.rows()
    }

    /// Checks the shape chain between the four parameter blocks.
    pub fn validate(&self) -> Result<()> {
        let ok = self.w_enc.rows() == self.b_enc.len()
            && self.w_dec.rows() == self.b_dec.len()
            && self.w_enc.cols() == self.w_dec.rows()
            && self.w_enc.rows() == self.w_dec.cols();
        if ok {
            Ok(())
        } else {
            Err(Error::dims("autoencoder params", self.w_enc.shape(), self.w_dec.shape()))
        }
    }

    fn add_scaled(&mut self, other: &AutoencoderParams, scale: f64) {
        self.w_enc.add_scaled(&other.w_enc, scale);
        self.b_enc.add_scaled(&other.b_enc, scale);
        self.w_dec.add_scaled(&other.w_dec, scale);
        self.b_dec.add_scaled(&other.b_dec, scale);
    }

    fn scale_add(&mut self, momentum: f64, other: &AutoencoderParams, scale: f64) {
        self.w_enc.scale_add(momentum, &other.w_enc, scale);
        self.b_enc.scale_add(momentum, &other.b_enc, scale);
        self.w_dec.scale_add(momentum, &other.w_dec, scale);
        self.b_dec.scale_add(momentum, &other.b_dec, scale);
    }
}

/// Sparsity penalty settings: target mean activation `rho` and weight `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityConfig {
    pub rho: f64,
    pub beta: f64,
}

impl Default for SparsityConfig {
    fn default() -> Self {
        SparsityConfig { rho: 0.05, beta: 0.1 }
    }
}

impl SparsityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sparsity rho must be in (0,1), got {}",
                self.rho
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sparsity beta must be >= 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Plain SGD-with-momentum settings.
///
/// `learning_rate = 0` is accepted (it makes the update a no-op, which the
/// tests rely on), as is `momentum = 1.0` even though a non-decaying velocity
/// usually diverges; callers choosing it get exactly what they asked for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must be in [0,1], got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Hidden activation `sigmoid(w_enc x + b_enc)`.
pub fn encode(p: &AutoencoderParams, x: &Vector) -> Result<Vector> {
    let mut z = p.w_enc.mul_vec(x)?;
    for (zv, b) in z.data_mut().iter_mut().zip(p.b_enc.iter()) {
        *zv = sigmoid_scalar(*zv + b);
    }
    Ok(z)
}

/// Reconstruction `sigmoid(w_dec h + b_dec)`.
pub fn decode(p: &AutoencoderParams, h: &Vector) -> Result<Vector> {
    let mut z = p.w_dec.mul_vec(h)?;
    for (zv, b) in z.data_mut().iter_mut().zip(p.b_dec.iter()) {
        *zv = sigmoid_scalar(*zv + b);
    }
    Ok(z)
}

/// KL divergence between Bernoulli(rho) and Bernoulli(q), `q` pre-clamped.
pub(crate) fn kl_bernoulli(rho: f64, q: f64) -> f64 {
    rho * (rho / q).ln() + (1.0 - rho) * ((1.0 - rho) / (1.0 - q)).ln()
}

struct BatchForward {
    activations: Vec<Vector>,
    reconstructions: Vec<Vector>,
    /// Batch-mean hidden activation per unit, after clamping.
    rho_hat: Vec<f64>,
    /// Units whose raw mean fell outside the clamp window.
    clamped: Vec<bool>,
}

fn forward_batch(p: &AutoencoderParams, batch: &[Vector]) -> Result<BatchForward> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("autoencoder batch"));
    }
    let n = batch.len() as f64;
    let hidden = p.hidden();
    let mut activations = Vec::with_capacity(batch.len());
    let mut reconstructions = Vec::with_capacity(batch.len());
    let mut rho_hat = vec![0.0; hidden];
    for x in batch {
        let a = encode(p, x)?;
        let y = decode(p, &a)?;
        for (acc, av) in rho_hat.iter_mut().zip(a.iter()) {
            *acc += av / n;
        }
        activations.push(a);
        reconstructions.push(y);
    }
    let mut clamped = vec![false; hidden];
    for (q, c) in rho_hat.iter_mut().zip(clamped.iter_mut()) {
        if *q < RHO_HAT_CLAMP {
            *q = RHO_HAT_CLAMP;
            *c = true;
        } else if *q > 1.0 - RHO_HAT_CLAMP {
            *q = 1.0 - RHO_HAT_CLAMP;
            *c = true;
        }
    }
    Ok(BatchForward {
        activations,
        reconstructions,
        rho_hat,
        clamped,
    })
}

/// Batch objective: mean squared reconstruction error (with the 1/2 factor)
/// plus the KL sparsity penalty.
pub fn ae_loss(p: &AutoencoderParams, batch: &[Vector], s: &SparsityConfig) -> Result<f64> {
    let fwd = forward_batch(p, batch)?;
    let n = batch.len() as f64;
    let mut recon = 0.0;
    for (x, y) in batch.iter().zip(fwd.reconstructions.iter()) {
        for (xv, yv) in x.iter().zip(y.iter()) {
            let d = yv - xv;
            recon += d * d;
        }
    }
    recon /= 2.0 * n;
    let penalty: f64 = fwd.rho_hat.iter().map(|&q| kl_bernoulli(s.rho, q)).sum();
    Ok(recon + s.beta * penalty)
}

/// Analytic gradient of [`ae_loss`] with respect to every parameter,
/// including the sparsity term's path through the batch-mean activations.
pub fn ae_gradient(
    p: &AutoencoderParams,
    batch: &[Vector],
    s: &SparsityConfig,
) -> Result<AutoencoderParams> {
    let fwd = forward_batch(p, batch)?;
    let n = batch.len() as f64;
    let hidden = p.hidden();
    let mut grad = AutoencoderParams::zeros_like(p);

    // d(penalty)/d(a_ij) = beta/n * (-rho/q_j + (1-rho)/(1-q_j)); zero where
    // the clamp was active.
    let sparsity_grad: Vec<f64> = fwd
        .rho_hat
        .iter()
        .zip(fwd.clamped.iter())
        .map(|(&q, &was_clamped)| {
            if was_clamped || s.beta == 0.0 {
                0.0
            } else {
                s.beta / n * (-s.rho / q + (1.0 - s.rho) / (1.0 - q))
            }
        })
        .collect();

    let mut delta_dec = vec![0.0; p.visible()];
    let mut delta_enc = vec![0.0; hidden];
    for (x, (a, y)) in batch
        .iter()
        .zip(fwd.activations.iter().zip(fwd.reconstructions.iter()))
    {
        for (v, slot) in delta_dec.iter_mut().enumerate() {
            let yv = y.get(v);
            *slot = (yv - x.get(v)) / n * sigmoid_grad_from_output(yv);
        }
        grad.w_dec.add_outer(&delta_dec, a.data());
        for (g, d) in grad.b_dec.data_mut().iter_mut().zip(delta_dec.iter()) {
            *g += d;
        }

        for (h, slot) in delta_enc.iter_mut().enumerate() {
            let mut back = sparsity_grad[h];
            for (v, d) in delta_dec.iter().enumerate() {
                back += p.w_dec.get(v, h) * d;
            }
            *slot = back * sigmoid_grad_from_output(a.get(h));
        }
        grad.w_enc.add_outer(&delta_enc, x.data());
        for (g, d) in grad.b_enc.data_mut().iter_mut().zip(delta_enc.iter()) {
            *g += d;
        }
    }
    Ok(grad)
}

/// One unsupervised epoch of SGD with classical momentum.
///
/// The data order is shuffled with `rng`, then processed in batches of
/// `o.batch_size`; a final short batch is trained on rather than dropped.
/// Per batch: `velocity <- momentum * velocity - learning_rate * gradient`,
/// then `params <- params + velocity`.
pub fn ae_train_epoch(
    p: &mut AutoencoderParams,
    data: &[Vector],
    s: &SparsityConfig,
    o: &SgdConfig,
    velocity: &mut AutoencoderParams,
    rng: &mut SeededRng,
) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyInput("autoencoder training data"));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    rng.shuffle(&mut order);
    let mut batch: Vec<Vector> = Vec::with_capacity(o.batch_size);
    for chunk in order.chunks(o.batch_size) {
        batch.clear();
        batch.extend(chunk.iter().map(|&i| data[i].clone()));
        let grad = ae_gradient(p, &batch, s)?;
        velocity.scale_add(o.momentum, &grad, -o.learning_rate);
        p.add_scaled(velocity, 1.0);
    }
    Ok(())
}
