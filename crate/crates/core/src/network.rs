//! The stacked network: greedy layer-wise pretraining, supervised
//! fine-tuning of the encoder stack plus a classifier head, and prediction.
//!
//! Pretraining trains one sparse autoencoder per hidden layer, feeding each
//! layer's hidden representation to the next. Fine-tuning backpropagates the
//! supervised loss through the head and every encoder layer; the decoder
//! halves exist only for pretraining and are frozen afterwards. The per-batch
//! fine-tuning objective is
//!
//! ```text
//! 1/(2n) sum_i (score_i - target_i)^2
//!   + beta * sum over layers l, units j of KL(rho || rho_hat_lj)
//! ```
//!
//! with `rho_hat_lj` the batch-mean activation of unit `j` in layer `l`,
//! clamped exactly as in single-layer training.

use serde::{Deserialize, Serialize};

use crate::autoencoder::{
    ae_train_epoch, encode, kl_bernoulli, AutoencoderParams, SgdConfig, SparsityConfig,
    RHO_HAT_CLAMP,
};
use crate::cohort::{CaseRecord, Label};
use crate::error::{Error, Result};
use crate::matrix::{dot, init_weights, sigmoid_grad_from_output, sigmoid_scalar, Matrix, Vector};
use crate::normalize::NormStats;
use crate::rng::SeededRng;
use crate::schema::AttributeSet;

/// Classifier head type. The affine output is squashed through a sigmoid for
/// `Sigmoid`, left raw for `Linear`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Sigmoid,
    Linear,
}

/// Architecture and training settings for a stacked model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub head: HeadKind,
    pub sparsity: SparsityConfig,
    pub pretrain: SgdConfig,
    pub finetune: SgdConfig,
    /// Score at or above this predicts the good class.
    pub decision_threshold: f64,
    pub seed: u64,
}

impl NetworkConfig {
    /// Trainable defaults: the published 20-15-10 architecture with moderate
    /// SGD settings.
    pub fn defaults(input_dim: usize) -> Self {
        NetworkConfig {
            input_dim,
            hidden_sizes: vec![20, 15, 10],
            head: HeadKind::Sigmoid,
            sparsity: SparsityConfig::default(),
            pretrain: SgdConfig {
                learning_rate: 0.5,
                momentum: 0.9,
                batch_size: 10,
                epochs: 100,
            },
            finetune: SgdConfig {
                learning_rate: 0.5,
                momentum: 0.9,
                batch_size: 10,
                epochs: 200,
            },
            decision_threshold: 0.5,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be >= 1".into()));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.iter().any(|&h| h == 0) {
            return Err(Error::InvalidConfig(
                "hidden_sizes must be non-empty with every size >= 1".into(),
            ));
        }
        self.sparsity.validate()?;
        self.pretrain.validate()?;
        self.finetune.validate()?;
        if self.head == HeadKind::Sigmoid
            && !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "decision_threshold must be in (0,1) for a sigmoid head, got {}",
                self.decision_threshold
            )));
        }
        if !self.decision_threshold.is_finite() {
            return Err(Error::InvalidConfig("decision_threshold must be finite".into()));
        }
        Ok(())
    }
}

/// A classifier score and its thresholded label. Ties go to `Good`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub score: f64,
    pub label: Label,
}

/// Trained stack: encoder layers, classifier head, and the normalization
/// statistics and attribute set the model was fit with.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    pub layers: Vec<AutoencoderParams>,
    pub head_w: Vector,
    pub head_b: f64,
    pub config: NetworkConfig,
    pub norm_stats: NormStats,
    pub attributes: AttributeSet,
}

impl StackedModel {
    /// Assembles a model, checking that layer shapes chain from `input_dim`
    /// through `hidden_sizes` and that the head matches the last layer.
    pub fn new(
        layers: Vec<AutoencoderParams>,
        head_w: Vector,
        head_b: f64,
        config: NetworkConfig,
        norm_stats: NormStats,
        attributes: AttributeSet,
    ) -> Result<Self> {
        config.validate()?;
        attributes.validate()?;
        if layers.len() != config.hidden_sizes.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} layers, got {}",
                config.hidden_sizes.len(),
                layers.len()
            )));
        }
        let mut expected_visible = config.input_dim;
        for (i, (layer, &hidden)) in layers.iter().zip(config.hidden_sizes.iter()).enumerate() {
            layer.validate()?;
            if layer.visible() != expected_visible || layer.hidden() != hidden {
                return Err(Error::dims(
                    "stacked layer chain",
                    (expected_visible, hidden),
                    (layer.visible(), layer.hidden()),
                ));
            }
            let _ = i;
            expected_visible = hidden;
        }
        if head_w.len() != expected_visible {
            return Err(Error::dims(
                "classifier head",
                (1, expected_visible),
                (1, head_w.len()),
            ));
        }
        if !head_b.is_finite() {
            return Err(Error::InvalidConfig("head bias must be finite".into()));
        }
        if attributes.len() != config.input_dim {
            return Err(Error::InvalidConfig(format!(
                "attribute set '{}' has {} attributes but input_dim is {}",
                attributes.name(),
                attributes.len(),
                config.input_dim
            )));
        }
        if norm_stats.len() != config.input_dim {
            return Err(Error::InvalidConfig(format!(
                "normalization stats cover {} attributes but input_dim is {}",
                norm_stats.len(),
                config.input_dim
            )));
        }
        Ok(StackedModel {
            layers,
            head_w,
            head_b,
            config,
            norm_stats,
            attributes,
        })
    }

    /// Trains a model on a labeled cohort: select attributes, fit the
    /// normalizer on these records, pretrain, then fine-tune. Returns the
    /// model and the fine-tuning loss history.
    pub fn fit(
        records: &[CaseRecord],
        set: &AttributeSet,
        config: &NetworkConfig,
        label_threshold_days: u32,
        rng: &mut SeededRng,
    ) -> Result<(StackedModel, Vec<f64>)> {
        config.validate()?;
        if config.input_dim != set.len() {
            return Err(Error::InvalidConfig(format!(
                "input_dim {} does not match attribute set '{}' ({} attributes)",
                config.input_dim,
                set.name(),
                set.len()
            )));
        }
        if records.is_empty() {
            return Err(Error::EmptyInput("training cohort"));
        }

        let raw_rows = crate::cohort::select_attributes(records, set);
        let norm_stats = NormStats::fit(&raw_rows)?;
        let inputs: Vec<Vector> = norm_stats
            .apply(&raw_rows)
            .into_iter()
            .map(|row| Vector::from_vec(row).expect("normalized rows are finite"))
            .collect();

        let layers = pretrain(config, &inputs, rng)?;

        let last_hidden = *config.hidden_sizes.last().expect("validated non-empty");
        let head_w_matrix = init_weights(1, last_hidden, rng);
        let head_w = Vector::from_vec(head_w_matrix.data().to_vec()).expect("finite init");

        let mut model = StackedModel::new(
            layers,
            head_w,
            0.0,
            config.clone(),
            norm_stats,
            set.clone(),
        )?;

        let labeled: Vec<(Vector, f64)> = inputs
            .into_iter()
            .zip(records.iter())
            .map(|(x, rec)| (x, rec.label(label_threshold_days).target()))
            .collect();
        let history = finetune(&mut model, &labeled, rng)?;
        Ok((model, history))
    }

    /// Feature vector for one case in this model's attribute order,
    /// normalized with the model's training statistics.
    pub fn features_for(&self, record: &CaseRecord) -> Vector {
        let raw: Vec<f64> = self
            .attributes
            .attributes()
            .iter()
            .map(|name| record.attribute_value(name).expect("canonical attribute"))
            .collect();
        Vector::from_vec(self.norm_stats.apply_row(&raw)).expect("normalized rows are finite")
    }

    /// Predicts one case end-to-end (attribute selection plus normalization).
    pub fn predict_record(&self, record: &CaseRecord) -> Result<Prediction> {
        predict(self, &self.features_for(record))
    }
}

/// Greedy layer-wise unsupervised pretraining. Layer `k` trains on the
/// representation produced by layers `0..k`, for `config.pretrain.epochs`
/// epochs each. RNG order: layer init draws, then that layer's epoch
/// shuffles, then the next layer.
pub fn pretrain(
    config: &NetworkConfig,
    data: &[Vector],
    rng: &mut SeededRng,
) -> Result<Vec<AutoencoderParams>> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("pretraining data"));
    }
    for x in data {
        if x.len() != config.input_dim {
            return Err(Error::dims(
                "pretrain input",
                (config.input_dim, 1),
                (x.len(), 1),
            ));
        }
    }

    let mut layers = Vec::with_capacity(config.hidden_sizes.len());
    let mut representation: Vec<Vector> = data.to_vec();
    let mut visible = config.input_dim;
    for &hidden in &config.hidden_sizes {
        let mut params = AutoencoderParams::init(visible, hidden, rng);
        let mut velocity = AutoencoderParams::zeros_like(&params);
        for _ in 0..config.pretrain.epochs {
            ae_train_epoch(
                &mut params,
                &representation,
                &config.sparsity,
                &config.pretrain,
                &mut velocity,
                rng,
            )?;
        }
        representation = representation
            .iter()
            .map(|x| encode(&params, x))
            .collect::<Result<_>>()?;
        layers.push(params);
        visible = hidden;
    }
    Ok(layers)
}

/// Feedforward pass: encoder activations per layer plus the head score.
pub fn forward(m: &StackedModel, x: &Vector) -> Result<(Vec<Vector>, f64)> {
    if x.len() != m.config.input_dim {
        return Err(Error::dims("forward input", (m.config.input_dim, 1), (x.len(), 1)));
    }
    let mut activations = Vec::with_capacity(m.layers.len());
    let mut current = x.clone();
    for layer in &m.layers {
        current = encode(layer, &current)?;
        activations.push(current.clone());
    }
    let raw = dot(m.head_w.data(), current.data()) + m.head_b;
    let score = match m.config.head {
        HeadKind::Sigmoid => sigmoid_scalar(raw),
        HeadKind::Linear => raw,
    };
    Ok((activations, score))
}

/// Thresholded prediction; a score exactly at the threshold is `Good`.
pub fn predict(m: &StackedModel, x: &Vector) -> Result<Prediction> {
    let (_, score) = forward(m, x)?;
    let label = if score >= m.config.decision_threshold {
        Label::Good
    } else {
        Label::Poor
    };
    Ok(Prediction { score, label })
}

/// Gradients of the fine-tuning objective for one batch. Layer entries are
/// (encoder weight grad, encoder bias grad); decoders take no part.
#[derive(Debug, Clone)]
pub struct FinetuneGradient {
    pub layers: Vec<(Matrix, Vector)>,
    pub head_w: Vector,
    pub head_b: f64,
}

/// The fine-tuning objective evaluated on `data` as a single batch:
/// mean squared score error (1/2 factor) plus the KL sparsity penalty on
/// each layer's mean activations. Targets are 0 (poor) or 1 (good).
pub fn supervised_loss(m: &StackedModel, data: &[(Vector, f64)]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("supervised batch"));
    }
    let n = data.len() as f64;
    let mut mse = 0.0;
    let mut act_sums: Vec<Vec<f64>> = m
        .config
        .hidden_sizes
        .iter()
        .map(|&h| vec![0.0; h])
        .collect();
    for (x, target) in data {
        let (acts, score) = forward(m, x)?;
        let d = score - target;
        mse += d * d;
        for (sums, a) in act_sums.iter_mut().zip(acts.iter()) {
            for (s, v) in sums.iter_mut().zip(a.iter()) {
                *s += v;
            }
        }
    }
    mse /= 2.0 * n;

    let beta = m.config.sparsity.beta;
    let rho = m.config.sparsity.rho;
    let mut penalty = 0.0;
    for sums in &act_sums {
        for &s in sums {
            let q = (s / n).clamp(RHO_HAT_CLAMP, 1.0 - RHO_HAT_CLAMP);
            penalty += kl_bernoulli(rho, q);
        }
    }
    Ok(mse + beta * penalty)
}

/// Analytic gradient of [`supervised_loss`] over one batch, through the head
/// and every encoder layer, including the sparsity path.
pub fn finetune_gradient(m: &StackedModel, batch: &[(Vector, f64)]) -> Result<FinetuneGradient> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("supervised batch"));
    }
    let n = batch.len() as f64;
    let n_layers = m.layers.len();

    // Forward pass, keeping per-example activations and scores.
    let mut all_acts: Vec<Vec<Vector>> = Vec::with_capacity(batch.len());
    let mut scores = Vec::with_capacity(batch.len());
    for (x, _) in batch {
        let (acts, score) = forward(m, x)?;
        all_acts.push(acts);
        scores.push(score);
    }

    // Batch-mean activation per unit, with the same clamp rule as the loss;
    // clamped units contribute no sparsity gradient.
    let beta = m.config.sparsity.beta;
    let rho = m.config.sparsity.rho;
    let sparsity_grads: Vec<Vec<f64>> = (0..n_layers)
        .map(|l| {
            let h = m.config.hidden_sizes[l];
            (0..h)
                .map(|j| {
                    let mean: f64 =
                        all_acts.iter().map(|acts| acts[l].get(j)).sum::<f64>() / n;
                    if beta == 0.0 || mean < RHO_HAT_CLAMP || mean > 1.0 - RHO_HAT_CLAMP {
                        0.0
                    } else {
                        beta / n * (-rho / mean + (1.0 - rho) / (1.0 - mean))
                    }
                })
                .collect()
        })
        .collect();

    let mut grad = FinetuneGradient {
        layers: m
            .layers
            .iter()
            .map(|l| (Matrix::zeros(l.hidden(), l.visible()), Vector::zeros(l.hidden())))
            .collect(),
        head_w: Vector::zeros(m.head_w.len()),
        head_b: 0.0,
    };

    for ((x, target), (acts, &score)) in batch
        .iter()
        .zip(all_acts.iter().zip(scores.iter()))
    {
        let residual = (score - target) / n;
        let delta_head = match m.config.head {
            HeadKind::Sigmoid => residual * sigmoid_grad_from_output(score),
            HeadKind::Linear => residual,
        };
        let last = &acts[n_layers - 1];
        grad.head_w.add_scaled(last, delta_head);
        grad.head_b += delta_head;

        // Gradient flowing into the top layer's activations.
        let mut upstream: Vec<f64> =
            m.head_w.iter().map(|&w| w * delta_head).collect();
        for l in (0..n_layers).rev() {
            let a = &acts[l];
            let delta: Vec<f64> = (0..a.len())
                .map(|j| {
                    (upstream[j] + sparsity_grads[l][j])
                        * sigmoid_grad_from_output(a.get(j))
                })
                .collect();
            let prev: &[f64] = if l == 0 { x.data() } else { acts[l - 1].data() };
            grad.layers[l].0.add_outer(&delta, prev);
            for (g, d) in grad.layers[l].1.data_mut().iter_mut().zip(delta.iter()) {
                *g += d;
            }
            if l > 0 {
                let w = &m.layers[l].w_enc;
                upstream = (0..w.cols())
                    .map(|hprev| (0..w.rows()).map(|j| w.get(j, hprev) * delta[j]).sum())
                    .collect();
            }
        }
    }
    Ok(grad)
}

/// Supervised fine-tuning of the whole stack plus head with SGD and
/// classical momentum, per `m.config.finetune`. Returns the loss-per-epoch
/// history (evaluated on the full dataset after each epoch).
pub fn finetune(
    m: &mut StackedModel,
    data: &[(Vector, f64)],
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("fine-tuning data"));
    }
    for (x, target) in data {
        if x.len() != m.config.input_dim {
            return Err(Error::dims(
                "finetune input",
                (m.config.input_dim, 1),
                (x.len(), 1),
            ));
        }
        if !(*target == 0.0 || *target == 1.0) {
            return Err(Error::InvalidConfig(format!(
                "targets must be 0 or 1, got {target}"
            )));
        }
    }

    let opt = m.config.finetune;
    let mut vel_layers: Vec<(Matrix, Vector)> = m
        .layers
        .iter()
        .map(|l| (Matrix::zeros(l.hidden(), l.visible()), Vector::zeros(l.hidden())))
        .collect();
    let mut vel_head_w = Vector::zeros(m.head_w.len());
    let mut vel_head_b = 0.0;

    let mut history = Vec::with_capacity(opt.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch: Vec<(Vector, f64)> = Vec::with_capacity(opt.batch_size);
    for _ in 0..opt.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(opt.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let grad = finetune_gradient(m, &batch)?;
            for ((layer, vel), g) in m
                .layers
                .iter_mut()
                .zip(vel_layers.iter_mut())
                .zip(grad.layers.iter())
            {
                vel.0.scale_add(opt.momentum, &g.0, -opt.learning_rate);
                vel.1.scale_add(opt.momentum, &g.1, -opt.learning_rate);
                layer.w_enc.add_scaled(&vel.0, 1.0);
                layer.b_enc.add_scaled(&vel.1, 1.0);
            }
            vel_head_w.scale_add(opt.momentum, &grad.head_w, -opt.learning_rate);
            vel_head_b = opt.momentum * vel_head_b - opt.learning_rate * grad.head_b;
            m.head_w.add_scaled(&vel_head_w, 1.0);
            m.head_b += vel_head_b;
        }
        history.push(supervised_loss(m, data)?);
    }
    Ok(history)
}
