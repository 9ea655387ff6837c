//! From-scratch stacked-autoencoder classifier for binary prognosis from
//! clinical tabular features (cytogenetic abnormalities, age, and gene
//! mutations).
//!
//! The pipeline: encode each case as a fixed attribute vector, pretrain a
//! stack of sparse autoencoder layers without labels, fine-tune the encoder
//! stack plus a classifier head on the binarized survival label, and evaluate
//! with k-fold cross-validation. On top of that sit attribute ranking
//! (leave-one-attribute-out accuracy deltas) and group-ablation experiments.
//!
//! Everything stochastic takes an explicit [`SeededRng`]; identical inputs and
//! seed reproduce every report byte-for-byte.

pub mod autoencoder;
pub mod cohort;

#[cfg(test)]
pub(crate) mod test_util {
    /// Worst relative disagreement between analytic and numeric gradients.
    /// Components that are both effectively zero are compared absolutely.
    pub(crate) fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
        assert_eq!(analytic.len(), numeric.len());
        analytic
            .iter()
            .zip(numeric.iter())
            .map(|(&a, &n)| {
                let scale = a.abs().max(n.abs());
                if scale < 1e-7 {
                    (a - n).abs() * 1e2
                } else {
                    (a - n).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}
pub mod error;
pub mod eval;
pub mod matrix;
pub mod model_io;
pub mod network;
pub mod normalize;
pub mod report;
pub mod rng;
pub mod schema;
pub mod synthetic;

pub use autoencoder::{AutoencoderParams, SgdConfig, SparsityConfig};
pub use cohort::{binarize_label, parse_cohort, select_attributes, CaseRecord, Label};
pub use error::{Error, Result};
pub use eval::{
    compute_metrics, group_ablation, make_folds, rank_attributes, run_cv, ConfusionMatrix,
    CvConfig, EvalReport, FoldPlan,
};
pub use matrix::{matmul, sigmoid, Matrix, Vector};
pub use network::{
    finetune, pretrain, HeadKind, NetworkConfig, Prediction, StackedModel,
};
pub use normalize::NormStats;
pub use rng::SeededRng;
pub use schema::AttributeSet;
pub use synthetic::generate_synthetic_cohort;
