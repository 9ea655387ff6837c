//! Versioned model serialization.
//!
//! A model file is a self-describing JSON document with fields
//! `format_version`, `attribute_set`, `config`, `norm_stats`, `layers`, and
//! `head`. Weights round-trip exactly: the writer emits the shortest decimal
//! that parses back to the identical `f64`.

use serde::{Deserialize, Serialize};

use crate::autoencoder::AutoencoderParams;
use crate::error::{Error, Result};
use crate::matrix::Vector;
use crate::network::{NetworkConfig, StackedModel};
use crate::normalize::NormStats;
use crate::schema::AttributeSet;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct HeadDoc {
    w: Vector,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    attribute_set: AttributeSet,
    config: NetworkConfig,
    norm_stats: NormStats,
    layers: Vec<AutoencoderParams>,
    head: HeadDoc,
}

/// Serializes a trained model. Fails if any parameter is non-finite (JSON
/// has no representation for NaN or infinity, and such a model is broken
/// anyway).
pub fn save_model(m: &StackedModel) -> Result<String> {
    let finite = m
        .layers
        .iter()
        .all(|l| {
            l.w_enc.data().iter().all(|v| v.is_finite())
                && l.b_enc.data().iter().all(|v| v.is_finite())
                && l.w_dec.data().iter().all(|v| v.is_finite())
                && l.b_dec.data().iter().all(|v| v.is_finite())
        })
        && m.head_w.data().iter().all(|v| v.is_finite())
        && m.head_b.is_finite();
    if !finite {
        return Err(Error::ModelFormat(
            "model contains non-finite parameters; refusing to serialize".into(),
        ));
    }

    let doc = ModelDoc {
        format_version: MODEL_FORMAT_VERSION,
        attribute_set: m.attributes.clone(),
        config: m.config.clone(),
        norm_stats: m.norm_stats.clone(),
        layers: m.layers.clone(),
        head: HeadDoc { w: m.head_w.clone(), b: m.head_b },
    };
    serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::ModelFormat(format!("serialization failed: {e}")))
}

/// Parses and validates a model file, rejecting unknown versions and
/// schema-invalid documents with the reason.
pub fn load_model(text: &str) -> Result<StackedModel> {
    // Read the version first so a wrong-version file gets a version error
    // rather than a generic schema one.
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::ModelFormat(format!("not a valid model file: {e}")))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(MODEL_FORMAT_VERSION) => {}
        Some(v) => {
            return Err(Error::ModelFormat(format!(
                "unsupported format_version {v} (this build reads version {MODEL_FORMAT_VERSION})"
            )))
        }
        None => {
            return Err(Error::ModelFormat(
                "missing or malformed format_version field".into(),
            ))
        }
    }

    let doc: ModelDoc = serde_json::from_value(value)
        .map_err(|e| Error::ModelFormat(format!("schema mismatch: {e}")))?;
    StackedModel::new(
        doc.layers,
        doc.head.w,
        doc.head.b,
        doc.config,
        doc.norm_stats,
        doc.attribute_set,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::predict;
    use crate::rng::SeededRng;
    use crate::schema::AttributeSet;
    use crate::synthetic::generate_synthetic_cohort;

    fn trained_model(seed: u64) -> StackedModel {
        let mut rng = SeededRng::new(seed);
        let cohort = generate_synthetic_cohort(
            40,
            &[("FLT3".to_string(), 3.0)],
            0.2,
            &mut rng,
        )
        .unwrap();
        let mut cfg = NetworkConfig::defaults(34);
        cfg.hidden_sizes = vec![6, 4];
        cfg.pretrain.epochs = 2;
        cfg.finetune.epochs = 5;
        StackedModel::fit(&cohort, &AttributeSet::full34(), &cfg, 730, &mut rng)
            .unwrap()
            .0
    }

    #[test]
    fn round_trip_is_exact() {
        let m = trained_model(1);
        let text = save_model(&m).unwrap();
        let loaded = load_model(&text).unwrap();
        assert_eq!(m.layers, loaded.layers);
        assert_eq!(m.head_w, loaded.head_w);
        assert_eq!(m.head_b, loaded.head_b);
        assert_eq!(m.config, loaded.config);
        assert_eq!(m.norm_stats, loaded.norm_stats);
        assert_eq!(m.attributes, loaded.attributes);
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let m = trained_model(2);
        let loaded = load_model(&save_model(&m).unwrap()).unwrap();
        let mut rng = SeededRng::new(3);
        for _ in 0..10 {
            let x = crate::matrix::Vector::from_vec(
                (0..34).map(|_| rng.uniform(0.0, 1.0)).collect(),
            )
            .unwrap();
            assert_eq!(predict(&m, &x).unwrap(), predict(&loaded, &x).unwrap());
        }
    }

    #[test]
    fn wrong_version_is_an_explicit_error() {
        let m = trained_model(4);
        let text = save_model(&m).unwrap().replace(
            "\"format_version\": 1",
            "\"format_version\": 99",
        );
        let err = load_model(&text).unwrap_err().to_string();
        assert!(err.contains("format_version 99"), "{err}");
    }

    #[test]
    fn truncated_file_is_rejected_with_reason() {
        let m = trained_model(5);
        let text = save_model(&m).unwrap();
        let err = load_model(&text[..text.len() / 2]).unwrap_err().to_string();
        assert!(err.contains("not a valid model file"), "{err}");
    }

    #[test]
    fn schema_violation_is_rejected() {
        let m = trained_model(6);
        let text = save_model(&m).unwrap().replace("\"head\"", "\"haed\"");
        let err = load_model(&text).unwrap_err().to_string();
        assert!(err.contains("schema") || err.contains("missing"), "{err}");
    }
}
