//! Synthetic cohort generation for desk-scale experiments.
//!
//! Cases are drawn with fixed flag prevalences (0.15 per cytogenetic flag,
//! 0.30 per mutation flag) and age uniform in [20, 88]. A latent risk score
//!
//! ```text
//! risk = sum over planted (effect_weight * value) + noise * N(0, 1)
//! ```
//!
//! uses flag values 0/1 and age rescaled to [0, 1]. The label rule is a mean
//! split: a case is "good" iff its risk is at or above the cohort mean risk,
//! and `dtd_days` is then drawn uniformly from [730, 2435] for good cases and
//! [0, 729] for poor ones, so binarizing at 730 days recovers the label
//! exactly. With no planted attributes and noise 1.0 the labels carry no
//! attribute signal at all; with strong weights and low noise the planted
//! attributes determine the label almost deterministically.
//!
//! The cohort inclusion rule (at least one mutation per case) is enforced by
//! redrawing a case's flags until it holds, which stays deterministic for a
//! fixed seed.

use crate::cohort::CaseRecord;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::schema::{self, canonical_index};

pub const CYTO_PREVALENCE: f64 = 0.15;
pub const MUTATION_PREVALENCE: f64 = 0.30;
pub const AGE_MIN: f64 = 20.0;
pub const AGE_MAX: f64 = 88.0;
pub const GOOD_DTD_RANGE: (u32, u32) = (730, 2435);
pub const POOR_DTD_RANGE: (u32, u32) = (0, 729);

/// Generates `n` cases with the documented prevalences and label rule.
///
/// `planted` lists (canonical attribute name, effect weight) pairs feeding
/// the latent risk; `noise` in [0, 1] scales an additive standard normal
/// term.
pub fn generate_synthetic_cohort(
    n: usize,
    planted: &[(String, f64)],
    noise: f64,
    rng: &mut SeededRng,
) -> Result<Vec<CaseRecord>> {
    if n == 0 {
        return Err(Error::InvalidConfig("synthetic cohort size must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidConfig(format!(
            "noise must be in [0, 1], got {noise}"
        )));
    }
    for (name, w) in planted {
        if canonical_index(name).is_none() {
            return Err(Error::InvalidConfig(format!(
                "planted attribute '{name}' is not canonical"
            )));
        }
        if !w.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "planted weight for '{name}' must be finite"
            )));
        }
    }

    struct Draft {
        age: f64,
        cyto: [bool; schema::NUM_CYTO],
        muts: [bool; schema::NUM_MUTATIONS],
        risk: f64,
    }

    let mut drafts = Vec::with_capacity(n);
    for _ in 0..n {
        let age = rng.uniform(AGE_MIN, AGE_MAX);
        let mut cyto = [false; schema::NUM_CYTO];
        let mut muts = [false; schema::NUM_MUTATIONS];
        loop {
            for flag in cyto.iter_mut() {
                *flag = rng.flip(CYTO_PREVALENCE);
            }
            for flag in muts.iter_mut() {
                *flag = rng.flip(MUTATION_PREVALENCE);
            }
            if muts.iter().any(|&m| m) {
                break;
            }
        }

        let mut risk = 0.0;
        for (name, weight) in planted {
            let value = if name == schema::AGE {
                (age - AGE_MIN) / (AGE_MAX - AGE_MIN)
            } else if let Some(i) = schema::CYTO_NAMES.iter().position(|c| c == name) {
                f64::from(cyto[i])
            } else {
                let i = schema::MUTATION_NAMES.iter().position(|m| m == name).unwrap();
                f64::from(muts[i])
            };
            risk += weight * value;
        }
        risk += noise * rng.normal();
        drafts.push(Draft { age, cyto, muts, risk });
    }

    let mean_risk: f64 = drafts.iter().map(|d| d.risk).sum::<f64>() / n as f64;

    let mut out = Vec::with_capacity(n);
    for (i, draft) in drafts.into_iter().enumerate() {
        let good = draft.risk >= mean_risk;
        let (lo, hi) = if good { GOOD_DTD_RANGE } else { POOR_DTD_RANGE };
        let dtd_days = lo + rng.index((hi - lo + 1) as usize) as u32;
        out.push(CaseRecord {
            case_id: format!("S{:04}", i + 1),
            age_years: draft.age,
            cyto: draft.cyto,
            muts: draft.muts,
            dtd_days,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{binarize_label, cohort_to_csv, parse_cohort, select_attributes, Label};
    use crate::normalize::NormStats;
    use crate::schema::AttributeSet;

    #[test]
    fn same_seed_same_cohort() {
        let planted = vec![("FLT3".to_string(), 2.0)];
        let a = generate_synthetic_cohort(50, &planted, 0.3, &mut SeededRng::new(5)).unwrap();
        let b = generate_synthetic_cohort(50, &planted, 0.3, &mut SeededRng::new(5)).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_cohort(50, &planted, 0.3, &mut SeededRng::new(6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn round_trips_through_cohort_csv() {
        let cohort =
            generate_synthetic_cohort(94, &[], 1.0, &mut SeededRng::new(1)).unwrap();
        assert_eq!(cohort.len(), 94);
        let parsed = parse_cohort(&cohort_to_csv(&cohort)).unwrap();
        assert_eq!(parsed.len(), 94);
        for rec in &parsed {
            assert!(rec.muts.iter().any(|&m| m), "inclusion rule violated");
            assert!((AGE_MIN..=AGE_MAX).contains(&rec.age_years));
        }
    }

    #[test]
    fn strong_single_attribute_predicts_label() {
        let planted = vec![("NPM1".to_string(), 4.0)];
        for seed in 0..5 {
            let cohort =
                generate_synthetic_cohort(200, &planted, 0.0, &mut SeededRng::new(seed)).unwrap();
            let correct = cohort
                .iter()
                .filter(|rec| {
                    let flag_says_good = rec.attribute_value("NPM1").unwrap() == 1.0;
                    let label = binarize_label(rec.dtd_days, 730);
                    flag_says_good == (label == Label::Good)
                })
                .count();
            let acc = correct as f64 / cohort.len() as f64;
            assert!(acc >= 0.95, "seed {seed}: single-column accuracy {acc}");
        }
    }

    /// Test-only logistic regression, full-batch gradient ascent.
    fn logistic_cv_accuracy(cohort: &[CaseRecord], k: usize, seed: u64) -> f64 {
        let set = AttributeSet::full34();
        let rows = select_attributes(cohort, &set);
        let labels: Vec<f64> = cohort
            .iter()
            .map(|r| binarize_label(r.dtd_days, 730).target())
            .collect();
        let mut order: Vec<usize> = (0..cohort.len()).collect();
        SeededRng::new(seed).shuffle(&mut order);

        let mut correct = 0usize;
        for fold in 0..k {
            let test: Vec<usize> =
                order.iter().copied().skip(fold).step_by(k).collect();
            let train: Vec<usize> =
                order.iter().copied().filter(|i| !test.contains(i)).collect();
            let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
            let stats = NormStats::fit(&train_rows).unwrap();
            let xs = stats.apply(&train_rows);
            let ys: Vec<f64> = train.iter().map(|&i| labels[i]).collect();

            let dim = xs[0].len();
            let mut w = vec![0.0; dim];
            let mut b = 0.0;
            for _ in 0..300 {
                let mut gw = vec![0.0; dim];
                let mut gb = 0.0;
                for (x, &y) in xs.iter().zip(ys.iter()) {
                    let z: f64 = x.iter().zip(w.iter()).map(|(a, c)| a * c).sum::<f64>() + b;
                    let p = 1.0 / (1.0 + (-z).exp());
                    let err = y - p;
                    for (g, xv) in gw.iter_mut().zip(x.iter()) {
                        *g += err * xv;
                    }
                    gb += err;
                }
                let lr = 0.5 / xs.len() as f64;
                for (wv, g) in w.iter_mut().zip(gw.iter()) {
                    *wv += lr * g;
                }
                b += lr * gb;
            }

            for &i in &test {
                let x = stats.apply_row(&rows[i]);
                let z: f64 = x.iter().zip(w.iter()).map(|(a, c)| a * c).sum::<f64>() + b;
                let pred_good = z >= 0.0;
                if pred_good == (labels[i] == 1.0) {
                    correct += 1;
                }
            }
        }
        correct as f64 / cohort.len() as f64
    }

    #[test]
    fn pure_noise_cohort_has_no_learnable_signal() {
        let mut gap_sum = 0.0;
        let seeds = 10;
        for seed in 0..seeds {
            let cohort =
                generate_synthetic_cohort(120, &[], 1.0, &mut SeededRng::new(seed)).unwrap();
            let good = cohort
                .iter()
                .filter(|r| binarize_label(r.dtd_days, 730) == Label::Good)
                .count() as f64;
            let majority = (good.max(cohort.len() as f64 - good)) / cohort.len() as f64;
            let acc = logistic_cv_accuracy(&cohort, 5, seed + 1000);
            gap_sum += (acc - majority).abs();
        }
        let mean_gap = gap_sum / seeds as f64;
        assert!(
            mean_gap <= 0.10,
            "mean |cv accuracy - majority rate| = {mean_gap}"
        );
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = SeededRng::new(0);
        assert!(generate_synthetic_cohort(0, &[], 0.5, &mut rng).is_err());
        assert!(generate_synthetic_cohort(10, &[], 1.5, &mut rng).is_err());
        let bad = vec![("NOPE".to_string(), 1.0)];
        assert!(generate_synthetic_cohort(10, &bad, 0.5, &mut rng).is_err());
    }
}
