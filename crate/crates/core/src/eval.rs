//! Cross-validation harness, confusion-matrix metrics, attribute ranking,
//! and group-ablation experiments.
//!
//! Conventions fixed here:
//! - The headline accuracy of a CV run is the unweighted mean of per-fold
//!   accuracies (the convention the published fold tables use); the pooled
//!   accuracy over all cases is reported separately.
//! - Sensitivity and specificity come from the confusion matrix pooled
//!   across folds, with the good-prognosis class as positive.
//! - Per-fold training derives an independent sub-seed from the master seed,
//!   so folds (and ranking/ablation arms) can run in parallel without
//!   changing any result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{CaseRecord, Label};
use crate::error::{Error, Result};
use crate::network::{NetworkConfig, StackedModel};
use crate::normalize::NormStats;
use crate::rng::{fnv1a, SeededRng};
use crate::schema::{canonical_index, AttributeSet};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Assignment of every case to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    /// Fold index in `[0, k)` per case.
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Stable content hash of the plan, for cross-run comparisons.
    pub fn hash(&self) -> String {
        let mut bytes = Vec::with_capacity(8 + 8 * self.assignment.len());
        bytes.extend_from_slice(&(self.k as u64).to_le_bytes());
        for &f in &self.assignment {
            bytes.extend_from_slice(&(f as u64).to_le_bytes());
        }
        format!("{:016x}", fnv1a(&bytes))
    }
}

/// Shuffled partition of `n` cases into `k` near-equal folds.
///
/// With `stratified`, each class is dealt separately (round-robin with a
/// rolling fold cursor), so per-fold class counts stay within one case of
/// even while overall fold sizes still differ by at most one.
pub fn make_folds(
    n: usize,
    k: usize,
    labels: &[Label],
    rng: &mut SeededRng,
    stratified: bool,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidConfig(format!(
            "cannot split {n} cases into {k} folds"
        )));
    }
    if labels.len() != n {
        return Err(Error::InvalidConfig(format!(
            "{} labels for {n} cases",
            labels.len()
        )));
    }

    let mut assignment = vec![0usize; n];
    if stratified {
        let mut cursor = 0usize;
        for class in [Label::Good, Label::Poor] {
            let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
            rng.shuffle(&mut members);
            for idx in members {
                assignment[idx] = cursor % k;
                cursor += 1;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        for (pos, &idx) in order.iter().enumerate() {
            assignment[idx] = pos % k;
        }
    }
    Ok(FoldPlan { k, assignment })
}

/// Counts with the good-prognosis class as positive.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Good, Label::Good) => self.tp += 1,
            (Label::Good, Label::Poor) => self.fp += 1,
            (Label::Poor, Label::Poor) => self.tn += 1,
            (Label::Poor, Label::Good) => self.fn_ += 1,
        }
    }

    pub fn from_pairs(pairs: &[(Label, Label)]) -> Self {
        let mut cm = ConfusionMatrix::default();
        for &(predicted, actual) in pairs {
            cm.record(predicted, actual);
        }
        cm
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }

    pub fn accuracy_pct(&self) -> f64 {
        100.0 * self.correct() as f64 / self.total() as f64
    }
}

/// Accuracy, sensitivity, specificity, all in percent. A rate whose
/// denominator is zero is `None` rather than a silent 0/0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy_pct: f64,
    pub sensitivity_pct: Option<f64>,
    pub specificity_pct: Option<f64>,
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    if cm.total() == 0 {
        return Err(Error::Metrics("empty confusion matrix".into()));
    }
    let rate = |num: u64, den: u64| {
        if den == 0 {
            None
        } else {
            Some(100.0 * num as f64 / den as f64)
        }
    };
    Ok(Metrics {
        accuracy_pct: cm.accuracy_pct(),
        sensitivity_pct: rate(cm.tp, cm.tp + cm.fn_),
        specificity_pct: rate(cm.tn, cm.tn + cm.fp),
    })
}

/// Unweighted mean of per-fold accuracies: the headline number for a run.
/// Panics on an empty slice.
pub fn mean_fold_accuracy(fold_accuracies_pct: &[f64]) -> f64 {
    assert!(!fold_accuracies_pct.is_empty(), "no fold accuracies");
    fold_accuracies_pct.iter().sum::<f64>() / fold_accuracies_pct.len() as f64
}

/// Cross-validation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub stratified: bool,
    /// Days-to-death threshold for the good/poor label.
    pub label_threshold_days: u32,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { k: 10, stratified: true, label_threshold_days: 730 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    /// 1-based fold number, matching validation-set numbering in the text
    /// report.
    pub fold: usize,
    pub n_cases: usize,
    pub accuracy_pct: f64,
}

/// Full record of one cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub report_format_version: u32,
    pub attribute_set: String,
    pub attribute_count: usize,
    pub per_fold: Vec<FoldResult>,
    /// Unweighted mean of per-fold accuracies.
    pub mean_accuracy_pct: f64,
    /// Accuracy over the pooled confusion matrix; differs from the mean when
    /// fold sizes are unequal.
    pub pooled_accuracy_pct: f64,
    pub sensitivity_pct: Option<f64>,
    pub specificity_pct: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub config: NetworkConfig,
    pub cv: CvConfig,
    pub seed: u64,
    pub fold_plan_hash: String,
    pub notes: Vec<String>,
}

/// Everything a test needs to audit one fold of a run.
#[derive(Debug, Clone)]
pub struct FoldInspection {
    pub fold: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Normalizer fitted for this fold (on its training split only).
    pub norm_stats: NormStats,
    /// (case_id, score, predicted, actual) per held-out case.
    pub predictions: Vec<(String, f64, Label, Label)>,
}

/// K-fold cross-validation of the full train-and-predict pipeline.
///
/// Per fold: fit the normalizer and model on the training split only, then
/// predict the held-out fold. `cfg.input_dim` is taken from the attribute
/// set. Stratification falls back to plain shuffling (with a note in the
/// report) when the cohort has only one class.
pub fn run_cv(
    cohort: &[CaseRecord],
    set: &AttributeSet,
    cfg: &NetworkConfig,
    cv: &CvConfig,
    rng: &SeededRng,
) -> Result<EvalReport> {
    run_cv_core(cohort, set, cfg, cv, rng, None)
}

/// [`run_cv`] with a per-fold inspection callback, for instrumented tests.
pub fn run_cv_inspect(
    cohort: &[CaseRecord],
    set: &AttributeSet,
    cfg: &NetworkConfig,
    cv: &CvConfig,
    rng: &SeededRng,
    mut inspect: impl FnMut(FoldInspection),
) -> Result<EvalReport> {
    run_cv_core(cohort, set, cfg, cv, rng, Some(&mut inspect))
}

fn run_cv_core(
    cohort: &[CaseRecord],
    set: &AttributeSet,
    cfg: &NetworkConfig,
    cv: &CvConfig,
    rng: &SeededRng,
    mut inspect: Option<&mut dyn FnMut(FoldInspection)>,
) -> Result<EvalReport> {
    if cohort.is_empty() {
        return Err(Error::EmptyInput("cohort"));
    }
    let labels: Vec<Label> = cohort
        .iter()
        .map(|r| r.label(cv.label_threshold_days))
        .collect();

    let n_good = labels.iter().filter(|&&l| l == Label::Good).count();
    let single_class = n_good == 0 || n_good == labels.len();
    let effective_stratified = cv.stratified && !single_class;
    let mut notes = Vec::new();
    if cv.stratified && !effective_stratified {
        notes.push(
            "stratification impossible (cohort has a single class); fell back to unstratified folds"
                .to_string(),
        );
    }

    let plan = make_folds(
        cohort.len(),
        cv.k,
        &labels,
        &mut rng.derive("cv-folds"),
        effective_stratified,
    )?;

    let mut cfg_local = cfg.clone();
    cfg_local.input_dim = set.len();

    let mut per_fold = Vec::with_capacity(cv.k);
    let mut pooled = ConfusionMatrix::default();
    for fold in 0..cv.k {
        let test_idx = plan.test_indices(fold);
        let train_idx = plan.train_indices(fold);
        let train_records: Vec<CaseRecord> =
            train_idx.iter().map(|&i| cohort[i].clone()).collect();

        let mut fold_rng = rng.derive_indexed("cv-fold-train", fold as u64);
        let (model, _history) = StackedModel::fit(
            &train_records,
            set,
            &cfg_local,
            cv.label_threshold_days,
            &mut fold_rng,
        )?;

        let mut cm = ConfusionMatrix::default();
        let mut predictions = Vec::new();
        for &i in &test_idx {
            let pred = model.predict_record(&cohort[i])?;
            cm.record(pred.label, labels[i]);
            if inspect.is_some() {
                predictions.push((cohort[i].case_id.clone(), pred.score, pred.label, labels[i]));
            }
        }
        per_fold.push(FoldResult {
            fold: fold + 1,
            n_cases: test_idx.len(),
            accuracy_pct: cm.accuracy_pct(),
        });
        pooled.merge(&cm);

        if let Some(cb) = inspect.as_deref_mut() {
            cb(FoldInspection {
                fold,
                train_ids: train_idx.iter().map(|&i| cohort[i].case_id.clone()).collect(),
                test_ids: test_idx.iter().map(|&i| cohort[i].case_id.clone()).collect(),
                norm_stats: model.norm_stats.clone(),
                predictions,
            });
        }
    }

    let fold_accs: Vec<f64> = per_fold.iter().map(|f| f.accuracy_pct).collect();
    let metrics = compute_metrics(&pooled)?;
    Ok(EvalReport {
        report_format_version: REPORT_FORMAT_VERSION,
        attribute_set: set.name().to_string(),
        attribute_count: set.len(),
        per_fold,
        mean_accuracy_pct: mean_fold_accuracy(&fold_accs),
        pooled_accuracy_pct: metrics.accuracy_pct,
        sensitivity_pct: metrics.sensitivity_pct,
        specificity_pct: metrics.specificity_pct,
        confusion: pooled,
        config: cfg_local,
        cv: *cv,
        seed: rng.seed(),
        fold_plan_hash: plan.hash(),
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub attribute: String,
    /// Mean accuracy drop (percentage points) when the attribute is left
    /// out; higher means more predictive power.
    pub importance_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub report_format_version: u32,
    pub base_set: String,
    pub repetitions: usize,
    /// Sorted by importance descending, ties broken by canonical attribute
    /// order.
    pub entries: Vec<RankEntry>,
    pub config: NetworkConfig,
    pub cv: CvConfig,
    pub seed: u64,
}

/// Leave-one-attribute-out importance ranking.
///
/// `importance(a)` is the mean over `repetitions` of (base-set CV accuracy
/// minus CV accuracy without `a`). All arms of one repetition share a
/// sub-seed, so they see identical fold plans and the delta isolates the
/// attribute change. Arms run in parallel; results are merge-ordered and
/// independent of scheduling.
pub fn rank_attributes(
    cohort: &[CaseRecord],
    base_set: &AttributeSet,
    cfg: &NetworkConfig,
    cv: &CvConfig,
    repetitions: usize,
    rng: &SeededRng,
) -> Result<RankReport> {
    if base_set.len() < 2 {
        return Err(Error::InvalidConfig(
            "ranking needs at least 2 attributes in the base set".into(),
        ));
    }
    if repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }

    // Job = (repetition, arm); arm None is the base set.
    let mut jobs: Vec<(usize, Option<usize>)> = Vec::new();
    for rep in 0..repetitions {
        jobs.push((rep, None));
        for a in 0..base_set.len() {
            jobs.push((rep, Some(a)));
        }
    }

    let results: Vec<((usize, Option<usize>), f64)> = jobs
        .par_iter()
        .map(|&(rep, arm)| {
            let rep_rng = rng.derive_indexed("rank-rep", rep as u64);
            let arm_set = match arm {
                None => base_set.clone(),
                Some(a) => base_set.without(&base_set.attributes()[a])?,
            };
            let report = run_cv(cohort, &arm_set, cfg, cv, &rep_rng)?;
            Ok(((rep, arm), report.mean_accuracy_pct))
        })
        .collect::<Result<_>>()?;

    let mut base_acc = vec![0.0; repetitions];
    let mut loo_acc = vec![vec![0.0; repetitions]; base_set.len()];
    for ((rep, arm), acc) in results {
        match arm {
            None => base_acc[rep] = acc,
            Some(a) => loo_acc[a][rep] = acc,
        }
    }

    let mut entries: Vec<RankEntry> = base_set
        .attributes()
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let importance = (0..repetitions)
                .map(|rep| base_acc[rep] - loo_acc[a][rep])
                .sum::<f64>()
                / repetitions as f64;
            RankEntry { attribute: name.clone(), importance_pct: importance }
        })
        .collect();
    entries.sort_by(|x, y| {
        y.importance_pct
            .partial_cmp(&x.importance_pct)
            .expect("finite importances")
            .then_with(|| {
                canonical_index(&x.attribute).cmp(&canonical_index(&y.attribute))
            })
    });

    Ok(RankReport {
        report_format_version: REPORT_FORMAT_VERSION,
        base_set: base_set.name().to_string(),
        repetitions,
        entries,
        config: cfg.clone(),
        cv: *cv,
        seed: rng.seed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub set_name: String,
    pub n_attributes: usize,
    pub mean_accuracy_pct: f64,
    pub sensitivity_pct: Option<f64>,
    pub specificity_pct: Option<f64>,
    pub fold_plan_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub report_format_version: u32,
    /// FULL34, NO_CYTO, NO_AGE, NO_MUT, in that order.
    pub arms: Vec<AblationArm>,
    pub config: NetworkConfig,
    pub cv: CvConfig,
    pub seed: u64,
}

/// Leave-one-group-out comparison over the four canonical attribute sets.
/// All arms share the same fold-plan sub-seed, so the reported fold-plan
/// hashes are identical and accuracy differences isolate the attribute
/// change.
pub fn group_ablation(
    cohort: &[CaseRecord],
    cfg: &NetworkConfig,
    cv: &CvConfig,
    rng: &SeededRng,
) -> Result<AblationReport> {
    let sets = [
        AttributeSet::full34(),
        AttributeSet::no_cyto(),
        AttributeSet::no_age(),
        AttributeSet::no_mut(),
    ];
    let shared = rng.derive("ablation-arms");
    let arms: Vec<AblationArm> = sets
        .par_iter()
        .map(|set| {
            let report = run_cv(cohort, set, cfg, cv, &shared)?;
            Ok(AblationArm {
                set_name: set.name().to_string(),
                n_attributes: set.len(),
                mean_accuracy_pct: report.mean_accuracy_pct,
                sensitivity_pct: report.sensitivity_pct,
                specificity_pct: report.specificity_pct,
                fold_plan_hash: report.fold_plan_hash,
            })
        })
        .collect::<Result<_>>()?;

    Ok(AblationReport {
        report_format_version: REPORT_FORMAT_VERSION,
        arms,
        config: cfg.clone(),
        cv: *cv,
        seed: rng.seed(),
    })
}
