//! Report rendering: a human-readable table per experiment plus the
//! versioned JSON document.
//!
//! The headline mean on the text table is displayed as a whole percent,
//! truncated toward zero (so a mean of 81.5% prints as `81%`, matching the
//! fold-table convention this tool reproduces); the exact value always
//! appears alongside and in the JSON report.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::eval::{AblationReport, EvalReport, RankReport};

/// Whole-percent display, truncated toward zero: 81.5 -> "81%".
pub fn display_pct_truncated(pct: f64) -> String {
    format!("{}%", pct.trunc() as i64)
}

fn fmt_opt_pct(v: Option<f64>) -> String {
    match v {
        Some(p) => format!("{p:.1}%"),
        None => "n/a".to_string(),
    }
}

/// Fold table in the published layout, with pooled metrics as footnotes.
pub fn render_eval_table(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Attribute set: {} ({} attributes)",
        r.attribute_set, r.attribute_count
    );
    let _ = writeln!(out, "Validation Set No.  Cases  Accuracy");
    for fold in &r.per_fold {
        let _ = writeln!(
            out,
            "{:<19} {:>6}  {:>7.1}%",
            fold.fold, fold.n_cases, fold.accuracy_pct
        );
    }
    let _ = writeln!(
        out,
        "Mean= {}*  (exact {:.2}%)",
        display_pct_truncated(r.mean_accuracy_pct),
        r.mean_accuracy_pct
    );
    let _ = writeln!(
        out,
        "* unweighted mean of fold accuracies; pooled accuracy {:.2}%, sensitivity {}, specificity {}",
        r.pooled_accuracy_pct,
        fmt_opt_pct(r.sensitivity_pct),
        fmt_opt_pct(r.specificity_pct),
    );
    let _ = writeln!(
        out,
        "Run: seed {}, k={}, {}, label threshold {} days, fold plan {}",
        r.seed,
        r.cv.k,
        if r.cv.stratified { "stratified" } else { "unstratified" },
        r.cv.label_threshold_days,
        r.fold_plan_hash
    );
    for note in &r.notes {
        let _ = writeln!(out, "Note: {note}");
    }
    out
}

pub fn render_rank_table(r: &RankReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Attribute ranking: leave-one-out from {}, {} repetition(s), k={}, seed {}",
        r.base_set, r.repetitions, r.cv.k, r.seed
    );
    let _ = writeln!(out, "Rank  Attribute  Importance (accuracy drop, points)");
    for (i, entry) in r.entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<5} {:<10} {:>+8.2}",
            i + 1,
            entry.attribute,
            entry.importance_pct
        );
    }
    out
}

pub fn render_ablation_table(r: &AblationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Group ablation: k={}, {}, seed {}",
        r.cv.k,
        if r.cv.stratified { "stratified" } else { "unstratified" },
        r.seed
    );
    let _ = writeln!(
        out,
        "{:<8} {:>10}  {:>13}  {:>11}  {:>11}",
        "Set", "Attributes", "Mean accuracy", "Sensitivity", "Specificity"
    );
    for arm in &r.arms {
        let _ = writeln!(
            out,
            "{:<8} {:>10}  {:>12.1}%  {:>11}  {:>11}",
            arm.set_name,
            arm.n_attributes,
            arm.mean_accuracy_pct,
            fmt_opt_pct(arm.sensitivity_pct),
            fmt_opt_pct(arm.specificity_pct),
        );
    }
    if let Some(first) = r.arms.first() {
        let shared = r.arms.iter().all(|a| a.fold_plan_hash == first.fold_plan_hash);
        let _ = writeln!(
            out,
            "Fold plan {} ({})",
            first.fold_plan_hash,
            if shared { "shared across arms" } else { "NOT shared" }
        );
    }
    out
}

/// Versioned JSON form of any serializable report.
pub fn to_json<T: serde::Serialize>(report: &T) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map_err(|e| Error::ModelFormat(format!("report serialization failed: {e}")))
}
