//! Case records and cohort CSV ingestion.
//!
//! Cohort file format: UTF-8 CSV, comma-separated, header row exactly
//! `case_id,age,<10 cytogenetic flags>,<23 mutation flags>,dtd_days` in
//! canonical column order. Flags are the literal characters `0`/`1`, age is a
//! decimal number of years, `dtd_days` a non-negative integer. Files intended
//! only for prediction may omit the trailing `dtd_days` column.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{self, AttributeSet};

/// Binary prognosis label. `Good` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Good,
    Poor,
}

impl Label {
    /// Numeric training target: good = 1, poor = 0.
    pub fn target(self) -> f64 {
        match self {
            Label::Good => 1.0,
            Label::Poor => 0.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Good => write!(f, "good"),
            Label::Poor => write!(f, "poor"),
        }
    }
}

/// Good prognosis iff survival reached the threshold (boundary inclusive).
pub fn binarize_label(dtd_days: u32, threshold_days: u32) -> Label {
    if dtd_days >= threshold_days {
        Label::Good
    } else {
        Label::Poor
    }
}

/// One patient row: identifier, age, 10 cytogenetic flags, 23 mutation
/// flags, and days-to-death.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub age_years: f64,
    /// Flags in [`schema::CYTO_NAMES`] order.
    pub cyto: [bool; schema::NUM_CYTO],
    /// Flags in [`schema::MUTATION_NAMES`] order.
    pub muts: [bool; schema::NUM_MUTATIONS],
    pub dtd_days: u32,
}

impl CaseRecord {
    pub fn new(
        case_id: String,
        age_years: f64,
        cyto: [bool; schema::NUM_CYTO],
        muts: [bool; schema::NUM_MUTATIONS],
        dtd_days: u32,
    ) -> Result<Self> {
        let rec = CaseRecord { case_id, age_years, cyto, muts, dtd_days };
        rec.check()?;
        Ok(rec)
    }

    fn check(&self) -> Result<()> {
        if self.case_id.is_empty() {
            return Err(Error::parse("case_id must be non-empty"));
        }
        if !(0.0..=120.0).contains(&self.age_years) || !self.age_years.is_finite() {
            return Err(Error::parse(format!(
                "age must be in [0, 120], got {}",
                self.age_years
            )));
        }
        if !self.muts.iter().any(|&m| m) {
            return Err(Error::parse(format!(
                "case '{}' has no mutation flag set (cohort inclusion rule)",
                self.case_id
            )));
        }
        Ok(())
    }

    /// Raw value of a canonical attribute: age in years, flags as 0/1.
    pub fn attribute_value(&self, name: &str) -> Option<f64> {
        if name == schema::AGE {
            return Some(self.age_years);
        }
        if let Some(i) = schema::CYTO_NAMES.iter().position(|&n| n == name) {
            return Some(if self.cyto[i] { 1.0 } else { 0.0 });
        }
        if let Some(i) = schema::MUTATION_NAMES.iter().position(|&n| n == name) {
            return Some(if self.muts[i] { 1.0 } else { 0.0 });
        }
        None
    }

    pub fn label(&self, threshold_days: u32) -> Label {
        binarize_label(self.dtd_days, threshold_days)
    }
}

/// Header for a labeled cohort file, in canonical column order.
pub fn csv_header() -> String {
    let mut cols = vec!["case_id".to_string(), "age".to_string()];
    cols.extend(schema::CYTO_NAMES.iter().map(|s| s.to_string()));
    cols.extend(schema::MUTATION_NAMES.iter().map(|s| s.to_string()));
    cols.push("dtd_days".to_string());
    cols.join(",")
}

/// Parses a labeled cohort. Every record must satisfy the row invariants and
/// `case_id`s must be unique; violations name the data row (1-based) and the
/// column where applicable.
pub fn parse_cohort(csv_text: &str) -> Result<Vec<CaseRecord>> {
    let (records, has_labels) = parse_cases(csv_text)?;
    if !has_labels {
        return Err(Error::parse("missing column 'dtd_days'"));
    }
    Ok(records)
}

/// Parses a cohort that may omit the `dtd_days` column (prediction input).
/// When the column is absent, `dtd_days` is set to 0 in every record and the
/// returned flag is false; callers must not interpret those placeholder
/// values as labels.
pub fn parse_cases(csv_text: &str) -> Result<(Vec<CaseRecord>, bool)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(csv_text.as_bytes());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(format!("unreadable header row: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut expected = vec!["case_id".to_string(), "age".to_string()];
    expected.extend(schema::CYTO_NAMES.iter().map(|s| s.to_string()));
    expected.extend(schema::MUTATION_NAMES.iter().map(|s| s.to_string()));

    let has_labels = match headers.len() {
        n if n == expected.len() + 1 => true,
        n if n == expected.len() => false,
        n => {
            return Err(Error::parse(format!(
                "expected {} or {} columns, found {n}",
                expected.len(),
                expected.len() + 1
            )))
        }
    };
    if has_labels {
        expected.push("dtd_days".to_string());
    }
    for (i, (got, want)) in headers.iter().zip(expected.iter()).enumerate() {
        if got != want {
            return Err(Error::parse(format!(
                "header column {} must be '{want}', found '{got}'",
                i + 1
            )));
        }
    }

    let mut seen_ids = HashSet::new();
    let mut out = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row_no = idx + 1;
        let row = row.map_err(|e| Error::CohortParse {
            row: Some(row_no),
            column: None,
            message: format!("malformed CSV record: {e}"),
        })?;

        let field = |i: usize| row.get(i).unwrap_or("");
        let case_id = field(0).to_string();
        if case_id.is_empty() {
            return Err(Error::parse_at(row_no, "case_id", "must be non-empty"));
        }
        if !seen_ids.insert(case_id.clone()) {
            return Err(Error::parse_at(
                row_no,
                "case_id",
                format!("duplicate case_id '{case_id}'"),
            ));
        }

        let age_years: f64 = field(1).parse().map_err(|_| {
            Error::parse_at(row_no, "age", format!("not a number: '{}'", field(1)))
        })?;
        if !(0.0..=120.0).contains(&age_years) {
            return Err(Error::parse_at(
                row_no,
                "age",
                format!("must be in [0, 120], got {age_years}"),
            ));
        }

        let parse_flag = |i: usize, name: &str| -> Result<bool> {
            match field(i) {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::parse_at(
                    row_no,
                    name,
                    format!("flag must be 0 or 1, got '{other}'"),
                )),
            }
        };

        let mut cyto = [false; schema::NUM_CYTO];
        for (j, name) in schema::CYTO_NAMES.iter().enumerate() {
            cyto[j] = parse_flag(2 + j, name)?;
        }
        let mut muts = [false; schema::NUM_MUTATIONS];
        for (j, name) in schema::MUTATION_NAMES.iter().enumerate() {
            muts[j] = parse_flag(2 + schema::NUM_CYTO + j, name)?;
        }
        if !muts.iter().any(|&m| m) {
            return Err(Error::CohortParse {
                row: Some(row_no),
                column: None,
                message: format!(
                    "case '{case_id}' has no mutation flag set (cohort inclusion rule)"
                ),
            });
        }

        let dtd_days = if has_labels {
            let raw = field(2 + schema::NUM_CYTO + schema::NUM_MUTATIONS);
            let v: i64 = raw.parse().map_err(|_| {
                Error::parse_at(row_no, "dtd_days", format!("not an integer: '{raw}'"))
            })?;
            if v < 0 {
                return Err(Error::parse_at(
                    row_no,
                    "dtd_days",
                    format!("must be non-negative, got {v}"),
                ));
            }
            u32::try_from(v).map_err(|_| {
                Error::parse_at(row_no, "dtd_days", format!("out of range: {v}"))
            })?
        } else {
            0
        };

        out.push(CaseRecord { case_id, age_years, cyto, muts, dtd_days });
    }

    if out.is_empty() {
        return Err(Error::parse("cohort has no data rows"));
    }
    Ok((out, has_labels))
}

/// Renders a cohort back to the canonical CSV format.
pub fn cohort_to_csv(records: &[CaseRecord]) -> String {
    let mut out = String::new();
    out.push_str(&csv_header());
    out.push('\n');
    for rec in records {
        out.push_str(&rec.case_id);
        out.push(',');
        out.push_str(&format_age(rec.age_years));
        for flag in rec.cyto.iter().chain(rec.muts.iter()) {
            out.push(',');
            out.push(if *flag { '1' } else { '0' });
        }
        out.push(',');
        out.push_str(&rec.dtd_days.to_string());
        out.push('\n');
    }
    out
}

fn format_age(age: f64) -> String {
    if age.fract() == 0.0 {
        format!("{age:.0}")
    } else {
        // Shortest representation that round-trips.
        format!("{age}")
    }
}

/// Raw feature rows in the set's attribute order: flags as 0/1, age in
/// years. Normalization happens separately, on training data only.
pub fn select_attributes(records: &[CaseRecord], set: &AttributeSet) -> Vec<Vec<f64>> {
    records
        .iter()
        .map(|rec| {
            set.attributes()
                .iter()
                .map(|name| {
                    rec.attribute_value(name)
                        .expect("attribute set validated against schema")
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cohort_csv() -> String {
        let mut text = csv_header();
        text.push('\n');
        // FLT3 set for case A, NPM1 for case B.
        text.push_str("A,61.5,0,0,0,0,0,1,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,912\n");
        text.push_str("B,48,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,365\n");
        text
    }

    #[test]
    fn parses_well_formed_file() {
        let records = parse_cohort(&tiny_cohort_csv()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].case_id, "A");
        assert_eq!(records[0].age_years, 61.5);
        assert!(records[0].cyto[5]); // tri8
        assert!(records[0].muts[0]); // FLT3
        assert_eq!(records[0].dtd_days, 912);
        assert_eq!(records[1].case_id, "B");
        assert!(records[1].cyto[0]); // t_8_21
        assert!(records[1].muts[5]); // NPM1
        assert_eq!(records[1].dtd_days, 365);
    }

    #[test]
    fn bad_flag_names_row_and_column() {
        let text = tiny_cohort_csv().replace(
            "B,48,1,0,0,0,0,0,0,0,0,0,0",
            "B,48,1,0,2,0,0,0,0,0,0,0,0",
        );
        let err = parse_cohort(&text).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        assert!(err.contains("t_15_17"), "{err}");
        assert!(err.contains("'2'"), "{err}");
    }

    #[test]
    fn duplicate_case_id_rejected() {
        let text = tiny_cohort_csv().replace("\nB,", "\nA,");
        let err = parse_cohort(&text).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn negative_dtd_rejected() {
        let text = tiny_cohort_csv().replace(",365", ",-1");
        let err = parse_cohort(&text).unwrap_err().to_string();
        assert!(err.contains("dtd_days"), "{err}");
        assert!(err.contains("non-negative"), "{err}");
    }

    #[test]
    fn missing_column_rejected() {
        // Dropping a header name shifts every later column; the header check
        // names the first mismatch.
        let text = tiny_cohort_csv().replace("complex,", "");
        let err = parse_cohort(&text).unwrap_err().to_string();
        assert!(err.contains("complex"), "{err}");

        // A wrong column count is rejected outright.
        let text = tiny_cohort_csv().replace(",dtd_days", ",dtd_days,extra");
        let err = parse_cohort(&text).unwrap_err().to_string();
        assert!(err.contains("columns"), "{err}");
    }

    #[test]
    fn no_mutation_case_rejected() {
        // Case A with every mutation flag cleared.
        let mut text = csv_header();
        text.push('\n');
        text.push_str("A,61,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,912\n");
        let err = parse_cohort(&text).unwrap_err().to_string();
        assert!(err.contains("no mutation flag"), "{err}");
    }

    #[test]
    fn unlabeled_file_parses_without_dtd() {
        let labeled = tiny_cohort_csv();
        let unlabeled: String = labeled
            .lines()
            .map(|line| {
                let cut = line.rfind(',').unwrap();
                format!("{}\n", &line[..cut])
            })
            .collect();
        let (records, has_labels) = parse_cases(&unlabeled).unwrap();
        assert!(!has_labels);
        assert_eq!(records.len(), 2);
        assert!(parse_cohort(&unlabeled).is_err());
    }

    #[test]
    fn label_boundary() {
        assert_eq!(binarize_label(730, 730), Label::Good);
        assert_eq!(binarize_label(729, 730), Label::Poor);
        assert_eq!(binarize_label(0, 730), Label::Poor);
        assert_eq!(binarize_label(10_000, 730), Label::Good);
    }

    #[test]
    fn csv_round_trip() {
        let records = parse_cohort(&tiny_cohort_csv()).unwrap();
        let text = cohort_to_csv(&records);
        let again = parse_cohort(&text).unwrap();
        assert_eq!(records, again);
    }

    #[test]
    fn select_orders_follow_set() {
        let records = parse_cohort(&tiny_cohort_csv()).unwrap();
        let full = select_attributes(&records, &AttributeSet::full34());
        assert_eq!(full[0].len(), 34);
        assert_eq!(full[0][0], 61.5); // age leads the canonical order
        assert_eq!(full[0][6], 1.0); // tri8 at canonical position 6

        let top = select_attributes(&records, &AttributeSet::top14());
        assert_eq!(top[0].len(), 14);
        assert_eq!(top[0][1], 1.0); // tri8 is second in TOP14

        let no_age = select_attributes(&records, &AttributeSet::no_age());
        assert_eq!(no_age[0].len(), 33);
        assert!(no_age[0].iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn column_consistency_with_subset() {
        let records = parse_cohort(&tiny_cohort_csv()).unwrap();
        let full_set = AttributeSet::full34();
        let full = select_attributes(&records, &full_set);
        let sub_names: Vec<String> =
            ["age", "tri8", "FLT3", "NPM1"].iter().map(|s| s.to_string()).collect();
        let sub_set = AttributeSet::new("sub", sub_names.clone()).unwrap();
        let sub = select_attributes(&records, &sub_set);
        for (row_full, row_sub) in full.iter().zip(sub.iter()) {
            for (j, name) in sub_names.iter().enumerate() {
                let full_idx = full_set.attributes().iter().position(|a| a == name).unwrap();
                assert_eq!(row_full[full_idx], row_sub[j]);
            }
        }
    }
}
