//! Per-attribute min-max scaling to `[0, 1]`.
//!
//! Statistics are fit on training rows only; applying them to held-out rows
//! clamps out-of-range values into `[0, 1]`. An attribute that is constant in
//! training maps to 0.5 everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    /// (min, max) per attribute, in the attribute-set order the rows used.
    pub ranges: Vec<(f64, f64)>,
}

impl NormStats {
    /// Computes per-attribute min/max over the training rows.
    pub fn fit(train_rows: &[Vec<f64>]) -> Result<Self> {
        let first = train_rows
            .first()
            .ok_or(Error::EmptyInput("normalizer training rows"))?;
        let mut ranges: Vec<(f64, f64)> = first.iter().map(|&v| (v, v)).collect();
        for row in train_rows {
            debug_assert_eq!(row.len(), ranges.len());
            for (slot, &v) in ranges.iter_mut().zip(row.iter()) {
                if v < slot.0 {
                    slot.0 = v;
                }
                if v > slot.1 {
                    slot.1 = v;
                }
            }
        }
        Ok(NormStats { ranges })
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Scales one row into `[0, 1]`, clamping out-of-range values.
    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        debug_assert_eq!(row.len(), self.ranges.len());
        row.iter()
            .zip(self.ranges.iter())
            .map(|(&v, &(lo, hi))| {
                if hi == lo {
                    0.5
                } else {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                }
            })
            .collect()
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_columns_are_fixed_points() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let stats = NormStats::fit(&rows).unwrap();
        assert_eq!(stats.apply_row(&[0.0, 1.0]), vec![0.0, 1.0]);
        assert_eq!(stats.apply_row(&[1.0, 0.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn midpoint_and_clamping() {
        let rows = vec![vec![20.0], vec![70.0]];
        let stats = NormStats::fit(&rows).unwrap();
        assert_eq!(stats.apply_row(&[45.0]), vec![0.5]);
        assert_eq!(stats.apply_row(&[80.0]), vec![1.0]);
        assert_eq!(stats.apply_row(&[10.0]), vec![0.0]);
    }

    #[test]
    fn constant_attribute_maps_to_half() {
        let rows = vec![vec![3.0], vec![3.0]];
        let stats = NormStats::fit(&rows).unwrap();
        assert_eq!(stats.apply_row(&[3.0]), vec![0.5]);
        assert_eq!(stats.apply_row(&[99.0]), vec![0.5]);
    }

    #[test]
    fn fit_then_apply_is_idempotent() {
        let rows = vec![
            vec![20.0, 0.0, 7.0],
            vec![70.0, 1.0, 7.0],
            vec![45.0, 0.0, 7.0],
        ];
        let once = NormStats::fit(&rows).unwrap().apply(&rows);
        let twice = NormStats::fit(&once).unwrap().apply(&once);
        assert_eq!(once, twice);
    }

    #[test]
    fn empty_training_rejected() {
        assert!(NormStats::fit(&[]).is_err());
    }

    #[test]
    fn outputs_always_in_unit_interval() {
        let mut rng = crate::rng::SeededRng::new(17);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..6).map(|_| rng.uniform(-100.0, 100.0)).collect())
            .collect();
        let stats = NormStats::fit(&rows).unwrap();
        for row in (0..50).map(|_| (0..6).map(|_| rng.uniform(-200.0, 200.0)).collect::<Vec<_>>()) {
            for v in stats.apply_row(&row) {
                assert!((0.0..=1.0).contains(&v) && v.is_finite());
            }
        }
    }
}
