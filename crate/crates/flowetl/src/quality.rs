//! Data quality indicators and the Data Quality Score (DQS).
//!
//! Three ratios summarise a table: missing cells over all cells (M),
//! outlying numeric cells over all cells (O), and duplicate rows over all
//! rows (D). The score folds them into `DQS = 1 − (M + O + D) / 3`, so a
//! clean table scores 1.0 and each kind of damage pulls the score down
//! proportionally.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{row_fingerprint, CellValue, ColumnType, InternalRepresentation};
use crate::schema::ColumnSchema;

/// Default multiplier on the MAD when placing the outlier bounds.
pub const MAD_BOUND_MULTIPLIER: f64 = 1.48;
/// Default scale factor applied to the raw median absolute deviation.
pub const MAD_SCALE: f64 = 3.0;

/// Minimum non-missing numeric values a column needs before outlier
/// detection runs; below this the MAD is too degenerate to trust.
pub const MIN_OUTLIER_SAMPLE: usize = 3;

/// The quality indicators of one table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityIndicators {
    pub missing_ratio: f64,
    pub outlier_ratio: f64,
    pub duplicate_ratio: f64,
    pub dqs: f64,
    /// Number of non-header cells the ratios are relative to.
    pub cell_count: usize,
    pub row_count: usize,
}

/// Outlier bounds for one numeric sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MadBounds {
    pub t_min: f64,
    pub t_max: f64,
    pub mad: f64,
    pub median: f64,
    pub a: f64,
    pub b: f64,
}

impl MadBounds {
    /// Whether a value falls outside the bounds.
    pub fn is_outlier(&self, value: f64) -> bool {
        value < self.t_min || value > self.t_max
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Median of a sample. Errors on an empty slice.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidIr(
            "median of an empty sample is undefined".to_string(),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    Ok(median_of_sorted(&sorted))
}

/// Computes MAD-based outlier bounds for a numeric sample:
/// `MAD = b · median(|X − median(X)|)`, bounds `median ± a · MAD`.
pub fn mad_bounds(values: &[f64], a: f64, b: f64) -> Result<MadBounds> {
    let med = median(values)?;
    let deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let mad = b * median(&deviations)?;
    Ok(MadBounds {
        t_min: med - a * mad,
        t_max: med + a * mad,
        mad,
        median: med,
        a,
        b,
    })
}

/// [`mad_bounds`] with the default constants.
pub fn mad_bounds_default(values: &[f64]) -> Result<MadBounds> {
    mad_bounds(values, MAD_BOUND_MULTIPLIER, MAD_SCALE)
}

/// Fraction of cells that are missing (placeholder or empty text).
/// Zero for a table with no cells.
pub fn missing_ratio(ir: &InternalRepresentation) -> f64 {
    let n = ir.cell_count();
    if n == 0 {
        return 0.0;
    }
    let missing = ir
        .rows()
        .iter()
        .flatten()
        .filter(|c| c.is_missing_like())
        .count();
    missing as f64 / n as f64
}

/// Fraction of rows that are extra copies of an earlier row: `(m −
/// distinct) / m`. Row identity is column-order-insensitive, matching the
/// deduplication node. Zero for an empty table.
pub fn duplicate_ratio(ir: &InternalRepresentation) -> f64 {
    let m = ir.row_count();
    if m == 0 {
        return 0.0;
    }
    let distinct: HashSet<String> = ir
        .rows()
        .iter()
        .map(|row| row_fingerprint(ir.headers(), row))
        .collect();
    (m - distinct.len()) as f64 / m as f64
}

/// Per-column outlier cells of one number-typed column, as row indices.
pub(crate) fn column_outliers(
    ir: &InternalRepresentation,
    col: usize,
) -> Result<Vec<usize>> {
    let sample: Vec<f64> = ir.column(col).filter_map(CellValue::as_number).collect();
    if sample.len() < MIN_OUTLIER_SAMPLE {
        return Ok(Vec::new());
    }
    let bounds = mad_bounds_default(&sample)?;
    Ok(ir
        .rows()
        .iter()
        .enumerate()
        .filter_map(|(i, row)| match row[col].as_number() {
            Some(v) if bounds.is_outlier(v) => Some(i),
            _ => None,
        })
        .collect())
}

/// Fraction of cells that are numeric outliers.
///
/// Detection runs over number-typed columns only; missing cells are
/// excluded from the MAD sample but the denominator stays the full cell
/// count. Columns with fewer than [`MIN_OUTLIER_SAMPLE`] numeric values
/// contribute nothing.
pub fn outlier_ratio(ir: &InternalRepresentation, schema: &ColumnSchema) -> Result<f64> {
    let n = ir.cell_count();
    if n == 0 {
        return Ok(0.0);
    }
    let mut outliers = 0usize;
    for (idx, name) in ir.headers().iter().enumerate() {
        if schema.get(name) != Some(ColumnType::Number) {
            continue;
        }
        outliers += column_outliers(ir, idx)?.len();
    }
    Ok(outliers as f64 / n as f64)
}

/// Computes all quality indicators and the composite score.
pub fn dqs(ir: &InternalRepresentation, schema: &ColumnSchema) -> Result<QualityIndicators> {
    let m = missing_ratio(ir);
    let o = outlier_ratio(ir, schema)?;
    let d = duplicate_ratio(ir);
    Ok(QualityIndicators {
        missing_ratio: m,
        outlier_ratio: o,
        duplicate_ratio: d,
        dqs: 1.0 - (m + o + d) / 3.0,
        cell_count: ir.cell_count(),
        row_count: ir.row_count(),
    })
}
