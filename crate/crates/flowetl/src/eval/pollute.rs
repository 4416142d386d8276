//! Seeded dataset corruption for evaluation runs.
//!
//! The polluter damages a clean table in the three ways the quality
//! module measures: it blanks cells, appends duplicate rows, and pushes
//! numeric cells outside their column's MAD bounds. Injection rates are
//! expressed as targets on the *measured* ratios of the final table, so a
//! polluted fixture scores predictably when profiled.
//!
//! Care is taken to keep the three damage kinds independent:
//!
//! * duplicates are injected first, and every later injection is applied
//!   to all copies of a row at once, so duplicate pairs stay identical;
//! * one fully-unique column (when the table has one) is never blanked,
//!   so blanking cannot make two distinct rows collide into a new
//!   duplicate pair;
//! * a cell is never both blanked and turned into an outlier, and
//!   injected outlier values are unique, far outside the bounds, and
//!   always placed on currently-numeric cells;
//! * blanking is capped per column — a numeric column always keeps
//!   enough genuine values that its injected outliers remain measurable
//!   (a MAD over mostly-injected values would wrap around them).

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{row_fingerprint, serialize_cell, CellValue, ColumnType, InternalRepresentation};
use crate::quality::{mad_bounds_default, MIN_OUTLIER_SAMPLE};
use crate::schema::infer_schema;

/// Default fraction of cells to blank.
pub const DEFAULT_MISSING_TARGET: f64 = 0.40;
/// Default fraction of final rows that should be extra copies.
pub const DEFAULT_DUPLICATE_TARGET: f64 = 0.20;
/// Default fraction of cells to turn into numeric outliers (midpoint of
/// the conventional 5–10% band).
pub const DEFAULT_OUTLIER_TARGET: f64 = 0.075;

/// Achieved rates may miss their targets by up to this much; exact hits
/// are impossible with integral cell counts.
pub const POLLUTION_TOLERANCE: f64 = 0.02;

/// At most this fraction of a numeric column is ever blanked. Keeping at
/// least half the column present guarantees its genuine values outnumber
/// the injected outliers (which never exceed a quarter of the rows at
/// the default rates), so the measured median stays in the genuine bulk
/// and the bounds keep excluding the injected values.
pub const MISSING_CAP_NUMERIC: f64 = 0.50;
/// Blanking cap for non-numeric columns.
pub const MISSING_CAP_OTHER: f64 = 0.85;

/// Injection rates for one pollution pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollutionSpec {
    pub missing_target: f64,
    pub duplicate_target: f64,
    pub outlier_target: f64,
    pub seed: u64,
    /// Columns blanked only once every other column has reached its cap.
    /// Lets a fixture keep evidence cells in chosen columns while still
    /// hitting the global missing target.
    #[serde(default)]
    pub spare_columns: Vec<String>,
}

impl Default for PollutionSpec {
    fn default() -> Self {
        PollutionSpec {
            missing_target: DEFAULT_MISSING_TARGET,
            duplicate_target: DEFAULT_DUPLICATE_TARGET,
            outlier_target: DEFAULT_OUTLIER_TARGET,
            seed: 0,
            spare_columns: Vec::new(),
        }
    }
}

impl PollutionSpec {
    fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("missing_target", self.missing_target),
            ("duplicate_target", self.duplicate_target),
            ("outlier_target", self.outlier_target),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Config(format!(
                    "{name} must be in [0, 1], got {value}"
                )));
            }
        }
        if self.duplicate_target >= 1.0 {
            return Err(Error::Config(
                "duplicate_target must be below 1.0; a table cannot consist \
                 entirely of extra copies"
                    .to_string(),
            ));
        }
        Ok(())
    }
}

/// A polluted table plus any injection caveats.
#[derive(Debug, Clone)]
pub struct PollutionOutcome {
    pub ir: InternalRepresentation,
    pub warnings: Vec<String>,
}

/// Damages a clean table per the spec. Deterministic for a fixed seed.
pub fn pollute(ir: &InternalRepresentation, spec: &PollutionSpec) -> Result<PollutionOutcome> {
    spec.validate()?;
    if ir.row_count() == 0 || ir.column_count() == 0 {
        return Err(Error::EmptyInput(
            "cannot pollute a table with no rows or no columns".to_string(),
        ));
    }

    for name in &spec.spare_columns {
        if !ir.headers().iter().any(|h| h == name) {
            return Err(Error::Config(format!(
                "spare column {name:?} is not in the table"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut warnings = Vec::new();
    let n0 = ir.row_count();
    let cols = ir.column_count();
    let schema = infer_schema(ir)?;

    // ---- duplicates ----------------------------------------------------
    // Appending d copies makes the extra-copy ratio (e + d) / (n0 + d),
    // where e counts copies already present; solve for the target.
    let existing_extra = {
        let distinct: HashSet<String> = ir
            .rows()
            .iter()
            .map(|row| row_fingerprint(ir.headers(), row))
            .collect();
        n0 - distinct.len()
    };
    let t = spec.duplicate_target;
    let wanted = ((t * n0 as f64 - existing_extra as f64) / (1.0 - t)).round();
    let d = if wanted.is_sign_positive() { wanted as usize } else { 0 };
    if existing_extra > 0 && d == 0 && t > 0.0 {
        warnings.push("input already meets or exceeds the duplicate target".to_string());
    }

    let copy_sources: Vec<usize> = if d <= n0 {
        let mut v = rand::seq::index::sample(&mut rng, n0, d).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..d).map(|_| rng.random_range(0..n0)).collect()
    };

    let mut rows: Vec<Vec<CellValue>> = ir.rows().to_vec();
    // Row groups: an original row and all its appended copies share a
    // group and are always damaged together, so they stay identical.
    let mut members: Vec<Vec<usize>> = (0..n0).map(|i| vec![i]).collect();
    for &src in &copy_sources {
        members[src].push(rows.len());
        rows.push(rows[src].clone());
    }
    let total_cells = rows.len() * cols;

    // A column whose values are unique and present across all original
    // rows; left unblanked so blanking never merges two distinct rows.
    let protected: Option<usize> = if cols >= 2 {
        (0..cols).find(|&c| {
            let mut seen = HashSet::new();
            ir.rows()
                .iter()
                .all(|r| !r[c].is_missing_like() && seen.insert(serialize_cell(&r[c])))
        })
    } else {
        None
    };
    if protected.is_none() && spec.missing_target > 0.0 {
        warnings.push(
            "no fully-unique column found; blanking may create incidental \
             duplicate rows"
                .to_string(),
        );
    }

    // ---- outliers ------------------------------------------------------
    let mut claimed: HashSet<(usize, usize)> = HashSet::new();
    let outlier_quota = (spec.outlier_target * total_cells as f64).round() as usize;
    if outlier_quota > 0 {
        let numeric: Vec<usize> = ir
            .headers()
            .iter()
            .enumerate()
            .filter(|(_, name)| schema.get(name) == Some(ColumnType::Number))
            .map(|(idx, _)| idx)
            .filter(|&idx| {
                rows.iter().filter(|r| r[idx].as_number().is_some()).count()
                    >= MIN_OUTLIER_SAMPLE
            })
            .collect();

        if numeric.is_empty() {
            warnings.push(
                "no numeric columns with enough values; outlier injection skipped".to_string(),
            );
        } else {
            // Bounds per column, from the values as they stand now. The
            // injected magnitude is so far outside that the measured
            // bounds, recomputed after injection, still exclude it.
            let mut bounds = Vec::with_capacity(numeric.len());
            for &col in &numeric {
                let values: Vec<f64> = rows.iter().filter_map(|r| r[col].as_number()).collect();
                bounds.push(mad_bounds_default(&values)?);
            }

            let mut queues: Vec<Vec<usize>> = numeric
                .iter()
                .map(|_| {
                    let mut groups: Vec<usize> = (0..n0).collect();
                    groups.shuffle(&mut rng);
                    groups
                })
                .collect();

            // Round-robin over columns spreads contamination evenly, so
            // no single column's MAD sample is overwhelmed.
            let mut remaining = outlier_quota;
            let mut injected = 0usize;
            loop {
                let mut progress = false;
                for (qi, &col) in numeric.iter().enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    while let Some(group) = queues[qi].pop() {
                        let size = members[group].len();
                        if size > remaining
                            || !members[group]
                                .iter()
                                .all(|&r| rows[r][col].as_number().is_some())
                        {
                            continue;
                        }
                        let b = &bounds[qi];
                        let span = (b.t_max - b.t_min).max(1.0);
                        let value = b.t_max + span * (1000.0 + injected as f64);
                        for &r in &members[group] {
                            rows[r][col] = CellValue::number(value);
                        }
                        claimed.insert((group, col));
                        remaining -= size;
                        injected += 1;
                        progress = true;
                        break;
                    }
                }
                if remaining == 0 || !progress {
                    break;
                }
            }
            if remaining as f64 > POLLUTION_TOLERANCE * total_cells as f64 {
                warnings.push(format!(
                    "outlier target not reached: {remaining} of {outlier_quota} \
                     planned cells had no numeric slot left"
                ));
            }
        }
    }

    // ---- missing cells -------------------------------------------------
    let missing_quota = (spec.missing_target * total_cells as f64).round() as usize;
    let existing_missing = rows.iter().flatten().filter(|c| c.is_missing_like()).count();
    if existing_missing > missing_quota && spec.missing_target > 0.0 {
        warnings.push("input already exceeds the missing target".to_string());
    }
    let mut remaining = missing_quota.saturating_sub(existing_missing);
    if remaining > 0 {
        let caps: Vec<usize> = ir
            .headers()
            .iter()
            .map(|name| {
                let rate = if schema.get(name) == Some(ColumnType::Number) {
                    MISSING_CAP_NUMERIC
                } else {
                    MISSING_CAP_OTHER
                };
                (rate * rows.len() as f64).floor() as usize
            })
            .collect();
        let mut col_missing: Vec<usize> = (0..cols)
            .map(|c| rows.iter().filter(|r| r[c].is_missing_like()).count())
            .collect();
        let spared: Vec<usize> = (0..cols)
            .filter(|&c| spec.spare_columns.iter().any(|n| n == &ir.headers()[c]))
            .collect();

        let usable = |g: usize, c: usize| Some(c) != protected && !claimed.contains(&(g, c));
        let mut slots: Vec<(usize, usize)> = (0..n0)
            .flat_map(|g| (0..cols).map(move |c| (g, c)))
            .filter(|&(g, c)| usable(g, c) && !spared.contains(&c))
            .collect();
        slots.shuffle(&mut rng);
        // Spared columns go to the back of the queue: they are blanked
        // only once the rest of the table cannot absorb the quota.
        let mut fallback: Vec<(usize, usize)> = (0..n0)
            .flat_map(|g| spared.iter().map(move |&c| (g, c)))
            .filter(|&(g, c)| usable(g, c))
            .collect();
        fallback.shuffle(&mut rng);

        for (group, col) in slots.into_iter().chain(fallback) {
            if remaining == 0 {
                break;
            }
            let size = members[group].len();
            if size > remaining
                || col_missing[col] + size > caps[col]
                || members[group].iter().any(|&r| rows[r][col].is_missing_like())
            {
                continue;
            }
            for &r in &members[group] {
                rows[r][col] = CellValue::Missing;
            }
            col_missing[col] += size;
            remaining -= size;
        }
        if remaining as f64 > POLLUTION_TOLERANCE * total_cells as f64 {
            warnings.push(format!(
                "missing target not reached: {remaining} of {missing_quota} \
                 planned cells had no blankable slot left"
            ));
        }
    }

    Ok(PollutionOutcome {
        ir: InternalRepresentation::new(ir.headers().to_vec(), rows)?,
        warnings,
    })
}
