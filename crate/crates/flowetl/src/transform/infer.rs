//! Inference of transformation programs from the example pair.
//!
//! Given the source sample, the target sample, and the schema map, this
//! module proposes one expression per mapped target column. There are two
//! routes: a deterministic ladder of hypotheses, and a remote provider
//! whose answer is parsed, validated and verified before use — with the
//! ladder as fallback when anything about the answer is off.
//!
//! The ladder tries, in order: identity, concatenation (for multi-source
//! correspondences), affine numeric maps `a*x + c`, and finite value
//! lookups. Each hypothesis is verified against *every* aligned example
//! row before it is accepted; a column where nothing verifies gets an
//! identity-shaped guess and a warning, never a silent fabrication.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::ir::{serialize_cell, CellValue, InternalRepresentation};
use crate::matching::{Correspondence, SchemaMap};
use crate::provider::{
    InferRequest, Provenance, Provider, DEFAULT_INFER_RULES, MAX_PROMPT_ROWS,
};
use crate::transform::{
    eval_expr, parse_program_value, validate_program, ColumnBindings, ColumnRule, Expr,
    TransformationProgram,
};

/// Relative tolerance used when comparing produced numbers with target
/// numbers: float arithmetic may not reconstruct an example bit-exactly.
const VERIFY_TOLERANCE: f64 = 1e-9;

/// An inferred program plus how it was obtained and any reservations.
#[derive(Debug, Clone)]
pub struct InferOutcome {
    pub program: TransformationProgram,
    pub provenance: Provenance,
    /// One entry per guessed column or provider mishap; empty means every
    /// rule was verified against the examples.
    pub warnings: Vec<String>,
}

/// Whether a produced cell agrees with a target example cell. Missing-like
/// matches missing-like; numbers match within a small relative tolerance;
/// everything else must serialize identically.
fn cells_agree(produced: &CellValue, expected: &CellValue) -> bool {
    if produced.is_missing_like() && expected.is_missing_like() {
        return true;
    }
    if let (Some(a), Some(b)) = (produced.as_number(), expected.as_number()) {
        return (a - b).abs() <= VERIFY_TOLERANCE * b.abs().max(1.0);
    }
    serialize_cell(produced) == serialize_cell(expected)
}

/// Pairs each target-sample row with the source-sample row it exemplifies.
///
/// Equal row counts mean positional correspondence. Otherwise the two
/// samples are joined through the first single-source correspondence that
/// behaves like a key: unique values on the source side, full coverage of
/// the target side. Failing both, inference has no evidence to verify
/// against, and the caller degrades to guesses.
fn align_rows(
    source: &InternalRepresentation,
    target: &InternalRepresentation,
    map: &SchemaMap,
) -> std::result::Result<Vec<(usize, usize)>, String> {
    if source.row_count() == target.row_count() {
        return Ok((0..source.row_count()).map(|i| (i, i)).collect());
    }

    'corr: for corr in &map.correspondences {
        let [source_name] = corr.sources.as_slice() else {
            continue;
        };
        let (Some(s), Some(t)) = (
            source.column_index(source_name),
            target.column_index(&corr.target),
        ) else {
            continue;
        };

        let mut by_key: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
        for (row, cell) in source.column(s).enumerate() {
            if cell.is_missing_like() {
                continue;
            }
            if by_key.insert(serialize_cell(cell), row).is_some() {
                continue 'corr; // not unique, not a key
            }
        }

        let mut pairs = Vec::with_capacity(target.row_count());
        for (row, cell) in target.column(t).enumerate() {
            if cell.is_missing_like() {
                continue 'corr;
            }
            match by_key.get(&serialize_cell(cell)) {
                Some(&src_row) => pairs.push((src_row, row)),
                None => continue 'corr, // target row with no source partner
            }
        }
        return Ok(pairs);
    }

    Err(format!(
        "samples have {} and {} rows and no correspondence works as a join key",
        source.row_count(),
        target.row_count()
    ))
}

/// Evidence for one correspondence: the aligned (source cells, target
/// cell) pairs, with source cells in correspondence order.
struct Evidence<'a> {
    pairs: Vec<(Vec<&'a CellValue>, &'a CellValue)>,
}

fn gather_evidence<'a>(
    corr: &Correspondence,
    source: &'a InternalRepresentation,
    target: &'a InternalRepresentation,
    alignment: &[(usize, usize)],
) -> Result<Evidence<'a>> {
    let mut source_cols = Vec::with_capacity(corr.sources.len());
    for name in &corr.sources {
        source_cols.push(source.column_index(name).ok_or_else(|| {
            Error::InvalidSchemaMap(format!("source column {name:?} not in the source sample"))
        })?);
    }
    let target_col = target.column_index(&corr.target).ok_or_else(|| {
        Error::InvalidSchemaMap(format!(
            "target column {:?} not in the target sample",
            corr.target
        ))
    })?;

    let pairs = alignment
        .iter()
        .map(|&(si, ti)| {
            let cells = source_cols.iter().map(|&c| source.cell(si, c)).collect();
            (cells, target.cell(ti, target_col))
        })
        .collect();
    Ok(Evidence { pairs })
}

/// Identity: the single source column already equals the target examples.
fn try_identity(corr: &Correspondence, evidence: &Evidence) -> Option<Expr> {
    let [source_name] = corr.sources.as_slice() else {
        return None;
    };
    if evidence
        .pairs
        .iter()
        .all(|(cells, expected)| cells_agree(cells[0], expected))
    {
        Some(Expr::col(source_name))
    } else {
        None
    }
}

/// Concatenation: source columns joined with one separator reproduce the
/// examples. The separator is read off the first example where every part
/// is present, by locating the parts inside the target text in order; all
/// gaps must agree.
fn try_concat(corr: &Correspondence, evidence: &Evidence) -> Option<Expr> {
    if corr.sources.len() < 2 {
        return None;
    }
    let separator = evidence.pairs.iter().find_map(|(cells, expected)| {
        if cells.iter().any(|c| c.is_missing_like()) {
            return None;
        }
        let whole = expected.as_text()?;
        let parts: Vec<String> = cells.iter().map(|c| c.to_field_text()).collect();
        derive_separator(&parts, whole)
    })?;
    Some(Expr::concat(
        corr.sources.iter().map(Expr::col).collect(),
        separator,
    ))
}

/// Finds the constant gap between consecutive parts of `whole`, if the
/// parts occur in order, exactly tile the string, and all gaps agree.
fn derive_separator(parts: &[String], whole: &str) -> Option<String> {
    let mut rest = whole.strip_prefix(parts[0].as_str())?;
    let mut gaps: Vec<&str> = Vec::new();
    for part in &parts[1..] {
        let pos = rest.find(part.as_str())?;
        gaps.push(&rest[..pos]);
        rest = &rest[pos + part.len()..];
    }
    if !rest.is_empty() {
        return None;
    }
    let first = *gaps.first()?;
    if gaps.iter().all(|g| *g == first) {
        Some(first.to_string())
    } else {
        None
    }
}

/// Affine: target numbers are `a * x + c` of the source numbers. Two
/// examples with distinct x fix the line; every example must then sit on
/// it. Near-integer coefficients are snapped to keep programs tidy.
fn try_affine(corr: &Correspondence, evidence: &Evidence) -> Option<Expr> {
    let [source_name] = corr.sources.as_slice() else {
        return None;
    };
    let mut points = Vec::new();
    for (cells, expected) in &evidence.pairs {
        if cells[0].is_missing_like() && expected.is_missing_like() {
            continue;
        }
        let (x, y) = (cells[0].as_number()?, expected.as_number()?);
        points.push((x, y));
    }
    let (x1, y1) = *points.first()?;
    let (x2, y2) = *points.iter().find(|(x, _)| *x != x1)?;
    let a = snap((y2 - y1) / (x2 - x1));
    let c = snap(y1 - a * x1);
    if !a.is_finite() || !c.is_finite() {
        return None;
    }
    let on_line = |x: f64, y: f64| (a * x + c - y).abs() <= VERIFY_TOLERANCE * y.abs().max(1.0);
    if points.iter().all(|&(x, y)| on_line(x, y)) {
        Some(Expr::affine(source_name, a, c))
    } else {
        None
    }
}

/// Snaps a coefficient to the nearest integer when it is within float
/// noise of one.
fn snap(v: f64) -> f64 {
    if (v - v.round()).abs() < 1e-9 {
        v.round()
    } else {
        v
    }
}

/// Lookup: the examples define a conflict-free finite dictionary that
/// covers every distinct value the source column takes in the sample.
/// The coverage condition keeps this rung from memorising arbitrary pairs
/// it has no evidence to generalise from.
fn try_lookup(
    corr: &Correspondence,
    evidence: &Evidence,
    source: &InternalRepresentation,
) -> Option<Expr> {
    let [source_name] = corr.sources.as_slice() else {
        return None;
    };
    let mut table: IndexMap<String, CellValue> = IndexMap::new();
    for (cells, expected) in &evidence.pairs {
        if cells[0].is_missing_like() {
            if expected.is_missing_like() {
                continue;
            }
            return None; // a value out of nothing is not a lookup
        }
        let key = cells[0].to_field_text();
        match table.get(&key) {
            Some(prev) if serialize_cell(prev) != serialize_cell(expected) => return None,
            Some(_) => {}
            None => {
                table.insert(key, (*expected).clone());
            }
        }
    }
    if table.is_empty() {
        return None;
    }
    let col = source.column_index(source_name)?;
    for cell in source.column(col) {
        if !cell.is_missing_like() && !table.contains_key(&cell.to_field_text()) {
            return None; // sample contains values the examples never explain
        }
    }
    Some(Expr::lookup(Expr::col(source_name), table))
}

/// The guess used when no hypothesis verifies: pass the source through
/// (or join multiple sources with a space). Wrong, perhaps, but
/// transparent — the accompanying warning says so.
fn identity_guess(corr: &Correspondence) -> Expr {
    match corr.sources.as_slice() {
        [single] => Expr::col(single),
        many => Expr::concat(many.iter().map(Expr::col).collect(), " "),
    }
}

/// Runs the deterministic ladder for every correspondence.
pub fn infer_program_fallback(
    source_sample: &InternalRepresentation,
    target_sample: &InternalRepresentation,
    schema_map: &SchemaMap,
) -> Result<InferOutcome> {
    if target_sample.row_count() == 0 {
        return Err(Error::EmptyInput(
            "target sample has no example rows to infer from".into(),
        ));
    }
    if schema_map.correspondences.is_empty() {
        return Err(Error::InvalidSchemaMap(
            "schema map has no correspondences to infer programs for".into(),
        ));
    }

    let mut warnings = Vec::new();
    let alignment = match align_rows(source_sample, target_sample, schema_map) {
        Ok(pairs) => pairs,
        Err(reason) => {
            warnings.push(format!("rows could not be aligned ({reason}); using identity guesses"));
            Vec::new()
        }
    };

    let bindings = ColumnBindings::new(source_sample.headers());
    let mut columns = Vec::with_capacity(schema_map.correspondences.len());
    for corr in &schema_map.correspondences {
        let evidence = gather_evidence(corr, source_sample, target_sample, &alignment)?;
        let hypothesis = if alignment.is_empty() {
            None
        } else {
            try_identity(corr, &evidence)
                .or_else(|| try_concat(corr, &evidence))
                .or_else(|| try_affine(corr, &evidence))
                .or_else(|| try_lookup(corr, &evidence, source_sample))
        };

        // Soundness check: an accepted hypothesis must reproduce every
        // example. The rungs construct them that way; this guards against
        // a rung and the evaluator drifting apart.
        let verified = hypothesis.filter(|expr| {
            alignment.iter().zip(&evidence.pairs).all(|(&(si, _), (_, expected))| {
                matches!(
                    eval_expr(expr, &bindings, &source_sample.rows()[si]),
                    Ok(v) if cells_agree(&v, expected)
                )
            })
        });

        let expr = match verified {
            Some(expr) => expr,
            None => {
                if !alignment.is_empty() {
                    warnings.push(format!(
                        "no hypothesis verified for target column {:?}; guessing identity",
                        corr.target
                    ));
                }
                identity_guess(corr)
            }
        };
        columns.push(ColumnRule {
            target_column: corr.target.clone(),
            expr,
        });
    }

    Ok(InferOutcome {
        program: TransformationProgram { columns },
        provenance: Provenance::Algorithmic,
        warnings,
    })
}

/// Verifies an externally supplied program against the aligned samples.
/// `Err` carries the reason; unverifiable alignment is reported as `Ok`
/// with a warning by the caller, not here.
fn verify_program(
    program: &TransformationProgram,
    source_sample: &InternalRepresentation,
    target_sample: &InternalRepresentation,
    alignment: &[(usize, usize)],
) -> std::result::Result<(), String> {
    let bindings = ColumnBindings::new(source_sample.headers());
    for rule in &program.columns {
        let Some(target_col) = target_sample.column_index(&rule.target_column) else {
            return Err(format!(
                "target column {:?} is absent from the target sample",
                rule.target_column
            ));
        };
        for &(si, ti) in alignment {
            let expected = target_sample.cell(ti, target_col);
            match eval_expr(&rule.expr, &bindings, &source_sample.rows()[si]) {
                Ok(v) if cells_agree(&v, expected) => {}
                Ok(v) => {
                    return Err(format!(
                        "rule for {:?} produced {:?} where the example shows {:?}",
                        rule.target_column,
                        v.to_field_text(),
                        expected.to_field_text()
                    ));
                }
                Err(e) => {
                    return Err(format!(
                        "rule for {:?} failed on an example row: {e}",
                        rule.target_column
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Asks the provider for a program; parses, validates, and verifies the
/// answer against the samples. Any failure along that path logs the
/// reason and falls back to the deterministic ladder.
pub fn infer_program_remote(
    source_sample: &InternalRepresentation,
    target_sample: &InternalRepresentation,
    schema_map: &SchemaMap,
    provider: &dyn Provider,
) -> Result<InferOutcome> {
    if target_sample.row_count() == 0 {
        return Err(Error::EmptyInput(
            "target sample has no example rows to infer from".into(),
        ));
    }
    let prompt_source = if source_sample.row_count() > MAX_PROMPT_ROWS {
        let head: Vec<usize> = (0..MAX_PROMPT_ROWS).collect();
        source_sample.select_rows(&head)
    } else {
        source_sample.clone()
    };
    let request = InferRequest {
        schema_map: schema_map.clone(),
        source_sample: prompt_source,
        target_sample: target_sample.clone(),
        rules: DEFAULT_INFER_RULES.iter().map(|r| r.to_string()).collect(),
    };

    let failure = match provider.infer_program(&request) {
        Ok(response) => {
            match parse_program_value(&response.program)
                .and_then(|p| validate_program(&p, source_sample.headers(), schema_map).map(|_| p))
            {
                Ok(program) => match align_rows(source_sample, target_sample, schema_map) {
                    Ok(alignment) => {
                        match verify_program(&program, source_sample, target_sample, &alignment) {
                            Ok(()) => {
                                return Ok(InferOutcome {
                                    program,
                                    provenance: Provenance::Provider,
                                    warnings: Vec::new(),
                                })
                            }
                            Err(reason) => {
                                format!("provider program failed verification: {reason}")
                            }
                        }
                    }
                    Err(reason) => {
                        // Validated but unverifiable: accept, flagged. A
                        // blind fallback guess would not be sounder.
                        return Ok(InferOutcome {
                            program,
                            provenance: Provenance::Provider,
                            warnings: vec![format!(
                                "program accepted without example verification ({reason})"
                            )],
                        });
                    }
                },
                Err(e) => format!("provider program rejected: {e}"),
            }
        }
        Err(e) => format!("provider inference call failed: {e}"),
    };

    log::warn!("{failure}; falling back to deterministic inference");
    let mut outcome = infer_program_fallback(source_sample, target_sample, schema_map)?;
    outcome.provenance = Provenance::Fallback;
    outcome.warnings.insert(0, failure);
    Ok(outcome)
}
