//! The transformation DSL: a small expression language over table rows.
//!
//! A [`TransformationProgram`] describes how every target column is computed
//! from the source columns of one row. Programs arrive either from the
//! deterministic inference ladder ([`infer`]) or from a remote provider as
//! JSON; both go through the same parsing and validation, so an
//! over-imaginative provider cannot smuggle in operations the engine does
//! not understand.
//!
//! Evaluation is row-local by design: an expression can read any source
//! column of the current row, but never another row. That keeps programs
//! trivially parallel over rows and makes their behaviour auditable.

pub mod infer;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::ir::{CellValue, InternalRepresentation};
use crate::matching::SchemaMap;

/// Maximum nesting depth of an expression tree. Deeper programs are
/// rejected at parse time; nothing useful needs more, and the cap keeps
/// recursive evaluation safe from adversarial provider output.
pub const MAX_EXPR_DEPTH: usize = 32;

/// Percentage of result cells that may fail evaluation before the whole
/// transformation is abandoned instead of silently degrading.
pub const FAILURE_ABORT_PCT: u8 = 10;

/// Arithmetic operators, serialized as their usual symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

impl ArithOp {
    fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
            ArithOp::Mul => '*',
            ArithOp::Div => '/',
        }
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// One expression node. The JSON form carries the node kind in an `"op"`
/// tag, e.g. `{"op":"col","name":"price"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    /// The value of a source column in the current row.
    Col { name: String },
    /// A literal value.
    Const { value: CellValue },
    /// Children rendered as text and joined with a separator ("" default).
    Concat {
        exprs: Vec<Expr>,
        #[serde(default)]
        separator: String,
    },
    /// Binary arithmetic over numbers.
    Arith {
        operator: ArithOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    /// Substitutes the child's text for the first `{}` in the pattern.
    Format { expr: Box<Expr>, pattern: String },
    /// Looks the child's text form up in a finite table.
    MapLookup {
        expr: Box<Expr>,
        table: IndexMap<String, CellValue>,
        #[serde(default)]
        default: CellValue,
    },
    /// Splits the child's text on a separator and picks one piece.
    Split {
        expr: Box<Expr>,
        separator: String,
        index: usize,
    },
}

impl Expr {
    pub fn col(name: impl Into<String>) -> Expr {
        Expr::Col { name: name.into() }
    }

    pub fn constant(value: CellValue) -> Expr {
        Expr::Const { value }
    }

    pub fn concat(exprs: Vec<Expr>, separator: impl Into<String>) -> Expr {
        Expr::Concat {
            exprs,
            separator: separator.into(),
        }
    }

    pub fn arith(operator: ArithOp, left: Expr, right: Expr) -> Expr {
        Expr::Arith {
            operator,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn lookup(source: Expr, table: IndexMap<String, CellValue>) -> Expr {
        Expr::MapLookup {
            expr: Box::new(source),
            table,
            default: CellValue::Missing,
        }
    }

    /// `a * x + c` over a source column, in the canonical shape the
    /// inference ladder produces: pure scaling drops the `+ c` term and
    /// pure shifting drops the `* a` term.
    pub fn affine(column: &str, a: f64, c: f64) -> Expr {
        let x = Expr::col(column);
        let scaled = if a == 1.0 {
            x
        } else {
            Expr::arith(ArithOp::Mul, x, Expr::constant(CellValue::number(a)))
        };
        if c == 0.0 {
            scaled
        } else {
            Expr::arith(ArithOp::Add, scaled, Expr::constant(CellValue::number(c)))
        }
    }

    /// Nesting depth of this expression tree; a lone leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Col { .. } | Expr::Const { .. } => 1,
            Expr::Concat { exprs, .. } => {
                1 + exprs.iter().map(Expr::depth).max().unwrap_or(0)
            }
            Expr::Arith { left, right, .. } => 1 + left.depth().max(right.depth()),
            Expr::Format { expr, .. }
            | Expr::MapLookup { expr, .. }
            | Expr::Split { expr, .. } => 1 + expr.depth(),
        }
    }

    /// Collects the source column names this expression reads.
    pub fn referenced_columns(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Col { name } => {
                out.insert(name.clone());
            }
            Expr::Const { .. } => {}
            Expr::Concat { exprs, .. } => {
                for e in exprs {
                    e.referenced_columns(out);
                }
            }
            Expr::Arith { left, right, .. } => {
                left.referenced_columns(out);
                right.referenced_columns(out);
            }
            Expr::Format { expr, .. }
            | Expr::MapLookup { expr, .. }
            | Expr::Split { expr, .. } => expr.referenced_columns(out),
        }
    }
}

/// Resolves column names to positions once per table, so per-row
/// evaluation does linear-free lookups.
pub struct ColumnBindings {
    index: HashMap<String, usize>,
}

impl ColumnBindings {
    pub fn new(headers: &[String]) -> ColumnBindings {
        ColumnBindings {
            index: headers
                .iter()
                .enumerate()
                .map(|(i, h)| (h.clone(), i))
                .collect(),
        }
    }

    fn get<'r>(&self, name: &str, row: &'r [CellValue]) -> Option<&'r CellValue> {
        self.index.get(name).map(|&i| &row[i])
    }
}

/// Evaluates an expression against one row.
///
/// Missing inputs propagate: any operation over a missing-like operand
/// yields `Missing` rather than an error. Arithmetic over a present
/// non-number is a hard error (the program disagrees with the data's
/// shape), while division by zero degrades to `Missing` with a warning —
/// a single bad denominator should not poison a whole run.
pub fn eval_expr(expr: &Expr, bindings: &ColumnBindings, row: &[CellValue]) -> Result<CellValue> {
    match expr {
        Expr::Col { name } => match bindings.get(name, row) {
            Some(cell) => Ok(cell.clone()),
            None => Err(Error::Expr(format!("unknown column {name:?}"))),
        },
        Expr::Const { value } => Ok(value.clone()),
        Expr::Concat { exprs, separator } => {
            let mut parts = Vec::with_capacity(exprs.len());
            for e in exprs {
                let v = eval_expr(e, bindings, row)?;
                if v.is_missing_like() {
                    return Ok(CellValue::Missing);
                }
                parts.push(v.to_field_text());
            }
            Ok(CellValue::Text(parts.join(separator)))
        }
        Expr::Arith {
            operator,
            left,
            right,
        } => {
            let l = eval_expr(left, bindings, row)?;
            let r = eval_expr(right, bindings, row)?;
            if l.is_missing_like() || r.is_missing_like() {
                return Ok(CellValue::Missing);
            }
            let (Some(a), Some(b)) = (l.as_number(), r.as_number()) else {
                return Err(Error::Expr(format!(
                    "arithmetic '{operator}' needs numbers, got {} and {}",
                    l.flow_type(),
                    r.flow_type()
                )));
            };
            if *operator == ArithOp::Div && b == 0.0 {
                log::warn!("division by zero degraded to a missing cell");
                return Ok(CellValue::Missing);
            }
            let v = match operator {
                ArithOp::Add => a + b,
                ArithOp::Sub => a - b,
                ArithOp::Mul => a * b,
                ArithOp::Div => a / b,
            };
            Ok(CellValue::number(v))
        }
        Expr::Format { expr, pattern } => {
            let v = eval_expr(expr, bindings, row)?;
            if v.is_missing_like() {
                return Ok(CellValue::Missing);
            }
            Ok(CellValue::Text(
                pattern.replacen("{}", &v.to_field_text(), 1),
            ))
        }
        Expr::MapLookup {
            expr,
            table,
            default,
        } => {
            let v = eval_expr(expr, bindings, row)?;
            if v.is_missing_like() {
                return Ok(CellValue::Missing);
            }
            Ok(table
                .get(&v.to_field_text())
                .cloned()
                .unwrap_or_else(|| default.clone()))
        }
        Expr::Split {
            expr,
            separator,
            index,
        } => {
            let v = eval_expr(expr, bindings, row)?;
            if v.is_missing_like() {
                return Ok(CellValue::Missing);
            }
            if separator.is_empty() {
                return Err(Error::Expr("split separator must be non-empty".into()));
            }
            let text = v.to_field_text();
            Ok(match text.split(separator.as_str()).nth(*index) {
                Some(piece) => CellValue::Text(piece.to_string()),
                None => CellValue::Missing,
            })
        }
    }
}

/// One output column: its name and the expression that fills it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRule {
    pub target_column: String,
    pub expr: Expr,
}

/// The complete mapping logic for a file pair: one rule per mapped
/// target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationProgram {
    pub columns: Vec<ColumnRule>,
}

impl TransformationProgram {
    pub fn rule_for(&self, target: &str) -> Option<&ColumnRule> {
        self.columns.iter().find(|r| r.target_column == target)
    }
}

impl fmt::Display for TransformationProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, rule) in self.columns.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{} <- {}", rule.target_column, summarize_expr(&rule.expr))?;
        }
        Ok(())
    }
}

/// Compact single-line rendering of an expression, for reports and logs.
pub fn summarize_expr(expr: &Expr) -> String {
    match expr {
        Expr::Col { name } => format!("col({name})"),
        Expr::Const { value } => format!("const({})", value.to_field_text()),
        Expr::Concat { exprs, separator } => {
            let inner: Vec<String> = exprs.iter().map(summarize_expr).collect();
            format!("concat[{:?}]({})", separator, inner.join(", "))
        }
        Expr::Arith {
            operator,
            left,
            right,
        } => format!(
            "({} {} {})",
            summarize_expr(left),
            operator,
            summarize_expr(right)
        ),
        Expr::Format { expr, pattern } => {
            format!("format({:?}, {})", pattern, summarize_expr(expr))
        }
        Expr::MapLookup { expr, table, .. } => {
            format!("map_lookup({}, {} entries)", summarize_expr(expr), table.len())
        }
        Expr::Split {
            expr,
            separator,
            index,
        } => format!("split({}, {:?})[{}]", summarize_expr(expr), separator, index),
    }
}

/// Parses a program from JSON text. Unknown operations, malformed nodes,
/// duplicate targets and over-deep expressions are all rejected here,
/// before any data is touched.
pub fn parse_program(text: &str) -> Result<TransformationProgram> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Program(format!("program is not valid JSON: {e}")))?;
    parse_program_value(&value)
}

/// Parses a program from an already-decoded JSON value (the shape a
/// provider answers with).
pub fn parse_program_value(value: &serde_json::Value) -> Result<TransformationProgram> {
    let program: TransformationProgram = serde_json::from_value(value.clone())
        .map_err(|e| Error::Program(format!("malformed program: {e}")))?;
    let mut seen = BTreeSet::new();
    for rule in &program.columns {
        if rule.target_column.is_empty() {
            return Err(Error::Program("empty target column name".into()));
        }
        if !seen.insert(rule.target_column.as_str()) {
            return Err(Error::Program(format!(
                "duplicate rule for target column {:?}",
                rule.target_column
            )));
        }
        let depth = rule.expr.depth();
        if depth > MAX_EXPR_DEPTH {
            return Err(Error::Program(format!(
                "expression for {:?} has depth {depth}, maximum is {MAX_EXPR_DEPTH}",
                rule.target_column
            )));
        }
    }
    Ok(program)
}

/// Checks a program against the source table and the schema map it is
/// supposed to implement: every mapped target needs exactly one rule, no
/// rule may aim at an unmapped target, every referenced column must exist
/// in the source, and the depth cap holds even for programs built in
/// code rather than parsed.
pub fn validate_program(
    program: &TransformationProgram,
    source_headers: &[String],
    schema_map: &SchemaMap,
) -> Result<()> {
    let mapped: Vec<&str> = schema_map.targets().collect();
    for target in &mapped {
        if program.rule_for(target).is_none() {
            return Err(Error::Program(format!(
                "no rule for mapped target column {target:?}"
            )));
        }
    }
    if program.columns.len() != mapped.len() {
        let extra: Vec<&str> = program
            .columns
            .iter()
            .map(|r| r.target_column.as_str())
            .filter(|t| !mapped.contains(t))
            .collect();
        return Err(Error::Program(format!(
            "rules for unmapped target columns: {extra:?}"
        )));
    }
    let known: BTreeSet<&str> = source_headers.iter().map(String::as_str).collect();
    for rule in &program.columns {
        let depth = rule.expr.depth();
        if depth > MAX_EXPR_DEPTH {
            return Err(Error::Program(format!(
                "expression for {:?} has depth {depth}, maximum is {MAX_EXPR_DEPTH}",
                rule.target_column
            )));
        }
        let mut refs = BTreeSet::new();
        rule.expr.referenced_columns(&mut refs);
        for name in refs {
            if !known.contains(name.as_str()) {
                return Err(Error::Program(format!(
                    "rule for {:?} references column {name:?} not present in the source",
                    rule.target_column
                )));
            }
        }
    }
    Ok(())
}

/// Result of applying a program: the produced table plus an account of
/// evaluation failures (which became missing cells).
#[derive(Debug)]
pub struct TransformOutcome {
    pub ir: InternalRepresentation,
    pub failed_cells: usize,
    pub total_cells: usize,
    /// First few distinct failure messages, for diagnostics.
    pub sample_errors: Vec<String>,
}

/// Applies a program to a source table, producing the target-shaped
/// table. Output columns are the mapped targets in schema-map order. A
/// cell whose expression fails evaluates to `Missing` and is counted; if
/// more than [`FAILURE_ABORT_PCT`] percent of all result cells fail, the
/// transformation aborts instead of returning a husk.
pub fn apply_transform_program(
    source: &InternalRepresentation,
    program: &TransformationProgram,
    schema_map: &SchemaMap,
) -> Result<TransformOutcome> {
    validate_program(program, source.headers(), schema_map)?;

    let targets: Vec<String> = schema_map.targets().map(str::to_string).collect();
    let rules: Vec<&ColumnRule> = targets
        .iter()
        .map(|t| program.rule_for(t).expect("validated above"))
        .collect();

    let bindings = ColumnBindings::new(source.headers());
    let mut rows = Vec::with_capacity(source.row_count());
    let mut failed = 0usize;
    let mut sample_errors: Vec<String> = Vec::new();

    for row in source.rows() {
        let mut out = Vec::with_capacity(rules.len());
        for rule in &rules {
            match eval_expr(&rule.expr, &bindings, row) {
                Ok(v) => out.push(v),
                Err(e) => {
                    failed += 1;
                    let msg = format!("{}: {e}", rule.target_column);
                    if sample_errors.len() < 5 && !sample_errors.contains(&msg) {
                        sample_errors.push(msg);
                    }
                    out.push(CellValue::Missing);
                }
            }
        }
        rows.push(out);
    }

    let total = rows.len() * targets.len();
    if failed * 100 > FAILURE_ABORT_PCT as usize * total {
        return Err(Error::TransformAborted {
            failed,
            total,
            limit_pct: FAILURE_ABORT_PCT,
        });
    }

    Ok(TransformOutcome {
        ir: InternalRepresentation::new(targets, rows)?,
        failed_cells: failed,
        total_cells: total,
        sample_errors,
    })
}
