//! Cell values, column types, and the Internal Representation (IR).
//!
//! Every component of the pipeline operates on the IR: a header row plus a
//! 2-D matrix of typed cells abstracting over CSV and JSON content. The
//! translation layers in [`csv`](mod@crate::ir) and json keep the mapping
//! lossless in both directions.

mod csv;
mod json;

pub use csv::{csv_file_to_ir, csv_to_ir, ir_to_csv};
pub use json::{ir_to_json, json_file_to_ir, json_to_ir};

use std::fmt;

use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel used when a missing cell must be written as text. The leading
/// control byte keeps it out of the space of user-supplied strings.
pub const MISSING_SENTINEL: &str = "\u{0}missing";

/// The five column types the engine distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Number,
    String,
    Boolean,
    Complex,
    Ambiguous,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ColumnType::Number => "number",
            ColumnType::String => "string",
            ColumnType::Boolean => "boolean",
            ColumnType::Complex => "complex",
            ColumnType::Ambiguous => "ambiguous",
        };
        f.write_str(name)
    }
}

/// A single cell of the internal representation.
///
/// `Missing` is a first-class placeholder, distinct from empty text and from
/// the literal string "null". `Complex` holds nested list/map structure from
/// semi-structured sources.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Number(f64),
    Text(String),
    Bool(bool),
    Complex(serde_json::Value),
    Missing,
}

impl Default for CellValue {
    fn default() -> Self {
        CellValue::Missing
    }
}

impl CellValue {
    /// Builds a numeric cell, normalising `-0.0` so that equal numbers share
    /// one canonical form. Non-finite input degrades to `Missing`; the value
    /// domain holds finite 64-bit floats only.
    pub fn number(value: f64) -> CellValue {
        if !value.is_finite() {
            return CellValue::Missing;
        }
        CellValue::Number(if value == 0.0 { 0.0 } else { value })
    }

    pub fn text(value: impl Into<String>) -> CellValue {
        CellValue::Text(value.into())
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, CellValue::Missing)
    }

    /// Whether the cell counts as missing for cleaning and quality purposes:
    /// the `Missing` placeholder or an empty text cell.
    pub fn is_missing_like(&self) -> bool {
        match self {
            CellValue::Missing => true,
            CellValue::Text(s) => s.is_empty(),
            _ => false,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            CellValue::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            CellValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// The column type this single cell exhibits.
    ///
    /// Truth-valued text such as "Y"/"N" is typed `string` here; boolean
    /// detection happens at column level in schema inference.
    ///
    /// # Panics
    /// Calling this on `Missing` is a contract violation: missing cells carry
    /// no type information and must be skipped by callers.
    pub fn flow_type(&self) -> ColumnType {
        match self {
            CellValue::Number(_) => ColumnType::Number,
            CellValue::Text(_) => ColumnType::String,
            CellValue::Bool(_) => ColumnType::Boolean,
            CellValue::Complex(_) => ColumnType::Complex,
            CellValue::Missing => panic!("flow_type called on a missing cell"),
        }
    }

    /// Renders the cell the way it appears in a CSV field.
    pub fn to_field_text(&self) -> String {
        match self {
            CellValue::Number(v) => format_number(*v),
            CellValue::Text(s) => s.clone(),
            CellValue::Bool(b) => b.to_string(),
            CellValue::Complex(v) => v.to_string(),
            CellValue::Missing => String::new(),
        }
    }
}

/// Infers the column type of one cell. See [`CellValue::flow_type`].
pub fn infer_cell_type(cell: &CellValue) -> ColumnType {
    cell.flow_type()
}

/// Formats a number without a trailing `.0` for integral values, keeping
/// CSV round-trips byte-stable ("2" parses and re-renders as "2").
pub(crate) fn format_number(v: f64) -> String {
    format!("{v}")
}

/// Canonical, deterministic text form of a cell.
///
/// Distinct values serialize to distinct strings; numerically equal values
/// (1 and 1.0 are the same 64-bit float) share one form. Complex values are
/// rendered with recursively sorted object keys so equal nested structures
/// agree regardless of key insertion order. Used for row hashing, distinct
/// counting, and boolean detection.
pub fn serialize_cell(cell: &CellValue) -> String {
    match cell {
        CellValue::Number(v) => format!("n:{}", format_number(*v)),
        CellValue::Text(s) => format!("s:{s}"),
        CellValue::Bool(b) => format!("b:{b}"),
        CellValue::Complex(v) => format!("c:{}", canonical_json(v)),
        CellValue::Missing => MISSING_SENTINEL.to_string(),
    }
}

/// Canonical fingerprint of one row, used for duplicate detection.
///
/// Cells are paired with their header names and sorted by header, so two
/// rows agree independently of column order. Each component is
/// length-prefixed (netstring style), which makes the encoding injective:
/// no combination of header names and cell contents can collide.
pub fn row_fingerprint(headers: &[String], row: &[CellValue]) -> String {
    debug_assert_eq!(headers.len(), row.len());
    let mut pairs: Vec<(&String, String)> = headers
        .iter()
        .zip(row)
        .map(|(h, c)| (h, serialize_cell(c)))
        .collect();
    pairs.sort_by(|a, b| a.0.cmp(b.0));

    let mut out = String::new();
    for (header, cell) in pairs {
        out.push_str(&format!("{}:{header}", header.len()));
        out.push_str(&format!("{}:{cell}", cell.len()));
    }
    out
}

fn canonical_json(value: &serde_json::Value) -> String {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let fields: Vec<String> = keys
                .into_iter()
                .map(|k| {
                    format!(
                        "{}:{}",
                        serde_json::to_string(k).expect("string serializes"),
                        canonical_json(&map[k])
                    )
                })
                .collect();
            format!("{{{}}}", fields.join(","))
        }
        Value::Array(items) => {
            let fields: Vec<String> = items.iter().map(canonical_json).collect();
            format!("[{}]", fields.join(","))
        }
        other => other.to_string(),
    }
}

impl Serialize for CellValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CellValue::Number(v) => {
                // Integral values serialize as JSON integers so that JSON
                // round-trips stay byte-stable.
                if v.fract() == 0.0 && v.abs() < 9.007_199_254_740_992e15 {
                    serializer.serialize_i64(*v as i64)
                } else {
                    serializer.serialize_f64(*v)
                }
            }
            CellValue::Text(s) => serializer.serialize_str(s),
            CellValue::Bool(b) => serializer.serialize_bool(*b),
            CellValue::Complex(v) => v.serialize(serializer),
            CellValue::Missing => serializer.serialize_unit(),
        }
    }
}

impl<'de> Deserialize<'de> for CellValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct CellVisitor;

        impl<'de> Visitor<'de> for CellVisitor {
            type Value = CellValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON scalar, array, object, or null")
            }

            fn visit_bool<E>(self, v: bool) -> std::result::Result<CellValue, E> {
                Ok(CellValue::Bool(v))
            }

            fn visit_i64<E>(self, v: i64) -> std::result::Result<CellValue, E> {
                Ok(CellValue::number(v as f64))
            }

            fn visit_u64<E>(self, v: u64) -> std::result::Result<CellValue, E> {
                Ok(CellValue::number(v as f64))
            }

            fn visit_f64<E>(self, v: f64) -> std::result::Result<CellValue, E> {
                Ok(CellValue::number(v))
            }

            fn visit_str<E>(self, v: &str) -> std::result::Result<CellValue, E> {
                Ok(CellValue::Text(v.to_string()))
            }

            fn visit_unit<E>(self) -> std::result::Result<CellValue, E> {
                Ok(CellValue::Missing)
            }

            fn visit_none<E>(self) -> std::result::Result<CellValue, E> {
                Ok(CellValue::Missing)
            }

            fn visit_seq<A: SeqAccess<'de>>(
                self,
                seq: A,
            ) -> std::result::Result<CellValue, A::Error> {
                let value =
                    serde_json::Value::deserialize(de::value::SeqAccessDeserializer::new(seq))?;
                Ok(CellValue::Complex(value))
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                map: A,
            ) -> std::result::Result<CellValue, A::Error> {
                let value =
                    serde_json::Value::deserialize(de::value::MapAccessDeserializer::new(map))?;
                Ok(CellValue::Complex(value))
            }
        }

        deserializer.deserialize_any(CellVisitor)
    }
}

/// Ordered key path from a JSON document root to its array of records.
///
/// Empty for CSV sources and root-level JSON arrays; used to rebuild the
/// original nesting when translating outward.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReconstructionKey(Vec<String>);

impl ReconstructionKey {
    pub fn root() -> ReconstructionKey {
        ReconstructionKey(Vec::new())
    }

    pub fn new(path: Vec<String>) -> ReconstructionKey {
        ReconstructionKey(path)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn path(&self) -> &[String] {
        &self.0
    }
}

/// The tabular abstraction shared by every pipeline component: a list of
/// unique, non-empty header names and one cell per header per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct InternalRepresentation {
    headers: Vec<String>,
    rows: Vec<Vec<CellValue>>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    headers: Vec<String>,
    rows: Vec<Vec<CellValue>>,
}

impl TryFrom<RawTable> for InternalRepresentation {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        InternalRepresentation::new(raw.headers, raw.rows)
    }
}

impl From<InternalRepresentation> for RawTable {
    fn from(ir: InternalRepresentation) -> RawTable {
        RawTable {
            headers: ir.headers,
            rows: ir.rows,
        }
    }
}

impl InternalRepresentation {
    /// Validates and builds a table. Header names must be unique and
    /// non-empty; every row must have exactly one cell per header.
    pub fn new(headers: Vec<String>, rows: Vec<Vec<CellValue>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for name in &headers {
            if name.is_empty() {
                return Err(Error::InvalidIr("empty header name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidIr(format!("duplicate header {name:?}")));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != headers.len() {
                return Err(Error::InvalidIr(format!(
                    "row {} has {} cells, expected {}",
                    i + 1,
                    row.len(),
                    headers.len()
                )));
            }
        }
        Ok(InternalRepresentation { headers, rows })
    }

    /// A table with no columns and no rows.
    pub fn empty() -> Self {
        InternalRepresentation {
            headers: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn rows(&self) -> &[Vec<CellValue>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.headers.len()
    }

    /// Total number of non-header cells.
    pub fn cell_count(&self) -> usize {
        self.rows.len() * self.headers.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn cell(&self, row: usize, col: usize) -> &CellValue {
        &self.rows[row][col]
    }

    /// Iterates the cells of one column, top to bottom.
    pub fn column(&self, col: usize) -> impl Iterator<Item = &CellValue> {
        self.rows.iter().map(move |row| &row[col])
    }

    /// Builds a new table containing the selected rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        InternalRepresentation {
            headers: self.headers.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

}

/// Translates a file into the internal representation, dispatching on
/// the extension: `.json` goes through the JSON translator (recording
/// the reconstruction key), everything else is treated as CSV (with an
/// empty key).
pub fn translate_file(
    path: &std::path::Path,
) -> Result<(InternalRepresentation, ReconstructionKey)> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let text = std::fs::read_to_string(path)?;
        json_to_ir(&text)
    } else {
        Ok((csv_file_to_ir(path)?, ReconstructionKey::default()))
    }
}

/// Renders a table back into file text: JSON when the reconstruction
/// key (or a `.json` file name) asks for it, CSV otherwise.
pub fn render_file(
    ir: &InternalRepresentation,
    key: &ReconstructionKey,
    file_name: &str,
) -> Result<String> {
    let wants_json =
        !key.is_root() || file_name.to_ascii_lowercase().ends_with(".json");
    if wants_json {
        ir_to_json(ir, key)
    } else {
        ir_to_csv(ir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn number_constructor_normalises() {
        assert_eq!(CellValue::number(-0.0), CellValue::Number(0.0));
        assert_eq!(serialize_cell(&CellValue::number(-0.0)), "n:0");
        assert_eq!(CellValue::number(f64::NAN), CellValue::Missing);
        assert_eq!(CellValue::number(f64::INFINITY), CellValue::Missing);
    }

    #[test]
    fn integral_numbers_render_without_fraction() {
        assert_eq!(CellValue::number(2.0).to_field_text(), "2");
        assert_eq!(CellValue::number(3.14).to_field_text(), "3.14");
        assert_eq!(CellValue::number(-7.0).to_field_text(), "-7");
    }

    #[test]
    fn serialize_cell_equates_numerically_equal_values() {
        assert_eq!(
            serialize_cell(&CellValue::number(1.0)),
            serialize_cell(&CellValue::Number(1.0))
        );
        assert_eq!(serialize_cell(&CellValue::number(1.0)), "n:1");
    }

    #[test]
    fn serialize_cell_distinguishes_types() {
        let forms = [
            serialize_cell(&CellValue::number(1.0)),
            serialize_cell(&CellValue::text("1")),
            serialize_cell(&CellValue::Bool(true)),
            serialize_cell(&CellValue::text("true")),
            serialize_cell(&CellValue::Complex(json!([1]))),
            serialize_cell(&CellValue::Missing),
            serialize_cell(&CellValue::text("")),
            serialize_cell(&CellValue::text("null")),
        ];
        let distinct: std::collections::HashSet<&String> = forms.iter().collect();
        assert_eq!(distinct.len(), forms.len());
    }

    #[test]
    fn complex_canonical_form_sorts_keys() {
        let a = CellValue::Complex(json!({"b": 2, "a": 1}));
        let b = CellValue::Complex(json!({"a": 1, "b": 2}));
        assert_eq!(serialize_cell(&a), serialize_cell(&b));
        assert_eq!(serialize_cell(&a), r#"c:{"a":1,"b":2}"#);
    }

    #[test]
    fn missing_sentinel_is_control_prefixed() {
        let sentinel = serialize_cell(&CellValue::Missing);
        assert!(sentinel.starts_with('\u{0}'));
    }

    // Collision-freedom of the canonical form, checked by map insertion
    // count over a generated corpus of distinct values.
    #[test]
    fn serialize_cell_collision_free_on_large_corpus() {
        let mut values: Vec<CellValue> = Vec::new();
        for i in 0..40_000 {
            values.push(CellValue::number(i as f64));
            values.push(CellValue::text(format!("v{i}")));
        }
        for i in 0..20_000 {
            values.push(CellValue::Complex(json!({ "k": i, "tag": format!("t{i}") })));
        }
        values.push(CellValue::Bool(true));
        values.push(CellValue::Bool(false));
        values.push(CellValue::Missing);
        assert!(values.len() >= 100_000);

        let forms: std::collections::HashSet<String> =
            values.iter().map(serialize_cell).collect();
        assert_eq!(forms.len(), values.len());
    }

    #[test]
    fn row_fingerprint_ignores_column_order() {
        let h1 = vec!["a".to_string(), "b".to_string()];
        let h2 = vec!["b".to_string(), "a".to_string()];
        let r1 = vec![CellValue::number(1.0), CellValue::text("x")];
        let r2 = vec![CellValue::text("x"), CellValue::number(1.0)];
        assert_eq!(row_fingerprint(&h1, &r1), row_fingerprint(&h2, &r2));
        assert_ne!(row_fingerprint(&h1, &r1), row_fingerprint(&h1, &r2));
    }

    #[test]
    fn row_fingerprint_resists_delimiter_injection() {
        // A cell crafted to mimic the encoding of a neighbouring pair must
        // not collide with the genuine two-cell row.
        let h = vec!["a".to_string(), "b".to_string()];
        let sneaky = vec![
            CellValue::text("x1:b3:s:z"),
            CellValue::text("y"),
        ];
        let honest = vec![CellValue::text("x"), CellValue::text("z")];
        assert_ne!(row_fingerprint(&h, &sneaky), row_fingerprint(&h, &honest));
    }

    #[test]
    fn ir_rejects_duplicate_headers() {
        let err = InternalRepresentation::new(
            vec!["a".into(), "a".into()],
            vec![],
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate header"));
    }

    #[test]
    fn ir_rejects_ragged_rows() {
        let err = InternalRepresentation::new(
            vec!["a".into(), "b".into()],
            vec![vec![CellValue::number(1.0)]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    #[should_panic(expected = "missing cell")]
    fn flow_type_of_missing_panics() {
        CellValue::Missing.flow_type();
    }

    #[test]
    fn cell_value_serde_round_trip() {
        let cells = vec![
            CellValue::number(1.5),
            CellValue::number(3.0),
            CellValue::text("hi"),
            CellValue::Bool(false),
            CellValue::Complex(json!({"a": [1, 2]})),
            CellValue::Missing,
        ];
        let encoded = serde_json::to_string(&cells).unwrap();
        assert_eq!(encoded, r#"[1.5,3,"hi",false,{"a":[1,2]},null]"#);
        let decoded: Vec<CellValue> = serde_json::from_str(&encoded).unwrap();
        assert_eq!(decoded, cells);
    }
}
