//! JSON ↔ internal representation translation.
//!
//! A JSON document is translated by locating its records: the first array of
//! objects found by depth-first descent through object values, in document
//! order. The key path from the root to that array is kept as the
//! reconstruction key so the document shape can be rebuilt on the way out.
//!
//! Headers are the union of record keys in first-seen order. A key absent
//! from a record, or present with a JSON `null`, becomes a missing cell.
//! Because outbound translation omits missing cells from each object, a
//! column that is entirely `null` in the source does not survive a round
//! trip; placeholders are never written back.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::ir::{CellValue, InternalRepresentation, ReconstructionKey};

/// Translates a JSON document into the internal representation plus the key
/// path needed to rebuild the document shape.
pub fn json_to_ir(input: &str) -> Result<(InternalRepresentation, ReconstructionKey)> {
    let doc: Value = serde_json::from_str(input)
        .map_err(|e| Error::JsonTranslation(format!("invalid JSON: {e}")))?;

    let mut path = Vec::new();
    let records = find_records(&doc, &mut path).ok_or_else(|| {
        Error::JsonTranslation("no array of objects found in document".to_string())
    })?;

    let mut headers: Vec<String> = Vec::new();
    for record in records {
        let obj = record.as_object().expect("qualifying array holds objects");
        for key in obj.keys() {
            if !headers.iter().any(|h| h == key) {
                headers.push(key.clone());
            }
        }
    }

    let rows: Vec<Vec<CellValue>> = records
        .iter()
        .map(|record| {
            let obj = record.as_object().expect("qualifying array holds objects");
            headers
                .iter()
                .map(|h| obj.get(h).map_or(CellValue::Missing, value_to_cell))
                .collect()
        })
        .collect();

    let ir = InternalRepresentation::new(headers, rows)?;
    Ok((ir, ReconstructionKey::new(path)))
}

/// Reads and translates a JSON file.
pub fn json_file_to_ir(path: &Path) -> Result<(InternalRepresentation, ReconstructionKey)> {
    let text = std::fs::read_to_string(path)?;
    json_to_ir(&text)
}

/// Depth-first search for the records array. Descends through object values
/// only; an array qualifies when it is non-empty and every element is an
/// object. Non-qualifying arrays are not entered — an index-based path could
/// not be rebuilt meaningfully.
fn find_records<'a>(value: &'a Value, path: &mut Vec<String>) -> Option<&'a Vec<Value>> {
    match value {
        Value::Array(items) => {
            if !items.is_empty() && items.iter().all(Value::is_object) {
                Some(items)
            } else {
                None
            }
        }
        Value::Object(map) => {
            for (key, child) in map {
                path.push(key.clone());
                if let Some(found) = find_records(child, path) {
                    return Some(found);
                }
                path.pop();
            }
            None
        }
        _ => None,
    }
}

fn value_to_cell(value: &Value) -> CellValue {
    match value {
        Value::Null => CellValue::Missing,
        Value::Bool(b) => CellValue::Bool(*b),
        Value::Number(n) => CellValue::number(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => CellValue::Text(s.clone()),
        Value::Array(_) | Value::Object(_) => CellValue::Complex(value.clone()),
    }
}

/// Renders the internal representation back to a JSON document, re-nesting
/// the records array under the reconstruction key path. Missing cells are
/// omitted from their objects.
pub fn ir_to_json(ir: &InternalRepresentation, key: &ReconstructionKey) -> Result<String> {
    let records: Vec<Value> = ir
        .rows()
        .iter()
        .map(|row| {
            let mut obj = serde_json::Map::new();
            for (header, cell) in ir.headers().iter().zip(row) {
                if cell.is_missing() {
                    continue;
                }
                let value = serde_json::to_value(cell)
                    .map_err(|e| Error::JsonTranslation(e.to_string()))?;
                obj.insert(header.clone(), value);
            }
            Ok(Value::Object(obj))
        })
        .collect::<Result<_>>()?;

    let mut doc = Value::Array(records);
    for segment in key.path().iter().rev() {
        let mut wrapper = serde_json::Map::new();
        wrapper.insert(segment.clone(), doc);
        doc = Value::Object(wrapper);
    }

    serde_json::to_string_pretty(&doc).map_err(|e| Error::JsonTranslation(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    const NESTED_DOC: &str = r#"{
        "objects": [
            {"ID": 1, "name": "John", "age": 50, "salary": 1234},
            {"ID": 2, "name": "Amy", "salary": 5678},
            {"ID": 3, "name": "Ellie"}
        ]
    }"#;

    #[test]
    fn headers_union_in_first_seen_order() {
        let (ir, key) = json_to_ir(NESTED_DOC).unwrap();
        assert_eq!(ir.headers(), ["ID", "name", "age", "salary"]);
        assert_eq!(key.path(), ["objects"]);
        assert_eq!(ir.row_count(), 3);
        assert_eq!(ir.cell(0, 2), &CellValue::Number(50.0));
        assert_eq!(ir.cell(1, 2), &CellValue::Missing);
        assert_eq!(ir.cell(2, 2), &CellValue::Missing);
        assert_eq!(ir.cell(2, 3), &CellValue::Missing);
    }

    #[test]
    fn round_trip_rebuilds_nesting_and_omits_missing() {
        let (ir, key) = json_to_ir(NESTED_DOC).unwrap();
        let out = ir_to_json(&ir, &key).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(
            doc,
            json!({
                "objects": [
                    {"ID": 1, "name": "John", "age": 50, "salary": 1234},
                    {"ID": 2, "name": "Amy", "salary": 5678},
                    {"ID": 3, "name": "Ellie"}
                ]
            })
        );
        // Byte-level check that key order survived and integers stayed
        // integers.
        assert!(out.contains(r#""ID": 1"#), "{out}");
        assert!(out.contains(r#""salary": 1234"#), "{out}");
    }

    #[test]
    fn root_level_array_has_empty_key() {
        let (ir, key) = json_to_ir(r#"[{"a": 1}, {"a": 2}]"#).unwrap();
        assert!(key.is_root());
        assert_eq!(ir.headers(), ["a"]);
        let out = ir_to_json(&ir, &key).unwrap();
        assert!(out.trim_start().starts_with('['));
    }

    #[test]
    fn first_qualifying_array_in_document_order_wins() {
        let doc = r#"{
            "meta": {"tags": [1, 2, 3]},
            "data": {"rows": [{"x": 1}]},
            "later": [{"y": 2}]
        }"#;
        let (ir, key) = json_to_ir(doc).unwrap();
        assert_eq!(key.path(), ["data", "rows"]);
        assert_eq!(ir.headers(), ["x"]);
    }

    #[test]
    fn explicit_null_becomes_missing() {
        let (ir, _) = json_to_ir(r#"[{"a": null, "b": 1}]"#).unwrap();
        assert_eq!(ir.cell(0, 0), &CellValue::Missing);
        assert_eq!(ir.cell(0, 1), &CellValue::Number(1.0));
    }

    #[test]
    fn nested_structure_becomes_complex() {
        let (ir, _) = json_to_ir(r#"[{"a": {"x": [1, 2]}, "b": [true]}]"#).unwrap();
        assert_eq!(ir.cell(0, 0), &CellValue::Complex(json!({"x": [1, 2]})));
        assert_eq!(ir.cell(0, 1), &CellValue::Complex(json!([true])));
    }

    #[test]
    fn scalar_array_does_not_qualify() {
        let err = json_to_ir(r#"{"values": [1, 2, 3]}"#).unwrap_err();
        assert!(err.to_string().contains("no array of objects"));
    }

    #[test]
    fn empty_array_does_not_qualify() {
        let err = json_to_ir(r#"{"rows": []}"#).unwrap_err();
        assert!(err.to_string().contains("no array of objects"));
    }

    #[test]
    fn invalid_json_is_a_translation_error() {
        let err = json_to_ir("{not json").unwrap_err();
        assert!(matches!(err, Error::JsonTranslation(_)));
    }

    #[test]
    fn fractional_numbers_survive() {
        let (ir, key) = json_to_ir(r#"[{"p": 0.25}]"#).unwrap();
        let out = ir_to_json(&ir, &key).unwrap();
        assert!(out.contains("0.25"), "{out}");
    }
}
