//! CSV ↔ internal representation translation.
//!
//! Inbound, each field is sniffed into the richest cell type it parses as:
//! empty → missing, numeric literal → number, `true`/`false` → boolean,
//! a JSON array or object literal → complex, anything else → text.
//! Outbound, cells are rendered back to fields with missing as the empty
//! string, so a translate-render-translate cycle is stable.

use std::path::Path;

use crate::error::{Error, Result};
use crate::ir::{CellValue, InternalRepresentation};

/// Parses one CSV field into a cell.
pub(crate) fn sniff_field(field: &str) -> CellValue {
    if field.is_empty() {
        return CellValue::Missing;
    }
    if field == "true" {
        return CellValue::Bool(true);
    }
    if field == "false" {
        return CellValue::Bool(false);
    }
    // Reject forms Rust's float parser accepts but CSV numbers should not:
    // leading '+', "inf"/"nan" words, and hex-ish strings are all text.
    if looks_numeric(field) {
        if let Ok(v) = field.parse::<f64>() {
            if v.is_finite() {
                return CellValue::number(v);
            }
        }
    }
    let trimmed = field.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(field) {
            if value.is_array() || value.is_object() {
                return CellValue::Complex(value);
            }
        }
    }
    CellValue::Text(field.to_string())
}

fn looks_numeric(field: &str) -> bool {
    let body = field.strip_prefix('-').unwrap_or(field);
    !body.is_empty()
        && body
            .chars()
            .all(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || c == '-' || c == '+')
        && body.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '.')
}

/// Translates CSV text into the internal representation.
///
/// The first record is the header row. Ragged records are a translation
/// error carrying the 1-based line number, matching how a user would find
/// the row in an editor.
pub fn csv_to_ir(input: &str) -> Result<InternalRepresentation> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input.as_bytes());

    let mut records = reader.records();
    let headers: Vec<String> = match records.next() {
        Some(record) => {
            let record = record.map_err(csv_error)?;
            record.iter().map(|s| s.to_string()).collect()
        }
        None => {
            return Err(Error::EmptyInput(
                "CSV input has no header row".to_string(),
            ))
        }
    };
    let header_count = headers.len();

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        if record.len() != header_count {
            let line = record.position().map(|p| p.line());
            return Err(Error::CsvTranslation {
                line,
                message: format!(
                    "record has {} fields, expected {}",
                    record.len(),
                    header_count
                ),
            });
        }
        rows.push(record.iter().map(sniff_field).collect());
    }

    InternalRepresentation::new(headers, rows)
}

/// Reads and translates a CSV file.
pub fn csv_file_to_ir(path: &Path) -> Result<InternalRepresentation> {
    let text = std::fs::read_to_string(path)?;
    csv_to_ir(&text)
}

fn csv_error(err: csv::Error) -> Error {
    let line = match err.kind() {
        csv::ErrorKind::Utf8 { pos, .. } => pos.as_ref().map(|p| p.line()),
        csv::ErrorKind::UnequalLengths { pos, .. } => pos.as_ref().map(|p| p.line()),
        _ => None,
    };
    Error::CsvTranslation {
        line,
        message: err.to_string(),
    }
}

/// Renders the internal representation as CSV text with a trailing newline.
/// Missing cells become empty fields.
///
/// Records are written by hand rather than through the csv crate's writer
/// for one reason: a single-column row holding a missing cell would render
/// as a blank line, which CSV readers skip, silently losing the row. Such
/// rows are written as a quoted empty field `""` instead.
pub fn ir_to_csv(ir: &InternalRepresentation) -> Result<String> {
    let mut out = String::new();
    write_record(&mut out, ir.headers().iter().map(String::as_str));
    let single_column = ir.column_count() == 1;
    for row in ir.rows() {
        if single_column && row[0].to_field_text().is_empty() {
            out.push_str("\"\"\n");
            continue;
        }
        let fields: Vec<String> = row.iter().map(|cell| cell.to_field_text()).collect();
        write_record(&mut out, fields.iter().map(String::as_str));
    }
    Ok(out)
}

fn write_record<'a>(out: &mut String, fields: impl Iterator<Item = &'a str>) {
    for (i, field) in fields.enumerate() {
        if i > 0 {
            out.push(',');
        }
        if field.contains(['"', ',', '\n', '\r']) {
            out.push('"');
            out.push_str(&field.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(field);
        }
    }
    out.push('\n');
}
