//! Column schema inference over the internal representation.
//!
//! Each column is typed by scanning its cells: placeholders are skipped, a
//! column whose non-missing cells take exactly two distinct values is
//! boolean regardless of what those values are, a column mixing more than
//! one cell type is ambiguous, and a column with no data at all falls back
//! to string.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{serialize_cell, ColumnType, InternalRepresentation};

/// An ordered map from column name to inferred type. Iteration order is the
/// header order of the table the schema was inferred from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnSchema(IndexMap<String, ColumnType>);

impl ColumnSchema {
    pub fn new(columns: IndexMap<String, ColumnType>) -> Self {
        ColumnSchema(columns)
    }

    pub fn get(&self, name: &str) -> Option<ColumnType> {
        self.0.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ColumnType)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Restricts the schema to the given column names, in the given order.
    /// Unknown names are an error.
    pub fn project(&self, names: &[String]) -> Result<ColumnSchema> {
        let mut out = IndexMap::new();
        for name in names {
            match self.0.get(name) {
                Some(ty) => {
                    out.insert(name.clone(), *ty);
                }
                None => {
                    return Err(Error::EmptySchema(format!(
                        "column {name:?} not present in schema"
                    )))
                }
            }
        }
        Ok(ColumnSchema(out))
    }
}

/// Infers the type of every column of a table.
///
/// Returns an error when the table has no columns: downstream matching has
/// nothing to work with and should fail loudly rather than silently produce
/// an empty mapping.
pub fn infer_schema(ir: &InternalRepresentation) -> Result<ColumnSchema> {
    if ir.column_count() == 0 {
        return Err(Error::EmptySchema(
            "cannot infer a schema for a table with no columns".to_string(),
        ));
    }

    let mut columns = IndexMap::new();
    for (idx, name) in ir.headers().iter().enumerate() {
        columns.insert(name.clone(), infer_column_type(ir, idx));
    }
    Ok(ColumnSchema(columns))
}

fn infer_column_type(ir: &InternalRepresentation, col: usize) -> ColumnType {
    let mut seen_types: Vec<ColumnType> = Vec::new();
    let mut distinct = std::collections::HashSet::new();

    for cell in ir.column(col) {
        if cell.is_missing_like() {
            continue;
        }
        distinct.insert(serialize_cell(cell));
        let ty = cell.flow_type();
        if !seen_types.contains(&ty) {
            seen_types.push(ty);
        }
    }

    // Two distinct observed values make a boolean column — "true"/"false",
    // 0/1, "yes"/"no" all behave as flags — and this rule dominates the
    // mixed-type rule.
    if distinct.len() == 2 {
        return ColumnType::Boolean;
    }
    match seen_types.len() {
        0 => ColumnType::String,
        1 => seen_types[0],
        _ => ColumnType::Ambiguous,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::csv_to_ir;

    fn ir_from(csv: &str) -> InternalRepresentation {
        csv_to_ir(csv).unwrap()
    }

    #[test]
    fn types_plain_columns() {
        let ir = ir_from("id,name,height\n1,ana,1.7\n2,bo,1.8\n3,cy,1.9\n");
        let schema = infer_schema(&ir).unwrap();
        assert_eq!(schema.get("id"), Some(ColumnType::Number));
        assert_eq!(schema.get("name"), Some(ColumnType::String));
        assert_eq!(schema.get("height"), Some(ColumnType::Number));
    }

    #[test]
    fn preserves_header_order() {
        let ir = ir_from("z,a,m\n1,2,3\n4,5,6\n7,8,9\n");
        let schema = infer_schema(&ir).unwrap();
        let names: Vec<&str> = schema.names().collect();
        assert_eq!(names, ["z", "a", "m"]);
    }

    #[test]
    fn two_distinct_values_make_boolean() {
        // Whatever the underlying cell types, exactly two distinct values
        // mean a flag column.
        let ir = ir_from("lit,yn,bits\ntrue,yes,0\nfalse,no,1\ntrue,yes,0\n");
        let schema = infer_schema(&ir).unwrap();
        assert_eq!(schema.get("lit"), Some(ColumnType::Boolean));
        assert_eq!(schema.get("yn"), Some(ColumnType::Boolean));
        assert_eq!(schema.get("bits"), Some(ColumnType::Boolean));
    }

    #[test]
    fn boolean_rule_dominates_mixed_types() {
        let ir = ir_from("v\n1\nx\n1\nx\n");
        let schema = infer_schema(&ir).unwrap();
        assert_eq!(schema.get("v"), Some(ColumnType::Boolean));
    }

    #[test]
    fn mixed_types_are_ambiguous() {
        let ir = ir_from("v\n1\nx\ntrue\n");
        let schema = infer_schema(&ir).unwrap();
        assert_eq!(schema.get("v"), Some(ColumnType::Ambiguous));
    }

    #[test]
    fn missing_cells_are_skipped() {
        let ir = ir_from("v\n\n5\n\n6\n7\n");
        let schema = infer_schema(&ir).unwrap();
        // 5, 6, 7: three distinct numbers, not boolean.
        assert_eq!(schema.get("v"), Some(ColumnType::Number));
    }

    #[test]
    fn all_missing_column_defaults_to_string() {
        let ir = ir_from("a,b\n1,\n2,\n3,\n");
        let schema = infer_schema(&ir).unwrap();
        assert_eq!(schema.get("b"), Some(ColumnType::String));
    }

    #[test]
    fn single_distinct_value_keeps_cell_type() {
        let ir = ir_from("flag\ntrue\ntrue\ntrue\n");
        let schema = infer_schema(&ir).unwrap();
        // One distinct value is not a flag; the cell type (boolean literal)
        // carries through.
        assert_eq!(schema.get("flag"), Some(ColumnType::Boolean));
    }

    #[test]
    fn complex_cells_type_as_complex() {
        let ir = ir_from("payload\n\"[1,2]\"\n\"[3]\"\n\"[4,5]\"\n");
        let schema = infer_schema(&ir).unwrap();
        assert_eq!(schema.get("payload"), Some(ColumnType::Complex));
    }

    #[test]
    fn zero_column_table_is_an_error() {
        let ir = InternalRepresentation::empty();
        assert!(matches!(infer_schema(&ir), Err(Error::EmptySchema(_))));
    }

    #[test]
    fn row_shuffle_does_not_change_schema() {
        let base = ir_from("a,b\n1,x\n2,y\n3,z\n4,w\n");
        let schema = infer_schema(&base).unwrap();
        let shuffled = base.select_rows(&[3, 1, 0, 2]);
        assert_eq!(infer_schema(&shuffled).unwrap(), schema);
    }

    #[test]
    fn projection_keeps_requested_order() {
        let ir = ir_from("a,b,c\n1,x,true\n2,y,false\n3,z,true\n");
        let schema = infer_schema(&ir).unwrap();
        let projected = schema
            .project(&["c".to_string(), "a".to_string()])
            .unwrap();
        let names: Vec<&str> = projected.names().collect();
        assert_eq!(names, ["c", "a"]);
        assert!(schema.project(&["nope".to_string()]).is_err());
    }
}
