//! Schema matching: scoring name/type similarity and pairing columns
//! with a stable matching.
//!
//! Run with: `cargo run --example match_schemas`

use flowetl::ir::{csv_to_ir, ColumnType};
use flowetl::matching::{match_schemas, similarity, MatchConfig};
use flowetl::schema::infer_schema;

fn main() -> flowetl::Result<()> {
    // Similarity blends edit distance with token overlap (synonyms
    // included), damped when the column types disagree.
    println!("pairwise similarity:");
    for (a, b) in [
        ("salary", "wage"),
        ("qty", "quantity"),
        ("first_name", "full_name"),
        ("temp_c", "temp_f"),
        ("order_ref", "id"),
    ] {
        let s = similarity(a, ColumnType::Number, b, ColumnType::Number);
        println!("  {a:<12} ~ {b:<10} {s:.4}");
    }
    let cross = similarity("salary", ColumnType::Number, "wage", ColumnType::String);
    println!("  type clash halves it: salary ~ wage -> {cross:.4}");

    // A source table and a smaller target sample: matching works on the
    // inferred schemas, not on the data volume.
    let source = csv_to_ir(
        "id,first_name,last_name,salary,notes\n\
         1,ada,lovelace,5200,x\n\
         2,alan,turing,4800,y\n\
         3,grace,hopper,5100,z\n",
    )?;
    let target = csv_to_ir("id,full_name,wage\n9,dennis ritchie,5600\n8,ken thompson,5500\n7,barbara liskov,6100\n")?;

    let map = match_schemas(
        &infer_schema(&source)?,
        &infer_schema(&target)?,
        &MatchConfig::default(),
    )?;

    println!("\ncorrespondences:");
    for c in &map.correspondences {
        println!("  {:?} -> {}", c.sources, c.target);
    }
    println!("unmapped source columns: {:?}", map.unmapped_sources);
    println!("unmapped target columns: {:?}", map.unmapped_targets);
    Ok(())
}
