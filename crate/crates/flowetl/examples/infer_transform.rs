//! Transformation inference: per-column programs recovered from a handful
//! of example rows, then applied to the full table.
//!
//! Run with: `cargo run --example infer_transform`

use flowetl::ir::csv_to_ir;
use flowetl::matching::{match_schemas, MatchConfig};
use flowetl::schema::infer_schema;
use flowetl::transform::{apply_transform_program, infer_program_fallback, summarize_expr};

fn main() -> flowetl::Result<()> {
    // A cleaned source sample and the example rows the user supplied.
    // Same row counts, so they pair up positionally.
    let sample = csv_to_ir(
        "id,first_name,last_name,temp_c\n\
         1,ada,lovelace,10\n\
         2,alan,turing,0\n\
         3,grace,hopper,25\n\
         4,edsger,dijkstra,-5\n",
    )?;
    let examples = csv_to_ir(
        "id,full_name,temp_f\n\
         1,ada lovelace,50\n\
         2,alan turing,32\n\
         3,grace hopper,77\n\
         4,edsger dijkstra,23\n",
    )?;

    let map = match_schemas(
        &infer_schema(&sample)?,
        &infer_schema(&examples)?,
        &MatchConfig::default(),
    )?;
    let outcome = infer_program_fallback(&sample, &examples, &map)?;

    println!("inferred rules ({:?}):", outcome.provenance);
    for rule in &outcome.program.columns {
        println!("  {} = {}", rule.target_column, summarize_expr(&rule.expr));
    }
    for w in &outcome.warnings {
        println!("  warning: {w}");
    }

    // The program now runs over any number of source rows.
    let full = csv_to_ir(
        "id,first_name,last_name,temp_c\n\
         7,barbara,liskov,18.5\n\
         8,tony,hoare,-12\n\
         9,donald,knuth,30\n",
    )?;
    let produced = apply_transform_program(&full, &outcome.program, &map)?;
    println!("\napplied to {} fresh rows:", produced.ir.row_count());
    print!("{}", flowetl::ir::ir_to_csv(&produced.ir)?);

    // With damaged evidence the engine refuses to over-claim: a rule it
    // cannot verify degrades to an explicit identity guess.
    let damaged = csv_to_ir(
        "id,first_name,last_name,temp_c\n\
         1,ada,lovelace,10\n\
         2,alan,turing,\n\
         3,grace,hopper,25\n\
         4,edsger,dijkstra,-5\n",
    )?;
    let guessed = infer_program_fallback(&damaged, &examples, &map)?;
    println!("\nwith a hole in the evidence:");
    for w in &guessed.warnings {
        println!("  warning: {w}");
    }
    Ok(())
}
