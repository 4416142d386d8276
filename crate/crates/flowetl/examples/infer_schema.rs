//! Schema inference: column types are read off the data, tolerating
//! missing cells and mixed evidence.
//!
//! Run with: `cargo run --example infer_schema`

use flowetl::ir::csv_to_ir;
use flowetl::schema::infer_schema;

fn main() -> flowetl::Result<()> {
    let csv = "\
id,name,active,score,joined
1,ada,true,91.5,2021-04-01
2,alan,false,88,2020-11-12
3,grace,,77.25,2022-01-30
4,edsger,true,,2019-07-19
";
    let table = csv_to_ir(csv)?;
    let schema = infer_schema(&table)?;

    println!("inferred column types:");
    for (name, kind) in schema.iter() {
        println!("  {name:<8} {kind}");
    }

    // Typing only looks at the observed values, so shuffling rows cannot
    // change the verdict.
    let reversed: Vec<usize> = (0..table.row_count()).rev().collect();
    let shuffled = table.select_rows(&reversed);
    println!(
        "\nrow order is irrelevant: {}",
        infer_schema(&shuffled)? == schema
    );

    // Any column with exactly two observed values acts as a flag —
    // "yes"/"no" is as boolean as true/false.
    let flags = csv_to_ir("subscribed\nyes\nno\nyes\nyes\n")?;
    println!(
        "two observed values make a flag: subscribed -> {}",
        infer_schema(&flags)?.get("subscribed").unwrap()
    );

    // A column mixing more than one cell type (and more than two values)
    // is flagged rather than silently coerced.
    let mixed = csv_to_ir("v\n1\ntrue\nhello\nbye\n")?;
    println!(
        "mixed evidence is flagged: v -> {}",
        infer_schema(&mixed)?.get("v").unwrap()
    );
    Ok(())
}
