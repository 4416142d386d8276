//! The whole pipeline on one damaged file: observe, sample, plan, clean,
//! infer, transform, report.
//!
//! Run with: `cargo run --example end_to_end`

use flowetl::eval::{pollute, PollutionSpec};
use flowetl::ir::{ir_to_csv, CellValue, InternalRepresentation};
use flowetl::runtime::{run_pipeline, RunConfig};

/// A clean employee table; the pipeline never sees this directly.
fn clean_source(rows: usize) -> flowetl::Result<InternalRepresentation> {
    let names = ["ada", "alan", "grace", "edsger", "barbara", "tony", "donald", "ken"];
    let depts = ["eng", "ops", "sales", "hr"];
    let cities = ["berlin", "paris", "oslo", "rome", "madrid"];
    let headers = ["id", "name", "dept", "city", "salary", "years"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let body = (0..rows)
        .map(|i| {
            vec![
                CellValue::text(format!("e{:04}", i + 1)),
                CellValue::text(names[i % names.len()]),
                CellValue::text(depts[(i / 2) % depts.len()]),
                CellValue::text(cities[i % cities.len()]),
                CellValue::number(52_000.0 + ((i * 937) % 24_000) as f64),
                CellValue::number((1 + (i * 7) % 30) as f64),
            ]
        })
        .collect();
    InternalRepresentation::new(headers, body)
}

fn main() -> flowetl::Result<()> {
    let dir = tempfile::tempdir()?;

    // The source file on disk is a damaged copy of the clean table:
    // blanked cells, duplicated rows, and absurd numbers.
    let clean = clean_source(40)?;
    let damaged = pollute(&clean, &PollutionSpec { seed: 7, ..Default::default() })?;
    let source_path = dir.path().join("employees.csv");
    std::fs::write(&source_path, ir_to_csv(&damaged.ir)?)?;

    // The target file holds a handful of example rows in the wanted
    // shape: same columns except salary appears as wage.
    let target_headers: Vec<String> = ["id", "name", "dept", "city", "wage", "years"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let example_rows: Vec<Vec<CellValue>> =
        clean.rows().iter().take(6).cloned().collect();
    let target = InternalRepresentation::new(target_headers, example_rows)?;
    let target_path = dir.path().join("wanted.csv");
    std::fs::write(&target_path, ir_to_csv(&target)?)?;

    // One call runs observers, planner, and worker, wired by the bus.
    let out_dir = dir.path().join("run");
    let mut config = RunConfig::new(&source_path, &target_path, &out_dir);
    config.seed = 42;
    let outcome = run_pipeline(&config)?;

    print!("{}", outcome.report.render_text());
    println!("pipeline success: {}", outcome.success);

    let output = outcome.output_path.expect("worker wrote a file");
    let text = std::fs::read_to_string(&output)?;
    println!("\nfirst lines of {}:", output.file_name().unwrap().to_string_lossy());
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    println!(
        "\nrun artifacts (report.json, report.txt, bus/*.ndjson) under {}",
        out_dir.display()
    );
    Ok(())
}
