//! Data quality scoring: missing cells, duplicate rows, and numeric
//! outliers fold into one score in [0, 1].
//!
//! Run with: `cargo run --example score_quality`

use flowetl::ir::csv_to_ir;
use flowetl::quality::{dqs, mad_bounds_default};
use flowetl::schema::infer_schema;

fn main() -> flowetl::Result<()> {
    // Ten rows with deliberate damage: two blanked cells, one duplicated
    // row, and one absurd reading.
    let csv = "\
id,site,reading
1,north,20.1
2,north,19.8
3,south,
4,south,21.0
5,east,20.4
6,east,9000
7,west,20.9
8,,19.9
9,west,20.2
9,west,20.2
";
    let table = csv_to_ir(csv)?;
    let schema = infer_schema(&table)?;
    let q = dqs(&table, &schema)?;

    println!("rows: {}, cells: {}", q.row_count, q.cell_count);
    println!("missing ratio:   {:.4}", q.missing_ratio);
    println!("outlier ratio:   {:.4}", q.outlier_ratio);
    println!("duplicate ratio: {:.4}", q.duplicate_ratio);
    println!("DQS = 1 - (M + O + D) / 3 = {:.4}", q.dqs);

    // The outlier verdict comes from median-absolute-deviation bounds:
    // robust statistics keep one wild value from hiding itself.
    let values = [20.1, 19.8, 21.0, 20.4, 9000.0, 20.9, 19.9, 20.2, 20.2];
    let bounds = mad_bounds_default(&values)?;
    println!(
        "\nreading bounds: [{:.3}, {:.3}] — 9000 sits far outside",
        bounds.t_min, bounds.t_max
    );

    // A mean/stddev rule would have been dragged toward the outlier; the
    // classic demonstration is one value stretched a hundredfold.
    let classic = [1.0, 2.0, 3.0, 4.0, 100.0];
    let b = mad_bounds_default(&classic)?;
    let flagged: Vec<f64> = classic
        .iter()
        .copied()
        .filter(|v| *v < b.t_min || *v > b.t_max)
        .collect();
    println!(
        "[1, 2, 3, 4, 100] -> bounds [{:.2}, {:.2}], flagged: {flagged:?}",
        b.t_min, b.t_max
    );
    Ok(())
}
