//! The three cleaning nodes, applied one at a time and then as a plan.
//!
//! Run with: `cargo run --example clean_nodes`

use flowetl::ir::csv_to_ir;
use flowetl::nodes::{
    apply_drh, apply_mvh, apply_noh, MvhStrategy, NodeSpec, NohStrategy, PlanSteps,
};
use flowetl::planner::apply_plan_steps;
use flowetl::quality::dqs;
use flowetl::schema::infer_schema;

fn main() -> flowetl::Result<()> {
    let csv = "\
id,city,temp
1,berlin,14.1
2,berlin,14.3
2,berlin,14.3
3,paris,
4,paris,13.8
5,oslo,9000
6,oslo,12.2
7,rome,
8,rome,15.0
9,madrid,16.4
";
    let dirty = csv_to_ir(csv)?;
    let schema = infer_schema(&dirty)?;
    let before = dqs(&dirty, &schema)?;
    println!("dirty: {} rows, DQS {:.4}", dirty.row_count(), before.dqs);

    // MVH fills holes (or drops the rows/columns carrying them).
    let imputed = apply_mvh(&dirty, &schema, MvhStrategy::Impute)?;
    let dropped = apply_mvh(&dirty, &schema, MvhStrategy::DropRows)?;
    println!("\nMVH impute keeps {} rows; drop_rows keeps {}", imputed.row_count(), dropped.row_count());

    // DRH keeps the first occurrence of each row.
    let deduped = apply_drh(&dirty)?;
    println!("DRH: {} -> {} rows", dirty.row_count(), deduped.row_count());

    // NOH needs the numeric columns hole-free first — running it before
    // MVH is a plan-ordering mistake, reported as such.
    match apply_noh(&dirty, &schema, NohStrategy::ImputeMedian) {
        Err(err) => println!("NOH straight onto holes: {err}"),
        Ok(_) => unreachable!("the temp column still has missing cells"),
    }

    // A full plan is one node of each kind, in some order. This one is
    // the planner's default.
    let plan = PlanSteps::new(vec![
        NodeSpec::Mvh(MvhStrategy::Impute),
        NodeSpec::Drh,
        NodeSpec::Noh(NohStrategy::ImputeMedian),
    ])?;
    let cleaned = apply_plan_steps(&dirty, &plan)?;
    let after = dqs(&cleaned, &infer_schema(&cleaned)?)?;
    println!(
        "\nplan {plan}: {} rows, DQS {:.4} -> {:.4}",
        cleaned.row_count(),
        before.dqs,
        after.dqs
    );
    Ok(())
}
