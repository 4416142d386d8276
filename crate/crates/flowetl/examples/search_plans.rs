//! Plan search: every valid ordering of the three cleaning nodes times
//! every strategy choice, scored on a sample.
//!
//! Run with: `cargo run --example search_plans`

use flowetl::ir::csv_to_ir;
use flowetl::planner::{enumerate_plans, evaluate_plans, evaluate_plans_with};

fn main() -> flowetl::Result<()> {
    let plans = enumerate_plans();
    println!("plan space: {} candidates", plans.len());
    println!("first: {}", plans[0]);
    println!("last:  {}", plans[plans.len() - 1]);

    // A sample with all three damage kinds present.
    let sample = csv_to_ir(
        "id,label,value\n\
         1,a,10.0\n\
         2,b,\n\
         3,c,11.5\n\
         3,c,11.5\n\
         4,d,10.8\n\
         5,e,9000\n\
         6,f,9.9\n\
         7,g,\n\
         8,h,11.1\n\
         9,i,10.4\n",
    )?;

    // Exhaustive scoring: disable early stopping to see the whole field.
    let (best, all) = evaluate_plans_with(&sample, None)?;
    println!("\nevaluated {} candidates exhaustively; best:", all.len());
    println!("  {}  DQS {:.4}", best.steps, best.achieved_dqs.unwrap());

    let mut scored: Vec<_> = all
        .iter()
        .filter_map(|c| c.achieved_dqs.map(|d| (d, c.steps.to_string())))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    println!("\ntop five:");
    for (dqs, steps) in scored.iter().take(5) {
        println!("  {dqs:.4}  {steps}");
    }
    println!("bottom:");
    for (dqs, steps) in scored.iter().rev().take(2) {
        println!("  {dqs:.4}  {steps}");
    }

    // The default mode stops at the first candidate clearing the quality
    // bar, trading optimality for speed.
    let (chosen, tried) = evaluate_plans(&sample)?;
    println!(
        "\nwith early stopping: chose {} (DQS {:.4}) after {} of {} candidates",
        chosen.steps,
        chosen.achieved_dqs.unwrap(),
        tried.len(),
        plans.len()
    );
    Ok(())
}
