//! The evaluation kit: seeded pollution with measurable targets, and
//! plan scoring against a ground truth.
//!
//! Run with: `cargo run --example pollute_and_score`

use flowetl::eval::{plan_eval, pollute, GroundTruthPlan, OpKind, PlanOp, PollutionSpec};
use flowetl::ir::{CellValue, InternalRepresentation};
use flowetl::quality::dqs;
use flowetl::schema::infer_schema;

fn main() -> flowetl::Result<()> {
    // A clean table to damage: unique ids, a few text pools, two numeric
    // columns.
    let headers = ["id", "name", "grade", "score", "hours"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let names = ["ada", "alan", "grace", "edsger", "barbara"];
    let grades = ["a", "b", "c"];
    let body = (0..200)
        .map(|i| {
            vec![
                CellValue::text(format!("r{i:03}")),
                CellValue::text(names[i % names.len()]),
                CellValue::text(grades[(i / 2) % grades.len()]),
                CellValue::number(50.0 + ((i * 37) % 500) as f64 / 10.0),
                CellValue::number((1 + (i * 13) % 80) as f64),
            ]
        })
        .collect();
    let clean = InternalRepresentation::new(headers, body)?;

    // Damage it by the default amounts: 40% blanks, 20% duplicate rows,
    // 7.5% outliers — all measured, not just attempted.
    let spec = PollutionSpec { seed: 1, ..Default::default() };
    let damaged = pollute(&clean, &spec)?;
    let q = dqs(&damaged.ir, &infer_schema(&damaged.ir)?)?;
    println!("polluted {} -> {} rows", clean.row_count(), damaged.ir.row_count());
    println!(
        "measured: missing {:.1}%, duplicates {:.1}%, outliers {:.1}% (targets 40/20/7.5)",
        100.0 * q.missing_ratio,
        100.0 * q.duplicate_ratio,
        100.0 * q.outlier_ratio
    );
    println!("DQS dropped to {:.4}", q.dqs);

    // Plans are scored op by op: full credit for an exact reproduction,
    // half credit for the right op with wrong parameters, nothing for a
    // miss. Hallucinated extras never subtract.
    let gt = GroundTruthPlan::new(vec![
        PlanOp {
            kind: OpKind::Match,
            op: "map_columns".into(),
            targets: vec!["wage".into()],
            params: serde_json::json!({"sources": ["salary"]}),
        },
        PlanOp {
            kind: OpKind::Transform,
            op: "derive".into(),
            targets: vec!["wage".into()],
            params: serde_json::json!({"expr": {"op": "col", "name": "salary"}}),
        },
    ])?;

    let perfect = gt.ops.clone();
    let mut wrong_params = gt.ops.clone();
    wrong_params[1].params = serde_json::json!({"expr": {"op": "col", "name": "bonus"}});
    let missing_one = vec![gt.ops[0].clone()];

    for (label, plan) in [
        ("perfect reproduction", &perfect),
        ("wrong derive params ", &wrong_params),
        ("one op missing      ", &missing_one),
    ] {
        let score = plan_eval(plan, &gt)?;
        println!(
            "{label} -> {:.3} ({} correct, {} partial)",
            score.value, score.correct, score.partial
        );
    }
    Ok(())
}
