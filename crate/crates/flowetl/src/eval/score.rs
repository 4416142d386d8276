//! PlanEval: optimistic scoring of a produced plan against a ground truth.
//!
//! A plan is viewed as a flat set of operations — schema-match decisions
//! and transform steps alike. Each operation has an *identity* (its kind,
//! its operation name, and the target columns it produces) and *params*
//! (strategy, expression, sources). Scoring walks the ground truth: an
//! identity the plan reproduced with correct params earns 1.0, an
//! identity present with wrong params earns 0.5, and anything the plan
//! hallucinated or missed earns nothing. The score is normalized by the
//! ground-truth size, so inventing extra operations can never help — nor,
//! being optimistic, can it hurt.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::planner::PlanPayload;

/// Numeric params within this relative tolerance count as equal, so a
/// float-derived coefficient still matches a hand-written ground truth.
pub const PARAM_TOLERANCE: f64 = 1e-9;

/// Which half of the pipeline an operation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Match,
    Transform,
}

/// One operation of a plan, in scoring form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOp {
    pub kind: OpKind,
    /// Operation name: `map_columns`, `mvh`, `drh`, `noh`, or `derive`.
    pub op: String,
    /// Target columns the operation produces or affects; empty for
    /// whole-table cleaning nodes.
    #[serde(default)]
    pub targets: Vec<String>,
    /// Everything beyond identity: strategies, sources, expressions.
    #[serde(default)]
    pub params: Value,
}

impl PlanOp {
    /// The identity under which operations are compared: kind, op name,
    /// and the target column set (order-insensitive).
    pub fn identity(&self) -> (OpKind, &str, BTreeSet<&str>) {
        (
            self.kind,
            self.op.as_str(),
            self.targets.iter().map(String::as_str).collect(),
        )
    }
}

/// The reference plan a dataset pair was built around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPlan {
    pub ops: Vec<PlanOp>,
}

impl GroundTruthPlan {
    pub fn new(ops: Vec<PlanOp>) -> Result<GroundTruthPlan> {
        let plan = GroundTruthPlan { ops };
        plan.validate()?;
        Ok(plan)
    }

    /// Identities must be unique — otherwise "the" matching ground-truth
    /// op is ill-defined.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for op in &self.ops {
            let id = format!("{:?}", op.identity());
            if !seen.insert(id) {
                return Err(Error::InvalidPlan(format!(
                    "duplicate operation identity in ground truth: {} {:?}",
                    op.op, op.targets
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<GroundTruthPlan> {
        let plan: GroundTruthPlan = serde_json::from_str(text)
            .map_err(|e| Error::JsonTranslation(format!("ground-truth plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// The result of scoring one plan against one ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEvalScore {
    /// Accumulated score.
    pub s: f64,
    /// Maximum achievable: 1.0 per ground-truth operation.
    pub max_s: f64,
    /// Ground-truth operation count.
    pub n: usize,
    /// `s / max_s`, in [0, 1].
    pub value: f64,
    /// Ground-truth ops the plan reproduced exactly.
    pub correct: usize,
    /// Ground-truth ops present in the plan with wrong params.
    pub partial: usize,
    /// Plan ops whose identity is not in the ground truth at all.
    pub hallucinated: usize,
}

/// Scores a plan against a ground truth. Errors on an empty ground truth
/// (the score would be undefined).
pub fn plan_eval(plan_ops: &[PlanOp], gt: &GroundTruthPlan) -> Result<PlanEvalScore> {
    gt.validate()?;
    if gt.ops.is_empty() {
        return Err(Error::EmptyInput(
            "ground-truth plan has no operations; nothing to score against".to_string(),
        ));
    }

    let n = gt.ops.len();
    let mut s = 0.0;
    let mut correct = 0;
    let mut partial = 0;
    for gt_op in &gt.ops {
        let candidates: Vec<&PlanOp> = plan_ops
            .iter()
            .filter(|p| p.identity() == gt_op.identity())
            .collect();
        if candidates.is_empty() {
            continue; // missing from the plan: implicit 0
        }
        if candidates
            .iter()
            .any(|p| values_equal(&p.params, &gt_op.params))
        {
            s += 1.0;
            correct += 1;
        } else {
            s += 0.5;
            partial += 1;
        }
    }
    let hallucinated = plan_ops
        .iter()
        .filter(|p| {
            let id = p.identity();
            !gt.ops.iter().any(|g| g.identity() == id)
        })
        .count();

    let max_s = n as f64;
    Ok(PlanEvalScore {
        s,
        max_s,
        n,
        value: s / max_s,
        correct,
        partial,
        hallucinated,
    })
}

/// Structural equality with a relative tolerance on numbers.
fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => (x - y).abs() <= PARAM_TOLERANCE * x.abs().max(y.abs()).max(1.0),
            _ => x == y,
        },
        (Value::Array(xs), Value::Array(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| values_equal(x, y))
        }
        (Value::Object(xs), Value::Object(ys)) => {
            xs.len() == ys.len()
                && xs
                    .iter()
                    .all(|(k, x)| ys.get(k).is_some_and(|y| values_equal(x, y)))
        }
        _ => a == b,
    }
}

/// Flattens an executable plan payload into scoring operations: one
/// `map_columns` op per correspondence, one op per cleaning node, and one
/// `derive` op per transformation rule.
pub fn plan_ops_from_payload(payload: &PlanPayload) -> Vec<PlanOp> {
    let mut ops = Vec::new();
    for corr in &payload.schema_map.correspondences {
        ops.push(PlanOp {
            kind: OpKind::Match,
            op: "map_columns".to_string(),
            targets: vec![corr.target.clone()],
            params: serde_json::json!({ "sources": corr.sources }),
        });
    }
    for step in payload.plan_steps.steps() {
        let raw = serde_json::to_value(step).expect("node serializes");
        let op = raw["node"]
            .as_str()
            .expect("node name")
            .to_ascii_lowercase();
        ops.push(PlanOp {
            kind: OpKind::Transform,
            op,
            targets: Vec::new(),
            params: serde_json::json!({ "strategy": raw["strategy"] }),
        });
    }
    for rule in &payload.logic.columns {
        ops.push(PlanOp {
            kind: OpKind::Transform,
            op: "derive".to_string(),
            targets: vec![rule.target_column.clone()],
            params: serde_json::json!({
                "expr": serde_json::to_value(&rule.expr).expect("expr serializes")
            }),
        });
    }
    ops
}
