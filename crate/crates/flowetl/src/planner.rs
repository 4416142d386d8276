//! The planning engine: plan enumeration, DQS-guided search, and plan
//! payload assembly.
//!
//! A cleaning plan is a chain of the three task nodes, one of each kind,
//! with one strategy chosen per strategic node. Three MVH strategies, one
//! DRH, two NOH strategies and 3! orderings give exactly 36 candidate
//! plans. The planner applies each candidate to a copy of the sampled
//! source, scores the result with the data quality score, and stops early
//! at the first candidate scoring above 0.95. Candidates that error —
//! for instance an outlier handler meeting missing numerics because it
//! ran before the missing value handler — are recorded as failed, not
//! raised.
//!
//! The chosen plan, the schema map, and the inferred transformation
//! program are assembled into a single [`PlanPayload`] published to the
//! plans topic.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{InternalRepresentation, ReconstructionKey};
use crate::matching::{match_schemas, match_via_provider, MatchConfig, MatchOutcome, SchemaMap};
use crate::nodes::{apply_node, MvhStrategy, NodeSpec, NohStrategy, PlanSteps};
use crate::provider::{Provenance, Provider};
use crate::quality::dqs;
use crate::schema::{infer_schema, ColumnSchema};
use crate::transform::infer::{infer_program_fallback, infer_program_remote, InferOutcome};
use crate::transform::TransformationProgram;

/// A candidate's DQS must be strictly above this for the search to stop
/// early; exactly 0.95 keeps searching.
pub const EARLY_STOP_DQS: f64 = 0.95;

/// Version tag carried by every serialized plan payload.
pub const PAYLOAD_VERSION: u32 = 1;

/// The complete instruction set an ETL worker needs for one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPayload {
    /// Schema version of this payload document.
    pub payload_version: u32,
    /// Name of the source file this plan was built for; workers refuse
    /// to apply a plan to any other file.
    pub source_file: String,
    /// JSON key path for rebuilding nested output; empty for CSV.
    pub reconstruction_key: ReconstructionKey,
    /// Column correspondences from source to target.
    pub schema_map: SchemaMap,
    /// The cleaning chain to run before transforming.
    pub plan_steps: PlanSteps,
    /// The transformation program mapping cleaned source rows to target
    /// rows.
    pub logic: TransformationProgram,
    /// Schema of the cleaned sample the logic was inferred against; what
    /// the worker's data should look like when the logic runs.
    pub ir_schema: ColumnSchema,
}

/// One evaluated plan: either a score or a failure reason, never both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCandidate {
    pub steps: PlanSteps,
    /// Post-cleaning DQS on the sample; absent for failed candidates.
    pub achieved_dqs: Option<f64>,
    /// Why the chain errored; absent for scored candidates.
    pub failure: Option<String>,
}

impl PlanCandidate {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// The fixed fallback chain: impute missing values, drop duplicates,
/// impute outliers to the median. MVH running first removes every
/// missing cell, so the outlier handler can never meet one — this chain
/// completes on any table.
pub fn default_plan() -> PlanSteps {
    PlanSteps::new(vec![
        NodeSpec::Mvh(MvhStrategy::Impute),
        NodeSpec::Drh,
        NodeSpec::Noh(NohStrategy::ImputeMedian),
    ])
    .expect("the default plan is well-formed")
}

/// All 36 candidate plans in deterministic order: strategy combinations
/// ascending (MVH strategy outer, NOH strategy inner), then the six
/// orderings of the three nodes in lexicographic order. The first
/// element is exactly [`default_plan`].
pub fn enumerate_plans() -> Vec<PlanSteps> {
    let mvh = [
        MvhStrategy::Impute,
        MvhStrategy::DropRows,
        MvhStrategy::DropColumns,
    ];
    let noh = [NohStrategy::ImputeMedian, NohStrategy::DropRow];
    // Permutations of positions (0 = MVH, 1 = DRH, 2 = NOH) in
    // lexicographic order; the first is the MVH → DRH → NOH chain.
    let orders: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];

    let mut plans = Vec::with_capacity(36);
    for &m in &mvh {
        for &n in &noh {
            let nodes = [NodeSpec::Mvh(m), NodeSpec::Drh, NodeSpec::Noh(n)];
            for order in &orders {
                let steps: Vec<NodeSpec> = order.iter().map(|&i| nodes[i]).collect();
                plans.push(PlanSteps::new(steps).expect("enumerated plans are well-formed"));
            }
        }
    }
    plans
}

/// Runs a full cleaning chain on a copy of the table, re-inferring the
/// schema before each node so later nodes see the types the earlier ones
/// produced.
pub fn apply_plan_steps(
    ir: &InternalRepresentation,
    steps: &PlanSteps,
) -> Result<InternalRepresentation> {
    let mut current = ir.clone();
    for spec in steps.steps() {
        let schema = infer_schema(&current)?;
        current = apply_node(&current, &schema, *spec)?;
    }
    Ok(current)
}

/// Scores every candidate plan on a copy of the sample and picks the
/// best. With an early-stop threshold, the first candidate scoring
/// strictly above it wins immediately and later candidates are never
/// evaluated. Chain errors become failed candidates. If every candidate
/// fails (which the default plan's construction prevents in practice),
/// the default plan is returned unscored.
pub fn evaluate_plans_with(
    sample: &InternalRepresentation,
    early_stop: Option<f64>,
) -> Result<(PlanCandidate, Vec<PlanCandidate>)> {
    if sample.column_count() == 0 {
        return Err(Error::EmptyInput("cannot plan over a table with no columns".into()));
    }

    let mut all: Vec<PlanCandidate> = Vec::new();
    let mut best: Option<usize> = None;
    for steps in enumerate_plans() {
        let candidate = match apply_plan_steps(sample, &steps) {
            Ok(cleaned) => match infer_schema(&cleaned).and_then(|s| dqs(&cleaned, &s)) {
                Ok(q) => PlanCandidate {
                    steps,
                    achieved_dqs: Some(q.dqs),
                    failure: None,
                },
                Err(e) => PlanCandidate {
                    steps,
                    achieved_dqs: None,
                    failure: Some(e.to_string()),
                },
            },
            Err(e) => PlanCandidate {
                steps,
                achieved_dqs: None,
                failure: Some(e.to_string()),
            },
        };

        let score = candidate.achieved_dqs;
        all.push(candidate);
        if let Some(score) = score {
            let better = match best {
                Some(i) => score > all[i].achieved_dqs.unwrap(),
                None => true,
            };
            if better {
                best = Some(all.len() - 1);
            }
            if let Some(threshold) = early_stop {
                if score > threshold {
                    break;
                }
            }
        }
    }

    let best = match best {
        Some(i) => all[i].clone(),
        None => PlanCandidate {
            steps: default_plan(),
            achieved_dqs: None,
            failure: None,
        },
    };
    Ok((best, all))
}

/// [`evaluate_plans_with`] at the standard early-stop threshold.
pub fn evaluate_plans(
    sample: &InternalRepresentation,
) -> Result<(PlanCandidate, Vec<PlanCandidate>)> {
    evaluate_plans_with(sample, Some(EARLY_STOP_DQS))
}

/// Everything the planner needs about the observed pair.
pub struct PlanInputs<'a> {
    pub source_name: &'a str,
    pub reconstruction_key: &'a ReconstructionKey,
    /// The sampled source rows.
    pub source_sample: &'a InternalRepresentation,
    /// The full target example.
    pub target_sample: &'a InternalRepresentation,
}

/// Tuning for plan building.
#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub match_config: MatchConfig,
    /// `None` disables early stopping (exhaustive search).
    pub early_stop: Option<f64>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            match_config: MatchConfig::default(),
            early_stop: Some(EARLY_STOP_DQS),
        }
    }
}

/// Runtime metrics of one planning run, published to the metrics topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerMetrics {
    pub schema_match_ms: u64,
    pub plan_search_ms: u64,
    pub inference_ms: u64,
    /// How many of the 36 candidates were evaluated before stopping.
    pub evaluated_candidates: usize,
    pub failed_candidates: usize,
    pub chosen_plan: String,
    pub sample_dqs_before: f64,
    pub sample_dqs_after: Option<f64>,
    /// Score per evaluated candidate, in evaluation order; `null` for
    /// failed candidates.
    pub dqs_trajectory: Vec<Option<f64>>,
    pub match_provenance: Provenance,
    pub infer_provenance: Provenance,
    /// Remote calls actually made (≤ 2: one match, one inference).
    pub provider_calls: u32,
    pub warnings: Vec<String>,
}

/// A built plan plus the metrics describing how it was found.
#[derive(Debug, Clone)]
pub struct BuildOutcome {
    pub payload: PlanPayload,
    pub metrics: PlannerMetrics,
}

/// The full planning pipeline: infer both schemas, match them, search
/// the plan space on the sample, infer the transformation program from
/// the cleaned sample against the target example, and assemble the
/// payload. With a provider, exactly one match call and one inference
/// call are made; every provider failure degrades to the deterministic
/// path and is recorded in the metrics.
pub fn build_plan(
    inputs: &PlanInputs,
    provider: Option<&dyn Provider>,
    config: &PlannerConfig,
) -> Result<BuildOutcome> {
    let mut warnings: Vec<String> = Vec::new();
    let mut provider_calls = 0u32;

    // Schema inference + matching.
    let match_started = Instant::now();
    let source_schema = infer_schema(inputs.source_sample)?;
    let target_schema = infer_schema(inputs.target_sample)?;
    let match_outcome: MatchOutcome = match provider {
        Some(p) => {
            provider_calls += 1;
            match_via_provider(&source_schema, &target_schema, p, &config.match_config)?
        }
        None => MatchOutcome {
            map: match_schemas(&source_schema, &target_schema, &config.match_config)?,
            provenance: Provenance::Algorithmic,
            warnings: Vec::new(),
        },
    };
    warnings.extend(match_outcome.warnings.iter().cloned());
    let schema_map = match_outcome.map;
    if schema_map.correspondences.is_empty() {
        return Err(Error::InvalidSchemaMap(format!(
            "no correspondences found between {:?} and the target schema",
            inputs.source_name
        )));
    }
    let schema_match_ms = match_started.elapsed().as_millis() as u64;

    // Plan search on the sample.
    let search_started = Instant::now();
    let dqs_before = dqs(inputs.source_sample, &source_schema)?.dqs;
    let (best, candidates) = evaluate_plans_with(inputs.source_sample, config.early_stop)?;
    let plan_search_ms = search_started.elapsed().as_millis() as u64;

    // Transformation inference on the cleaned sample: the program should
    // learn from repaired values, not polluted ones.
    let infer_started = Instant::now();
    let cleaned = apply_plan_steps(inputs.source_sample, &best.steps)?;
    let infer_outcome: InferOutcome = match provider {
        Some(p) => {
            provider_calls += 1;
            infer_program_remote(&cleaned, inputs.target_sample, &schema_map, p)?
        }
        None => infer_program_fallback(&cleaned, inputs.target_sample, &schema_map)?,
    };
    warnings.extend(infer_outcome.warnings.iter().cloned());
    let inference_ms = infer_started.elapsed().as_millis() as u64;

    let ir_schema = infer_schema(&cleaned)?;
    let payload = PlanPayload {
        payload_version: PAYLOAD_VERSION,
        source_file: inputs.source_name.to_string(),
        reconstruction_key: inputs.reconstruction_key.clone(),
        schema_map,
        plan_steps: best.steps.clone(),
        logic: infer_outcome.program,
        ir_schema,
    };
    let metrics = PlannerMetrics {
        schema_match_ms,
        plan_search_ms,
        inference_ms,
        evaluated_candidates: candidates.len(),
        failed_candidates: candidates.iter().filter(|c| c.failed()).count(),
        chosen_plan: best.steps.to_string(),
        sample_dqs_before: dqs_before,
        sample_dqs_after: best.achieved_dqs,
        dqs_trajectory: candidates.iter().map(|c| c.achieved_dqs).collect(),
        match_provenance: match_outcome.provenance,
        infer_provenance: infer_outcome.provenance,
        provider_calls,
        warnings,
    };
    Ok(BuildOutcome { payload, metrics })
}
