//! Evaluation toolkit: controlled pollution, plan scoring, corpus
//! generation, and the corpus benchmark driver.
//!
//! Everything here sits outside the pipeline proper — the pipeline never
//! calls into this module. It exists to *grade* the pipeline:
//!
//! * [`pollute`] damages a clean table by a seeded, measurable amount;
//! * [`plan_eval`] scores an executed plan against a ground-truth plan;
//! * [`generate_corpus`] builds source/target pairs with known ground truth;
//! * [`run_benchmark`] runs the full pipeline over such a corpus and
//!   tabulates quality and plan-fidelity results.

pub mod bench;
pub mod corpus;
pub mod pollute;
pub mod score;

pub use bench::{run_benchmark, BenchConfig, BenchReport, BenchRow};
pub use corpus::{
    generate_corpus, load_manifest, write_corpus, CorpusManifest, CorpusPair, ManifestEntry,
    PairFormat, MANIFEST_FILE,
};
pub use pollute::{
    pollute, PollutionOutcome, PollutionSpec, DEFAULT_DUPLICATE_TARGET, DEFAULT_MISSING_TARGET,
    DEFAULT_OUTLIER_TARGET, POLLUTION_TOLERANCE,
};
pub use score::{
    plan_eval, plan_ops_from_payload, GroundTruthPlan, OpKind, PlanEvalScore, PlanOp,
    PARAM_TOLERANCE,
};
