//! The ETL worker: applies a plan payload to the full source file and
//! writes the transformed output.
//!
//! The worker re-reads the source from disk (the planner only ever saw a
//! sample), measures the data quality score before and after, runs the
//! cleaning chain and the transformation program, and translates the
//! result back out through the reconstruction key. With more than one
//! worker requested, the rows are split into disjoint shards processed
//! in parallel with identical per-shard semantics and merged back in
//! shard order, so the output is deterministic for a given shard count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{render_file, translate_file, InternalRepresentation};
use crate::planner::{apply_plan_steps, PlanPayload};
use crate::quality::dqs;
use crate::schema::infer_schema;
use crate::transform::apply_transform_program;

pub const ETL_WORKER: &str = "etl-worker";

/// Worker metrics, published to the metrics topic after a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerMetrics {
    pub from: String,
    pub contents: WorkerContents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerContents {
    pub source_file: String,
    pub output_file: String,
    pub rows_in: usize,
    pub rows_out: usize,
    pub shards: usize,
    pub pre_dqs: f64,
    pub post_dqs: f64,
    pub failed_cells: usize,
    pub elapsed_ms: u64,
}

/// The written output plus the metrics describing the run.
#[derive(Debug, Clone)]
pub struct WorkerOutcome {
    pub output_path: PathBuf,
    pub metrics: WorkerMetrics,
}

/// Splits `rows` into `shards` contiguous, disjoint ranges covering all
/// rows; early shards take the remainder.
fn shard_ranges(rows: usize, shards: usize) -> Vec<std::ops::Range<usize>> {
    let shards = shards.max(1).min(rows.max(1));
    let base = rows / shards;
    let extra = rows % shards;
    let mut ranges = Vec::with_capacity(shards);
    let mut start = 0;
    for i in 0..shards {
        let len = base + usize::from(i < extra);
        ranges.push(start..start + len);
        start += len;
    }
    ranges
}

/// Cleans and transforms one shard of the source.
fn process_shard(
    ir: &InternalRepresentation,
    plan: &PlanPayload,
) -> Result<(InternalRepresentation, usize)> {
    let cleaned = apply_plan_steps(ir, &plan.plan_steps)?;
    let out = apply_transform_program(&cleaned, &plan.logic, &plan.schema_map)?;
    Ok((out.ir, out.failed_cells))
}

/// Applies a plan to the file it was built for and writes the output
/// into `out_dir` as `transformed_<source name>`.
pub fn run_worker(
    plan: &PlanPayload,
    source_path: &Path,
    out_dir: &Path,
    shards: usize,
) -> Result<WorkerOutcome> {
    let started = Instant::now();
    let actual = source_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    if actual != plan.source_file {
        return Err(Error::Pipeline {
            component: "worker".to_string(),
            message: format!(
                "plan is for {:?} but was handed {:?}",
                plan.source_file, actual
            ),
        });
    }

    let (source, _key) = translate_file(source_path)?;
    let pre = dqs(&source, &infer_schema(&source)?)?;

    let ranges = shard_ranges(source.row_count(), shards);
    let parts: Vec<(InternalRepresentation, usize)> = if ranges.len() <= 1 {
        vec![process_shard(&source, plan)?]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .iter()
                .map(|range| {
                    let indices: Vec<usize> = range.clone().collect();
                    let shard = source.select_rows(&indices);
                    let plan = &*plan;
                    scope.spawn(move || process_shard(&shard, plan))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap())
                .collect::<Vec<Result<_>>>()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
    };

    // Deterministic merge: shard outputs concatenated in shard order.
    let mut rows = Vec::new();
    let mut failed_cells = 0usize;
    let headers = parts[0].0.headers().to_vec();
    for (part, failed) in parts {
        if part.headers() != headers.as_slice() {
            return Err(Error::Pipeline {
                component: "worker".to_string(),
                message: "shards disagreed on output columns".to_string(),
            });
        }
        rows.extend(part.rows().iter().cloned());
        failed_cells += failed;
    }
    let output = InternalRepresentation::new(headers, rows)?;
    let post = dqs(&output, &infer_schema(&output)?)?;

    let output_name = format!("transformed_{}", plan.source_file);
    let text = render_file(&output, &plan.reconstruction_key, &output_name)?;
    std::fs::create_dir_all(out_dir)?;
    let output_path = out_dir.join(&output_name);
    std::fs::write(&output_path, text)?;

    Ok(WorkerOutcome {
        output_path,
        metrics: WorkerMetrics {
            from: ETL_WORKER.to_string(),
            contents: WorkerContents {
                source_file: plan.source_file.clone(),
                output_file: output_name,
                rows_in: source.row_count(),
                rows_out: output.row_count(),
                shards: ranges.len(),
                pre_dqs: pre.dqs,
                post_dqs: post.dqs,
                failed_cells,
                elapsed_ms: started.elapsed().as_millis() as u64,
            },
        },
    })
}
