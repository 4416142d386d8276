//! Benchmark driver: run the full pipeline over a generated corpus and
//! tabulate the results.
//!
//! For every manifest entry the driver runs one complete pipeline (polluted
//! source in, transformed file out), then grades the run on two axes:
//!
//! * **output quality** — the transformed file is read back and scored with
//!   the same quality module the pipeline uses internally;
//! * **plan fidelity** — the plan the pipeline actually executed is recovered
//!   from the persisted bus log and scored against the pair's ground truth.
//!
//! A failing pair never aborts the benchmark; the failure is recorded in its
//! row and the remaining pairs still run. Results land in `results.csv` (for
//! machines) and `results.md` (for humans) under the output directory.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::translate_file;
use crate::planner::PlanPayload;
use crate::quality::{dqs, QualityIndicators};
use crate::runtime::{run_pipeline, RunConfig};
use crate::schema::infer_schema;

use super::corpus::{load_manifest, manifest_path, ManifestEntry};
use super::score::{plan_eval, plan_ops_from_payload, GroundTruthPlan};

/// File name of the machine-readable result table.
pub const RESULTS_CSV: &str = "results.csv";
/// File name of the human-readable result table.
pub const RESULTS_MD: &str = "results.md";

/// Knobs for a benchmark invocation.
#[derive(Debug, Clone, Copy, Default)]
pub struct BenchConfig {
    /// Run all pairs concurrently (one thread each) instead of sequentially.
    /// Timings are then wall-clock per pair under contention, so keep this
    /// off when the numbers themselves matter.
    pub parallel: bool,
}

/// Outcome of one corpus pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub rows: usize,
    pub format: String,
    /// Wall-clock seconds for the pipeline run plus grading.
    pub time_s: f64,
    /// Quality score of the transformed output file, in `[0, 1]`.
    pub dqs: Option<f64>,
    pub missing_pct: Option<f64>,
    pub duplicate_pct: Option<f64>,
    pub outlier_pct: Option<f64>,
    /// Executed plan scored against the ground truth, in `[0, 1]`.
    pub plan_eval: Option<f64>,
    /// Present iff the pair failed; the metric fields are then `None`.
    pub error: Option<String>,
}

/// All rows of one benchmark invocation, in manifest order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Renders the result table as CSV (full float precision).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "dataset,rows,format,time_s,dqs,missing_pct,duplicate_pct,outlier_pct,plan_eval,error\n",
        );
        for row in &self.rows {
            let field = |v: &Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                csv_escape(&row.dataset),
                row.rows,
                row.format,
                row.time_s,
                field(&row.dqs),
                field(&row.missing_pct),
                field(&row.duplicate_pct),
                field(&row.outlier_pct),
                field(&row.plan_eval),
                csv_escape(row.error.as_deref().unwrap_or("")),
            ));
        }
        out
    }

    /// Renders the result table as a Markdown document.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Benchmark results\n\n");
        out.push_str(
            "| Dataset | Rows | Format | Time (s) | DQS | Missing % | Duplicates % | Outliers % | PlanEval | Status |\n",
        );
        out.push_str("|---|---:|---|---:|---:|---:|---:|---:|---:|---|\n");
        for row in &self.rows {
            let num = |v: &Option<f64>, places: usize| match v {
                Some(v) => format!("{v:.places$}"),
                None => "—".to_string(),
            };
            out.push_str(&format!(
                "| {} | {} | {} | {:.2} | {} | {} | {} | {} | {} | {} |\n",
                row.dataset,
                row.rows,
                row.format,
                row.time_s,
                num(&row.dqs, 3),
                num(&row.missing_pct, 2),
                num(&row.duplicate_pct, 2),
                num(&row.outlier_pct, 2),
                num(&row.plan_eval, 3),
                row.error.as_deref().unwrap_or("ok"),
            ));
        }
        out
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Runs the benchmark over every pair listed in `corpus_dir`'s manifest.
///
/// Per-pair pipeline artifacts land under `out_dir/runs/<name>/`; the result
/// tables are written to `out_dir` itself. Pair failures are captured in the
/// returned rows, not raised, so one bad pair cannot hide the others.
pub fn run_benchmark(corpus_dir: &Path, out_dir: &Path, config: &BenchConfig) -> Result<BenchReport> {
    let manifest = load_manifest(corpus_dir)?;
    std::fs::create_dir_all(out_dir)?;

    let rows: Vec<BenchRow> = if config.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = manifest
                .entries
                .iter()
                .map(|entry| scope.spawn(move || bench_one(corpus_dir, out_dir, entry)))
                .collect();
            handles
                .into_iter()
                .map(|handle| handle.join().expect("benchmark thread panicked"))
                .collect()
        })
    } else {
        manifest
            .entries
            .iter()
            .map(|entry| bench_one(corpus_dir, out_dir, entry))
            .collect()
    };

    let report = BenchReport { rows };
    std::fs::write(out_dir.join(RESULTS_CSV), report.to_csv())?;
    std::fs::write(out_dir.join(RESULTS_MD), report.to_markdown())?;
    Ok(report)
}

/// Runs and grades a single pair, folding any failure into the row.
fn bench_one(corpus_dir: &Path, out_dir: &Path, entry: &ManifestEntry) -> BenchRow {
    let start = Instant::now();
    let graded = run_entry(corpus_dir, out_dir, entry);
    let time_s = start.elapsed().as_secs_f64();
    let mut row = BenchRow {
        dataset: entry.name.clone(),
        rows: entry.rows,
        format: entry.format.extension().to_string(),
        time_s,
        dqs: None,
        missing_pct: None,
        duplicate_pct: None,
        outlier_pct: None,
        plan_eval: None,
        error: None,
    };
    match graded {
        Ok((quality, plan_score)) => {
            row.dqs = Some(quality.dqs);
            row.missing_pct = Some(100.0 * quality.missing_ratio);
            row.duplicate_pct = Some(100.0 * quality.duplicate_ratio);
            row.outlier_pct = Some(100.0 * quality.outlier_ratio);
            row.plan_eval = Some(plan_score);
        }
        Err(err) => row.error = Some(err.to_string()),
    }
    row
}

fn run_entry(
    corpus_dir: &Path,
    out_dir: &Path,
    entry: &ManifestEntry,
) -> Result<(QualityIndicators, f64)> {
    let run_dir = out_dir.join("runs").join(&entry.name);
    let mut config = RunConfig::new(
        manifest_path(corpus_dir, &entry.polluted_file),
        manifest_path(corpus_dir, &entry.target_file),
        &run_dir,
    );
    config.seed = entry.run_seed;

    let outcome = run_pipeline(&config)?;
    if !outcome.success {
        return Err(Error::Pipeline {
            component: "bench".into(),
            message: format!("pipeline did not complete; see {}", run_dir.display()),
        });
    }
    let output_path = outcome.output_path.ok_or_else(|| Error::Pipeline {
        component: "bench".into(),
        message: "pipeline reported success without an output file".into(),
    })?;

    let (output, _) = translate_file(&output_path)?;
    let quality = dqs(&output, &infer_schema(&output)?)?;

    let payload = recover_payload(&run_dir)?;
    let gt_text = std::fs::read_to_string(manifest_path(corpus_dir, &entry.gt_file))?;
    let gt = GroundTruthPlan::from_json(&gt_text)?;
    let score = plan_eval(&plan_ops_from_payload(&payload), &gt)?;
    Ok((quality, score.value))
}

/// Reads the executed plan back out of the run's persisted bus log. The
/// planner publishes its payload on the plans topic, so the last line of
/// `bus/plans.ndjson` wraps the plan that drove the worker.
fn recover_payload(run_dir: &Path) -> Result<PlanPayload> {
    let log_path = run_dir.join("bus").join("plans.ndjson");
    let text = std::fs::read_to_string(&log_path)?;
    let line = text
        .lines()
        .filter(|line| !line.trim().is_empty())
        .next_back()
        .ok_or_else(|| Error::Pipeline {
            component: "bench".into(),
            message: format!("{} holds no published plan", log_path.display()),
        })?;
    let envelope: serde_json::Value =
        serde_json::from_str(line).map_err(|err| Error::Pipeline {
            component: "bench".into(),
            message: format!("bus log line is not JSON: {err}"),
        })?;
    serde_json::from_value(envelope["payload"].clone()).map_err(|err| Error::Pipeline {
        component: "bench".into(),
        message: format!("published plan does not parse: {err}"),
    })
}
