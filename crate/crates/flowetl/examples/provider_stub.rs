//! Driving the planner through a remote provider, using the built-in
//! stub server: one scripted answer per call, every request logged.
//!
//! Run with: `cargo run --example provider_stub`

use std::time::Duration;

use flowetl::ir::{csv_to_ir, ReconstructionKey};
use flowetl::planner::{build_plan, PlanInputs, PlannerConfig};
use flowetl::provider::stub::{ProviderScript, ScriptedResponse, StubServer};
use flowetl::provider::{HttpProvider, ProviderConfig};
use flowetl::transform::summarize_expr;

fn main() -> flowetl::Result<()> {
    let sample = csv_to_ir(
        "id,first_name,last_name,temp_c\n\
         1,ada,lovelace,10\n\
         2,alan,turing,0\n\
         3,grace,hopper,25\n\
         4,edsger,dijkstra,-5\n",
    )?;
    let examples = csv_to_ir(
        "id,full_name,temp_f\n\
         1,ada lovelace,50\n\
         2,alan turing,32\n\
         3,grace hopper,77\n\
         4,edsger dijkstra,23\n",
    )?;

    // The script answers the match call with a valid correspondence set,
    // then garbles the inference call. The planner accepts the first and
    // falls back to its own inference for the second — a flaky provider
    // can degrade answers, never break the run.
    let match_body = serde_json::json!({
        "correspondences": [
            {"sources": ["id"], "target": "id"},
            {"sources": ["first_name", "last_name"], "target": "full_name"},
            {"sources": ["temp_c"], "target": "temp_f"}
        ]
    });
    let server = StubServer::start(ProviderScript::new(vec![
        ScriptedResponse::Json(match_body),
        ScriptedResponse::Raw("MODEL OVERLOADED".into()),
    ]))?;

    let provider = HttpProvider::new(ProviderConfig {
        url: server.url().to_string(),
        key: Some("demo-key".into()),
        timeout: Duration::from_secs(2),
    });

    let inputs = PlanInputs {
        source_name: "readings.csv",
        reconstruction_key: &ReconstructionKey::root(),
        source_sample: &sample,
        target_sample: &examples,
    };
    let outcome = build_plan(&inputs, Some(&provider), &PlannerConfig::default())?;

    println!("provider calls made: {}", outcome.metrics.provider_calls);
    println!("match answered by:   {:?}", outcome.metrics.match_provenance);
    println!("infer answered by:   {:?}", outcome.metrics.infer_provenance);
    for w in &outcome.metrics.warnings {
        println!("  warning: {w}");
    }

    println!("\ninferred rules (after fallback):");
    for rule in &outcome.payload.logic.columns {
        println!("  {} = {}", rule.target_column, summarize_expr(&rule.expr));
    }

    println!("\nrequests the stub saw:");
    for req in server.request_log() {
        let body = req.body_json().map(|v| v.to_string()).unwrap_or_default();
        let head: String = body.chars().take(60).collect();
        println!("  POST {} ({} bytes) {head}...", req.path, req.body.len());
    }

    // In the real pipeline the same wiring comes from the environment:
    // FLOWETL_PROVIDER_URL, FLOWETL_PROVIDER_KEY, FLOWETL_PROVIDER_TIMEOUT_MS,
    // selected with `--provider remote`.
    Ok(())
}
