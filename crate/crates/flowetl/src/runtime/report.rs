//! The reporting engine: folds the metrics topic into one run report.
//!
//! Every component tells its story on the metrics topic as it runs; the
//! report is just that topic, grouped by sender and rendered. A report is
//! complete when all four pipeline components delivered a terminal
//! (non-error) metric; anything less is a partial report, which is still
//! written — a failed run should explain itself.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bus::Cursor;
use crate::runtime::observer::{SOURCE_OBSERVER, TARGET_OBSERVER};
use crate::runtime::worker::ETL_WORKER;

/// Schema version of the report document.
pub const REPORT_VERSION: u32 = 1;

pub const PLANNER: &str = "planner";

/// The aggregated run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub report_version: u32,
    /// True iff every pipeline component delivered a non-error metric.
    pub complete: bool,
    /// All metric messages, grouped by the sending component, in
    /// publication order.
    pub components: IndexMap<String, Vec<Value>>,
    /// Every error any component reported, in publication order.
    pub errors: Vec<String>,
}

/// Consumes the metrics topic from the cursor's position to the head and
/// folds the messages into a report. Non-JSON payloads and messages
/// without a `from` field are grouped under `"unknown"`.
pub fn compile_report(cursor: &mut Cursor) -> RunReport {
    let mut components: IndexMap<String, Vec<Value>> = IndexMap::new();
    let mut errors = Vec::new();
    for message in cursor.drain() {
        let value: Value = match serde_json::from_slice(&message.payload) {
            Ok(v) => v,
            Err(_) => Value::String(String::from_utf8_lossy(&message.payload).into()),
        };
        let from = value
            .get("from")
            .and_then(Value::as_str)
            .unwrap_or("unknown")
            .to_string();
        if let Some(error) = value.get("error").and_then(Value::as_str) {
            errors.push(format!("{from}: {error}"));
        }
        components.entry(from).or_default().push(value);
    }

    let terminal = |name: &str| {
        components
            .get(name)
            .is_some_and(|msgs| msgs.iter().any(|m| m.get("error").is_none()))
    };
    let complete = [SOURCE_OBSERVER, TARGET_OBSERVER, PLANNER, ETL_WORKER]
        .iter()
        .all(|c| terminal(c));

    RunReport {
        report_version: REPORT_VERSION,
        complete,
        components,
        errors,
    }
}

impl RunReport {
    /// The report with volatile fields (elapsed times, timestamps)
    /// stripped, for determinism comparisons: two runs with the same seed
    /// must agree on this view exactly.
    pub fn stable_view(&self) -> Value {
        let mut value = serde_json::to_value(self).expect("report serializes");
        strip_volatile(&mut value);
        value
    }

    /// Renders the fixed human-readable summary.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("=== FlowETL run report (v{}) ===\n", self.report_version));
        out.push_str(&format!(
            "status: {}\n",
            if self.complete { "complete" } else { "partial" }
        ));

        for observer in [SOURCE_OBSERVER, TARGET_OBSERVER] {
            out.push_str(&format!("\n[{observer}]\n"));
            match self.last_ok(observer) {
                Some(m) => {
                    let c = &m["contents"];
                    out.push_str(&format!(
                        "  file: {} ({} objects, {:.2} MB)\n",
                        c["filename"].as_str().unwrap_or("?"),
                        c["objectsCount"].as_u64().unwrap_or(0),
                        c["filesizeMBs"].as_f64().unwrap_or(0.0),
                    ));
                }
                None => out.push_str("  (no metrics)\n"),
            }
        }

        out.push_str(&format!("\n[{PLANNER}]\n"));
        match self.last_ok(PLANNER) {
            Some(m) => {
                let c = &m["contents"];
                out.push_str(&format!(
                    "  plan: {}\n",
                    c["chosen_plan"].as_str().unwrap_or("?")
                ));
                out.push_str(&format!(
                    "  sample DQS: {:.4} -> {}\n",
                    c["sample_dqs_before"].as_f64().unwrap_or(f64::NAN),
                    c["sample_dqs_after"]
                        .as_f64()
                        .map(|v| format!("{v:.4}"))
                        .unwrap_or_else(|| "-".to_string()),
                ));
                out.push_str(&format!(
                    "  candidates: {} evaluated, {} failed\n",
                    c["evaluated_candidates"].as_u64().unwrap_or(0),
                    c["failed_candidates"].as_u64().unwrap_or(0),
                ));
                out.push_str(&format!(
                    "  provider calls: {} (match: {}, inference: {})\n",
                    c["provider_calls"].as_u64().unwrap_or(0),
                    c["match_provenance"].as_str().unwrap_or("?"),
                    c["infer_provenance"].as_str().unwrap_or("?"),
                ));
                if let Some(warnings) = c["warnings"].as_array() {
                    for w in warnings {
                        out.push_str(&format!("  warning: {}\n", w.as_str().unwrap_or("?")));
                    }
                }
            }
            None => out.push_str("  (no metrics)\n"),
        }

        out.push_str(&format!("\n[{ETL_WORKER}]\n"));
        match self.last_ok(ETL_WORKER) {
            Some(m) => {
                let c = &m["contents"];
                out.push_str(&format!(
                    "  rows: {} -> {}\n",
                    c["rows_in"].as_u64().unwrap_or(0),
                    c["rows_out"].as_u64().unwrap_or(0),
                ));
                out.push_str(&format!(
                    "  DQS: {:.4} -> {:.4}\n",
                    c["pre_dqs"].as_f64().unwrap_or(f64::NAN),
                    c["post_dqs"].as_f64().unwrap_or(f64::NAN),
                ));
                out.push_str(&format!(
                    "  output: {}\n",
                    c["output_file"].as_str().unwrap_or("?")
                ));
            }
            None => out.push_str("  (no metrics)\n"),
        }

        out.push_str("\nerrors:");
        if self.errors.is_empty() {
            out.push_str(" none\n");
        } else {
            out.push('\n');
            for e in &self.errors {
                out.push_str(&format!("  - {e}\n"));
            }
        }
        out
    }

    fn last_ok(&self, component: &str) -> Option<&Value> {
        self.components
            .get(component)?
            .iter()
            .rev()
            .find(|m| m.get("error").is_none())
    }
}

/// Removes keys that legitimately vary between identical runs: elapsed
/// times and timestamps.
fn strip_volatile(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.retain(|k, _| !k.ends_with("_ms") && k != "timestamp");
            for v in map.values_mut() {
                strip_volatile(v);
            }
        }
        Value::Array(items) => {
            for v in items {
                strip_volatile(v);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus::{MessageBus, TOPIC_METRICS};
    use serde_json::json;

    fn publish_all(bus: &MessageBus, messages: &[Value]) {
        for m in messages {
            bus.publish_json(TOPIC_METRICS, m).unwrap();
        }
    }

    fn full_run_messages() -> Vec<Value> {
        vec![
            json!({"from": "source-observer", "contents": {
                "filename": "a.csv", "objectsCount": 100, "filesizeMBs": 0.1}}),
            json!({"from": "target-observer", "contents": {
                "filename": "t.csv", "objectsCount": 5, "filesizeMBs": 0.01}}),
            json!({"from": "planner", "contents": {
                "chosen_plan": "MVH(impute) -> DRH -> NOH(impute_median)",
                "sample_dqs_before": 0.82, "sample_dqs_after": 1.0,
                "evaluated_candidates": 1, "failed_candidates": 0,
                "provider_calls": 0, "match_provenance": "algorithmic",
                "infer_provenance": "algorithmic", "warnings": [],
                "plan_search_ms": 12}}),
            json!({"from": "etl-worker", "contents": {
                "rows_in": 100, "rows_out": 93, "pre_dqs": 0.82,
                "post_dqs": 1.0, "output_file": "transformed_a.csv",
                "elapsed_ms": 3}}),
        ]
    }

    #[test]
    fn full_run_compiles_to_a_complete_report() {
        let bus = MessageBus::new();
        publish_all(&bus, &full_run_messages());
        let report = compile_report(&mut bus.cursor(TOPIC_METRICS));
        assert!(report.complete);
        assert!(report.errors.is_empty());
        assert_eq!(report.components.len(), 4);

        let text = report.render_text();
        assert!(text.contains("status: complete"), "{text}");
        assert!(text.contains("MVH(impute) -> DRH -> NOH(impute_median)"), "{text}");
        assert!(text.contains("rows: 100 -> 93"), "{text}");
        assert!(text.contains("errors: none"), "{text}");
    }

    #[test]
    fn observer_error_makes_the_report_partial() {
        let bus = MessageBus::new();
        publish_all(
            &bus,
            &[json!({"from": "source-observer", "error": "csv translation error"})],
        );
        let report = compile_report(&mut bus.cursor(TOPIC_METRICS));
        assert!(!report.complete);
        assert_eq!(report.errors.len(), 1);
        assert!(report.errors[0].contains("source-observer"));
        let text = report.render_text();
        assert!(text.contains("status: partial"), "{text}");
        assert!(text.contains("(no metrics)"), "{text}");
    }

    #[test]
    fn empty_metrics_topic_is_a_valid_empty_report() {
        let bus = MessageBus::new();
        let report = compile_report(&mut bus.cursor(TOPIC_METRICS));
        assert!(!report.complete);
        assert!(report.components.is_empty());
        assert!(report.errors.is_empty());
        let _ = report.render_text();
    }

    #[test]
    fn stable_view_strips_timing_fields() {
        let bus = MessageBus::new();
        publish_all(&bus, &full_run_messages());
        let report = compile_report(&mut bus.cursor(TOPIC_METRICS));
        let view = report.stable_view();
        let text = serde_json::to_string(&view).unwrap();
        assert!(!text.contains("_ms"), "{text}");
        assert!(text.contains("chosen_plan"), "{text}");
    }

    #[test]
    fn json_round_trip_preserves_the_report() {
        let bus = MessageBus::new();
        publish_all(&bus, &full_run_messages());
        let report = compile_report(&mut bus.cursor(TOPIC_METRICS));
        let text = serde_json::to_string_pretty(&report).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
    }
}
