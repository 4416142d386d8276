//! The runtime: wires observers, planner, worker and reporter together.
//!
//! Each component runs on its own thread and talks to the others only
//! through the message bus. The orchestrator's job is narrow: start the
//! threads, tell downstream components when upstream ones have finished
//! (so nobody waits on a message that can never arrive), and fold the
//! metrics topic into the final report. Even a failed run produces a
//! report — the errors are part of the story.

pub mod observer;
pub mod report;
pub mod worker;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bus::{Cursor, Message, MessageBus, TOPIC_METRICS, TOPIC_PLANS, TOPIC_SOURCE_ARTIFACTS, TOPIC_TARGET_ARTIFACTS};
use crate::error::{Error, Result};
use crate::planner::{build_plan, PlanInputs, PlanPayload, PlannerConfig};
use crate::provider::{HttpProvider, Provider, ProviderConfig};

pub use observer::{
    observe_source, observe_target, sample_rows, sample_size, FileArtifacts, ObserverMetrics,
    SampleOptions, DEFAULT_SAMPLE_FLOOR, DEFAULT_SAMPLE_PCT, SOURCE_OBSERVER, TARGET_OBSERVER,
};
pub use report::{compile_report, RunReport, PLANNER, REPORT_VERSION};
pub use worker::{run_worker, WorkerMetrics, WorkerOutcome, ETL_WORKER};

/// How long a component will keep waiting for an upstream message after
/// the upstream component is still believed to be running. This is a
/// backstop; in practice the orchestrator signals completion and waits
/// end early.
const UPSTREAM_WAIT: Duration = Duration::from_secs(30);
const WAIT_SLICE: Duration = Duration::from_millis(25);

/// Which matching/inference provider the planner should consult.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    /// Built-in deterministic algorithms only. The default.
    #[default]
    Algorithmic,
    /// An external HTTP provider, configured through the environment.
    Remote,
}

impl std::str::FromStr for ProviderMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algorithmic" => Ok(ProviderMode::Algorithmic),
            "remote" => Ok(ProviderMode::Remote),
            other => Err(Error::Config(format!(
                "unknown provider mode {other:?} (expected \"algorithmic\" or \"remote\")"
            ))),
        }
    }
}

/// Full configuration for one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: PathBuf,
    pub target: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub sample_pct: f64,
    pub sample_floor: usize,
    pub provider: ProviderMode,
    pub workers: usize,
}

impl RunConfig {
    pub fn new(
        source: impl Into<PathBuf>,
        target: impl Into<PathBuf>,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            source: source.into(),
            target: target.into(),
            out_dir: out_dir.into(),
            seed: 0,
            sample_pct: DEFAULT_SAMPLE_PCT,
            sample_floor: DEFAULT_SAMPLE_FLOOR,
            provider: ProviderMode::Algorithmic,
            workers: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sample_pct > 0.0 && self.sample_pct <= 1.0) {
            return Err(Error::Config(format!(
                "sample_pct must be in (0, 1], got {}",
                self.sample_pct
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// A partially specified configuration, as read from a config file or
/// assembled from command-line flags. Field names mirror the CLI flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialRunConfig {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub sample_pct: Option<f64>,
    pub sample_floor: Option<usize>,
    pub provider: Option<ProviderMode>,
    pub workers: Option<usize>,
}

impl PartialRunConfig {
    /// Loads a config file. `.json` files are parsed as JSON, anything
    /// else as TOML.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("config file {path:?}: {e}")))
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("config file {path:?}: {e}")))
        }
    }

    /// Fills in any unset fields from `fallback`. Fields already set on
    /// `self` win, so CLI flags layered over a config file behave as
    /// overrides.
    pub fn or(self, fallback: PartialRunConfig) -> PartialRunConfig {
        PartialRunConfig {
            source: self.source.or(fallback.source),
            target: self.target.or(fallback.target),
            out: self.out.or(fallback.out),
            seed: self.seed.or(fallback.seed),
            sample_pct: self.sample_pct.or(fallback.sample_pct),
            sample_floor: self.sample_floor.or(fallback.sample_floor),
            provider: self.provider.or(fallback.provider),
            workers: self.workers.or(fallback.workers),
        }
    }

    /// Resolves into a full configuration; `source`, `target` and `out`
    /// are required, everything else has defaults.
    pub fn into_config(self) -> Result<RunConfig> {
        let require = |field: Option<PathBuf>, name: &str| {
            field.ok_or_else(|| Error::Config(format!("missing required setting: {name}")))
        };
        let mut config = RunConfig::new(
            require(self.source, "source")?,
            require(self.target, "target")?,
            require(self.out, "out")?,
        );
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(pct) = self.sample_pct {
            config.sample_pct = pct;
        }
        if let Some(floor) = self.sample_floor {
            config.sample_floor = floor;
        }
        if let Some(provider) = self.provider {
            config.provider = provider;
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        Ok(config)
    }
}

/// What a pipeline run produced.
#[derive(Debug)]
pub struct PipelineOutcome {
    /// The compiled run report (also written to `<out>/report.json` and
    /// `<out>/report.txt`).
    pub report: RunReport,
    /// Path of the transformed output file, when the worker got that far.
    pub output_path: Option<PathBuf>,
    /// True iff every component completed and the output was written.
    pub success: bool,
}

/// Runs the full pipeline with the built-in provider selection.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutcome> {
    let remote;
    let provider: Option<&(dyn Provider + Sync)> = match config.provider {
        ProviderMode::Algorithmic => None,
        ProviderMode::Remote => {
            remote = HttpProvider::new(ProviderConfig::from_env()?);
            Some(&remote)
        }
    };
    run_pipeline_with(config, provider)
}

/// Runs the full pipeline with an explicit provider (or none). The bus,
/// all component threads, report files and bus logs live under
/// `config.out_dir`.
pub fn run_pipeline_with(
    config: &RunConfig,
    provider: Option<&(dyn Provider + Sync)>,
) -> Result<PipelineOutcome> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;

    let bus = Arc::new(MessageBus::new());
    let sample = SampleOptions {
        seed: config.seed,
        pct: config.sample_pct,
        floor: config.sample_floor,
    };
    let observers_done = AtomicBool::new(false);
    let planner_done = AtomicBool::new(false);
    let output_path: Mutex<Option<PathBuf>> = Mutex::new(None);

    thread::scope(|s| {
        let src = s.spawn(|| {
            let _ = observer::observe_source(&config.source, &bus, &sample);
        });
        let tgt = s.spawn(|| {
            let _ = observer::observe_target(&config.target, &bus);
        });
        let planner = s.spawn(|| planner_task(&bus, provider, &observers_done));
        let worker = s.spawn(|| {
            worker_task(&bus, config, &planner_done, &output_path);
        });

        let _ = src.join();
        let _ = tgt.join();
        observers_done.store(true, Ordering::SeqCst);
        let _ = planner.join();
        planner_done.store(true, Ordering::SeqCst);
        let _ = worker.join();
    });

    let report = compile_report(&mut bus.cursor(TOPIC_METRICS));
    std::fs::write(
        config.out_dir.join("report.json"),
        serde_json::to_string_pretty(&report).map_err(|e| Error::JsonTranslation(e.to_string()))?,
    )?;
    std::fs::write(config.out_dir.join("report.txt"), report.render_text())?;
    bus.persist(&config.out_dir.join("bus"))?;

    let output_path = output_path.into_inner().unwrap_or(None);
    let success = report.complete && output_path.is_some();
    Ok(PipelineOutcome {
        report,
        output_path,
        success,
    })
}

/// Waits for the next message on the cursor's topic, giving up once the
/// upstream component has finished without publishing (or after a
/// backstop timeout).
fn await_message(cursor: &mut Cursor, upstream_done: &AtomicBool) -> Option<Message> {
    let start = Instant::now();
    loop {
        if let Some(message) = cursor.consume_timeout(WAIT_SLICE) {
            return Some(message);
        }
        if upstream_done.load(Ordering::SeqCst) {
            // One last non-blocking look, in case the message landed
            // between the timeout and the flag check.
            return cursor.consume();
        }
        if start.elapsed() > UPSTREAM_WAIT {
            return None;
        }
    }
}

fn publish_error(bus: &MessageBus, from: &str, error: &str) {
    let _ = bus.publish_json(
        TOPIC_METRICS,
        &serde_json::json!({ "from": from, "error": error }),
    );
}

fn planner_task(
    bus: &MessageBus,
    provider: Option<&(dyn Provider + Sync)>,
    observers_done: &AtomicBool,
) {
    let mut source_cursor = bus.cursor(TOPIC_SOURCE_ARTIFACTS);
    let mut target_cursor = bus.cursor(TOPIC_TARGET_ARTIFACTS);
    let source = await_message(&mut source_cursor, observers_done);
    let target = await_message(&mut target_cursor, observers_done);
    let (source, target) = match (source, target) {
        (Some(s), Some(t)) => (s, t),
        (s, t) => {
            let mut missing = Vec::new();
            if s.is_none() {
                missing.push("source");
            }
            if t.is_none() {
                missing.push("target");
            }
            publish_error(
                bus,
                PLANNER,
                &format!("no {} artifacts arrived; nothing to plan", missing.join(" or ")),
            );
            return;
        }
    };

    let decoded = source
        .decode::<FileArtifacts>()
        .and_then(|s| Ok((s, target.decode::<FileArtifacts>()?)));
    let (source, target) = match decoded {
        Ok(pair) => pair,
        Err(e) => {
            publish_error(bus, PLANNER, &format!("malformed artifact message: {e}"));
            return;
        }
    };

    let inputs = PlanInputs {
        source_name: &source.name,
        reconstruction_key: &source.reconstruction_key,
        source_sample: &source.contents,
        target_sample: &target.contents,
    };
    let provider_dyn = provider.map(|p| p as &dyn Provider);
    match build_plan(&inputs, provider_dyn, &PlannerConfig::default()) {
        Ok(outcome) => {
            let _ = bus.publish_json(TOPIC_PLANS, &outcome.payload);
            let _ = bus.publish_json(
                TOPIC_METRICS,
                &serde_json::json!({ "from": PLANNER, "contents": outcome.metrics }),
            );
        }
        Err(e) => publish_error(bus, PLANNER, &e.to_string()),
    }
}

fn worker_task(
    bus: &MessageBus,
    config: &RunConfig,
    planner_done: &AtomicBool,
    output_path: &Mutex<Option<PathBuf>>,
) {
    let mut plans = bus.cursor(TOPIC_PLANS);
    let Some(message) = await_message(&mut plans, planner_done) else {
        publish_error(bus, ETL_WORKER, "no plan arrived; nothing to execute");
        return;
    };
    let payload: PlanPayload = match message.decode() {
        Ok(p) => p,
        Err(e) => {
            publish_error(bus, ETL_WORKER, &format!("malformed plan message: {e}"));
            return;
        }
    };
    match run_worker(&payload, &config.source, &config.out_dir, config.workers) {
        Ok(outcome) => {
            let _ = bus.publish_json(TOPIC_METRICS, &outcome.metrics);
            *output_path.lock().unwrap() = Some(outcome.output_path);
        }
        Err(e) => publish_error(bus, ETL_WORKER, &e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::translate_file;
    use crate::quality::dqs;
    use crate::schema::infer_schema;
    use std::fs;

    fn write(path: &Path, text: &str) {
        fs::write(path, text).unwrap();
    }

    const CLEAN_SOURCE: &str = "\
id,name,salary
1,Ada,120
2,Alan,110
3,Grace,130
4,Edsger,125
";

    const TARGET_SHAPE: &str = "\
id,name,wage
2,Alan,110
4,Edsger,125
";

    #[test]
    fn pipeline_runs_end_to_end_on_files() {
        let dir = tempfile::tempdir().unwrap();
        let source = dir.path().join("people.csv");
        let target = dir.path().join("shape.csv");
        write(&source, CLEAN_SOURCE);
        write(&target, TARGET_SHAPE);

        let config = RunConfig::new(&source, &target, dir.path().join("out"));
        let outcome = run_pipeline(&config).unwrap();
        assert!(outcome.success, "report: {:#?}", outcome.report);
        assert!(outcome.report.complete);
        assert!(outcome.report.errors.is_empty());

        // At least one metric per component.
        let metric_count: usize = outcome.report.components.values().map(Vec::len).sum();
        assert!(metric_count >= 4, "got {metric_count} metrics");

        // The output file exists, parses, and has the target's shape.
        let out = outcome.output_path.expect("output path");
        assert_eq!(out.file_name().unwrap(), "transformed_people.csv");
        let (ir, _) = translate_file(&out).unwrap();
        assert_eq!(ir.headers(), &["id", "name", "wage"]);
        assert_eq!(ir.row_count(), 4);
        let schema = infer_schema(&ir).unwrap();
        assert_eq!(dqs(&ir, &schema).unwrap().dqs, 1.0);

        // Report files and bus logs were persisted.
        assert!(config.out_dir.join("report.json").exists());
        assert!(config.out_dir.join("report.txt").exists());
        assert!(config.out_dir.join("bus").join("metrics.ndjson").exists());
        assert!(config.out_dir.join("bus").join("plans.ndjson").exists());
    }

    #[test]
    fn missing_source_file_still_yields_a_partial_report() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("shape.csv");
        write(&target, TARGET_SHAPE);

        let config = RunConfig::new(
            dir.path().join("does-not-exist.csv"),
            &target,
            dir.path().join("out"),
        );
        let outcome = run_pipeline(&config).unwrap();
        assert!(!outcome.success);
        assert!(!outcome.report.complete);
        assert!(!outcome.report.errors.is_empty());
        // The failure run still writes its report.
        assert!(config.out_dir.join("report.json").exists());
        // Planner explains why it could not proceed.
        let planner_errors: Vec<_> = outcome
            .report
            .errors
            .iter()
            .filter(|e| e.starts_with("planner"))
            .collect();
        assert_eq!(planner_errors.len(), 1, "{:?}", outcome.report.errors);
    }

    #[test]
    fn same_seed_gives_identical_stable_reports() {
        let dir = tempfile::tempdir().unwrap();
        let source = dir.path().join("people.csv");
        let target = dir.path().join("shape.csv");
        write(&source, CLEAN_SOURCE);
        write(&target, TARGET_SHAPE);

        let mut config = RunConfig::new(&source, &target, dir.path().join("a"));
        config.seed = 7;
        let first = run_pipeline(&config).unwrap();
        config.out_dir = dir.path().join("b");
        let second = run_pipeline(&config).unwrap();
        assert_eq!(first.report.stable_view(), second.report.stable_view());

        let out_a = fs::read_to_string(first.output_path.unwrap()).unwrap();
        let out_b = fs::read_to_string(second.output_path.unwrap()).unwrap();
        assert_eq!(out_a, out_b);
    }

    #[test]
    fn partial_config_layers_and_resolves() {
        let file = PartialRunConfig {
            source: Some(PathBuf::from("file-source.csv")),
            target: Some(PathBuf::from("file-target.csv")),
            out: Some(PathBuf::from("file-out")),
            seed: Some(3),
            workers: Some(2),
            ..Default::default()
        };
        let flags = PartialRunConfig {
            source: Some(PathBuf::from("flag-source.csv")),
            ..Default::default()
        };
        let config = flags.or(file).into_config().unwrap();
        assert_eq!(config.source, PathBuf::from("flag-source.csv"));
        assert_eq!(config.target, PathBuf::from("file-target.csv"));
        assert_eq!(config.seed, 3);
        assert_eq!(config.workers, 2);
        assert_eq!(config.sample_pct, DEFAULT_SAMPLE_PCT);

        let missing = PartialRunConfig::default().into_config();
        assert!(missing.is_err());
    }

    #[test]
    fn config_files_load_as_toml_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("run.toml");
        write(
            &toml_path,
            "source = \"s.csv\"\ntarget = \"t.csv\"\nout = \"o\"\nseed = 11\nprovider = \"algorithmic\"\n",
        );
        let from_toml = PartialRunConfig::from_file(&toml_path).unwrap();
        assert_eq!(from_toml.seed, Some(11));
        assert_eq!(from_toml.provider, Some(ProviderMode::Algorithmic));

        let json_path = dir.path().join("run.json");
        write(
            &json_path,
            "{\"source\": \"s.csv\", \"target\": \"t.csv\", \"out\": \"o\", \"sample_pct\": 0.1}",
        );
        let from_json = PartialRunConfig::from_file(&json_path).unwrap();
        assert_eq!(from_json.sample_pct, Some(0.1));

        let bad_path = dir.path().join("bad.toml");
        write(&bad_path, "not_a_setting = true\n");
        assert!(PartialRunConfig::from_file(&bad_path).is_err());
    }

    #[test]
    fn invalid_settings_are_rejected_before_any_thread_starts() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = RunConfig::new("s.csv", "t.csv", dir.path().join("out"));
        config.sample_pct = 0.0;
        assert!(run_pipeline(&config).is_err());
        config.sample_pct = 0.05;
        config.workers = 0;
        assert!(run_pipeline(&config).is_err());
        assert!(!dir.path().join("out").join("report.json").exists());
    }

    #[test]
    fn provider_mode_parses_from_str() {
        assert_eq!(
            "algorithmic".parse::<ProviderMode>().unwrap(),
            ProviderMode::Algorithmic
        );
        assert_eq!("remote".parse::<ProviderMode>().unwrap(), ProviderMode::Remote);
        assert!("llm".parse::<ProviderMode>().is_err());
    }
}
