//! FlowETL command line. A thin shell over the library: every subcommand
//! maps onto one public entry point, so anything done here can also be
//! done programmatically (see the `examples/` directory).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use flowetl::error::Error;
use flowetl::eval::{
    generate_corpus, plan_eval, plan_ops_from_payload, pollute, run_benchmark, write_corpus,
    BenchConfig, GroundTruthPlan, PollutionSpec, DEFAULT_DUPLICATE_TARGET, DEFAULT_MISSING_TARGET,
    DEFAULT_OUTLIER_TARGET,
};
use flowetl::ir::{render_file, translate_file};
use flowetl::planner::PlanPayload;
use flowetl::quality::dqs;
use flowetl::runtime::{run_pipeline, ProviderMode, RunConfig, RunReport};
use flowetl::schema::infer_schema;

#[derive(Parser)]
#[command(
    name = "flowetl",
    version,
    about = "Example-driven ETL: give it a source file and a small sample of \
             the target shape, and it infers and runs the whole pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: observe, plan, clean, transform, report.
    Run(RunArgs),
    /// Pretty-print the report of a finished run directory.
    Report {
        /// A directory previously passed to `run --out`.
        run_dir: PathBuf,
    },
    /// Damage a clean dataset by seeded, measurable amounts.
    Pollute(PolluteArgs),
    /// Score an executed plan against a ground-truth plan.
    Eval {
        /// Plan payload JSON, or a persisted `plans.ndjson` bus log.
        #[arg(long)]
        plan: PathBuf,
        /// Ground-truth plan JSON (see `corpus`).
        #[arg(long)]
        gt: PathBuf,
    },
    /// Generate the built-in benchmark corpus with ground truth.
    Corpus {
        /// Directory to write the corpus into.
        #[arg(long)]
        out: PathBuf,
        /// Generation seed; pollution damage varies with it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the pipeline over a whole corpus and tabulate the results.
    Bench {
        /// A corpus directory produced by `corpus`.
        #[arg(long)]
        corpus: PathBuf,
        /// Directory for per-run artifacts and the result tables.
        #[arg(long)]
        out: PathBuf,
        /// Run all pairs concurrently (timings become unreliable).
        #[arg(long)]
        parallel: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Source data file (.csv or .json).
    #[arg(long)]
    source: Option<PathBuf>,
    /// Target example file (.csv or .json).
    #[arg(long)]
    target: Option<PathBuf>,
    /// Output directory for the report, bus logs, and transformed file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampling and any other randomized choice.
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of source rows to sample for planning.
    #[arg(long)]
    sample_pct: Option<f64>,
    /// Minimum number of sampled rows (when the file has that many).
    #[arg(long)]
    sample_floor: Option<usize>,
    /// `algorithmic` (built-in, default) or `remote` (HTTP provider
    /// configured via FLOWETL_PROVIDER_URL / _KEY / _TIMEOUT_MS).
    #[arg(long)]
    provider: Option<String>,
    /// Worker threads for the transform stage.
    #[arg(long)]
    workers: Option<usize>,
    /// TOML or JSON file supplying any of the flags above; explicit
    /// flags win over file values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PolluteArgs {
    /// Clean input file (.csv or .json).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Where to write the damaged copy.
    #[arg(long)]
    out: PathBuf,
    /// Target fraction of blanked cells.
    #[arg(long, default_value_t = DEFAULT_MISSING_TARGET)]
    missing: f64,
    /// Target fraction of rows that are extra copies.
    #[arg(long, default_value_t = DEFAULT_DUPLICATE_TARGET)]
    dups: f64,
    /// Target fraction of cells turned into numeric outliers.
    #[arg(long, default_value_t = DEFAULT_OUTLIER_TARGET)]
    outliers: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Mirror of the `run` flags for `--config` files.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    source: Option<PathBuf>,
    target: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    sample_pct: Option<f64>,
    sample_floor: Option<usize>,
    provider: Option<String>,
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Report { run_dir } => cmd_report(&run_dir),
        Command::Pollute(args) => cmd_pollute(args),
        Command::Eval { plan, gt } => cmd_eval(&plan, &gt),
        Command::Corpus { out, seed } => cmd_corpus(&out, seed),
        Command::Bench {
            corpus,
            out,
            parallel,
        } => cmd_bench(&corpus, &out, parallel),
    }
}

fn load_file_config(path: &Path) -> Result<FileConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text)
            .map_err(|err| Error::Config(format!("{}: {err}", path.display())))
    } else {
        toml::from_str(&text).map_err(|err| Error::Config(format!("{}: {err}", path.display())))
    }
}

fn build_run_config(args: RunArgs) -> Result<RunConfig, Error> {
    let file = match &args.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let require = |name: &str, flag: Option<PathBuf>, file: Option<PathBuf>| {
        flag.or(file).ok_or_else(|| {
            Error::Config(format!("--{name} is required (flag or config file)"))
        })
    };
    let mut config = RunConfig::new(
        require("source", args.source, file.source)?,
        require("target", args.target, file.target)?,
        require("out", args.out, file.out)?,
    );
    if let Some(seed) = args.seed.or(file.seed) {
        config.seed = seed;
    }
    if let Some(pct) = args.sample_pct.or(file.sample_pct) {
        config.sample_pct = pct;
    }
    if let Some(floor) = args.sample_floor.or(file.sample_floor) {
        config.sample_floor = floor;
    }
    if let Some(provider) = args.provider.or(file.provider) {
        config.provider = ProviderMode::from_str(&provider)?;
    }
    if let Some(workers) = args.workers.or(file.workers) {
        config.workers = workers;
    }
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let config = build_run_config(args)?;
    let outcome = run_pipeline(&config)?;
    print!("{}", outcome.report.render_text());
    println!("artifacts: {}", config.out_dir.display());
    if outcome.success {
        Ok(())
    } else {
        Err(Error::Pipeline {
            component: "run".into(),
            message: "pipeline did not complete; see the report above".into(),
        })
    }
}

fn cmd_report(run_dir: &Path) -> Result<(), Error> {
    let path = run_dir.join("report.json");
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(&path)?)
        .map_err(|err| Error::Config(format!("{}: {err}", path.display())))?;
    print!("{}", report.render_text());
    Ok(())
}

fn cmd_pollute(args: PolluteArgs) -> Result<(), Error> {
    let (ir, key) = translate_file(&args.input)?;
    let spec = PollutionSpec {
        missing_target: args.missing,
        duplicate_target: args.dups,
        outlier_target: args.outliers,
        seed: args.seed,
        spare_columns: Vec::new(),
    };
    let outcome = pollute(&ir, &spec)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    let text = render_file(&outcome.ir, &key, &args.out.to_string_lossy())?;
    std::fs::write(&args.out, text)?;

    let measured = dqs(&outcome.ir, &infer_schema(&outcome.ir)?)?;
    println!(
        "wrote {} ({} rows); measured: missing {:.1}%, duplicates {:.1}%, \
         outliers {:.1}%, dqs {:.3}",
        args.out.display(),
        outcome.ir.row_count(),
        100.0 * measured.missing_ratio,
        100.0 * measured.duplicate_ratio,
        100.0 * measured.outlier_ratio,
        measured.dqs,
    );
    Ok(())
}

/// Accepts either a plan payload JSON document or a persisted bus log
/// whose last line wraps one.
fn load_payload(path: &Path) -> Result<PlanPayload, Error> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(payload) = serde_json::from_str::<PlanPayload>(&text) {
        return Ok(payload);
    }
    let last = text
        .lines()
        .filter(|line| !line.trim().is_empty())
        .next_back()
        .unwrap_or_default();
    let envelope: serde_json::Value = serde_json::from_str(last)
        .map_err(|err| Error::Config(format!("{}: not a plan payload: {err}", path.display())))?;
    serde_json::from_value(envelope["payload"].clone())
        .map_err(|err| Error::Config(format!("{}: not a plan payload: {err}", path.display())))
}

fn cmd_eval(plan: &Path, gt: &Path) -> Result<(), Error> {
    let payload = load_payload(plan)?;
    let ops = plan_ops_from_payload(&payload);
    let truth = GroundTruthPlan::from_json(&std::fs::read_to_string(gt)?)?;
    let score = plan_eval(&ops, &truth)?;
    let missing = score.n - score.correct - score.partial;
    println!(
        "PlanEval: {:.4} ({:.1}/{:.0} — {} correct, {} partial, {} missing, \
         {} hallucinated)",
        score.value, score.s, score.max_s, score.correct, score.partial, missing,
        score.hallucinated,
    );
    Ok(())
}

fn cmd_corpus(out: &Path, seed: u64) -> Result<(), Error> {
    let pairs = generate_corpus(seed)?;
    write_corpus(&pairs, out)?;
    for pair in &pairs {
        println!(
            "{:<16} {:>6} rows, {} examples, {}",
            pair.name,
            pair.rows,
            pair.examples,
            pair.format.extension(),
        );
    }
    println!("wrote {} pairs to {}", pairs.len(), out.display());
    Ok(())
}

fn cmd_bench(corpus: &Path, out: &Path, parallel: bool) -> Result<(), Error> {
    let report = run_benchmark(corpus, out, &BenchConfig { parallel })?;
    print!("{}", report.to_markdown());
    println!("tables: {}", out.display());
    let failures = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failures == 0 {
        Ok(())
    } else {
        Err(Error::Pipeline {
            component: "bench".into(),
            message: format!("{failures} of {} pairs failed", report.rows.len()),
        })
    }
}
