//! Source and target observers: they translate a file into the internal
//! representation and publish it (sampled for sources, whole for
//! targets) together with a metrics message describing the file.

use std::path::Path;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::bus::{MessageBus, TOPIC_METRICS, TOPIC_SOURCE_ARTIFACTS, TOPIC_TARGET_ARTIFACTS};
use crate::error::Result;
use crate::ir::{translate_file, InternalRepresentation, ReconstructionKey};

/// Default sampling percentage of the source row count.
pub const DEFAULT_SAMPLE_PCT: f64 = 0.05;
/// Default minimum sample size, applied before clamping to the row count.
pub const DEFAULT_SAMPLE_FLOOR: usize = 50;

/// How the source observer samples rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub seed: u64,
    pub pct: f64,
    pub floor: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            seed: 0,
            pct: DEFAULT_SAMPLE_PCT,
            floor: DEFAULT_SAMPLE_FLOOR,
        }
    }
}

/// The sampling rule: at least `floor` rows, at least `pct` of the file,
/// never more rows than exist. A 7557-row file samples to 378.
pub fn sample_size(rows: usize, pct: f64, floor: usize) -> usize {
    let by_pct = (rows as f64 * pct).ceil() as usize;
    rows.min(by_pct.max(floor))
}

/// Draws a seeded uniform sample without replacement, keeping original
/// row order so sampled tables read like excerpts of the file.
pub fn sample_rows(
    ir: &InternalRepresentation,
    opts: &SampleOptions,
) -> InternalRepresentation {
    let k = sample_size(ir.row_count(), opts.pct, opts.floor);
    if k >= ir.row_count() {
        return ir.clone();
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut indices: Vec<usize> = rand::seq::index::sample(&mut rng, ir.row_count(), k).into_vec();
    indices.sort_unstable();
    ir.select_rows(&indices)
}

/// The file-description metrics an observer publishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverMetrics {
    pub from: String,
    pub contents: ObserverContents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverContents {
    pub filename: String,
    #[serde(rename = "objectsCount")]
    pub objects_count: usize,
    #[serde(rename = "filesizeMBs")]
    pub filesize_mbs: f64,
}

/// The file-content artifact an observer publishes: the translated table
/// plus what is needed to rebuild the original format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileArtifacts {
    pub name: String,
    #[serde(rename = "reconstructionKey")]
    pub reconstruction_key: ReconstructionKey,
    pub contents: InternalRepresentation,
}

/// Metrics published when an observer cannot produce an artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverError {
    pub from: String,
    pub error: String,
}

pub const SOURCE_OBSERVER: &str = "source-observer";
pub const TARGET_OBSERVER: &str = "target-observer";

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn filesize_mbs(path: &Path) -> f64 {
    std::fs::metadata(path)
        .map(|m| m.len() as f64 / (1024.0 * 1024.0))
        .unwrap_or(0.0)
}

fn observe(
    path: &Path,
    bus: &MessageBus,
    observer: &str,
    artifact_topic: &str,
    sample: Option<&SampleOptions>,
) -> Result<()> {
    let name = file_name(path);
    match translate_file(path) {
        Ok((ir, key)) => {
            let published = match sample {
                Some(opts) => sample_rows(&ir, opts),
                None => ir.clone(),
            };
            bus.publish_json(
                artifact_topic,
                &FileArtifacts {
                    name: name.clone(),
                    reconstruction_key: key,
                    contents: published,
                },
            )?;
            bus.publish_json(
                TOPIC_METRICS,
                &ObserverMetrics {
                    from: observer.to_string(),
                    contents: ObserverContents {
                        filename: name,
                        objects_count: ir.row_count(),
                        filesize_mbs: filesize_mbs(path),
                    },
                },
            )?;
            Ok(())
        }
        Err(e) => {
            // The failure is reported on the metrics topic rather than
            // raised: downstream components and the report both learn of
            // it the same way they learn everything else.
            bus.publish_json(
                TOPIC_METRICS,
                &ObserverError {
                    from: observer.to_string(),
                    error: e.to_string(),
                },
            )?;
            Err(e)
        }
    }
}

/// Observes the source file: translates, samples with the given options,
/// and publishes artifact + metrics.
pub fn observe_source(path: &Path, bus: &MessageBus, opts: &SampleOptions) -> Result<()> {
    observe(path, bus, SOURCE_OBSERVER, TOPIC_SOURCE_ARTIFACTS, Some(opts))
}

/// Observes the target file: translates and publishes it whole — target
/// examples are small by assumption, and every row is evidence.
pub fn observe_target(path: &Path, bus: &MessageBus) -> Result<()> {
    observe(path, bus, TARGET_OBSERVER, TOPIC_TARGET_ARTIFACTS, None)
}
