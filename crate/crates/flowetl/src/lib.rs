//! FlowETL: an example-driven ETL engine.
//!
//! Given a source dataset and a small sample of the desired target, the
//! engine infers the whole pipeline on its own: it translates both files
//! into a shared internal representation, matches source columns to target
//! columns, searches for a data-cleaning plan that maximises a data quality
//! score, infers per-column transformation programs from the example pairs,
//! and applies the result to the full source. Components communicate
//! through an in-process, topic-based message bus, so each stage can be
//! observed, replayed, and tested in isolation.
//!
//! See the `examples/` directory for one runnable walkthrough per major
//! capability, starting with `end_to_end`.

#![forbid(unsafe_code)]

pub mod bus;
pub mod error;
pub mod eval;
pub mod ir;
pub mod matching;
pub mod nodes;
pub mod planner;
pub mod provider;
pub mod quality;
pub mod runtime;
pub mod schema;
pub mod transform;

pub use error::{Error, Result};
