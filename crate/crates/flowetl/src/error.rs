use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// CSV could not be translated into the internal representation.
    #[error("csv translation failed{}: {message}", fmt_line(.line))]
    CsvTranslation { line: Option<u64>, message: String },

    /// JSON could not be translated into the internal representation.
    #[error("json translation failed: {0}")]
    JsonTranslation(String),

    /// A table violated the internal representation invariants.
    #[error("invalid internal representation: {0}")]
    InvalidIr(String),

    /// An operation needed a non-empty sample and got none.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A cleaning node could not complete its task.
    #[error("{node}: {message}")]
    NodeFailure { node: &'static str, message: String },

    /// A plan did not satisfy the step invariants.
    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    /// A schema was empty or lacked a required column.
    #[error("schema error: {0}")]
    EmptySchema(String),

    /// A schema map referenced unknown columns or mapped a target twice.
    #[error("invalid schema map: {0}")]
    InvalidSchemaMap(String),

    /// Expression evaluation failed for a cell.
    #[error("expression error: {0}")]
    Expr(String),

    /// A transformation program failed to parse or validate.
    #[error("invalid program: {0}")]
    Program(String),

    /// Too many cells failed during program application.
    #[error("transformation aborted: {failed} of {total} cells failed (limit {limit_pct}%)")]
    TransformAborted {
        failed: usize,
        total: usize,
        limit_pct: u8,
    },

    /// A message exceeded the bus payload limit.
    #[error("payload too large: {size} bytes exceeds limit of {limit}")]
    PayloadTooLarge { size: usize, limit: usize },

    /// A pipeline component aborted.
    #[error("pipeline failure in {component}: {message}")]
    Pipeline { component: String, message: String },

    /// Configuration could not be loaded or was inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
}

fn fmt_line(line: &Option<u64>) -> String {
    match line {
        Some(n) => format!(" at line {n}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
