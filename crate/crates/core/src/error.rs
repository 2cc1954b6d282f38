//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown column `{0}.{1}`")]
    UnknownColumn(String, String),
    #[error("column `{0}` is not part of the schema mapping")]
    UnmappedColumn(String),
    #[error("{table}: line {line}: {message}")]
    BadCsvRow {
        table: String,
        line: u64,
        message: String,
    },
    #[error("{table}: missing required column `{column}`")]
    MissingColumn { table: String, column: String },
    #[error("store is already frozen")]
    StoreFrozen,
    #[error("store must be frozen before queries")]
    StoreNotFrozen,
    #[error("invalid cell value `{0}`: {1}")]
    BadCell(String, String),
    #[error("note `{0}`: {1}")]
    BadNote(String, String),
    #[error("prompt template `{0}`: placeholder `{1}` is unbound")]
    UnboundPlaceholder(String, String),
    #[error("prompt template `{0}` not found")]
    UnknownTemplate(String),
    #[error("scripted backend has no answer for template `{template}` key `{key}`")]
    ScriptKeyMissing { template: String, key: String },
    #[error("backend transport failure: {0}")]
    Transport(String),
    #[error("backend timed out after {0} retries")]
    BackendExhausted(u32),
    #[error("no query template for table `{table}` with window form `{form}`")]
    NoTemplate { table: String, form: String },
    #[error("time anchor could not be resolved: {0}")]
    UnresolvableAnchor(String),
    #[error("plan requires a frozen store")]
    PlanPrecondition(String),
    #[error("verification can only localize an inconsistent plan")]
    NotInconsistent,
    #[error("gold/report note id mismatch: `{0}` vs `{1}`")]
    NoteIdMismatch(String, String),
    #[error("fixture spec impossible: {0}")]
    BadFixtureSpec(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("sql error: {0}")]
    Sql(#[from] rusqlite::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
