pub mod dsl;
pub mod pipeline;
pub mod records;
pub mod render;

pub use dsl::{parse, InputDocument, ParseError};
pub use pipeline::{emit, run, OutputFormat, PipelineError, RunConfig, RunResult, VerifiedIdentity};
pub use records::{read_records, IdentityRecord};
