//! Configuration ingestion, experiment dispatch and result serialization for
//! the `preset` command.

pub mod config;
pub mod error;
pub mod examples;
pub mod output;
pub mod quantity;
pub mod run;

pub use config::{parse_config, Format, Job, RunConfig};
pub use error::CliError;
pub use run::{execute, thread_pool, Report};
