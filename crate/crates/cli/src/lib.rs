//! Command-line front end for `fss-core`: the `.fss` document format and the `fss`
//! subcommands.

pub mod document;
mod run;

pub use document::{parse, CapSpec, Document, DocumentError};
pub use run::{run, CliError};
