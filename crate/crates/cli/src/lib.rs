//! File formats, benchmark protocols and the `pqsq` command line built on
//! the [`pqsq`] library.

pub mod app;
pub mod bench;
mod error;
pub mod io;

pub use app::{dispatch, run, Cli};
pub use error::{CliError, CliResult};
