//! Command-line front end for `balson-core`: single fits, the benchmark
//! harness with its CSV/SVG reports, and prior sampling diagnostics.

pub mod commands;
pub mod failure;
pub mod output;
pub mod svg;

pub use commands::{run, Cli};
pub use failure::{ExitKind, Failure};
pub use output::emit_outputs;
