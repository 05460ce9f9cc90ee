//! Command implementations behind the `relustab` binary, exposed as a library
//! so the acceptance suite and the `selftest` subcommand share one harness.

pub mod report;
pub mod runs;
pub mod selftest;
